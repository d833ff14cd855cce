import numpy as np
import pytest
from scipy.optimize import minimize

from homdip.errors import ConvergenceError, IdentifiabilityError, InvalidParameterError, NoDipError
from homdip.interference import DipProfile, InterferometerConfig, dip_profile
from homdip.inverse import (
    _DipScanner,
    compensate,
    fit_dip,
    profile_with_auto_range,
    simulate_measurement,
    sweep,
    zero_dispersion_fwhm,
)
from homdip.metrics import visibility
from homdip.simplex import nelder_mead
from homdip.spectra import gaussian_spectrum, monochromatic

BETA2 = [0.0, 17.6e3, 35.2e3]
BETA3 = [0.0, 17.6e4, 35.2e4]


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


def test_simplex_matches_scipy_on_rosenbrock():
    ours = nelder_mead(rosenbrock, [-1.2, 1.0], step=0.1, ftol_rel=1e-14, ftol_abs=1e-20, xtol=1e-12, max_iter=5000)
    ref = minimize(rosenbrock, [-1.2, 1.0], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-20})
    assert ours.converged
    np.testing.assert_allclose(ours.x, ref.x, atol=1e-6)
    np.testing.assert_allclose(ours.x, [1.0, 1.0], atol=1e-6)


def test_simplex_respects_box():
    res = nelder_mead(lambda x: float(np.sum((x - 3.0) ** 2)), [0.0, 0.0], 0.5, lower=[-1, -1], upper=[1, 2])
    np.testing.assert_allclose(res.x, [1.0, 2.0], atol=1e-6)


def test_simplex_reports_non_convergence():
    res = nelder_mead(rosenbrock, [-1.2, 1.0], 0.1, max_iter=5)
    assert not res.converged and res.iterations == 5


def test_zero_dispersion_width(s1):
    assert zero_dispersion_fwhm(s1) == pytest.approx(48.41, abs=0.01)


def test_sweep_s1_beta2_ordering(s1):
    res = sweep(s1, "beta2", BETA2, label="S1")
    assert len(res.visibility) == len(res.fwhm) == len(res.values) == 3
    assert res.visibility[0] > res.visibility[1] > res.visibility[2]
    assert res.fwhm[0] < res.fwhm[1] < res.fwhm[2]
    assert all(res.converged)
    assert res.rows()[0][0] == 0.0


def test_sweep_auto_widening(s1):
    # a 1e5 fs^2 dip does not fit into the initial +-3 FWHM span
    prof, m = profile_with_auto_range(s1, 1e5, 0.0)
    assert prof.tau[-1] > 3 * zero_dispersion_fwhm(s1)
    assert m.fwhm > 2 * 3 * zero_dispersion_fwhm(s1)
    shifted, m2 = profile_with_auto_range(s1, 0.0, 0.0, delay_offset=40.0)
    assert m2.min_position == pytest.approx(-40.0, abs=1e-6)


def test_sweep_validation(s1):
    with pytest.raises(InvalidParameterError):
        sweep(s1, "beta4", [0.0])
    with pytest.raises(InvalidParameterError):
        sweep(s1, "beta2", [1.0, 0.0])
    with pytest.raises(InvalidParameterError):
        sweep(s1, "beta2", [0.0, float("nan")])


def test_s1_monotone_in_beta3(s1):
    res = sweep(s1, "beta3", BETA3)
    assert res.visibility[0] > res.visibility[1] > res.visibility[2]
    assert res.fwhm[0] < res.fwhm[1] < res.fwhm[2]


def test_compensate_beta2_only(s1):
    r = compensate(s1, 30e3, 0.0)
    assert r.slm.beta2 == pytest.approx(-30e3, rel=0.01)
    assert abs(r.slm.beta3) < 0.01 * 3e5
    assert r.converged and r.slm.label == "SLM"


def test_compensate_beta3_only(s1):
    r = compensate(s1, 0.0, 3e5)
    assert r.slm.beta3 == pytest.approx(-3e5, rel=0.01)


def test_compensate_fwhm_objective(s1):
    r = compensate(s1, 30e3, 0.0, objective="minimize-fwhm")
    assert r.slm.beta2 == pytest.approx(-30e3, rel=0.01)


def test_compensation_optimality(s1):
    r = compensate(s1, 12e3, -1e5)
    scanner = _DipScanner(s1, 1.1e6)
    assert r.objective_value <= -scanner.visibility(0.0, 0.0) + 1e-9


def test_compensate_errors(s1):
    with pytest.raises(InvalidParameterError):
        compensate(s1, 0.0, 0.0, objective="sharpest")
    with pytest.raises(InvalidParameterError):
        compensate(s1, 0.0, 0.0, beta2_box=(1.0, -1.0))
    with pytest.raises(ConvergenceError) as info:
        compensate(s1, 3e4, 0.0, max_iter=2)
    assert info.value.best is not None and info.value.best.slm.beta2 < 0


def test_fit_delay_and_purity(s1):
    taus = np.linspace(-300, 300, 31)
    data = simulate_measurement(s1, taus, 0.0, 0.0, -12.0, 0.85)
    res = fit_dip(data, s1, free=("tau0", "p"))
    assert res.tau0 == pytest.approx(-12.0, abs=1e-4)
    assert res.p == pytest.approx(0.85, abs=1e-6)
    assert res.residual >= 0 and 0 <= res.p <= 1 and res.converged
    assert res.starts == 6


def test_fit_estimator_consistency(s1):
    taus = np.linspace(-300, 300, 31)
    truth = dict(beta2=1e4, beta3=0.0, tau0=5.0, p=0.9)
    data = simulate_measurement(s1, taus, **truth)
    noisy = DipProfile(taus, data.values + 2e-3 * np.sin(taus / 7), data.baseline, True)
    res = fit_dip(noisy, s1, free=("beta2", "tau0", "p"))
    model = simulate_measurement(s1, taus, **truth)
    at_truth = float(np.sum((model.values - noisy.values) ** 2))
    assert res.residual <= at_truth + 1e-10


def test_fit_flat_profile(s1):
    taus = np.linspace(-300, 300, 31)
    with pytest.raises(NoDipError):
        fit_dip(DipProfile(taus, np.ones(31), 1.0, True), s1)


def test_fit_identifiability():
    cfg = InterferometerConfig(pump=monochromatic(405.5), pdc=gaussian_spectrum(811.0, 20.0))
    taus = np.linspace(-300, 300, 31)
    data = dip_profile(cfg, 0.0, 0.0, taus)
    with pytest.raises(IdentifiabilityError):
        fit_dip(data, cfg, free=("beta2", "tau0"))


def test_fit_input_validation(s1):
    taus = np.linspace(-300, 300, 10)
    data = simulate_measurement(s1, taus, 0.0, 0.0, 0.0, 0.9)
    with pytest.raises(InvalidParameterError):
        fit_dip(data, s1)
    raw = dip_profile(s1, 0.0, 0.0, np.linspace(-300, 300, 31), normalized=False)
    with pytest.raises(InvalidParameterError):
        fit_dip(raw, s1)
    with pytest.raises(InvalidParameterError):
        fit_dip(simulate_measurement(s1, np.linspace(-300, 300, 31), 0, 0, 0, 0.9), s1, free=("gamma",))
