import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homdip.errors import DomainError, InvalidParameterError, NumericError
from homdip.interference import (
    BeamSplitter,
    DipProfile,
    InterferometerConfig,
    PurityModel,
    SampledModel,
    coincidence_probability_expanded,
    coincidence_probability_general,
    dip_profile,
    general_profile,
    integrate_2d,
    measured_profile,
    resolve_grid,
    tail_mean_baseline,
)
from homdip.metrics import fwhm
from homdip.phase import ChannelPhase, PhaseExpansion
from homdip.presets import preset_config
from homdip.spectra import FrequencyGrid, build_grid, from_samples, gaussian_spectrum, monochromatic, rms_width

# 801 x 801 trapezoidal oracle for S1 (p = 0.913, T = 0.467) at beta2 = 35.2e3 fs^2, tau = 0
S1_BETA2_ANCHOR = 0.3958822965642817


def balanced(**kw):
    return InterferometerConfig(pump=gaussian_spectrum(405.5, 1.0), pdc=gaussian_spectrum(811.0, 20.0), **kw)


def test_perfect_cancellation():
    cfg = balanced(bs=BeamSplitter(0.5, 0.5), purity=PurityModel.from_p(1.0))
    assert abs(coincidence_probability_general(cfg, 0.0)) < 1e-6
    assert abs(coincidence_probability_expanded(cfg, 0.0, 0.0, 0.0)) < 1e-6


def test_far_delay_reaches_baseline(s1):
    width = 48.4
    for tau in (10 * width, -12 * width, 30 * width):
        value = coincidence_probability_expanded(s1, 0.0, 0.0, tau)
        assert abs(value - s1.baseline) < 1e-3 * s1.baseline
    assert s1.baseline == pytest.approx((0.467**2 + 0.533**2) * 0.913 + 0.087 / 2)


def test_zero_purity_is_half():
    cfg = preset_config("S1", purity=PurityModel.from_p(0.0))
    values = coincidence_probability_expanded(cfg, 2e4, 1e5, np.linspace(-200, 200, 9))
    np.testing.assert_array_equal(values, 0.5)


def test_scalar_and_array_delays(s1):
    v = coincidence_probability_expanded(s1, 0.0, 0.0, 12.5)
    assert isinstance(v, float)
    arr = coincidence_probability_expanded(s1, 0.0, 0.0, np.array([12.5, 40.0]))
    assert arr[0] == v


def test_s1_regression_anchor(s1):
    assert coincidence_probability_expanded(s1, 35.2e3, 0.0, 0.0) == pytest.approx(S1_BETA2_ANCHOR, abs=1e-8)


def test_expanded_matches_general():
    sig = ChannelPhase((PhaseExpansion(0.7, 15.0, 2.0e4, 1.2e5, "fiber"), PhaseExpansion(beta2=-3e3, label="4F")))
    idl = ChannelPhase((PhaseExpansion(0.1, 5.0, 4.0e3, 2.0e4, "fiber"),))
    cfg = preset_config("S1", signal=sig, idler=idl)
    taus = np.linspace(-300.0, 300.0, 61)
    general = coincidence_probability_general(cfg, taus)
    expanded = coincidence_probability_expanded(cfg, 2.0e4 - 3e3 - 4e3, 1.2e5 - 2e4, taus + 10.0)
    assert np.max(np.abs(general - expanded)) <= 1e-8


def test_direct_integrand_oracle():
    # |T f(w) - R f(-w) e^{i(2w tau + phi)}|^2 integrated directly, asymmetric spectrum
    rows = [(w, math.exp(-(((w - 809.0) / 9.0) ** 2)) * (1.3 if w > 811 else 1.0)) for w in np.linspace(780, 842, 63)]
    pdc = from_samples(rows, 811.0)
    pump = gaussian_spectrum(405.5, 1.0)
    bs = BeamSplitter(0.42, 0.58)
    cfg = InterferometerConfig(pump=pump, pdc=pdc, bs=bs, purity=PurityModel.from_p(1.0), n_omega=801, n_omega_p=201)
    grid = resolve_grid(cfg)
    b2, b3 = 1.5e4, 8e4
    mass = integrate_2d(lambda wp, w: pump(wp) ** 2 * pdc(w) ** 2, grid).value.real
    for tau in (-60.0, 0.0, 35.0):

        def integrand(wp, w):
            phi = 2 * w * tau + b2 * wp * w + b3 * (wp**2 * w / 4 + w**3 / 3)
            amp = bs.T * pdc(w) - bs.R * pdc(-w) * np.exp(1j * phi)
            return pump(wp) ** 2 * np.abs(amp) ** 2

        direct = integrate_2d(integrand, grid).value.real / mass
        assert coincidence_probability_expanded(cfg, b2, b3, tau) == pytest.approx(direct, abs=1e-12)


def test_monochromatic_beta2_bitwise():
    cfg = InterferometerConfig(pump=monochromatic(405.5), pdc=gaussian_spectrum(811.0, 20.0))
    taus = np.linspace(-200.0, 200.0, 81)
    ref = dip_profile(cfg, 0.0, 0.0, taus).values
    for b2 in (1.0, 3.52e4, 1e6):
        assert np.array_equal(dip_profile(cfg, b2, 0.0, taus).values, ref)


def test_monochromatic_beta3_sensitivity():
    cfg = InterferometerConfig(pump=monochromatic(405.5), pdc=gaussian_spectrum(811.0, 20.0))
    taus = np.linspace(-400.0, 400.0, 161)
    a = dip_profile(cfg, 0.0, 0.0, taus).values
    b = dip_profile(cfg, 0.0, 35.2e4, taus).values
    assert np.max(np.abs(a - b)) > 1e-3


def test_profile_symmetric(s1):
    taus = np.linspace(-200.0, 200.0, 161)
    prof = dip_profile(s1, 2e4, 0.0, taus)
    assert np.max(np.abs(prof.values - prof.values[::-1])) < 1e-8


def test_slit_profile_exceeds_one(s3):
    prof = dip_profile(s3, 0.0, 0.0, np.linspace(-600, 600, 601))
    assert prof.values.max() > 1.0


def test_gaussian_fwhm_oracle():
    pdc = gaussian_spectrum(811.0, 20.0)
    cfg = InterferometerConfig(pump=monochromatic(405.5), pdc=pdc)
    expected = math.sqrt(2 * math.log(2)) / rms_width(pdc)
    prof = dip_profile(cfg, 0.0, 0.0, np.linspace(-150.0, 150.0, 601))
    assert fwhm(prof) == pytest.approx(expected, rel=0.02)


def test_profile_metadata(s1):
    prof = dip_profile(s1, 0.0, 0.0, np.linspace(-100, 100, 21), normalized=False)
    assert not prof.normalized and prof.baseline == s1.baseline
    assert prof.grid_shape == (201, 401)
    assert prof.converged and prof.half_grid_delta < 1e-4
    np.testing.assert_allclose(prof.normalized_values * prof.baseline, prof.values)
    with pytest.raises(InvalidParameterError):
        dip_profile(s1, 0.0, 0.0, [3.0, 1.0])
    with pytest.raises(InvalidParameterError):
        dip_profile(s1, 0.0, 0.0, [])


def test_integrate_constant_and_separable():
    pump, pdc = gaussian_spectrum(405.5, 1.0), gaussian_spectrum(811.0, 20.0)
    g = build_grid(pump, pdc, 401, 201)
    area = (g.omega_p[-1] - g.omega_p[0]) * (g.omega[-1] - g.omega[0])
    assert integrate_2d(lambda wp, w: np.ones_like(w), g).value.real == pytest.approx(area, rel=1e-12)
    a, b = 300.0, 900.0
    # the grid spans far beyond both Gaussians, so the infinite-line integrals apply
    wide = FrequencyGrid(np.linspace(-0.4, 0.4, 401), np.linspace(-0.3, 0.3, 401))
    res = integrate_2d(lambda wp, w: np.exp(-a * wp**2 - b * w**2), wide)
    assert res.value.real == pytest.approx(math.pi / math.sqrt(a * b), rel=1e-6)
    assert res.converged


def test_one_point_pump_axis_weight():
    g = FrequencyGrid(np.array([0.0]), np.linspace(-1.0, 1.0, 5))
    assert integrate_2d(lambda wp, w: np.ones_like(w), g).value == pytest.approx(2.0)


def test_quadrature_doubling(s1):
    taus = np.array([-40.0, 0.0, 25.0])
    coarse = coincidence_probability_expanded(s1, 1.76e4, 1e5, taus)
    fine = coincidence_probability_expanded(preset_config("S1", n_omega=801, n_omega_p=401), 1.76e4, 1e5, taus)
    assert np.max(np.abs(coarse - fine)) < 1e-4


def test_cubic_phase_upgrades_grid(s1):
    assert resolve_grid(s1, 0.0).shape == (201, 401)
    assert resolve_grid(s1, 3.52e5).shape == (401, 801)


def test_domain_errors():
    pdc = gaussian_spectrum(811.0, 20.0)
    small = FrequencyGrid(np.array([0.0]), np.linspace(-0.05, 0.05, 101))
    cfg = InterferometerConfig(pump=monochromatic(405.5), pdc=pdc, grid=small)
    with pytest.raises(DomainError):
        coincidence_probability_expanded(cfg, 0.0, 0.0, 0.0)
    lopsided = FrequencyGrid(np.array([0.0]), np.linspace(-0.3, 0.4, 101))
    with pytest.raises(DomainError):
        SampledModel(InterferometerConfig(pump=monochromatic(405.5), pdc=pdc), grid=lopsided)


def test_numeric_errors(s1):
    bad = ChannelPhase((lambda w: np.full_like(w, np.nan),))
    with pytest.raises(NumericError):
        coincidence_probability_general(preset_config("S1", signal=bad), 0.0)
    model = SampledModel(s1)
    with pytest.raises(NumericError, match="imaginary residue"):
        model.pure(1j * np.ones(len(model.grid.omega)), [0.0])


def test_beamsplitter_and_purity_validation():
    with pytest.raises(InvalidParameterError):
        BeamSplitter(0.6, 0.6)
    with pytest.raises(InvalidParameterError):
        BeamSplitter(-0.1, 1.1)
    with pytest.raises(InvalidParameterError):
        PurityModel.from_p(1.2)
    with pytest.raises(InvalidParameterError):
        PurityModel.from_visibility(-0.1)
    m = PurityModel.from_theta(17.2)
    assert m.p == pytest.approx(math.cos(math.radians(17.2)) ** 2, abs=1e-12)
    assert m.V_I == pytest.approx(math.sqrt(m.p), abs=1e-12)


def test_tail_mean_baseline():
    tau = np.linspace(-500, 500, 101)
    values = 2.0 - np.exp(-(tau / 50) ** 2)
    assert tail_mean_baseline(tau, values, 400) == pytest.approx(2.0, abs=1e-12)
    prof = measured_profile(tau, values, 400)
    assert prof.normalized and prof.values[50] == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(InvalidParameterError):
        tail_mean_baseline(tau, values, 600)


def test_profile_validation():
    with pytest.raises(InvalidParameterError):
        DipProfile(np.arange(3.0), np.arange(4.0), 1.0)
    with pytest.raises(InvalidParameterError):
        DipProfile(np.arange(3.0), np.arange(3.0), 0.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(-0.5, 0.5), st.floats(-1e4, 1e4), st.floats(0.0, 1.0))
def test_evaluation_order_independence(t0, tb, b2, p):
    cfg = preset_config("S1", purity=PurityModel.from_p(p))
    taus = np.array([t0, tb, -t0])
    together = coincidence_probability_expanded(cfg, b2, 0.0, taus)
    apart = [coincidence_probability_expanded(cfg, b2, 0.0, t) for t in taus[::-1]][::-1]
    np.testing.assert_allclose(together, apart, rtol=0, atol=1e-15)


coef = st.tuples(st.floats(-20, 20), st.floats(-100, 100), st.floats(-4e4, 4e4), st.floats(-3e5, 3e5))


@settings(max_examples=30, deadline=None)
@given(coef, coef, st.floats(0.1, 0.9), st.floats(0.0, 1.0), st.floats(-30, 30))
def test_property_invariants(sc, ic, T, p, b0):
    cfg = InterferometerConfig(
        pump=gaussian_spectrum(405.5, 1.0),
        pdc=gaussian_spectrum(811.0, 20.0),
        bs=BeamSplitter(T, 1.0 - T),
        purity=PurityModel.from_p(p),
        signal=ChannelPhase((PhaseExpansion(*sc),)),
        idler=ChannelPhase((PhaseExpansion(*ic),)),
        n_omega=201,
        n_omega_p=41,
    )
    taus = np.linspace(-300.0, 300.0, 25)
    base = coincidence_probability_general(cfg, taus)
    assert np.all((base >= 0) & (base <= 1))
    shifted = InterferometerConfig(**{**cfg.__dict__, "idler": cfg.idler.add(PhaseExpansion(beta0=b0))})
    assert np.max(np.abs(coincidence_probability_general(shifted, taus) - base)) <= 1e-12
    swapped = InterferometerConfig(**{**cfg.__dict__, "signal": cfg.idler, "idler": cfg.signal, "bs": cfg.bs.swapped()})
    assert np.max(np.abs(coincidence_probability_general(swapped, taus)[::-1] - base)) <= 1e-10
    pure = InterferometerConfig(**{**cfg.__dict__, "purity": PurityModel.from_p(1.0)})
    np.testing.assert_array_equal(coincidence_probability_general(pure, taus) * p + 0.5 * (1 - p), base)
