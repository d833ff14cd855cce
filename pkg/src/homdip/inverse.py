"""Parameter sweeps, dispersion compensation and dip fitting."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    ConvergenceError,
    IdentifiabilityError,
    InvalidParameterError,
    NoDipError,
    RangeError,
)
from .interference import (
    DipProfile,
    InterferometerConfig,
    SampledModel,
    analytic_baseline,
    apply_purity,
    dip_profile,
)
from .metrics import dip_metrics, visibility
from .phase import PhaseExpansion
from .simplex import nelder_mead
from .spectra import rms_width

AXES = ("beta2", "beta3")
WIDEN_FACTOR = 2.0
MAX_WIDEN = 4


def zero_dispersion_fwhm(cfg: InterferometerConfig) -> float:
    """Gaussian-equivalent dip width sqrt(2 ln 2)/σ from the PDC rms detuning."""
    return math.sqrt(2.0 * math.log(2.0)) / rms_width(cfg.pdc)


# -- sweeps --------------------------------------------------------------------


@dataclass
class SweepResult:
    axis: str
    values: list
    visibility: list
    fwhm: list
    config_label: str = "custom"
    tau_spans: list = field(default_factory=list)
    converged: list = field(default_factory=list)

    def rows(self):
        return list(zip(self.values, self.visibility, self.fwhm))


def profile_with_auto_range(
    cfg: InterferometerConfig,
    beta2: float,
    beta3: float,
    span: float | None = None,
    step: float | None = None,
    delay_offset: float = 0.0,
):
    """Profile and metrics on a τ grid widened until the dip fits inside it.

    The grid is centred on the delay ``-delay_offset`` where an undispersed
    dip would sit, and doubled in span (same step) up to four times.
    """
    width0 = zero_dispersion_fwhm(cfg)
    step = width0 / 40.0 if step is None else step
    span = 3.0 * width0 if span is None else span
    for attempt in range(MAX_WIDEN + 1):
        n = int(round(span / step))
        taus = step * np.arange(-n, n + 1) - delay_offset
        profile = dip_profile(cfg, beta2, beta3, taus, delay_offset=delay_offset)
        try:
            return profile, dip_metrics(profile)
        except (RangeError, NoDipError) as exc:
            if attempt == MAX_WIDEN or (isinstance(exc, NoDipError) and "edge" not in str(exc)):
                raise
            span *= WIDEN_FACTOR
    raise AssertionError("unreachable")


def sweep(
    cfg: InterferometerConfig,
    axis: str,
    values,
    beta2: float = 0.0,
    beta3: float = 0.0,
    label: str = "custom",
) -> SweepResult:
    """Visibility and FWHM along ``axis`` with the other coefficient held fixed."""
    if axis not in AXES:
        raise InvalidParameterError(f"axis must be one of {AXES}, got {axis!r}")
    values = [float(v) for v in values]
    if not values or not all(math.isfinite(v) for v in values):
        raise InvalidParameterError("sweep values must be a non-empty list of finite numbers")
    if any(b < a for a, b in zip(values, values[1:])):
        raise InvalidParameterError("sweep values must be sorted ascending")
    out = SweepResult(axis, values, [], [], label)
    for v in values:
        b2, b3 = (v, beta3) if axis == "beta2" else (beta2, v)
        profile, m = profile_with_auto_range(cfg, b2, b3)
        out.visibility.append(m.visibility)
        out.fwhm.append(m.fwhm)
        out.tau_spans.append(float(profile.tau[-1]))
        out.converged.append(bool(profile.converged))
    return out


# -- continuous dip observables (smooth objectives for the optimizers) ------------


class _DipScanner:
    """Minimum and half-depth width of P(τ) located to solver precision."""

    def __init__(self, cfg: InterferometerConfig, beta3_max: float, span: float | None = None):
        self.cfg = cfg
        self.model = SampledModel(cfg, beta3=beta3_max)
        width0 = zero_dispersion_fwhm(cfg)
        span = 16.0 * width0 if span is None else span
        self.taus = np.linspace(-span, span, 2 * int(span / (width0 / 10.0)) + 1)
        self.p = cfg.purity.p
        self.baseline = cfg.baseline

    def curve(self, weighted, taus):
        return apply_purity(self.model.pure(weighted, taus), self.p)

    def minimum(self, beta2: float, beta3: float):
        weighted = self.model.expanded_weights(beta2, beta3)
        coarse = self.curve(weighted, self.taus)
        i = int(np.argmin(coarse))
        lo = self.taus[max(i - 1, 0)]
        hi = self.taus[min(i + 1, len(self.taus) - 1)]
        res = minimize_scalar(
            lambda t: float(self.curve(weighted, t)[0]),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-7},
        )
        t_min, p_min = (res.x, res.fun) if res.fun <= coarse[i] else (self.taus[i], coarse[i])
        return weighted, coarse, float(t_min), float(p_min)

    def visibility(self, beta2: float, beta3: float) -> float:
        _, _, _, p_min = self.minimum(beta2, beta3)
        return (self.baseline - p_min) / (self.baseline + p_min)

    def fwhm(self, beta2: float, beta3: float) -> float:
        weighted, coarse, _, p_min = self.minimum(beta2, beta3)
        half = self.baseline - (self.baseline - p_min) / 2.0
        below = np.flatnonzero(coarse < half)
        i, j = below[0], below[-1]
        if i == 0 or j == len(coarse) - 1:
            return math.inf

        def g(t):
            return float(self.curve(weighted, t)[0]) - half

        left = brentq(g, self.taus[i - 1], self.taus[i], xtol=1e-9)
        right = brentq(g, self.taus[j], self.taus[j + 1], xtol=1e-9)
        return right - left


# -- compensation ------------------------------------------------------------------

OBJECTIVES = ("maximize-visibility", "minimize-fwhm")


@dataclass
class CompensationResult:
    slm: PhaseExpansion
    objective: str
    objective_value: float
    visibility: float
    iterations: int
    evaluations: int
    converged: bool


def compensate(
    cfg: InterferometerConfig,
    channel_beta2: float,
    channel_beta3: float,
    objective: str = "maximize-visibility",
    beta2_box: tuple[float, float] = (-1e5, 1e5),
    beta3_box: tuple[float, float] = (-1e6, 1e6),
    seed_points: int = 7,
    max_iter: int = 1000,
) -> CompensationResult:
    """SLM second/third-order coefficients that best undo the channel dispersion.

    A coarse grid over the search box seeds a simplex search on the simulated
    dip metric. Raises :class:`ConvergenceError` (with ``best`` set) when the
    simplex exhausts ``max_iter``.
    """
    if objective not in OBJECTIVES:
        raise InvalidParameterError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    lo = np.array([beta2_box[0], beta3_box[0]], dtype=float)
    hi = np.array([beta2_box[1], beta3_box[1]], dtype=float)
    if not np.all(hi > lo):
        raise InvalidParameterError("search box bounds must be increasing")
    center, halfw = (lo + hi) / 2.0, (hi - lo) / 2.0
    beta3_reach = max(abs(channel_beta3 + beta3_box[0]), abs(channel_beta3 + beta3_box[1]))
    scanner = _DipScanner(cfg, beta3_reach)

    def metric(b2m, b3m):
        b2, b3 = channel_beta2 + b2m, channel_beta3 + b3m
        if objective == "maximize-visibility":
            return -scanner.visibility(b2, b3)
        return scanner.fwhm(b2, b3)

    def scaled(x):
        b = center + halfw * x
        return metric(b[0], b[1])

    axis = np.linspace(-1.0, 1.0, seed_points)
    seeds = [(scaled(np.array(x)), x) for x in itertools.product(axis, axis)]
    _, start = min(seeds, key=lambda s: (s[0], s[1]))
    res = nelder_mead(
        scaled,
        np.array(start),
        step=np.full(2, 1.0 / (seed_points - 1)),
        lower=-np.ones(2),
        upper=np.ones(2),
        max_iter=max_iter,
        ftol_rel=1e-15,
        xtol=1e-8,
    )
    b2m, b3m = center + halfw * res.x
    slm = PhaseExpansion(beta2=float(b2m), beta3=float(b3m), label="SLM")
    vis = scanner.visibility(channel_beta2 + b2m, channel_beta3 + b3m)
    result = CompensationResult(slm, objective, res.fun, vis, res.iterations, res.evaluations, res.converged)
    if not res.converged:
        raise ConvergenceError(f"compensation did not converge in {max_iter} iterations", best=result)
    return result


# -- fitting ------------------------------------------------------------------------

PARAMS = ("beta2", "beta3", "tau0", "p")
MIN_FIT_SAMPLES = 15


@dataclass
class FitResult:
    beta2: float
    beta3: float
    tau0: float
    p: float
    residual: float
    iterations: int
    converged: bool
    free: tuple = PARAMS
    starts: int = 0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["beta2_fs2"] = out.pop("beta2")
        out["beta3_fs3"] = out.pop("beta3")
        out["tau0_fs"] = out.pop("tau0")
        out["free"] = list(self.free)
        return out


class _FitModel:
    def __init__(self, cfg: InterferometerConfig, beta3_max: float):
        self.model = SampledModel(cfg, beta3=beta3_max)
        self.bs = cfg.bs
        self._cache: dict = {}

    def weights(self, beta2, beta3):
        key = (beta2, beta3)
        w = self._cache.get(key)
        if w is None:
            if len(self._cache) > 256:
                self._cache.clear()
            w = self._cache[key] = self.model.expanded_weights(beta2, beta3)
        return w

    def normalized(self, taus, beta2, beta3, tau0, p):
        pure = self.model.pure(self.weights(beta2, beta3), taus - tau0)
        return apply_purity(pure, p) / analytic_baseline(self.bs, p)


def fit_dip(
    measured: DipProfile,
    cfg: InterferometerConfig,
    free=PARAMS,
    initial: dict | None = None,
    bounds: dict | None = None,
    grid_points: dict | None = None,
    starts: int = 6,
    max_iter: int = 3000,
) -> FitResult:
    """Least-squares fit of the expanded forward model to a normalized profile.

    ``free`` picks which of beta2, beta3, tau0 and p vary; the rest take
    their value from ``initial`` (defaults: 0, 0, 0 and the purity of
    ``cfg``). A coarse grid over ``bounds`` ranks candidate starting points
    and the best ``starts`` of them seed independent simplex runs. With a
    symmetric pump the sign of beta2 is not observable, so beta2 is searched
    over non-negative values by default.
    """
    free = tuple(free)
    unknown = set(free) - set(PARAMS)
    if unknown or not free:
        raise InvalidParameterError(f"free parameters must be a non-empty subset of {PARAMS}, got {free}")
    if not measured.normalized:
        raise InvalidParameterError("fit_dip expects a normalized profile")
    if len(measured.tau) < MIN_FIT_SAMPLES:
        raise InvalidParameterError(f"need at least {MIN_FIT_SAMPLES} samples, got {len(measured.tau)}")
    visibility(measured)  # raises NoDipError for flat data

    taus, data = measured.tau, measured.values
    t_lo, t_hi = float(taus.min()), float(taus.max())
    box = {
        "beta2": (0.0, 8e4),
        "beta3": (-8e5, 8e5),
        "tau0": (t_lo / 2.0, t_hi / 2.0),
        "p": (0.0, 1.0),
    }
    box.update(bounds or {})
    values = {"beta2": 0.0, "beta3": 0.0, "tau0": 0.0, "p": cfg.purity.p}
    values.update(initial or {})

    beta3_max = max(abs(box["beta3"][0]), abs(box["beta3"][1])) if "beta3" in free else abs(values["beta3"])
    fm = _FitModel(cfg, beta3_max)
    if "beta2" in free and len(fm.model.grid.omega_p) == 1:
        raise IdentifiabilityError("beta2 has no effect with a monochromatic pump and cannot be fitted")

    lo = np.array([box[k][0] for k in free], dtype=float)
    hi = np.array([box[k][1] for k in free], dtype=float)
    if not np.all(hi > lo):
        raise InvalidParameterError("fit bounds must be increasing")
    center, halfw = (lo + hi) / 2.0, (hi - lo) / 2.0

    def unpack(x):
        v = dict(values)
        v.update(zip(free, center + halfw * np.asarray(x)))
        return v

    def residual(x):
        v = unpack(x)
        model = fm.normalized(taus, v["beta2"], v["beta3"], v["tau0"], v["p"])
        return float(np.sum((model - data) ** 2))

    counts = {"beta2": 5, "beta3": 5, "tau0": 5, "p": 3}
    counts.update(grid_points or {})
    axes = [np.linspace(-1.0, 1.0, counts[k]) for k in free]
    ranked = sorted((residual(np.array(x)), x) for x in itertools.product(*axes))

    runs = []
    for _, x0 in ranked[:starts]:
        res = nelder_mead(
            residual,
            np.array(x0),
            step=np.array([2.0 / (counts[k] - 1) / 2.0 for k in free]),
            lower=-np.ones(len(free)),
            upper=np.ones(len(free)),
            max_iter=max_iter,
            ftol_rel=1e-8,
            ftol_abs=1e-28,
            xtol=1e-10,
        )
        runs.append(res)

    def rank(res):
        v = unpack(res.x)
        return (res.fun, abs(v["tau0"]), tuple(v[k] for k in PARAMS))

    best_fun = min(r.fun for r in runs)
    tied = [r for r in runs if r.fun <= best_fun + 1e-12 * max(best_fun, 1e-300)]
    best = min(tied, key=lambda r: rank(r)[1:])
    v = unpack(best.x)
    return FitResult(
        beta2=float(v["beta2"]),
        beta3=float(v["beta3"]),
        tau0=float(v["tau0"]),
        p=float(v["p"]),
        residual=best.fun,
        iterations=sum(r.iterations for r in runs),
        converged=best.converged,
        free=free,
        starts=len(runs),
    )


def simulate_measurement(
    cfg: InterferometerConfig, taus, beta2: float, beta3: float, tau0: float, p: float
) -> DipProfile:
    """Normalized profile of the forward model, as a fit target."""
    fm = _FitModel(cfg, abs(beta3))
    taus = np.asarray(taus, dtype=float)
    return DipProfile(taus, fm.normalized(taus, beta2, beta3, tau0, p), analytic_baseline(cfg.bs, p), True)
