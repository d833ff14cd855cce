"""Coincidence probability of the two-photon interferometer.

The signal photon carries detuning ω_p/2 + ω and the idler ω_p/2 - ω. With
the two exchange amplitudes weighted by the beamsplitter coefficients the
coincidence probability is

    P(τ) = ∫∫ |A(ω_p)|² { T² f(ω)² + R² f(-ω)²
                          - 2RT·Re[f(ω) f(-ω) e^{i(2ωτ + φ(ω_p, ω))}] },

where φ is the signal-minus-idler exchange phase. A polarisation purity
``p`` mixes in a flat 1/2: P_tot = p·P + (1 - p)/2.

Quadrature is a trapezoidal tensor rule on a symmetric grid. Because only
the cross term depends on τ, the ω_p sum is carried out once per phase
function and the τ scan costs one matrix product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, InvalidParameterError, NumericError
from .phase import ChannelPhase, PhaseExpansion
from .spectra import FrequencyGrid, SpectralAmplitude, build_grid

CONVERGENCE_TOL = 1e-4
IMAG_RESIDUE_TOL = 1e-10
# upgrade the default grid when the cubic phase at the grid edge exceeds this
CUBIC_PHASE_LIMIT = 20.0


@dataclass(frozen=True)
class BeamSplitter:
    """Intensity transmission and reflection coefficients."""

    T: float = 0.5
    R: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.T <= 1.0 and 0.0 <= self.R <= 1.0):
            raise InvalidParameterError(f"T and R must lie in [0, 1], got T={self.T}, R={self.R}")
        if abs(self.T + self.R - 1.0) > 1e-9:
            raise InvalidParameterError(f"T + R must equal 1, got {self.T + self.R}")

    def swapped(self) -> BeamSplitter:
        return BeamSplitter(self.R, self.T)


@dataclass(frozen=True)
class PurityModel:
    """Polarisation mismatch θ, interferogram visibility V_I and purity p.

    Build with :meth:`from_theta`, :meth:`from_visibility` or
    :meth:`from_p`; the other two quantities follow from p = cos²θ and
    V_I = |cos θ|.
    """

    theta_deg: float
    V_I: float
    p: float

    @classmethod
    def from_theta(cls, theta_deg: float) -> PurityModel:
        if not (0.0 <= theta_deg <= 90.0):
            raise InvalidParameterError(f"theta must lie in [0, 90] degrees, got {theta_deg}")
        c = math.cos(math.radians(theta_deg))
        return cls(float(theta_deg), abs(c), c * c)

    @classmethod
    def from_visibility(cls, V_I: float) -> PurityModel:
        if not (0.0 <= V_I <= 1.0):
            raise InvalidParameterError(f"V_I must lie in [0, 1], got {V_I}")
        return cls(math.degrees(math.acos(V_I)), float(V_I), V_I * V_I)

    @classmethod
    def from_p(cls, p: float) -> PurityModel:
        if not (0.0 <= p <= 1.0):
            raise InvalidParameterError(f"p must lie in [0, 1], got {p}")
        v = math.sqrt(p)
        return cls(math.degrees(math.acos(v)), v, float(p))


@dataclass(frozen=True)
class InterferometerConfig:
    """Everything the forward model needs.

    ``grid=None`` builds the default ``n_omega`` × ``n_omega_p`` grid over
    the spectral supports, doubled in resolution when the cubic phase gets
    large (see :func:`resolve_grid`).
    """

    pump: SpectralAmplitude
    pdc: SpectralAmplitude
    bs: BeamSplitter = field(default_factory=BeamSplitter)
    purity: PurityModel = field(default_factory=lambda: PurityModel.from_p(1.0))
    signal: ChannelPhase = field(default_factory=ChannelPhase)
    idler: ChannelPhase = field(default_factory=ChannelPhase)
    grid: FrequencyGrid | None = None
    n_omega: int = 401
    n_omega_p: int = 201

    @property
    def baseline(self) -> float:
        return analytic_baseline(self.bs, self.purity.p)


def analytic_baseline(bs: BeamSplitter, p: float) -> float:
    """Coincidence probability far outside the dip."""
    return (bs.T**2 + bs.R**2) * p + 0.5 * (1.0 - p)


def apply_purity(P, p: float):
    return P * p + 0.5 * (1.0 - p)


def resolve_grid(cfg: InterferometerConfig, beta3: float = 0.0) -> FrequencyGrid:
    """The grid used for ``cfg``; explicit grids are checked, not altered."""
    if cfg.grid is not None:
        grid = cfg.grid
        if not grid.covers(cfg.pdc):
            raise DomainError("omega grid does not cover the downconverted spectrum support")
        if not grid.covers(cfg.pump, "omega_p"):
            raise DomainError("omega_p grid does not cover the pump spectrum support")
        return grid
    n_omega, n_omega_p = cfg.n_omega, cfg.n_omega_p
    if abs(beta3) * cfg.pdc.half_width**3 / 3.0 > CUBIC_PHASE_LIMIT:
        n_omega, n_omega_p = 2 * n_omega - 1, max(2 * n_omega_p - 1, 1)
    return build_grid(cfg.pump, cfg.pdc, n_omega, n_omega_p)


# -- quadrature ----------------------------------------------------------------


class QuadratureResult(NamedTuple):
    value: complex
    half_value: complex
    converged: bool


def integrate_2d(integrand: Callable, grid: FrequencyGrid, tol: float = CONVERGENCE_TOL) -> QuadratureResult:
    """Trapezoidal tensor rule for ``integrand(omega_p, omega)`` over ``grid``.

    The integrand receives 2-D arrays (pump axis first). The report carries
    the value on the every-other-point subgrid; ``converged`` is true when
    the two differ by less than ``tol``. A one-point pump axis has unit
    weight.
    """

    def rule(g: FrequencyGrid) -> complex:
        wp, wo = np.meshgrid(g.omega_p, g.omega, indexing="ij")
        values = np.asarray(integrand(wp, wo))
        if not np.all(np.isfinite(values)):
            raise NumericError("non-finite integrand")
        return complex(g.w_p @ values @ g.w)

    full = rule(grid)
    half = rule(grid.half())
    return QuadratureResult(full, half, abs(full - half) < tol)


# -- forward model ---------------------------------------------------------------

PhaseFn = Callable[[FrequencyGrid], np.ndarray]


def _expanded_phase(beta2: float, beta3: float) -> PhaseFn:
    def phase(grid: FrequencyGrid) -> np.ndarray:
        wp, w = grid.omega_p, grid.omega
        return np.multiply.outer(beta2 * wp + 0.25 * beta3 * wp**2, w) + beta3 * w**3 / 3.0

    return phase


def _channel_phase(signal: ChannelPhase, idler: ChannelPhase) -> PhaseFn:
    def phase(grid: FrequencyGrid) -> np.ndarray:
        u = grid.omega_p[:, None] / 2.0
        w_s = u + grid.omega[None, :]
        w_i = u - grid.omega[None, :]
        return (signal(w_s) - signal(w_i)) + (idler(w_i) - idler(w_s))

    return phase


class SampledModel:
    """Spectra sampled once on a fixed grid, reusable across phase functions.

    The inverse routines evaluate thousands of phase settings on the same
    grid; this keeps the spectral factors and normalisation out of that loop.
    """

    def __init__(self, cfg: InterferometerConfig, grid: FrequencyGrid | None = None, beta3: float = 0.0):
        grid = resolve_grid(cfg, beta3) if grid is None else grid
        if not grid.is_symmetric:
            raise DomainError("quadrature grid must be symmetric about zero detuning")
        self.cfg = cfg
        self.grid = grid
        if len(grid.omega_p) == 1:
            a2 = np.ones(1)
        else:
            a2 = np.asarray(cfg.pump(grid.omega_p)) ** 2
        f = np.asarray(cfg.pdc(grid.omega))
        f_m = f[::-1]
        wp, w = grid.w_p, grid.w
        pump_mass = float(wp @ a2)
        pdc_mass = float(w @ f**2)
        if not (pump_mass > 0 and pdc_mass > 0):
            raise DomainError("spectra vanish on the quadrature grid")
        self._pump_weights = wp * a2
        self._pdc_weights = w * f * f_m
        T, R = cfg.bs.T, cfg.bs.R
        self._direct = (T**2 * pdc_mass + R**2 * float(w @ f_m**2)) * pump_mass
        self._norm = pump_mass * pdc_mass
        self._two_rt = 2.0 * R * T

    def cross_weights(self, phi: np.ndarray) -> np.ndarray:
        """Per-ω cross-term weights for exchange phase ``phi`` (pump axis first)."""
        weighted = self._pdc_weights * (self._pump_weights @ np.exp(1j * phi))
        if not np.all(np.isfinite(weighted)):
            raise NumericError("non-finite integrand")
        return weighted

    def expanded_weights(self, beta2: float, beta3: float) -> np.ndarray:
        return self.cross_weights(_expanded_phase(beta2, beta3)(self.grid))

    def pure(self, weighted: np.ndarray, taus) -> np.ndarray:
        """Coincidence probability before the purity mixture."""
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        cross = np.exp(2j * np.outer(taus, self.grid.omega)) @ weighted
        scale = float(np.abs(weighted).sum())
        if scale > 0 and np.max(np.abs(cross.imag)) > IMAG_RESIDUE_TOL * scale:
            raise NumericError(
                f"imaginary residue {np.max(np.abs(cross.imag)) / scale:.3e} of the cross term exceeds tolerance"
            )
        return (self._direct - self._two_rt * cross.real) / self._norm


def _curve(cfg: InterferometerConfig, grid: FrequencyGrid, phase: PhaseFn, taus: np.ndarray) -> np.ndarray:
    """Pure-state coincidence probability (before purity) at each τ."""
    model = SampledModel(cfg, grid)
    return model.pure(model.cross_weights(phase(grid)), taus)


def _evaluate(cfg, phase: PhaseFn, taus, beta3: float, purity: float | None = None):
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if not np.all(np.isfinite(taus)):
        raise InvalidParameterError("delays must be finite")
    grid = resolve_grid(cfg, beta3)
    p = cfg.purity.p if purity is None else purity
    return apply_purity(_curve(cfg, grid, phase, taus), p), grid


def _scalar_or_array(values, tau):
    return float(values[0]) if np.ndim(tau) == 0 else values


def coincidence_probability_general(cfg: InterferometerConfig, tau=0.0):
    """Coincidence probability with arbitrary per-channel phase functions.

    Each channel phase is evaluated at its own photon's detuning. ``tau`` is
    an extra delay (fs) on top of the channels' own group-delay difference.
    Accepts a scalar or an array of delays.
    """
    beta3 = _channel_beta3(cfg)
    values, _ = _evaluate(cfg, _channel_phase(cfg.signal, cfg.idler), tau, beta3)
    return _scalar_or_array(values, tau)


def coincidence_probability_expanded(cfg: InterferometerConfig, beta2_tot: float, beta3_tot: float, tau=0.0):
    """Coincidence probability with the phase truncated at third order.

    Uses ``2ωτ + β2·ω_p·ω + β3·(ω_p²·ω/4 + ω³/3)``; the channel phases stored
    in ``cfg`` are ignored.
    """
    values, _ = _evaluate(cfg, _expanded_phase(beta2_tot, beta3_tot), tau, beta3_tot)
    return _scalar_or_array(values, tau)


def _channel_beta3(cfg: InterferometerConfig) -> float:
    def beta3(ch: ChannelPhase) -> float:
        return math.fsum(e.beta3 for e in ch.elements if isinstance(e, PhaseExpansion))

    return beta3(cfg.signal) - beta3(cfg.idler)


# -- dip profiles --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DipProfile:
    """Sampled coincidence probability versus delay.

    ``values`` holds raw probabilities, or probability/baseline when
    ``normalized`` is set. ``baseline`` is always on the raw scale.
    """

    tau: np.ndarray
    values: np.ndarray
    baseline: float
    normalized: bool = True
    grid_shape: tuple[int, int] | None = None
    half_grid_delta: float | None = None
    converged: bool | None = None

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if tau.shape != values.shape or tau.ndim != 1:
            raise InvalidParameterError("tau and values must be 1-D arrays of equal length")
        if not self.baseline > 0:
            raise InvalidParameterError("baseline must be positive")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "values", values)

    @property
    def reference(self) -> float:
        """Baseline on the scale of ``values``."""
        return 1.0 if self.normalized else self.baseline

    @property
    def probability(self) -> np.ndarray:
        return self.values * self.baseline if self.normalized else self.values

    @property
    def normalized_values(self) -> np.ndarray:
        return self.values if self.normalized else self.values / self.baseline

    def scaled(self, factor: float) -> DipProfile:
        """Multiply values and baseline by ``factor`` (raw-scale profiles only)."""
        if self.normalized:
            raise InvalidParameterError("scale a raw profile, not a normalized one")
        return DipProfile(self.tau, self.values * factor, self.baseline * factor, False)

    def shifted(self, delta: float) -> DipProfile:
        return DipProfile(self.tau + delta, self.values, self.baseline, self.normalized)


def _profile(cfg, phase: PhaseFn, tau_grid, beta3, normalized, delay_offset) -> DipProfile:
    taus = np.asarray(tau_grid, dtype=float)
    if taus.ndim != 1 or len(taus) == 0:
        raise InvalidParameterError("tau grid must be a non-empty 1-D sequence")
    if np.any(np.diff(taus) < 0):
        raise InvalidParameterError("tau grid must be sorted")
    grid = resolve_grid(cfg, beta3)
    p = cfg.purity.p
    full = apply_purity(_curve(cfg, grid, phase, taus + delay_offset), p)
    half = apply_purity(_curve(cfg, grid.half(), phase, taus + delay_offset), p)
    delta = float(np.max(np.abs(full - half)))
    baseline = cfg.baseline
    values = full / baseline if normalized else full
    return DipProfile(
        taus, values, baseline, normalized, grid_shape=grid.shape, half_grid_delta=delta,
        converged=delta < CONVERGENCE_TOL,
    )


def dip_profile(
    cfg: InterferometerConfig,
    beta2_tot: float,
    beta3_tot: float,
    tau_grid,
    normalized: bool = True,
    delay_offset: float = 0.0,
) -> DipProfile:
    """Profile of the third-order expanded model over ``tau_grid``.

    ``delay_offset`` is added to every delay before evaluation (e.g. a
    residual group-delay difference between channels); the returned ``tau``
    axis is ``tau_grid`` itself.
    """
    return _profile(cfg, _expanded_phase(beta2_tot, beta3_tot), tau_grid, beta3_tot, normalized, delay_offset)


def general_profile(cfg: InterferometerConfig, tau_grid, normalized: bool = True) -> DipProfile:
    """Profile computed from the per-channel phase functions in ``cfg``."""
    return _profile(cfg, _channel_phase(cfg.signal, cfg.idler), tau_grid, _channel_beta3(cfg), normalized, 0.0)


def tail_mean_baseline(tau, values, threshold: float) -> float:
    """Mean of the samples with |τ| above ``threshold``."""
    tau, values = np.asarray(tau, dtype=float), np.asarray(values, dtype=float)
    tail = np.abs(tau) > threshold
    if not np.any(tail):
        raise InvalidParameterError(f"no samples with |tau| > {threshold} fs")
    return float(values[tail].mean())


def measured_profile(tau, values, threshold: float) -> DipProfile:
    """Normalized profile of measured data, baseline from the far tails."""
    baseline = tail_mean_baseline(tau, values, threshold)
    return DipProfile(np.asarray(tau, dtype=float), np.asarray(values, dtype=float) / baseline, baseline, True)
