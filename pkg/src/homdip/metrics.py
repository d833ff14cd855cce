"""Dip observables: visibility, FWHM, sidelobes, and closed-form relations."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidParameterError, NoDipError, RangeError
from .interference import DipProfile, PurityModel

SIDELOBE_EPS = 1e-3
_FLAT_TOL = 1e-6


@dataclass(frozen=True)
class Sidelobe:
    tau: float
    height: float  # above baseline, on the profile's scale
    paired: bool = False


@dataclass(frozen=True)
class DipMetrics:
    visibility: float
    fwhm: float
    baseline: float
    min_value: float
    min_position: float
    sidelobes: list = field(default_factory=list)
    closed_form_visibility: float | None = None

    def to_dict(self) -> dict:
        out = {
            "visibility": self.visibility,
            "fwhm_fs": self.fwhm,
            "baseline": self.baseline,
            "min_value": self.min_value,
            "min_position_fs": self.min_position,
            "sidelobes": [asdict(s) for s in self.sidelobes],
        }
        if self.closed_form_visibility is not None:
            out["closed_form_visibility"] = self.closed_form_visibility
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def dip_minimum(profile: DipProfile) -> tuple[float, float]:
    """Position and value of the dip bottom.

    A parabola through the lowest sample and its two neighbours locates the
    vertex between samples.
    """
    tau, y = profile.tau, profile.values
    if len(y) < 5:
        raise NoDipError("profile needs at least 5 samples")
    ref = profile.reference
    i = int(np.argmin(y))
    if ref - y[i] <= _FLAT_TOL * ref:
        raise NoDipError("profile has no minimum below its baseline")
    if i == 0 or i == len(y) - 1:
        raise NoDipError("lowest sample sits at the edge of the delay range; widen the tau grid")
    x0, x1, x2 = tau[i - 1 : i + 2]
    y0, y1, y2 = y[i - 1 : i + 2]
    # Newton divided differences
    d01 = (y1 - y0) / (x1 - x0)
    d12 = (y2 - y1) / (x2 - x1)
    a = (d12 - d01) / (x2 - x0)
    if a <= 0:
        return float(x1), float(y1)
    b = d01 - a * (x0 + x1)
    xv = -b / (2.0 * a)
    yv = y0 + d01 * (xv - x0) + a * (xv - x0) * (xv - x1)
    return float(xv), float(min(yv, y1))


def visibility(profile: DipProfile) -> float:
    """Dip contrast (B - P_min)/(B + P_min)."""
    _, p_min = dip_minimum(profile)
    b = profile.reference
    return float((b - p_min) / (b + p_min))


def fwhm(profile: DipProfile) -> float:
    """Full width at half depth, from the outermost half-depth crossings."""
    left, right = _crossings(profile)
    return right - left


def _crossings(profile: DipProfile) -> tuple[float, float]:
    _, p_min = dip_minimum(profile)
    b = profile.reference
    half = b - (b - p_min) / 2.0
    tau, y = profile.tau, profile.values
    below = np.flatnonzero(y < half)
    i, j = below[0], below[-1]
    if i == 0 or j == len(y) - 1:
        raise RangeError("half-depth crossing lies outside the sampled delays; widen the tau grid")
    left = tau[i - 1] + (half - y[i - 1]) * (tau[i] - tau[i - 1]) / (y[i] - y[i - 1])
    right = tau[j] + (half - y[j]) * (tau[j + 1] - tau[j]) / (y[j + 1] - y[j])
    return float(left), float(right)


def detect_sidelobes(profile: DipProfile, eps: float = SIDELOBE_EPS) -> list[Sidelobe]:
    """Local maxima more than ``eps`` above the baseline.

    A sidelobe is ``paired`` when another one sits at the mirror delay about
    the dip centre, within one and a half sample spacings.
    """
    tau, y = profile.tau, profile.normalized_values
    if len(y) < 3:
        return []
    inner = np.arange(1, len(y) - 1)
    peaks = inner[(y[inner] > y[inner - 1]) & (y[inner] >= y[inner + 1]) & (y[inner] > 1.0 + eps)]
    if len(peaks) == 0:
        return []
    try:
        center, _ = dip_minimum(profile)
    except NoDipError:
        center = float(np.mean(tau[peaks]))
    tol = 1.5 * float(np.max(np.diff(tau)))
    scale = profile.reference
    positions = tau[peaks]
    lobes = []
    for k in peaks:
        mirror = 2.0 * center - tau[k]
        paired = bool(np.any((np.abs(positions - mirror) <= tol) & (positions != tau[k])))
        lobes.append(Sidelobe(float(tau[k]), float((y[k] - 1.0) * scale), paired))
    return lobes


def dip_metrics(profile: DipProfile, closed_form: float | None = None) -> DipMetrics:
    position, p_min = dip_minimum(profile)
    b = profile.reference
    return DipMetrics(
        visibility=float((b - p_min) / (b + p_min)),
        fwhm=fwhm(profile),
        baseline=float(b),
        min_value=p_min,
        min_position=position,
        sidelobes=detect_sidelobes(profile),
        closed_form_visibility=closed_form,
    )


def closed_form_visibility(T: float, R: float, V_I: float) -> float:
    """HOM visibility from beamsplitter coefficients and interferogram visibility.

    ``R·T·V_I² / (1 - 2RT - RT·V_I²)``; equals the simulated contrast for
    a balanced splitter and agrees with it to a few 1e-4 otherwise.
    """
    if abs(T + R - 1.0) > 1e-9 or not (0.0 <= T <= 1.0 and 0.0 <= R <= 1.0):
        raise InvalidParameterError(f"need 0 <= T, R <= 1 with T + R = 1, got T={T}, R={R}")
    if not (0.0 <= V_I <= 1.0):
        raise InvalidParameterError(f"V_I must lie in [0, 1], got {V_I}")
    rt = R * T
    denom = 1.0 - 2.0 * rt - rt * V_I**2
    if denom <= 0:
        raise InvalidParameterError("non-physical combination: denominator vanishes")
    return rt * V_I**2 / denom


def purity_relations(theta_deg: float | None = None, V_I: float | None = None, p: float | None = None) -> PurityModel:
    """Consistent (θ, V_I, p) triple from exactly one of them."""
    given = [x is not None for x in (theta_deg, V_I, p)]
    if sum(given) != 1:
        raise InvalidParameterError("give exactly one of theta_deg, V_I, p")
    if theta_deg is not None:
        return PurityModel.from_theta(theta_deg)
    if V_I is not None:
        return PurityModel.from_visibility(V_I)
    return PurityModel.from_p(p)
