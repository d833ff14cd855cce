"""Polynomial phase expansions, channel composition, materials and the SLM.

A :class:`PhaseExpansion` holds the Taylor coefficients of one optical
element's spectral phase about the carrier,

    φ(ω) = β0 + β1·ω + β2·ω²/2 + β3·ω³/6,

with ω in rad/fs, β1 in fs, β2 in fs², β3 in fs³.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import InvalidParameterError
from .spectra import wavelength_to_detuning

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhaseExpansion:
    beta0: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    beta3: float = 0.0
    label: str = "custom"

    def __post_init__(self):
        for name in ("beta0", "beta1", "beta2", "beta3"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        return self.beta0 + omega * (self.beta1 + omega * (self.beta2 / 2.0 + omega * (self.beta3 / 6.0)))

    def __add__(self, other: PhaseExpansion) -> PhaseExpansion:
        if not isinstance(other, PhaseExpansion):
            return NotImplemented
        return PhaseExpansion(
            self.beta0 + other.beta0,
            self.beta1 + other.beta1,
            self.beta2 + other.beta2,
            self.beta3 + other.beta3,
            label="custom",
        )

    def __neg__(self) -> PhaseExpansion:
        return PhaseExpansion(-self.beta0, -self.beta1, -self.beta2, -self.beta3, label=self.label)

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.beta0, self.beta1, self.beta2, self.beta3)


@dataclass(frozen=True)
class ChannelPhase:
    """Elements traversed by one photon; the phase is the sum of theirs.

    Elements are usually :class:`PhaseExpansion` instances, but any callable
    of the photon's own detuning is accepted (e.g. a pixelated SLM table).
    """

    elements: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        total = np.zeros_like(omega)
        for element in self.elements:
            total = total + element(omega)
        return total

    def add(self, element) -> ChannelPhase:
        return ChannelPhase(self.elements + (element,))

    @property
    def is_polynomial(self) -> bool:
        return all(isinstance(e, PhaseExpansion) for e in self.elements)


def total_phase(ch: ChannelPhase) -> PhaseExpansion:
    """Coefficient-wise sum of a channel's elements (order independent)."""
    if not ch.is_polynomial:
        raise InvalidParameterError("channel contains non-polynomial elements; no coefficient total exists")
    sums = [math.fsum(e.coefficients[k] for e in ch.elements) for k in range(4)]
    labels = {e.label for e in ch.elements}
    label = labels.pop() if len(labels) == 1 else "total"
    return PhaseExpansion(*sums, label=label)


class DispersionTotals(NamedTuple):
    tau: float
    beta2: float
    beta3: float


def dispersion_totals(signal: ChannelPhase, idler: ChannelPhase) -> DispersionTotals:
    """Signal-minus-idler delay and dispersion entering the coincidence rate.

    The constant terms cancel between the two interfering amplitudes and
    never appear in the result.
    """
    s, i = total_phase(signal), total_phase(idler)
    return DispersionTotals(s.beta1 - i.beta1, s.beta2 - i.beta2, s.beta3 - i.beta3)


def phase_term_values(beta2_tot, beta3_tot, omega_p, omega):
    """Second- and third-order parts of the total interference phase (rad)."""
    omega_p = np.asarray(omega_p, dtype=float)
    omega = np.asarray(omega, dtype=float)
    phi2 = beta2_tot * omega_p * omega
    phi3 = 0.25 * beta3_tot * omega_p**2 * omega + beta3_tot * omega**3 / 3.0
    return phi2, phi3


# -- materials ---------------------------------------------------------------


@dataclass(frozen=True)
class MaterialDispersion:
    """Per-length dispersion of a material; ``None`` marks an unknown order."""

    name: str
    d2: float | None  # fs²/mm
    d3: float | None  # fs³/mm


def _parse_coefficient(text: str, where: str) -> float | None:
    text = text.strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        raise InvalidParameterError(f"{where}: not a number: {text!r}") from None


def load_materials(path=None) -> dict[str, MaterialDispersion]:
    """Read a ``name,d2_fs2_per_mm,d3_fs3_per_mm`` catalog (bundled one by default)."""
    if path is None:
        text = resources.files("homdip").joinpath("data/materials.csv").read_text(encoding="utf-8")
        source = "materials.csv"
    else:
        text = Path(path).read_text(encoding="utf-8")
        source = str(path)
    catalog = {}
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["name", "d2_fs2_per_mm", "d3_fs3_per_mm"]:
        raise InvalidParameterError(f"{source}: expected header name,d2_fs2_per_mm,d3_fs3_per_mm")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise InvalidParameterError(f"{source}: row {lineno}: expected 3 columns")
        where = f"{source}: row {lineno}"
        name = row[0].strip()
        catalog[name] = MaterialDispersion(name, _parse_coefficient(row[1], where), _parse_coefficient(row[2], where))
    return catalog


MATERIALS = load_materials()


def material_beta(m: MaterialDispersion, length: float, order: int) -> float:
    """Dispersion coefficient of ``length`` mm of material, in fs^order."""
    if order not in (2, 3):
        raise InvalidParameterError(f"unsupported dispersion order {order}; use 2 or 3")
    if length < 0:
        raise InvalidParameterError(f"length must be non-negative, got {length}")
    d = m.d2 if order == 2 else m.d3
    if d is None:
        raise InvalidParameterError(f"material {m.name!r} has no order-{order} coefficient")
    return d * length


def material_element(m: MaterialDispersion, length: float, label: str = "fiber") -> PhaseExpansion:
    """Phase element for ``length`` mm of material; unknown orders count as zero."""
    betas = []
    for order in (2, 3):
        try:
            betas.append(material_beta(m, length, order))
        except InvalidParameterError:
            if length < 0:
                raise
            warnings.warn(f"material {m.name!r}: order-{order} coefficient unknown, using 0", stacklevel=2)
            betas.append(0.0)
    return PhaseExpansion(beta2=betas[0], beta3=betas[1], label=label)


# -- SLM ---------------------------------------------------------------------


@dataclass(frozen=True)
class SlmGeometry:
    pixel_count: int = 640
    pixel_pitch_um: float = 100.0
    calib_nm: float = 3.62  # wavelength shift ...
    calib_mm: float = 2.0  # ... per this displacement on the Fourier plane
    center_pixel: int | None = None

    def __post_init__(self):
        if self.pixel_count <= 0:
            raise InvalidParameterError("pixel_count must be positive")
        if not (self.pixel_pitch_um > 0 and self.calib_nm > 0 and self.calib_mm > 0):
            raise InvalidParameterError("pitch and calibration constants must be positive")
        if self.center_pixel is None:
            object.__setattr__(self, "center_pixel", self.pixel_count // 2)

    @property
    def nm_per_pixel(self) -> float:
        return self.calib_nm / self.calib_mm * self.pixel_pitch_um * 1e-3

    def pixel_wavelengths(self, center_wavelength: float) -> np.ndarray:
        k = np.arange(self.pixel_count) - self.center_pixel
        return center_wavelength + k * self.nm_per_pixel


@dataclass(frozen=True, eq=False)
class SlmPhaseTable:
    """Per-pixel phase; callable as a piecewise-constant phase of detuning.

    Detunings outside the modulator aperture get zero phase.
    """

    geometry: SlmGeometry
    center_wavelength: float
    wavelengths: np.ndarray
    detunings: np.ndarray
    phases: np.ndarray
    label: str = "SLM"

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        step = self.detunings[0] - self.detunings[1]  # detuning falls with pixel index
        idx = np.rint((self.detunings[0] - omega) / step).astype(np.int64)
        inside = (idx >= 0) & (idx < len(self.phases))
        return np.where(inside, self.phases[np.clip(idx, 0, len(self.phases) - 1)], 0.0)


def slm_quantize(
    target: PhaseExpansion,
    geom: SlmGeometry = SlmGeometry(),
    center_wavelength: float = 811.0,
    wrap: bool = False,
) -> SlmPhaseTable:
    """Sample ``target`` at every pixel centre (optionally wrapped to [0, 2π))."""
    wl = geom.pixel_wavelengths(center_wavelength)
    det = wavelength_to_detuning(wl, center_wavelength)
    phases = np.asarray(target(det), dtype=float)
    if wrap:
        phases = np.mod(phases, _TWO_PI)
    for arr in (wl, det, phases):
        arr.setflags(write=False)
    return SlmPhaseTable(geom, float(center_wavelength), wl, det, phases)
