"""Spectral amplitudes for the pump and the downconverted photons.

All spectra live on an angular-frequency detuning axis (rad/fs) measured
from the carrier at ``center_wavelength``. Wavelength offsets are mapped
with the linearised relation ``dω = -2πc·dλ/λ²``, so longer wavelengths sit
at negative detuning. Amplitudes are real and non-negative and normalised
so that ``∫ amplitude(ω)² dω = 1``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import erf, erfc

from .errors import (
    DomainError,
    EmptySpectrumError,
    InvalidParameterError,
    MalformedInputError,
)

C_NM_PER_FS = 299.792458
SUPPORT_FWHMS = 4.0
_FOUR_LN2 = 4.0 * math.log(2.0)

GAUSSIAN = "analytic-gaussian"
TABULATED = "tabulated"
MONOCHROMATIC = "monochromatic"


def fwhm_nm_to_omega(fwhm_nm: float, center_wavelength: float) -> float:
    """Convert a wavelength width (nm) into an angular-frequency width (rad/fs)."""
    return 2.0 * math.pi * C_NM_PER_FS * fwhm_nm / center_wavelength**2


def fwhm_omega_to_nm(fwhm_omega: float, center_wavelength: float) -> float:
    return fwhm_omega * center_wavelength**2 / (2.0 * math.pi * C_NM_PER_FS)


def wavelength_to_detuning(wavelength, center_wavelength: float):
    wavelength = np.asarray(wavelength, dtype=float)
    return -2.0 * math.pi * C_NM_PER_FS * (wavelength - center_wavelength) / center_wavelength**2


def detuning_to_wavelength(omega, center_wavelength: float):
    omega = np.asarray(omega, dtype=float)
    return center_wavelength - omega * center_wavelength**2 / (2.0 * math.pi * C_NM_PER_FS)


def _gaussian_mass(fwhm_omega: float, lo: float, hi: float) -> float:
    sigma = fwhm_omega / math.sqrt(2.0 * _FOUR_LN2)
    s = sigma * math.sqrt(2.0)
    a, b = lo / s, hi / s
    # erfc keeps precision for windows sitting in one tail
    if a >= 0:
        diff = erfc(a) - erfc(b)
    elif b <= 0:
        diff = erfc(-b) - erfc(-a)
    else:
        diff = erf(b) - erf(a)
    return sigma * math.sqrt(math.pi / 2.0) * diff


@dataclass(frozen=True, eq=False)
class SpectralAmplitude:
    """Immutable, normalised spectral amplitude.

    ``kind`` is one of ``"analytic-gaussian"``, ``"tabulated"`` or
    ``"monochromatic"``. The last one is the degenerate zero-width pump;
    it has no density and is only meaningful on a one-point pump grid.
    """

    kind: str
    center_wavelength: float
    support: tuple[float, float]
    fwhm_nm: float
    fwhm_omega: float = 0.0
    norm: float = 1.0
    nodes: np.ndarray | None = None
    intensity: np.ndarray | None = None
    clipped: int = 0

    def __call__(self, omega):
        return evaluate(self, omega)

    @property
    def half_width(self) -> float:
        """Largest |detuning| inside the support."""
        return max(abs(self.support[0]), abs(self.support[1]))

    @property
    def is_monochromatic(self) -> bool:
        return self.kind == MONOCHROMATIC

    def intensity_at(self, omega):
        return evaluate(self, omega) ** 2


def gaussian_spectrum(center_wavelength: float, fwhm: float) -> SpectralAmplitude:
    """Gaussian intensity profile with intensity FWHM ``fwhm`` (nm).

    The support is truncated at four intensity FWHMs either side of the
    centre and the amplitude is renormalised on the truncated support.
    """
    if not (center_wavelength > 0):
        raise InvalidParameterError(f"center_wavelength must be positive, got {center_wavelength}")
    if not (fwhm > 0):
        raise InvalidParameterError(f"fwhm must be positive, got {fwhm}")
    fw = fwhm_nm_to_omega(fwhm, center_wavelength)
    lo, hi = -SUPPORT_FWHMS * fw, SUPPORT_FWHMS * fw
    return SpectralAmplitude(
        kind=GAUSSIAN,
        center_wavelength=float(center_wavelength),
        support=(lo, hi),
        fwhm_nm=float(fwhm),
        fwhm_omega=fw,
        norm=_gaussian_mass(fw, lo, hi),
    )


def monochromatic(center_wavelength: float) -> SpectralAmplitude:
    """Zero-width pump, realised downstream as a single ω_p = 0 sample."""
    if not (center_wavelength > 0):
        raise InvalidParameterError(f"center_wavelength must be positive, got {center_wavelength}")
    return SpectralAmplitude(
        kind=MONOCHROMATIC, center_wavelength=float(center_wavelength), support=(0.0, 0.0), fwhm_nm=0.0
    )


def _tabulated(nodes, intensity, center_wavelength, clipped=0) -> SpectralAmplitude:
    mass = float(np.trapezoid(intensity, nodes))
    if not mass > 0:
        raise EmptySpectrumError("spectrum has zero total intensity")
    intensity = intensity / mass
    nodes.setflags(write=False)
    intensity.setflags(write=False)
    spec = SpectralAmplitude(
        kind=TABULATED,
        center_wavelength=float(center_wavelength),
        support=(float(nodes[0]), float(nodes[-1])),
        fwhm_nm=0.0,
        nodes=nodes,
        intensity=intensity,
        clipped=clipped,
    )
    return replace(spec, fwhm_nm=_measured_fwhm_nm(spec))


def from_samples(rows: Sequence[Sequence[float]], center_wavelength: float) -> SpectralAmplitude:
    """Build a tabulated spectrum from ``(wavelength_nm, intensity)`` rows.

    Intensities are interpolated linearly on the detuning axis and the
    amplitude is their square root. Negative intensities are clipped to
    zero; the number of clipped rows is kept in ``clipped``.
    """
    if not (center_wavelength > 0):
        raise InvalidParameterError(f"center_wavelength must be positive, got {center_wavelength}")
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise MalformedInputError("expected rows of (wavelength_nm, intensity)")
    if len(data) < 3:
        raise MalformedInputError(f"need at least 3 rows, got {len(data)}")
    if not np.all(np.isfinite(data)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(data), axis=1))[0])
        raise MalformedInputError(f"row {bad + 1}: non-finite value")
    wl, inten = data[:, 0], data[:, 1]
    step = np.diff(wl)
    if not (np.all(step > 0) or np.all(step < 0)):
        bad = int(np.flatnonzero(np.sign(step) != np.sign(step[0]))[0]) if np.any(step != 0) else 0
        raise MalformedInputError(f"row {bad + 2}: wavelengths are not strictly monotone")
    negative = inten < 0
    clipped = int(negative.sum())
    if clipped:
        warnings.warn(f"{clipped} negative intensity sample(s) clipped to zero", stacklevel=2)
        inten = np.where(negative, 0.0, inten)
    omega = wavelength_to_detuning(wl, center_wavelength)
    order = np.argsort(omega)
    return _tabulated(omega[order].copy(), inten[order].copy(), center_wavelength, clipped)


def read_spectrum_csv(path, center_wavelength: float) -> SpectralAmplitude:
    """Read a two-column ``wavelength_nm,intensity`` CSV (header optional)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        for lineno, record in enumerate(csv.reader(handle), start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != 2:
                raise MalformedInputError(f"{path}: row {lineno}: expected 2 columns, got {len(record)}")
            try:
                rows.append((float(record[0]), float(record[1])))
            except ValueError:
                if lineno == 1 and not rows:
                    continue  # header
                raise MalformedInputError(f"{path}: row {lineno}: non-numeric value {record!r}") from None
    try:
        return from_samples(rows, center_wavelength)
    except MalformedInputError as exc:
        raise MalformedInputError(f"{path}: {exc}") from None


def evaluate(spec: SpectralAmplitude, omega):
    """Amplitude density at detuning ``omega``; zero outside the support."""
    omega = np.asarray(omega, dtype=float)
    lo, hi = spec.support
    inside = (omega >= lo) & (omega <= hi)
    if spec.kind == GAUSSIAN:
        raw = np.exp(-_FOUR_LN2 * (omega / spec.fwhm_omega) ** 2) / spec.norm
        out = np.where(inside, np.sqrt(raw), 0.0)
    elif spec.kind == TABULATED:
        out = np.where(inside, np.sqrt(np.maximum(np.interp(omega, spec.nodes, spec.intensity), 0.0)), 0.0)
    else:
        out = np.where(omega == 0.0, 1.0, 0.0)
    return out if out.ndim else float(out)


def apply_slit(spec: SpectralAmplitude, window_fwhm: float, window_center: float | None = None) -> SpectralAmplitude:
    """Hard rectangular cut of width ``window_fwhm`` nm about ``window_center`` nm."""
    if not (window_fwhm > 0):
        raise InvalidParameterError(f"window width must be positive, got {window_fwhm}")
    if spec.is_monochromatic:
        raise InvalidParameterError("cannot cut a monochromatic spectrum")
    if window_center is None:
        window_center = spec.center_wavelength
    edges = wavelength_to_detuning(
        [window_center - window_fwhm / 2.0, window_center + window_fwhm / 2.0], spec.center_wavelength
    )
    lo = max(spec.support[0], float(edges.min()))
    hi = min(spec.support[1], float(edges.max()))
    if not lo < hi:
        raise EmptySpectrumError("slit window does not overlap the spectral support")

    if spec.kind == GAUSSIAN:
        cut = replace(spec, support=(lo, hi), norm=_gaussian_mass(spec.fwhm_omega, lo, hi))
        return replace(cut, fwhm_nm=_measured_fwhm_nm(cut))

    nodes = spec.nodes
    keep = (nodes > lo) & (nodes < hi)
    new_nodes = np.concatenate(([lo], nodes[keep], [hi]))
    new_int = np.interp(new_nodes, nodes, spec.intensity)
    return _tabulated(new_nodes, new_int, spec.center_wavelength, spec.clipped)


def _measured_fwhm_nm(spec: SpectralAmplitude, samples: int = 20001) -> float:
    return fwhm_omega_to_nm(intensity_fwhm_omega(spec, samples), spec.center_wavelength)


def intensity_fwhm_omega(spec: SpectralAmplitude, samples: int = 20001) -> float:
    """Full width at half maximum of the intensity, outermost crossings (rad/fs)."""
    if spec.is_monochromatic:
        return 0.0
    lo, hi = spec.support
    if spec.kind == TABULATED:
        x = np.union1d(np.linspace(lo, hi, samples), spec.nodes)
    else:
        x = np.linspace(lo, hi, samples)
    y = evaluate(spec, x) ** 2
    half = y.max() / 2.0
    above = np.flatnonzero(y >= half)
    i, j = above[0], above[-1]
    left = x[i] if i == 0 else np.interp(half, [y[i - 1], y[i]], [x[i - 1], x[i]])
    right = x[j] if j == len(x) - 1 else np.interp(half, [y[j + 1], y[j]], [x[j + 1], x[j]])
    return float(right - left)


def intensity_fwhm_nm(spec: SpectralAmplitude, samples: int = 20001) -> float:
    return _measured_fwhm_nm(spec, samples)


def rms_width(spec: SpectralAmplitude, samples: int = 20001) -> float:
    """RMS detuning of the intensity distribution (rad/fs)."""
    if spec.is_monochromatic:
        return 0.0
    x = np.linspace(*spec.support, samples)
    y = evaluate(spec, x) ** 2
    mass = np.trapezoid(y, x)
    mean = np.trapezoid(x * y, x) / mass
    return float(np.sqrt(np.trapezoid((x - mean) ** 2 * y, x) / mass))


def sample_rows(spec: SpectralAmplitude, n_points: int = 401) -> list[tuple[float, float]]:
    """``(wavelength_nm, intensity)`` rows over the support, ascending wavelength."""
    if spec.is_monochromatic:
        return [(spec.center_wavelength, 1.0)]
    omega = np.linspace(*spec.support, n_points)
    wl = detuning_to_wavelength(omega, spec.center_wavelength)
    inten = evaluate(spec, omega) ** 2
    return [(float(a), float(b)) for a, b in zip(wl[::-1], inten[::-1])]


# -- frequency grid ---------------------------------------------------------


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    if len(x) == 1:
        return np.ones(1)
    w = np.empty_like(x)
    d = np.diff(x)
    w[0] = d[0] / 2.0
    w[-1] = d[-1] / 2.0
    w[1:-1] = (d[:-1] + d[1:]) / 2.0
    return w


def _symmetric_axis(half_width: float, n: int) -> np.ndarray:
    m = (n - 1) // 2
    k = np.arange(-m, m + 1, dtype=float)
    return k * (half_width / m)


def _round_up_points(n: int) -> int:
    # n ≡ 1 (mod 4): the every-other-point subgrid stays symmetric and keeps ω = 0
    if n <= 1:
        return 1
    return max(5, n + (-(n - 1)) % 4)


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Tensor grid of pump detunings ``omega_p`` and PDC detunings ``omega``."""

    omega_p: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        for name in ("omega_p", "omega"):
            axis = np.asarray(getattr(self, name), dtype=float)
            if axis.ndim != 1 or len(axis) == 0:
                raise InvalidParameterError(f"{name} must be a non-empty 1-D array")
            if len(axis) > 1 and not np.all(np.diff(axis) > 0):
                raise InvalidParameterError(f"{name} must be strictly increasing")
            axis.setflags(write=False)
            object.__setattr__(self, name, axis)
        if len(self.omega) < 3:
            raise InvalidParameterError("omega axis needs at least 3 points")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.omega_p), len(self.omega)

    @property
    def w_p(self) -> np.ndarray:
        return trapezoid_weights(self.omega_p)

    @property
    def w(self) -> np.ndarray:
        return trapezoid_weights(self.omega)

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.omega, -self.omega[::-1]) and np.array_equal(self.omega_p, -self.omega_p[::-1]))

    def half(self) -> FrequencyGrid:
        """Every-other-point subgrid (single-point axes are kept)."""
        wp = self.omega_p if len(self.omega_p) == 1 else self.omega_p[::2]
        return FrequencyGrid(wp, self.omega[::2])

    def covers(self, spec: SpectralAmplitude, axis: str = "omega") -> bool:
        x = getattr(self, axis)
        if len(x) == 1 or spec.is_monochromatic:
            return True
        tol = 1e-9 * max(abs(x[0]), abs(x[-1]))
        return x[0] <= spec.support[0] + tol and x[-1] >= spec.support[1] - tol


def build_grid(
    pump: SpectralAmplitude, pdc: SpectralAmplitude, n_omega: int = 401, n_omega_p: int = 201
) -> FrequencyGrid:
    """Symmetric grid spanning both supports.

    Point counts are rounded up to ``1 mod 4``. A monochromatic pump, or
    ``n_omega_p == 1``, gives the one-point pump axis ``[0.0]``.
    """
    if pdc.is_monochromatic:
        raise InvalidParameterError("the downconverted spectrum cannot be monochromatic")
    n_omega = _round_up_points(max(int(n_omega), 3))
    omega = _symmetric_axis(pdc.half_width, n_omega)
    if pump.is_monochromatic or n_omega_p <= 1:
        omega_p = np.zeros(1)
    else:
        omega_p = _symmetric_axis(pump.half_width, _round_up_points(int(n_omega_p)))
    grid = FrequencyGrid(omega_p, omega)
    if not (grid.covers(pdc) and grid.covers(pump, "omega_p")):
        raise DomainError("grid does not cover the spectral supports")
    return grid
