"""Named interferometer configurations.

S1: broad pump (1.0 nm) with the full 20 nm downconversion spectrum.
S2: narrow pump (0.5 nm) with the full spectrum.
S3: broad pump with the spectrum cut to 10 nm by a slit.
"""

from __future__ import annotations

from .errors import InvalidParameterError
from .interference import BeamSplitter, InterferometerConfig, PurityModel
from .spectra import apply_slit, gaussian_spectrum

PUMP_CENTER_NM = 405.5
PDC_CENTER_NM = 811.0
MEASURED_SPLITTER = BeamSplitter(T=0.467, R=0.533)
DEFAULT_PURITY = 0.913

PRESETS = {
    "S1": {"pump_fwhm_nm": 1.0, "pdc_fwhm_nm": 20.0, "slit_width_nm": None},
    "S2": {"pump_fwhm_nm": 0.5, "pdc_fwhm_nm": 20.0, "slit_width_nm": None},
    "S3": {"pump_fwhm_nm": 1.0, "pdc_fwhm_nm": 20.0, "slit_width_nm": 10.0},
}


def preset_config(name: str, purity: PurityModel | None = None, **overrides) -> InterferometerConfig:
    """InterferometerConfig for a named setting with the measured splitter."""
    try:
        spec = PRESETS[name]
    except KeyError:
        raise InvalidParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    pdc = gaussian_spectrum(PDC_CENTER_NM, spec["pdc_fwhm_nm"])
    if spec["slit_width_nm"]:
        pdc = apply_slit(pdc, spec["slit_width_nm"])
    return InterferometerConfig(
        pump=gaussian_spectrum(PUMP_CENTER_NM, spec["pump_fwhm_nm"]),
        pdc=pdc,
        bs=MEASURED_SPLITTER,
        purity=purity or PurityModel.from_p(DEFAULT_PURITY),
        **overrides,
    )
