"""Two-photon (Hong-Ou-Mandel) interference with second- and third-order dispersion."""

__version__ = "0.1.0"

from .errors import HomDipError  # noqa: E402
from .interference import (  # noqa: E402
    BeamSplitter,
    DipProfile,
    InterferometerConfig,
    PurityModel,
    coincidence_probability_expanded,
    coincidence_probability_general,
    dip_profile,
)
from .metrics import closed_form_visibility, dip_metrics, purity_relations  # noqa: E402
from .phase import ChannelPhase, PhaseExpansion, dispersion_totals  # noqa: E402
from .presets import preset_config  # noqa: E402
from .spectra import apply_slit, from_samples, gaussian_spectrum  # noqa: E402
