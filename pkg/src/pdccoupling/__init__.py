"""Coupling efficiencies of parametric-downconversion photon pairs into
single-mode and multi-mode collection optics."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    BeamGeometry,
    Bundle,
    ConfigError,
    EfficiencyResult,
    Kind,
    MissingApertureParams,
    NonPositiveWaist,
    NonPositiveWalkoff,
    PdcError,
    PhaseMatchConfig,
    Regime,
    ScanSeries,
    ValidationError,
    load_config,
    validate,
)
from .closed_form import evaluate  # noqa: F401
