"""Domain types, validation and the JSON configuration schema.

Units used throughout the package: lengths in micrometers, angles in
radians, wavenumbers and walk-off terms in rad/um, the Fresnel parameter
``k_fresnel`` in 1/um^2.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping


class PdcError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PdcError):
    """Configuration file missing, unreadable or not matching the schema."""


class ValidationError(PdcError):
    """One or more physical invariants are violated.

    ``violations`` holds one human-readable message per violated invariant.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NonPositiveWaist(ValidationError):
    pass


class NonPositiveWalkoff(ValidationError):
    pass


class MissingApertureParams(ValidationError):
    pass


class Kind(str, enum.Enum):
    chi_M = "chi_M"
    chi_P3 = "chi_P3"
    chi_P4 = "chi_P4"
    eta_M = "eta_M"
    eta_P3 = "eta_P3"
    eta_P4 = "eta_P4"
    eps_P = "eps_P"
    singles_C3 = "singles_C3"

    def __str__(self):
        return self.value


class Regime(str, enum.Enum):
    full_crystal = "full_crystal"
    thin_crystal = "thin_crystal"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PhaseMatchConfig:
    """Crystal and walk-off parameters.

    ``N_p``/``N_s`` are the angular-dispersion walk-off terms, ``D`` the
    signal/idler differential inverse group velocity (only its sign and
    zero-ness ever matter, see :mod:`pdccoupling.oracle`).
    """

    K_p: float
    K_s: float
    K_i: float
    N_p: float
    N_s: float
    D: float
    theta_i: float
    theta_s: float
    L: float

    @property
    def a_i(self) -> float:
        """Idler-side walk-off combination ``-N_p + N_s + K_p theta_i``."""
        return -self.N_p + self.N_s + self.K_p * self.theta_i

    @property
    def a_s(self) -> float:
        """Signal-side walk-off combination ``N_p - N_s + K_p theta_s``."""
        return self.N_p - self.N_s + self.K_p * self.theta_s


@dataclass(frozen=True)
class BeamGeometry:
    """Pump and mode waists referred to the crystal plane.

    ``w_ap`` (Gaussian collection aperture) and ``k_fresnel`` are only needed
    for the single-mode-preparation / bucket-collection efficiency.
    """

    w_p: float
    w_o1: float
    w_o2: float
    M_3: float = 1.0
    M_4: float = 1.0
    w_ap: float | None = None
    k_fresnel: float | None = None

    @property
    def has_aperture(self) -> bool:
        return self.w_ap is not None and self.k_fresnel is not None


@dataclass(frozen=True)
class Bundle:
    """A validated ``(config, geom)`` pair."""

    config: PhaseMatchConfig
    geom: BeamGeometry


@dataclass(frozen=True)
class EfficiencyResult:
    kind: Kind
    value: float
    regime: Regime
    inputs: dict = field(default_factory=dict, compare=False)
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind is Kind.singles_C3 or self.metadata.get("as_printed"):
            return
        if not (-1e-9 <= self.value <= 1.0 + 1e-9):
            raise ValueError(f"{self.kind} = {self.value!r} outside [0, 1]")


@dataclass(frozen=True)
class ScanSeries:
    abscissa_name: str
    abscissa: tuple
    ordinate: tuple
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.abscissa) != len(self.ordinate):
            raise ValueError("abscissa and ordinate lengths differ")
        if any(b <= a for a, b in zip(self.abscissa, self.abscissa[1:])):
            raise ValueError("abscissa must be strictly increasing")


def snapshot(config: PhaseMatchConfig | None, geom: BeamGeometry | None) -> dict:
    """Flat dict of every parameter, used as the ``inputs``/``fixed`` record."""
    out = {}
    if config is not None:
        out.update(vars(config))
    if geom is not None:
        out.update({k: v for k, v in vars(geom).items() if v is not None})
    return out


def validate(config, geom=None, *, need_aperture=False) -> Bundle:
    """Check every physical invariant and return a :class:`Bundle`.

    Accepts either ``(config, geom)`` or an existing ``Bundle`` (so the
    operation is idempotent). Nothing is clamped: every violated invariant is
    collected and the most specific error class is raised.
    """
    if isinstance(config, Bundle):
        config, geom = config.config, config.geom
    if geom is None:
        raise TypeError("validate() needs a BeamGeometry")

    waist, walkoff, aperture, other = [], [], [], []

    for name in ("w_p", "w_o1", "w_o2"):
        v = getattr(geom, name)
        if not (math.isfinite(v) and v > 0):
            waist.append(f"{name} must be > 0 (got {v!r})")
    for name in ("M_3", "M_4"):
        v = getattr(geom, name)
        if not math.isfinite(v) or v == 0:
            other.append(f"{name} must be finite and nonzero (got {v!r})")

    if need_aperture and not geom.has_aperture:
        aperture.append("w_ap and k_fresnel are required for eps_P")
    if geom.w_ap is not None and not (math.isfinite(geom.w_ap) and geom.w_ap > 0):
        waist.append(f"w_ap must be > 0 (got {geom.w_ap!r})")
    if geom.k_fresnel is not None and not (
        math.isfinite(geom.k_fresnel) and geom.k_fresnel > 0
    ):
        other.append(f"k_fresnel must be > 0 (got {geom.k_fresnel!r})")

    for name in ("K_p", "K_s", "K_i", "L"):
        v = getattr(config, name)
        if not (math.isfinite(v) and v > 0):
            other.append(f"{name} must be > 0 (got {v!r})")
    for name in ("N_p", "N_s", "D", "theta_i", "theta_s"):
        if not math.isfinite(getattr(config, name)):
            other.append(f"{name} must be finite")
    if config.a_i <= 0:
        walkoff.append(f"a_i = -N_p + N_s + K_p*theta_i must be > 0 (got {config.a_i!r})")
    if config.a_s <= 0:
        walkoff.append(f"a_s = N_p - N_s + K_p*theta_s must be > 0 (got {config.a_s!r})")
    if config.theta_i + config.theta_s < 0:
        other.append("theta_i + theta_s must be >= 0")

    violations = waist + walkoff + aperture + other
    if violations:
        if waist:
            raise NonPositiveWaist(violations)
        if walkoff:
            raise NonPositiveWalkoff(violations)
        if aperture:
            raise MissingApertureParams(violations)
        raise ValidationError(violations)
    return Bundle(config, geom)


# -- configuration files -----------------------------------------------------

_PHASE_KEYS = tuple(f.name for f in fields(PhaseMatchConfig))
_GEOM_REQUIRED = ("w_p", "w_o1", "w_o2")
_GEOM_OPTIONAL = ("M_3", "M_4", "w_ap", "k_fresnel")


def _number(section, key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number (got {value!r})")
    return float(value)


def config_from_dict(doc: Mapping[str, Any]) -> tuple[PhaseMatchConfig, BeamGeometry]:
    """Build the two parameter records from a parsed config document.

    Unknown keys at any level are errors.
    """
    if not isinstance(doc, Mapping):
        raise ConfigError("config document must be a JSON object")
    extra = set(doc) - {"phase_match", "geometry"}
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    try:
        pm, geo = doc["phase_match"], doc["geometry"]
    except KeyError as exc:
        raise ConfigError(f"missing top-level object {exc.args[0]!r}") from None

    if not isinstance(pm, Mapping) or not isinstance(geo, Mapping):
        raise ConfigError("phase_match and geometry must be JSON objects")
    if set(pm) != set(_PHASE_KEYS):
        missing = sorted(set(_PHASE_KEYS) - set(pm))
        unknown = sorted(set(pm) - set(_PHASE_KEYS))
        raise ConfigError(f"phase_match keys: missing {missing}, unknown {unknown}")
    unknown = sorted(set(geo) - set(_GEOM_REQUIRED) - set(_GEOM_OPTIONAL))
    missing = sorted(set(_GEOM_REQUIRED) - set(geo))
    if unknown or missing:
        raise ConfigError(f"geometry keys: missing {missing}, unknown {unknown}")

    config = PhaseMatchConfig(**{k: _number("phase_match", k, pm[k]) for k in _PHASE_KEYS})
    geom = BeamGeometry(**{k: _number("geometry", k, v) for k, v in geo.items()})
    return config, geom


def config_to_dict(config: PhaseMatchConfig, geom: BeamGeometry) -> dict:
    geo = {k: v for k, v in asdict(geom).items() if v is not None}
    return {"phase_match": asdict(config), "geometry": geo}


def load_config(path) -> tuple[PhaseMatchConfig, BeamGeometry]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(doc)


CONFIG_FIELDS = tuple(f.name for f in fields(PhaseMatchConfig))
GEOMETRY_FIELDS = tuple(f.name for f in fields(BeamGeometry))


def with_value(config: PhaseMatchConfig, geom: BeamGeometry, name: str, value: float):
    """Copy of ``(config, geom)`` with one named parameter replaced."""
    if name in CONFIG_FIELDS:
        return replace(config, **{name: float(value)}), geom
    if name in GEOMETRY_FIELDS:
        return config, replace(geom, **{name: float(value)})
    raise KeyError(f"unknown parameter {name!r}")
