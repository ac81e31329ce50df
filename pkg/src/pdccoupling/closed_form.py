"""Analytic coupling efficiencies, full crystal and thin-crystal limit.

Every Erf correction factor is a ratio of error functions whose arguments
all scale with the crystal length ``L``. Below ``SERIES_THRESHOLD`` those
ratios are replaced by their Maclaurin expansion with the leading ``L``
dependence cancelled analytically, so ``L -> 0`` (and ``L == 0``) is exact
rather than ``0/0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .model import (
    BeamGeometry,
    EfficiencyResult,
    Kind,
    MissingApertureParams,
    PhaseMatchConfig,
    Regime,
    snapshot,
    validate,
)

SERIES_THRESHOLD = 1e-4
SQRT2 = math.sqrt(2.0)

ETA_P_NOTE = (
    "literal multi-mode preparation prefactor 4 divided out so that the "
    "large-collection-waist limit is 1; printed_value keeps the literal form"
)
C3_NOTE = "L removed from the Erf-argument denominator of the literal singles formula"


def erf(x):
    """Error function (scipy), absolute error well below 1e-12 on the real line."""
    out = special.erf(x)
    return float(out) if np.ndim(out) == 0 else out


def _erf_ratio(x_num, x_den, power, lfree):
    """``erf(x_num) / prod(erf(x_den))**power``.

    ``lfree`` is ``x_num / prod(x_den)**power`` evaluated without ``L`` so the
    series branch stays exact at ``L = 0``.
    """
    x_num = np.asarray(x_num, dtype=float)
    x_den = [np.asarray(x, dtype=float) for x in x_den]
    small = np.maximum.reduce([np.abs(x_num)] + [np.abs(x) for x in x_den]) < SERIES_THRESHOLD

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        series_den = np.prod([1.0 - x * x / 3.0 for x in x_den], axis=0)
        series = lfree * (1.0 - x_num * x_num / 3.0) / series_den**power
        literal = special.erf(x_num) / np.prod([special.erf(x) for x in x_den], axis=0) ** power
    out = np.where(small, series, literal)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class AuxiliaryTerms:
    """Recurring intermediate combinations of the closed forms.

    ``S`` is ``w_o2^2 w_p^2 + w_o1^2 (w_o2^2 + w_p^2)``; ``B_prime`` and
    ``C_prime`` are only set when the geometry carries aperture parameters.
    """

    A: float
    B: float
    S: float
    B_prime: float | None = None
    C_prime: float | None = None


def _S(wp, w1, w2):
    return w2**2 * wp**2 + w1**2 * (w2**2 + wp**2)


def _B(config, wp, w1, w2):
    return (
        config.a_s**2 * w1**2
        + config.a_i**2 * w2**2
        + config.K_p**2 * (config.theta_i + config.theta_s) ** 2 * wp**2
    )


def _BC_prime(config, wp, w1, w, k):
    W1sq = w1**2 + wp**2
    B = (
        config.a_s**2 * w1**4 * wp**2 * k**2
        + config.a_i**2 * (W1sq + k**2 * w**2 * w1**2 * wp**2)
        + config.K_p**2 * k**2 * w1**2 * wp**4 * (config.theta_i + config.theta_s) ** 2
    )
    C = W1sq**2 + k**2 * w1**2 * wp**2 * (w**2 * wp**2 + w1**2 * w**2 + w1**2 * wp**2)
    return B, C


def auxiliary_terms(config: PhaseMatchConfig, geom: BeamGeometry) -> AuxiliaryTerms:
    wp, w1, w2 = geom.w_p, geom.w_o1, geom.w_o2
    A = config.a_i * config.a_s * math.sqrt(w1**2 + wp**2) * math.sqrt(w2**2 + wp**2)
    Bp = Cp = None
    if geom.has_aperture:
        Bp, Cp = _BC_prime(config, wp, w1, geom.w_ap, geom.k_fresnel)
    return AuxiliaryTerms(A, _B(config, wp, w1, w2), _S(wp, w1, w2), Bp, Cp)


def _swap_arms(config, geom):
    """Mirror image under (w_o1 <-> w_o2, a_i <-> a_s)."""
    mirrored = PhaseMatchConfig(
        K_p=config.K_p, K_s=config.K_i, K_i=config.K_s,
        N_p=-config.N_p, N_s=-config.N_s, D=-config.D,
        theta_i=config.theta_s, theta_s=config.theta_i, L=config.L,
    )
    g = BeamGeometry(geom.w_p, geom.w_o2, geom.w_o1, geom.M_4, geom.M_3, geom.w_ap, geom.k_fresnel)
    return mirrored, g


def _check_arm(arm):
    if arm not in (3, 4):
        raise ValueError(f"arm must be 3 or 4, got {arm!r}")


def _result(kind, value, regime, config, geom, **metadata):
    return EfficiencyResult(Kind(kind), float(value), Regime(regime), snapshot(config, geom), metadata)


# -- Erf correction factors ---------------------------------------------------

def _x34(config, aux):
    return SQRT2 * config.L * math.sqrt(aux.B) / (config.K_p * math.sqrt(aux.S))


def _x3(config, geom):
    return SQRT2 * config.L * config.a_i / (config.K_p * math.hypot(geom.w_o1, geom.w_p))


def _x4(config, geom):
    return SQRT2 * config.L * config.a_s / (config.K_p * math.hypot(geom.w_o2, geom.w_p))


def F_M(config, geom, aux=None):
    aux = aux or auxiliary_terms(config, geom)
    W1, W2 = math.hypot(geom.w_o1, geom.w_p), math.hypot(geom.w_o2, geom.w_p)
    lfree = math.sqrt(aux.B * W1 * W2 / (aux.S * config.a_i * config.a_s))
    return _erf_ratio(_x34(config, aux), [_x3(config, geom), _x4(config, geom)], 0.5, lfree)


def F_P(config, geom, aux=None):
    aux = aux or auxiliary_terms(config, geom)
    W1 = math.hypot(geom.w_o1, geom.w_p)
    lfree = math.sqrt(aux.B / aux.S) * W1 / config.a_i
    return _erf_ratio(_x34(config, aux), [_x3(config, geom)], 1.0, lfree)


def F_P_prime(config, geom, aux=None):
    aux = aux or auxiliary_terms(config, geom)
    W1 = math.hypot(geom.w_o1, geom.w_p)
    x = SQRT2 * config.L * math.sqrt(aux.B_prime) / (config.K_p * math.sqrt(aux.C_prime))
    lfree = math.sqrt(aux.B_prime / aux.C_prime) * W1 / config.a_i
    return _erf_ratio(x, [_x3(config, geom)], 1.0, lfree)


# -- single-mode preparation and collection --------------------------------------

def chi_M_full(config: PhaseMatchConfig, geom: BeamGeometry) -> EfficiencyResult:
    validate(config, geom)
    aux = auxiliary_terms(config, geom)
    wp, w1, w2 = geom.w_p, geom.w_o1, geom.w_o2
    value = (
        F_M(config, geom, aux)
        * 4 * w1**2 * w2**2 * wp**2 * math.sqrt(aux.A)
        / math.sqrt(aux.S**3 * aux.B)
    )
    return _result(Kind.chi_M, value, Regime.full_crystal, config, geom)


def chi_P_full(config: PhaseMatchConfig, geom: BeamGeometry, arm: int = 3) -> EfficiencyResult:
    """Single-mode preparation efficiency ``C34 / C3`` (arm 3) or ``C34 / C4``.

    Arm 4 is the arm-3 expression evaluated on the mirrored parameters.
    """
    _check_arm(arm)
    validate(config, geom)
    c, g = (config, geom) if arm == 3 else _swap_arms(config, geom)
    aux = auxiliary_terms(c, g)
    wp, w1, w2 = g.w_p, g.w_o1, g.w_o2
    value = (
        F_P(c, g, aux)
        * 4 * c.a_i * w1**2 * w2**2 * wp**2 * math.hypot(w1, wp)
        / math.sqrt(aux.S**3 * aux.B)
    )
    return _result(f"chi_P{arm}", value, Regime.full_crystal, config, geom)


def chi_M_thin(geom: BeamGeometry) -> EfficiencyResult:
    wp, w1, w2 = geom.w_p, geom.w_o1, geom.w_o2
    S = _S(wp, w1, w2)
    value = 4 * wp**2 * w1**2 * w2**2 * math.hypot(w1, wp) * math.hypot(w2, wp) / S**2
    return _result(Kind.chi_M, value, Regime.thin_crystal, None, geom)


def chi_P_thin(geom: BeamGeometry, arm: int = 3) -> EfficiencyResult:
    _check_arm(arm)
    wp, w1, w2 = geom.w_p, geom.w_o1, geom.w_o2
    S = _S(wp, w1, w2)
    prepared = w1 if arm == 3 else w2
    value = 4 * wp**2 * w1**2 * w2**2 * (prepared**2 + wp**2) / S**2
    return _result(f"chi_P{arm}", value, Regime.thin_crystal, None, geom)


# -- multi-mode (bucket) preparation and collection ------------------------------

def eta_M_full(config: PhaseMatchConfig, geom: BeamGeometry) -> EfficiencyResult:
    validate(config, geom)
    aux = auxiliary_terms(config, geom)
    w1, w2 = geom.w_o1, geom.w_o2
    value = F_M(config, geom, aux) * w1 * w2 * math.sqrt(aux.A) / math.sqrt(aux.S * aux.B)
    return _result(Kind.eta_M, value, Regime.full_crystal, config, geom)


def eta_P_full(config: PhaseMatchConfig, geom: BeamGeometry, arm: int = 3) -> EfficiencyResult:
    """Multi-mode preparation efficiency, normalized to a supremum of 1.

    The literal expression is four times this value; it is returned
    in ``metadata["printed_value"]``.
    """
    _check_arm(arm)
    validate(config, geom)
    c, g = (config, geom) if arm == 3 else _swap_arms(config, geom)
    aux = auxiliary_terms(c, g)
    value = (
        F_P(c, g, aux) * c.a_i * g.w_o2**2 * math.hypot(g.w_o1, g.w_p)
        / math.sqrt(aux.S * aux.B)
    )
    return _result(
        f"eta_P{arm}", value, Regime.full_crystal, config, geom,
        normalization=ETA_P_NOTE, printed_value=4.0 * value,
    )


def eta_M_thin(geom: BeamGeometry, *, as_printed: bool = False) -> EfficiencyResult:
    """``w_o1 w_o2 sqrt((w_o1^2+w_p^2)(w_o2^2+w_p^2)) / S``.

    With ``as_printed`` the literal (dimensionful, um^2) expression is
    returned instead, for audit only.
    """
    wp, w1, w2 = geom.w_p, geom.w_o1, geom.w_o2
    S = _S(wp, w1, w2)
    root = math.hypot(w1, wp) * math.hypot(w2, wp)
    if as_printed:
        return _result(
            Kind.eta_M, w1**2 * w2**2 * root / S, Regime.thin_crystal, None, geom,
            as_printed=True, units="um^2",
        )
    return _result(Kind.eta_M, w1 * w2 * root / S, Regime.thin_crystal, None, geom)


def eta_P_thin(geom: BeamGeometry, arm: int = 3, *, as_printed: bool = False) -> EfficiencyResult:
    _check_arm(arm)
    wp, w1, w2 = geom.w_p, geom.w_o1, geom.w_o2
    S = _S(wp, w1, w2)
    prepared, collected = (w1, w2) if arm == 3 else (w2, w1)
    if as_printed:
        value = w1**2 * w2**2 * (prepared**2 + wp**2) / S
        return _result(
            f"eta_P{arm}", value, Regime.thin_crystal, None, geom,
            as_printed=True, units="um^2",
        )
    value = collected**2 * (prepared**2 + wp**2) / S
    return _result(f"eta_P{arm}", value, Regime.thin_crystal, None, geom)


# -- single-mode preparation, bucket collection through free space --------------

def eps_P_full(config: PhaseMatchConfig, geom: BeamGeometry) -> EfficiencyResult:
    validate(config, geom, need_aperture=True)
    aux = auxiliary_terms(config, geom)
    wp, w1, w, k = geom.w_p, geom.w_o1, geom.w_ap, geom.k_fresnel
    value = (
        F_P_prime(config, geom, aux)
        * config.a_i * k**2 * w**2 * w1**2 * wp**2 * math.hypot(w1, wp)
        / math.sqrt(aux.C_prime * aux.B_prime)
    )
    return _result(Kind.eps_P, value, Regime.full_crystal, config, geom)


def eps_P_thin(geom: BeamGeometry) -> EfficiencyResult:
    if not geom.has_aperture:
        raise MissingApertureParams(["w_ap and k_fresnel are required for eps_P"])
    wp, w1, w, k = geom.w_p, geom.w_o1, geom.w_ap, geom.k_fresnel
    W1sq = w1**2 + wp**2
    C = W1sq**2 + k**2 * w1**2 * wp**2 * (w**2 * wp**2 + w1**2 * w**2 + w1**2 * wp**2)
    value = k**2 * w**2 * w1**2 * wp**2 * W1sq / C
    return _result(Kind.eps_P, value, Regime.thin_crystal, None, geom)


def singles_C3(config: PhaseMatchConfig, w_o: float, w_p: float) -> EfficiencyResult:
    """Heralding-arm singles rate for a single-mode fiber of waist ``w_o``.

    Arbitrary units (pump power and detector efficiency are absent); only the
    shape versus the waists is meaningful.
    """
    W = math.hypot(w_o, w_p)
    a_i = config.a_i
    value = (
        config.K_p * erf(SQRT2 * config.L * a_i / (config.K_p * W))
        / (math.sqrt(2 * math.pi) * a_i * W)
    )
    geom = {"w_o1": w_o, "w_p": w_p}
    return EfficiencyResult(
        Kind.singles_C3, float(value), Regime.full_crystal,
        {**snapshot(config, None), **geom}, {"correction": C3_NOTE},
    )


# -- dispatch -----------------------------------------------------------------

EFFICIENCY_KINDS = ("chi_M", "chi_P3", "chi_P4", "eta_M", "eta_P3", "eta_P4", "eps_P")


def evaluate(kind, config, geom, regime=Regime.full_crystal, *, as_printed=False) -> EfficiencyResult:
    """Evaluate any efficiency kind by name in either regime."""
    kind = Kind(kind)
    regime = Regime(regime)
    if kind is Kind.singles_C3:
        return singles_C3(config, geom.w_o1, geom.w_p)
    arm = 4 if kind.value.endswith("4") else 3
    if regime is Regime.full_crystal:
        if as_printed:
            raise ValueError("as_printed only applies to the thin-crystal multi-mode forms")
        if kind is Kind.chi_M:
            return chi_M_full(config, geom)
        if kind in (Kind.chi_P3, Kind.chi_P4):
            return chi_P_full(config, geom, arm)
        if kind is Kind.eta_M:
            return eta_M_full(config, geom)
        if kind in (Kind.eta_P3, Kind.eta_P4):
            return eta_P_full(config, geom, arm)
        return eps_P_full(config, geom)
    if kind is Kind.eta_M:
        return eta_M_thin(geom, as_printed=as_printed)
    if kind in (Kind.eta_P3, Kind.eta_P4):
        return eta_P_thin(geom, arm, as_printed=as_printed)
    if as_printed:
        raise ValueError("as_printed only applies to the thin-crystal multi-mode forms")
    if kind is Kind.chi_M:
        return chi_M_thin(geom)
    if kind in (Kind.chi_P3, Kind.chi_P4):
        return chi_P_thin(geom, arm)
    return eps_P_thin(geom)
