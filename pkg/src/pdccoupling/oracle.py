"""Brute-force quadrature of the defining overlap integrals.

This module never uses the closed forms. It evaluates the biphoton field
directly and integrates the coincidence and singles overlaps with composite
Gauss-Legendre rules, so it can adjudicate the analytic expressions.

Conventions
-----------
* The time difference is carried as ``u = tau / D`` on ``[0, L]``; the
  Jacobian ``|D|`` is common to every count and dropped, which also makes
  ``D = 0`` regular.
* Both delta functions of the field and the perfect-imaging kernels are
  applied analytically: ``x2 = x1`` and ``y2 = y1 + (theta_i + theta_s) u``.
* In the bucket-detection counts the squared field delta is replaced by a
  single delta; the discarded ``delta(0)`` is a factor common to the
  coincidence and both singles, so it cancels in every efficiency.
* Every integrand factorizes into an x part and a y part (Gaussian pump,
  Gaussian modes, separable quadratic-phase kernel, walk-off along y only).
  The transverse quadratures therefore run axis by axis; nothing else about
  the integrand is assumed.
* Panel widths come from the physical length scales of the factors (waists,
  walk-off displacement, chirp of the free-space kernel); ``n_transverse``
  and ``n_longitudinal`` are Gauss-Legendre orders per panel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import (
    BeamGeometry,
    EfficiencyResult,
    Kind,
    PdcError,
    PhaseMatchConfig,
    Regime,
    snapshot,
    validate,
)


class QuadratureNotConverged(PdcError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    n_longitudinal: int = 16
    n_transverse: int = 16
    transverse_cutoff: float = 6.0

    def __post_init__(self):
        if self.n_longitudinal < 8 or self.n_transverse < 8:
            raise ValueError("quadrature orders must be >= 8")
        if self.transverse_cutoff < 4:
            raise ValueError("transverse_cutoff must be >= 4")

    def doubled(self) -> "QuadratureSpec":
        return replace(self, n_longitudinal=2 * self.n_longitudinal,
                       n_transverse=2 * self.n_transverse)


@dataclass(frozen=True)
class FieldPoint:
    """Transverse positions of idler (1) and signal (2) and ``u = tau/D``."""

    x1: float
    y1: float
    x2: float
    y2: float
    u: float

    @classmethod
    def on_shell(cls, x1, y1, u, config: PhaseMatchConfig) -> "FieldPoint":
        """Point with the two field delta constraints already applied."""
        return cls(x1, y1, x1, y1 + (config.theta_i + config.theta_s) * u, u)


# -- the field ------------------------------------------------------------------

def _field_x(x, geom):
    return np.exp(-np.square(x) / geom.w_p**2)


def _field_y(y, u, config, geom):
    """y factor of the field at fixed ``u``.

    The three walk-off exponents are a perfect square; summing them before
    exponentiating avoids ``inf * 0`` for narrow pumps.
    """
    walk = (config.N_p - config.N_s) / config.K_p
    yy = y + config.theta_i * u
    return np.exp(-np.square(yy - walk * u) / geom.w_p**2)


def _phase(u, config):
    return np.exp(-1j * (config.K_i * config.theta_i**2
                         + config.K_s * config.theta_s * config.theta_i) * u)


def biphoton_amplitude(p: FieldPoint, config: PhaseMatchConfig, geom: BeamGeometry,
                       *, include_phase=False):
    """Biphoton field at ``p`` with unit normalization, zero outside ``0 <= u <= L``.

    The u-only phase factor is omitted unless ``include_phase``; it has unit
    modulus at fixed ``u`` and drops out of every count.
    """
    u = np.asarray(p.u, dtype=float)
    inside = (u >= 0) & (u <= config.L)
    amp = _field_x(np.asarray(p.x1, dtype=float), geom) * _field_y(
        np.asarray(p.y1, dtype=float), u, config, geom
    )
    if include_phase:
        amp = amp * _phase(u, config)
    out = np.where(inside, amp, 0.0)
    return complex(out) if out.ndim == 0 else out


# -- quadrature helpers -----------------------------------------------------------

_GL_CACHE: dict = {}


def _gauss_legendre(order):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def _panel_rule(lo, hi, width, order):
    """Composite Gauss-Legendre nodes/weights on ``[lo, hi]``, panels <= ``width``."""
    if hi <= lo:
        return np.empty(0), np.empty(0)
    n_panels = max(1, math.ceil((hi - lo) / width))
    t, w = _gauss_legendre(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _support(factors, cutoff):
    """Interval where every Gaussian factor ``(center, waist)`` is non-negligible."""
    lo = max(c - cutoff * w for c, w in factors)
    hi = min(c + cutoff * w for c, w in factors)
    return lo, hi


def _mode(x, waist, center=0.0):
    """One axis of a unit-power Gaussian mode ``sqrt(2/pi)/w exp(-r^2/w^2)``."""
    return (2.0 / math.pi) ** 0.25 / math.sqrt(waist) * np.exp(-np.square(x - center) / waist**2)


def _aperture(x, waist, center=0.0):
    return np.exp(-2.0 * np.square(x - center) / waist**2)


def _integrate(f, w):
    total = np.sum(f * w)
    return complex(total) if np.iscomplexobj(total) else float(total)


def _u_rule(config, geom, spec, waists):
    walk = (config.N_p - config.N_s) / config.K_p
    speed = max(abs(config.theta_i - walk), abs(config.theta_s + walk),
                abs(config.theta_i + config.theta_s), 1e-300)
    width = min(waists) / speed
    return _panel_rule(0.0, config.L, width, spec.n_longitudinal)


def _shift(config):
    return config.theta_i + config.theta_s


def _pump_center(config):
    """Pump centre on the idler axis moves as ``-(theta_i - walk) u``."""
    walk = (config.N_p - config.N_s) / config.K_p
    return -(config.theta_i - walk)


# -- single-mode counts ---------------------------------------------------------

def _prep(config, geom):
    validate(config, geom)
    return geom.w_p, geom.w_o1, geom.w_o2


def coincidence_single_mode(config, geom, spec=QuadratureSpec(), *, include_phase=False, check=False):
    """Quantity proportional to the single-mode coincidence count ``C34``."""
    if check:
        return _checked(coincidence_single_mode, config, geom, spec, include_phase=include_phase)
    wp, w1, w2 = _prep(config, geom)
    cut, order = spec.transverse_cutoff, spec.n_transverse
    mag = 1.0 / (abs(geom.M_3) * abs(geom.M_4))

    lo, hi = _support([(0.0, wp), (0.0, w1), (0.0, w2)], cut)
    x, wx = _panel_rule(lo, hi, min(wp, w1, w2), order)
    ax = _integrate(_field_x(x, geom) * _mode(x, w1) * _mode(x, w2), wx)

    s, pc = _shift(config), _pump_center(config)
    us, wu = _u_rule(config, geom, spec, (wp, w1, w2))
    vals = np.empty(us.size)
    for j, u in enumerate(us):
        lo, hi = _support([(pc * u, wp), (0.0, w1), (-s * u, w2)], cut)
        y, wy = _panel_rule(lo, hi, min(wp, w1, w2), order)
        amp = _field_y(y, u, config, geom) * _mode(y, w1) * _mode(y + s * u, w2)
        if include_phase:
            amp = amp * _phase(u, config)
        vals[j] = abs(ax * _integrate(amp, wy) * mag) ** 2
    return _integrate(vals, wu)


def singles_single_mode(config, geom, spec=QuadratureSpec(), arm=3, *,
                        normalize_pump=False, include_phase=False, check=False):
    """Quantity proportional to the single-mode singles ``C3`` (arm 3) or ``C4``.

    With ``normalize_pump`` the field is scaled to unit pump power, which is
    what makes absolute singles comparable across pump waists.
    """
    if arm not in (3, 4):
        raise ValueError(f"arm must be 3 or 4, got {arm!r}")
    if check:
        return _checked(singles_single_mode, config, geom, spec, arm=arm,
                        normalize_pump=normalize_pump, include_phase=include_phase)
    wp, w1, w2 = _prep(config, geom)
    cut, order = spec.transverse_cutoff, spec.n_transverse
    wm = w1 if arm == 3 else w2
    mag = 1.0 / (abs(geom.M_3) * abs(geom.M_4))

    lo, hi = _support([(0.0, wp), (0.0, wm)], cut)
    x, wx = _panel_rule(lo, hi, min(wp, wm), order)
    ix = _integrate(np.abs(_field_x(x, geom) * _mode(x, wm)) ** 2, wx)

    s, pc = _shift(config), _pump_center(config)
    us, wu = _u_rule(config, geom, spec, (wp, wm))
    vals = np.empty(us.size)
    for j, u in enumerate(us):
        # the uncollected photon's coordinate is free; the other mode is fixed
        center = 0.0 if arm == 3 else -s * u
        lo, hi = _support([(pc * u, wp), (center, wm)], cut)
        y, wy = _panel_rule(lo, hi, min(wp, wm), order)
        amp = _field_y(y, u, config, geom) * _mode(y, wm, center)
        if include_phase:
            amp = amp * _phase(u, config)
        vals[j] = ix * _integrate(np.abs(amp) ** 2, wy) * mag**2
    total = _integrate(vals, wu)
    if normalize_pump:
        total *= 2.0 / (math.pi * wp**2)
    return total


# -- multi-mode (bucket) counts ---------------------------------------------------

def _multimode(config, geom, spec, which):
    wp, w1, w2 = _prep(config, geom)
    cut, order = spec.transverse_cutoff, spec.n_transverse
    use1 = which in ("34", "3")
    use2 = which in ("34", "4")

    def factors(c_pump, c2):
        f = [(c_pump, wp)]
        if use1:
            f.append((0.0, w1))
        if use2:
            f.append((c2, w2))
        return f

    def weight(t, c2):
        out = np.ones_like(t)
        if use1:
            out = out * _aperture(t, w1)
        if use2:
            out = out * _aperture(t, w2, c2)
        return out

    waists = [w for w, used in ((wp, True), (w1, use1), (w2, use2)) if used]
    lo, hi = _support(factors(0.0, 0.0), cut)
    x, wx = _panel_rule(lo, hi, min(waists), order)
    ix = _integrate(np.abs(_field_x(x, geom)) ** 2 * weight(x, 0.0), wx)

    s, pc = _shift(config), _pump_center(config)
    us, wu = _u_rule(config, geom, spec, waists)
    vals = np.empty(us.size)
    for j, u in enumerate(us):
        lo, hi = _support(factors(pc * u, -s * u), cut)
        y, wy = _panel_rule(lo, hi, min(waists), order)
        vals[j] = ix * _integrate(np.abs(_field_y(y, u, config, geom)) ** 2 * weight(y, -s * u), wy)
    return _integrate(vals, wu)


def coincidence_multimode(config, geom, spec=QuadratureSpec(), *, check=False):
    """Quantity proportional to the bucket-detection coincidences ``C34``."""
    if check:
        return _checked(coincidence_multimode, config, geom, spec)
    return _multimode(config, geom, spec, "34")


def singles_multimode(config, geom, spec=QuadratureSpec(), arm=3, *, check=False):
    if arm not in (3, 4):
        raise ValueError(f"arm must be 3 or 4, got {arm!r}")
    if check:
        return _checked(singles_multimode, config, geom, spec, arm=arm)
    return _multimode(config, geom, spec, str(arm))


# -- single-mode preparation, free-space bucket collection ------------------------

def _propagated_power(source, s_nodes, s_weights, k, w_ap, out_lo, out_hi, width, order, shift):
    """``int T(y4) |int source(y) K(y + shift - y4) dy|^2 dy4`` for one axis.

    ``K(z) = sqrt(k/pi) exp(-i k z^2)`` is the unitary Fresnel kernel.
    """
    y4, w4 = _panel_rule(out_lo, out_hi, width, order)
    if y4.size == 0:
        return 0.0
    # exp(-ik y4^2) is a pure phase at fixed y4 and is left out of the sum
    src = source * np.exp(-1j * k * np.square(s_nodes + shift)) * s_weights
    phase = np.exp(2j * k * np.outer(y4, s_nodes + shift))
    field = (phase * src[None, :]).sum(axis=1) * math.sqrt(k / math.pi)
    return _integrate(_aperture(y4, w_ap) * np.abs(field) ** 2, w4)


def coincidence_mixed(config, geom, spec=QuadratureSpec(), *, include_phase=False, check=False):
    """Quantity proportional to ``C34`` for single-mode preparation in arm 3 and
    Gaussian-aperture collection in arm 4 through free space."""
    if check:
        return _checked(coincidence_mixed, config, geom, spec, include_phase=include_phase)
    validate(config, geom, need_aperture=True)
    wp, w1 = geom.w_p, geom.w_o1
    k, w_ap = geom.k_fresnel, geom.w_ap
    cut, order = spec.transverse_cutoff, spec.n_transverse
    w_src = min(wp, w1)
    mag = 1.0 / abs(geom.M_3)

    def axis(source_fn, centers, shift):
        lo, hi = _support(centers, cut)
        if hi <= lo:
            return 0.0
        extent = hi - lo
        far = cut / (k * w_src)
        out_lo = max(-cut * w_ap, lo + shift - far)
        out_hi = min(cut * w_ap, hi + shift + far)
        reach = max(out_hi - (lo + shift), (hi + shift) - out_lo, extent)
        s_nodes, s_w = _panel_rule(lo, hi, min(w_src, 2 * math.pi / (k * reach)), order)
        out_width = min(w_ap, math.pi / (k * extent))
        return _propagated_power(source_fn(s_nodes), s_nodes, s_w, k, w_ap,
                                 out_lo, out_hi, out_width, order, shift)

    px = axis(lambda t: _field_x(t, geom) * _mode(t, w1), [(0.0, wp), (0.0, w1)], 0.0)

    s, pc = _shift(config), _pump_center(config)
    us, wu = _u_rule(config, geom, spec, (wp, w1))
    vals = np.empty(us.size)
    for j, u in enumerate(us):
        def src(t, u=u):
            amp = _field_y(t, u, config, geom) * _mode(t, w1)
            return amp * _phase(u, config) if include_phase else amp
        vals[j] = px * axis(src, [(pc * u, wp), (0.0, w1)], s * u) * mag**2
    return _integrate(vals, wu)


# -- efficiencies -----------------------------------------------------------------

def _checked(fn, config, geom, spec, rtol=1e-6, **kw):
    a = fn(config, geom, spec, **kw)
    b = fn(config, geom, spec.doubled(), **kw)
    if abs(a - b) > rtol * max(abs(a), abs(b)):
        raise QuadratureNotConverged(
            f"{fn.__name__}: {a!r} vs {b!r} after doubling the rule orders"
        )
    return b


def _ratio(kind, config, geom, spec):
    k = Kind(kind)
    if k is Kind.chi_M:
        return coincidence_single_mode(config, geom, spec) / math.sqrt(
            singles_single_mode(config, geom, spec, 3) * singles_single_mode(config, geom, spec, 4)
        )
    if k in (Kind.chi_P3, Kind.chi_P4):
        arm = 3 if k is Kind.chi_P3 else 4
        return coincidence_single_mode(config, geom, spec) / singles_single_mode(config, geom, spec, arm)
    if k is Kind.eta_M:
        return coincidence_multimode(config, geom, spec) / math.sqrt(
            singles_multimode(config, geom, spec, 3) * singles_multimode(config, geom, spec, 4)
        )
    if k in (Kind.eta_P3, Kind.eta_P4):
        arm = 3 if k is Kind.eta_P3 else 4
        return coincidence_multimode(config, geom, spec) / singles_multimode(config, geom, spec, arm)
    if k is Kind.eps_P:
        # singles of the single-mode arm do not see the signal optics
        g = replace(geom, M_4=1.0)
        return coincidence_mixed(config, geom, spec) / singles_single_mode(config, g, spec, 3)
    if k is Kind.singles_C3:
        return singles_single_mode(config, geom, spec, 3, normalize_pump=True)
    raise ValueError(f"unsupported kind {kind!r}")


def oracle_efficiency(kind, config: PhaseMatchConfig, geom: BeamGeometry,
                      spec: QuadratureSpec = QuadratureSpec(), *,
                      check_convergence=False, rtol=1e-6) -> EfficiencyResult:
    """Any efficiency as the defining ratio of quadrature counts.

    With ``check_convergence`` the ratio is recomputed with doubled rule
    orders and :class:`QuadratureNotConverged` is raised if the two differ by
    more than ``rtol`` (relative).
    """
    kind = Kind(kind)
    value = _ratio(kind, config, geom, spec)
    meta = {"method": "quadrature", "n_longitudinal": spec.n_longitudinal,
            "n_transverse": spec.n_transverse, "transverse_cutoff": spec.transverse_cutoff}
    if check_convergence:
        finer = _ratio(kind, config, geom, spec.doubled())
        dev = abs(finer - value) / max(abs(finer), 1e-300)
        if dev > rtol:
            raise QuadratureNotConverged(
                f"{kind}: {value!r} vs {finer!r} after doubling (rel. change {dev:.2e})"
            )
        meta["doubling_change"] = dev
    return EfficiencyResult(kind, float(value), Regime.full_crystal, snapshot(config, geom), meta)
