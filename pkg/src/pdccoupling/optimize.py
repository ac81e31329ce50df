"""One-dimensional waist optimization of the efficiencies.

A coarse pre-scan locates the best grid cell, then a golden-section search
refines it. Only one waist is varied at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import closed_form
from .model import Kind, PdcError, Regime, snapshot, validate, with_value

DEFAULT_BRACKET = (5.0, 2000.0)
PRESCAN_POINTS = 32
TOLERANCE = 0.01
TIE = 1e-12

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class BracketInvalid(PdcError):
    pass


class NoInteriorOptimum(PdcError):
    """Raised only when ``require_interior=True``; otherwise a flag."""


@dataclass(frozen=True)
class OptimumRecord:
    target: str
    free_variable: str
    optimum_value: float
    efficiency_at_optimum: float
    bracket: tuple
    fixed: dict = field(default_factory=dict, compare=False)
    interior: bool = True
    unimodal: bool = True
    error: str | None = None


def _objective(target, free, config, geom, regime):
    target = Kind(target)
    regime = Regime(regime)

    def f(x):
        c, g = with_value(config, geom, free, x)
        return closed_form.evaluate(target, c, g, regime).value

    return f


def golden_section(f, lo, hi, tol=TOLERANCE):
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        # ties move left so plateaus resolve to the smaller waist
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _local_maxima(values):
    v = np.asarray(values)
    inner = (v[1:-1] > v[:-2] + TIE) & (v[1:-1] > v[2:] + TIE)
    return int(inner.sum())


def optimize_waist(target, free, bracket=DEFAULT_BRACKET, config=None, geom=None,
                   regime=Regime.full_crystal, *, require_interior=False) -> OptimumRecord:
    """Maximize ``target`` over the single parameter ``free`` inside ``bracket``.

    A maximum sitting on a bracket edge (monotone targets) is returned with
    ``interior=False``. When the pre-scan sees several local maxima the best
    grid cell is refined and ``unimodal=False`` is recorded.
    """
    lo, hi = (float(b) for b in bracket)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise BracketInvalid(f"bracket [{lo}, {hi}] needs lo < hi")
    for x in (lo, hi):
        validate(*with_value(config, geom, free, x),
                 need_aperture=Kind(target) is Kind.eps_P)

    f = _objective(target, free, config, geom, regime)
    grid = np.linspace(lo, hi, PRESCAN_POINTS)
    values = [f(x) for x in grid]
    best = max(values)
    i = next(j for j, v in enumerate(values) if v >= best - TIE)

    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, PRESCAN_POINTS - 1)]
    x_opt, f_opt = golden_section(f, a, b)

    # the edges themselves are candidates, GSS never lands exactly on them
    for edge, f_edge in ((lo, values[0]), (hi, values[-1])):
        if f_edge > f_opt + TIE or (abs(f_edge - f_opt) <= TIE and edge < x_opt):
            x_opt, f_opt = edge, f_edge
    interior = lo < x_opt < hi and f_opt > max(values[0], values[-1]) + TIE

    record = OptimumRecord(
        target=str(Kind(target)),
        free_variable=free,
        optimum_value=float(x_opt),
        efficiency_at_optimum=float(f_opt),
        bracket=(lo, hi),
        fixed={k: v for k, v in snapshot(config, geom).items() if k != free},
        interior=bool(interior),
        unimodal=_local_maxima(values) <= 1,
    )
    if require_interior and not interior:
        raise NoInteriorOptimum(f"{record.target} maximum at bracket edge {x_opt:g}")
    return record


def optimum_curve(target, free, bracket, sweep, grid, config, geom,
                  regime=Regime.full_crystal) -> list[OptimumRecord]:
    """``optimize_waist`` at every value of ``sweep`` in ``grid``.

    Failures are recorded per point (``error`` set, values NaN), never raised.
    """
    records = []
    for s in grid:
        try:
            c, g = with_value(config, geom, sweep, s)
            records.append(optimize_waist(target, free, bracket, c, g, regime))
        except PdcError as exc:
            fixed = snapshot(*with_value(config, geom, sweep, s))
            fixed.pop(free, None)
            records.append(OptimumRecord(
                str(Kind(target)), free, math.nan, math.nan,
                tuple(float(b) for b in bracket), fixed,
                interior=False, unimodal=False,
                error=f"{type(exc).__name__}: {exc}",
            ))
    return records
