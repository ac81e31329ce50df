"""Command-line front end: ``pdccoupling {eval,scan,optimize,fit,oracle-check}``.

Every verb writes CSV (to ``--output`` or standard output) that starts with
a ``#`` provenance header. Human-readable summaries go to standard output as
``#`` lines. Exit codes: 0 success, 1 unreadable or malformed input file,
2 invalid parameters.
"""

from __future__ import annotations

import argparse
import hashlib
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__, closed_form, fitting, oracle
from .model import (
    ConfigError,
    Kind,
    PdcError,
    Regime,
    ScanSeries,
    ValidationError,
    load_config,
    snapshot,
    validate,
    with_value,
)
from .optimize import BracketInvalid, optimize_waist, optimum_curve

PROG = "pdccoupling"
SWEEPABLE = ("w_p", "w_o1", "w_o2", "w_o", "w_ap", "L")
REGIMES = {"thin": Regime.thin_crystal, "full": Regime.full_crystal,
           "thin_crystal": Regime.thin_crystal, "full_crystal": Regime.full_crystal}
INPUT_ERRORS = (ConfigError, fitting.MalformedRow, fitting.NonPositiveAbscissa,
                fitting.InsufficientData)


def fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return f"{v:.9g}"


def set_param(config, geom, name, value):
    """``with_value`` plus the tied sweep ``w_o`` (both collection waists)."""
    if name == "w_o":
        config, geom = with_value(config, geom, "w_o1", value)
        return with_value(config, geom, "w_o2", value)
    return with_value(config, geom, name, value)


def parse_grid(text):
    """``lo:hi:count`` (inclusive) or a comma list of values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid {text!r} is not lo:hi:count")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise argparse.ArgumentTypeError(f"grid {text!r} is not lo:hi:count") from None
        if n < 1 or (n > 1 and not hi > lo) or (n == 1 and hi != lo):
            raise argparse.ArgumentTypeError(f"grid {text!r}: need count >= 1 and lo < hi")
        return tuple(float(x) for x in np.linspace(lo, hi, n))
    try:
        values = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad value list {text!r}") from None
    if any(b <= a for a, b in zip(values, values[1:])):
        raise argparse.ArgumentTypeError(f"values {text!r} must be strictly increasing")
    return values


def sweep_arg(text):
    name, sep, grid = text.partition("=")
    if not sep or name not in SWEEPABLE:
        raise argparse.ArgumentTypeError(
            f"sweep {text!r} must be NAME=GRID with NAME in {', '.join(SWEEPABLE)}"
        )
    return name, parse_grid(grid)


def assignments(text):
    out = {}
    for item in text.split(","):
        name, sep, value = item.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{item!r} is not NAME=NUMBER") from None
        if not sep:
            raise argparse.ArgumentTypeError(f"{item!r} is not NAME=NUMBER")
    return out


def scan(kind, var, grid, config, geom, regime=Regime.full_crystal) -> ScanSeries:
    """Closed-form efficiency along one swept length parameter."""
    values = []
    for x in grid:
        c, g = set_param(config, geom, var, x)
        values.append(closed_form.evaluate(kind, c, g, regime).value)
    drop = ("w_o1", "w_o2") if var == "w_o" else (var,)
    fixed = {k: v for k, v in snapshot(config, geom).items() if k not in drop}
    return ScanSeries(var, tuple(grid), tuple(values), fixed)


# -- output ------------------------------------------------------------------

class Output:
    """CSV body plus ``#`` summary lines, written deterministically."""

    def __init__(self, args, argv, inputs):
        self.header = [f"# {PROG} {__version__}"]
        for label, path in inputs:
            digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
            self.header.append(f"# {label}_sha256: {digest}")
        self.header.append(f"# command: {shlex.join([PROG, *argv])}")
        self.rows = []
        self.summary = []
        self.path = args.output

    def row(self, *cells):
        self.rows.append(",".join(fmt(c) for c in cells))

    def note(self, text):
        self.summary.extend(f"# {line}" for line in str(text).splitlines())

    def write(self, stdout):
        body = "\n".join(self.header + self.rows) + "\n"
        if self.path:
            Path(self.path).write_text(body, encoding="utf-8", newline="\n")
        else:
            stdout.write(body)
        if self.summary:
            stdout.write("\n".join(self.summary) + "\n")


def _regime(args):
    return REGIMES[args.regime]


def _load(args, need_aperture=False):
    config, geom = load_config(args.config)
    validate(config, geom, need_aperture=need_aperture)
    return config, geom


def _validate_grid(config, geom, var, grid, need_aperture):
    for x in grid:
        validate(*set_param(config, geom, var, x), need_aperture=need_aperture)


def cmd_eval(args, out):
    kind = Kind(args.kind)
    config, geom = _load(args, kind is Kind.eps_P)
    res = closed_form.evaluate(kind, config, geom, _regime(args), as_printed=args.as_printed)
    out.row("kind", "regime", "value")
    out.row(str(kind), str(res.regime), res.value)
    for key, value in res.metadata.items():
        out.note(f"{key}: {value}")


def cmd_scan(args, out):
    kind = Kind(args.kind)
    config, geom = _load(args)
    var, grid = args.sweep
    series_name, series_grid = args.series if args.series else (None, (None,))
    regime = _regime(args)
    columns, cols = [f"{var}_um"], []
    for s in series_grid:
        c, g = (config, geom) if s is None else set_param(config, geom, series_name, s)
        _validate_grid(c, g, var, grid, kind is Kind.eps_P)
        label = str(kind) if s is None else f"{kind}[{series_name}={fmt(s)}]"
        cols.append(scan(kind, var, grid, c, g, regime).ordinate)
        columns.append(label)
        if args.oracle:
            spec = oracle.QuadratureSpec(args.quad_order, args.quad_order)
            cols.append(tuple(
                oracle.oracle_efficiency(kind, *set_param(c, g, var, x), spec).value for x in grid
            ))
            columns.append(f"{label}_oracle")
    out.row(*columns)
    for i, x in enumerate(grid):
        out.row(x, *(col[i] for col in cols))
    for label, col in zip(columns[1:], cols):
        j = int(np.argmax(col))
        out.note(f"{label}: max {fmt(col[j])} at {var}={fmt(grid[j])}")


def cmd_optimize(args, out):
    target = Kind(args.target)
    config, geom = _load(args)
    lo, hi = args.bracket
    if args.sweep:
        var, grid = args.sweep
        records = optimum_curve(target, args.free, (lo, hi), var, grid, config, geom, _regime(args))
        abscissa = grid
        label = f"{var}_um"
    else:
        records = [optimize_waist(target, args.free, (lo, hi), config, geom, _regime(args))]
        abscissa = [geom.w_p]
        label = "w_p_um"
    out.row(label, f"optimum_{args.free}_um", str(target), "interior", "unimodal", "error")
    for x, r in zip(abscissa, records):
        out.row(x, r.optimum_value, r.efficiency_at_optimum, r.interior, r.unimodal, r.error or "")
    for x, r in zip(abscissa, records):
        if r.error:
            out.note(f"{label[:-3]}={fmt(x)}: {r.error}")
        else:
            flag = "" if r.interior else " (at bracket edge, no interior optimum)"
            out.note(f"{label[:-3]}={fmt(x)}: {args.free}*={fmt(r.optimum_value)} "
                     f"{target}={fmt(r.efficiency_at_optimum)}{flag}")


def cmd_fit(args, out):
    data = fitting.load_dataset(args.data, args.abscissa)
    fixed = {}
    if args.config:
        config, geom = load_config(args.config)
        fixed.update(snapshot(config, geom))
    fixed.update(args.fix or {})
    free = [p.strip() for p in args.free.split(",") if p.strip()]
    guess = {**{p: fixed[p] for p in free if p in fixed}, **(args.guess or {})}
    outcome = fitting.fit(args.model, data, free, guess, fixed)
    prediction = outcome.predict(data.abscissa)
    out.row("abscissa_um", "value", "sigma", "fit")
    for (x, y, s), f in zip(data.rows, prediction):
        out.row(x, y, s, f)
    out.note(f"model: {outcome.model} ({data.abscissa_kind})")
    for p in free:
        out.note(f"{p} = {fmt(outcome.params[p])} +/- {fmt(outcome.param_uncertainties[p])}")
    out.note(f"residual_rms = {fmt(outcome.residual_rms)}")
    out.note(f"converged = {outcome.converged}")
    if "abscissa_mapping" in outcome.metadata:
        out.note(outcome.metadata["abscissa_mapping"])


def cmd_oracle_check(args, out):
    kind = Kind(args.kind)
    config, geom = _load(args, kind is Kind.eps_P)
    var, grid = args.sweep if args.sweep else ("w_p", (geom.w_p,))
    _validate_grid(config, geom, var, grid, kind is Kind.eps_P)
    spec = oracle.QuadratureSpec(args.quad_order, args.quad_order)
    regime = _regime(args)
    out.row(f"{var}_um", f"{kind}_closed", f"{kind}_oracle", "rel_dev")
    worst = 0.0
    for x in grid:
        c, g = set_param(config, geom, var, x)
        a = closed_form.evaluate(kind, c, g, regime).value
        b = oracle.oracle_efficiency(kind, c, g, spec).value
        dev = abs(a - b) / max(abs(b), 1e-300)
        worst = max(worst, dev)
        out.row(x, a, b, dev)
    out.note(f"{kind} ({regime} closed form vs quadrature): max relative deviation {worst:.3e}")


def build_parser():
    p = argparse.ArgumentParser(prog=PROG, description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, config_required=True):
        if config_required:
            sp.add_argument("config", help="JSON configuration file")
        sp.add_argument("-o", "--output", help="CSV output path (default: stdout)")
        sp.add_argument("--regime", choices=sorted(REGIMES), default="full")

    kinds = [k.value for k in Kind]
    sp = sub.add_parser("eval", help="evaluate one efficiency")
    common(sp)
    sp.add_argument("--kind", required=True, choices=kinds)
    sp.add_argument("--as-printed", action="store_true",
                    help="literal dimensionful thin-crystal multi-mode forms, audit only")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("scan", help="efficiency along a swept waist")
    common(sp)
    sp.add_argument("--kind", required=True, choices=kinds)
    sp.add_argument("--sweep", required=True, type=sweep_arg, help="NAME=lo:hi:count")
    sp.add_argument("--series", type=sweep_arg, help="NAME=v1,v2,... one column per value")
    sp.add_argument("--oracle", action="store_true", help="append quadrature columns")
    sp.add_argument("--quad-order", type=int, default=16)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("optimize", help="optimum waist, optionally along a sweep")
    common(sp)
    sp.add_argument("--target", required=True, choices=kinds)
    sp.add_argument("--free", required=True, choices=("w_p", "w_o1", "w_o2", "w_ap"))
    sp.add_argument("--bracket", type=_bracket, default=(5.0, 2000.0), help="lo:hi in um")
    sp.add_argument("--sweep", type=sweep_arg, help="NAME=lo:hi:count")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("fit", help="fit a closed form to a CSV dataset")
    common(sp, config_required=False)
    sp.add_argument("--config", help="JSON configuration supplying fixed parameters")
    sp.add_argument("--data", required=True)
    sp.add_argument("--abscissa", required=True, choices=fitting.ABSCISSA_KINDS)
    sp.add_argument("--model", required=True, choices=fitting.MODELS)
    sp.add_argument("--free", required=True, help="comma list, e.g. k_fresnel,amplitude")
    sp.add_argument("--guess", type=assignments, help="NAME=VALUE,... initial values")
    sp.add_argument("--fix", type=assignments, help="NAME=VALUE,... fixed values")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("oracle-check", help="closed form against brute-force quadrature")
    common(sp)
    sp.add_argument("--kind", required=True, choices=[k for k in kinds if k != "singles_C3"])
    sp.add_argument("--sweep", type=sweep_arg, help="NAME=lo:hi:count")
    sp.add_argument("--quad-order", type=int, default=16)
    sp.set_defaults(func=cmd_oracle_check)
    return p


def _bracket(text):
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bracket {text!r} is not lo:hi") from None
    return lo, hi


def main(argv=None, stdout=None, stderr=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)

    inputs = []
    for label in ("config", "data"):
        path = getattr(args, label, None)
        if path:
            if not Path(path).is_file():
                print(f"{PROG}: ConfigError: cannot read {label} file {path}", file=stderr)
                return 1
            inputs.append((label, path))
    out = Output(args, argv, inputs)
    try:
        args.func(args, out)
    except INPUT_ERRORS as exc:
        print(f"{PROG}: {type(exc).__name__}: {exc}", file=stderr)
        return 1
    except (ValidationError, BracketInvalid, fitting.SingularJacobian, PdcError, ValueError) as exc:
        print(f"{PROG}: {type(exc).__name__}: {exc}", file=stderr)
        return 2
    out.write(stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
