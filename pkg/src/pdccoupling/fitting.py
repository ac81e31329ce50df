"""Least-squares fits of the thin-crystal closed forms to measured curves.

Datasets are CSV files with header ``abscissa_um,value[,sigma]``; lines
starting with ``#`` are comments. Fits run in log-parameter space (every
fitted quantity is positive) with scipy's trust-region reflective solver.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.optimize import least_squares

from . import closed_form
from .model import (
    CONFIG_FIELDS,
    BeamGeometry,
    ConfigError,
    PdcError,
    PhaseMatchConfig,
    ValidationError,
)

MIN_ROWS = 4
MAX_ITERATIONS = 200
TOLERANCE = 1e-10
SINGULAR_RCOND = 1e-7

ABSCISSA_KINDS = ("iris_diameter", "pump_waist", "preparation_waist")
# which geometry parameter the abscissa sets, and the scale from file units
ABSCISSA_PARAM = {
    "iris_diameter": ("w_ap", 0.5),
    "pump_waist": ("w_p", 1.0),
    "preparation_waist": ("w_o1", 1.0),
}
IRIS_NOTE = "iris diameter d mapped to Gaussian aperture w_ap = d/2"

MODELS = ("eps_P_thin", "chi_P_thin", "chi_M_thin", "singles_C3")
MODEL_PARAMS = {
    "eps_P_thin": ("k_fresnel", "w_p", "w_o1", "w_ap", "amplitude"),
    "chi_P_thin": ("w_p", "w_o1", "w_o2", "amplitude"),
    "chi_M_thin": ("w_p", "w_o1", "w_o2", "amplitude"),
    "singles_C3": ("w_p", "w_o1", "amplitude"),
}


class MalformedRow(PdcError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class NonPositiveAbscissa(PdcError):
    pass


class InsufficientData(PdcError):
    pass


class SingularJacobian(PdcError):
    pass


class DidNotConverge(UserWarning):
    """Issued when the iteration limit is hit; the best iterate is still returned."""


@dataclass(frozen=True)
class DataSet:
    rows: tuple  # (abscissa, value, sigma or None), file order
    abscissa_kind: str
    source: str = ""

    def __post_init__(self):
        if self.abscissa_kind not in ABSCISSA_KINDS:
            raise ValueError(f"abscissa_kind must be one of {ABSCISSA_KINDS}")
        if len(self.rows) < MIN_ROWS:
            raise InsufficientData(f"need at least {MIN_ROWS} rows, got {len(self.rows)}")
        for x, _, s in self.rows:
            if not x > 0:
                raise NonPositiveAbscissa(f"abscissa must be > 0 (got {x!r})")
            if s is not None and not s > 0:
                raise ValueError(f"sigma must be > 0 (got {s!r})")

    @property
    def abscissa(self):
        return np.array([r[0] for r in self.rows])

    @property
    def values(self):
        return np.array([r[1] for r in self.rows])

    @property
    def sigmas(self):
        if any(r[2] is None for r in self.rows):
            return None
        return np.array([r[2] for r in self.rows])


def _float(text, line, column):
    try:
        v = float(text)
    except ValueError:
        raise MalformedRow(line, f"{column} is not a number: {text!r}") from None
    if not math.isfinite(v):
        raise MalformedRow(line, f"{column} is not finite: {text!r}")
    return v


def load_dataset(path, abscissa_kind) -> DataSet:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read dataset {path}: {exc.strerror}") from None

    header, rows = None, []
    for lineno, fields_ in enumerate(csv.reader(text.splitlines()), start=1):
        if not fields_ or not "".join(fields_).strip() or fields_[0].lstrip().startswith("#"):
            continue
        fields_ = [f.strip() for f in fields_]
        if header is None:
            if fields_ not in (["abscissa_um", "value"], ["abscissa_um", "value", "sigma"]):
                raise MalformedRow(lineno, f"expected header abscissa_um,value[,sigma], got {fields_}")
            header = fields_
            continue
        if len(fields_) != len(header):
            raise MalformedRow(lineno, f"expected {len(header)} columns, got {len(fields_)}")
        x = _float(fields_[0], lineno, "abscissa_um")
        if x <= 0:
            raise NonPositiveAbscissa(f"line {lineno}: abscissa must be > 0 (got {x!r})")
        y = _float(fields_[1], lineno, "value")
        s = None
        if len(header) == 3:
            s = _float(fields_[2], lineno, "sigma")
            if s <= 0:
                raise MalformedRow(lineno, f"sigma must be > 0 (got {s!r})")
        rows.append((x, y, s))
    if header is None:
        raise MalformedRow(1, "missing header line")
    return DataSet(tuple(rows), abscissa_kind, str(path))


# -- models ------------------------------------------------------------------

def _point(model, params):
    """Model value (before the amplitude factor) for one full parameter set."""
    geom = BeamGeometry(
        w_p=params["w_p"], w_o1=params["w_o1"],
        w_o2=params.get("w_o2", params["w_o1"]),
        w_ap=params.get("w_ap"), k_fresnel=params.get("k_fresnel"),
    )
    if model == "eps_P_thin":
        return closed_form.eps_P_thin(geom).value
    if model == "chi_P_thin":
        return closed_form.chi_P_thin(geom, 3).value
    if model == "chi_M_thin":
        return closed_form.chi_M_thin(geom).value
    try:
        config = PhaseMatchConfig(**{k: float(params[k]) for k in CONFIG_FIELDS})
    except KeyError as exc:
        raise ValidationError([f"singles_C3 needs {exc.args[0]} in the fixed parameters"]) from None
    return closed_form.singles_C3(config, geom.w_o1, geom.w_p).value


def model_values(model, abscissa, abscissa_kind, params: Mapping[str, float]):
    """Evaluate ``amplitude * model`` along a dataset abscissa (file units)."""
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}")
    name, scale = ABSCISSA_PARAM[abscissa_kind]
    p = dict(params)
    amp = p.get("amplitude", 1.0)
    out = []
    for x in np.asarray(abscissa, dtype=float):
        p[name] = scale * x
        out.append(amp * _point(model, p))
    return np.array(out)


@dataclass(frozen=True)
class FitOutcome:
    model: str
    params: dict
    residual_rms: float
    param_uncertainties: dict
    converged: bool
    abscissa_kind: str
    abscissa_range: tuple
    fixed: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def predict(self, abscissa):
        return model_values(self.model, abscissa, self.abscissa_kind,
                            {**self.fixed, **self.params})


def fit(model, dataset: DataSet, free_params, initial_guess: Mapping[str, float],
        fixed: Mapping[str, float] | None = None) -> FitOutcome:
    """Weighted least-squares fit of ``model`` to ``dataset``.

    Weights are ``sigma_min / sigma_i`` so equal sigmas give exactly the
    unweighted problem. Uncertainties come from the linearized covariance
    scaled by the reduced chi-square.
    """
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}")
    free = list(free_params)
    if not free:
        raise ValueError("at least one free parameter is required")
    allowed = MODEL_PARAMS[model]
    absc_name = ABSCISSA_PARAM[dataset.abscissa_kind][0]
    bad = [p for p in free if p not in allowed or p == absc_name]
    if bad:
        raise ValueError(f"{model} cannot fit {bad} against {dataset.abscissa_kind}")
    if len(free) > len(dataset.rows):
        raise InsufficientData("more free parameters than data rows")
    problems = [f"initial guess for {p} must be > 0" for p in free
                if not (p in initial_guess and math.isfinite(initial_guess[p]) and initial_guess[p] > 0)]
    if problems:
        raise ValidationError(problems)

    fixed = {k: float(v) for k, v in (fixed or {}).items() if k not in free and k != absc_name}
    missing = [p for p in allowed if p not in free and p not in fixed
               and p not in (absc_name, "amplitude")]
    if missing:
        raise ValidationError([f"{model} needs {p} either free or fixed" for p in missing])

    # row order must not matter
    order = np.lexsort((
        [r[2] if r[2] is not None else 0.0 for r in dataset.rows],
        dataset.values, dataset.abscissa,
    ))
    x = dataset.abscissa[order]
    y = dataset.values[order]
    sig = dataset.sigmas
    weights = np.ones_like(y) if sig is None else sig.min() / sig[order]

    def unpack(z):
        return {**fixed, **{p: math.exp(v) for p, v in zip(free, z)}}

    def residuals(z):
        return (model_values(model, x, dataset.abscissa_kind, unpack(z)) - y) * weights

    z0 = np.array([math.log(initial_guess[p]) for p in free])
    res = least_squares(residuals, z0, jac="3-point", method="trf",
                        xtol=TOLERANCE, ftol=TOLERANCE, gtol=None,
                        max_nfev=MAX_ITERATIONS)

    J = res.jac
    s = np.linalg.svd(J, compute_uv=False)
    if s[0] == 0 or s[-1] / s[0] < SINGULAR_RCOND:
        raise SingularJacobian(
            f"parameters {free} are not separately identifiable from this data "
            f"(singular value ratio {s[-1] / s[0] if s[0] else 0.0:.3g})"
        )

    dof = max(len(y) - len(free), 1)
    cov = np.linalg.inv(J.T @ J) * (2.0 * res.cost / dof)
    params = unpack(res.x)
    fitted = {p: params[p] for p in free}
    # d(theta) = theta d(log theta)
    sd = {p: fitted[p] * math.sqrt(max(cov[i, i], 0.0)) for i, p in enumerate(free)}

    raw = model_values(model, x, dataset.abscissa_kind, params) - y
    converged = bool(res.status > 0)
    if not converged:
        warnings.warn(f"{model} fit stopped after {res.nfev} evaluations", DidNotConverge)

    meta = {"message": res.message, "nfev": int(res.nfev)}
    if dataset.abscissa_kind == "iris_diameter":
        meta["abscissa_mapping"] = IRIS_NOTE
    return FitOutcome(
        model=model,
        params=fitted,
        residual_rms=float(np.sqrt(np.mean(raw**2))),
        param_uncertainties=sd,
        converged=converged,
        abscissa_kind=dataset.abscissa_kind,
        abscissa_range=(float(x[0]), float(x[-1])),
        fixed=fixed,
        metadata=meta,
    )


def synthetic_dataset(model, abscissa, abscissa_kind, params, noise=0.0, seed=0) -> DataSet:
    """Dataset drawn from the model with relative Gaussian noise ``noise``."""
    clean = model_values(model, abscissa, abscissa_kind, params)
    rng = np.random.default_rng(seed)
    noisy = clean * (1.0 + noise * rng.standard_normal(clean.shape)) if noise else clean
    sigma = [float(noise * abs(c)) if noise else None for c in clean]
    rows = tuple((float(a), float(v), s) for a, v, s in zip(abscissa, noisy, sigma))
    return DataSet(rows, abscissa_kind, "synthetic")


# -- pump-waist comparison ---------------------------------------------------

@dataclass(frozen=True)
class WaistComparison:
    saturation: dict  # w_p -> fitted model at the largest measured abscissa
    asymptote: dict  # w_p -> fitted amplitude
    increasing: bool
    ties: tuple
    matches_claim: bool

    def summary(self):
        lines = [f"w_p={wp:g} saturation={v:.9g} asymptote={self.asymptote[wp]:.9g}"
                 for wp, v in self.saturation.items()]
        if self.ties:
            lines.append("ties: " + ", ".join(f"{a:g}={b:g}" for a, b in self.ties))
        lines.append(f"saturation increases with w_p: {self.matches_claim}")
        return "\n".join(lines)


def compare_pump_waists(outcomes: Mapping[float, FitOutcome], tie_tol=1e-12) -> WaistComparison:
    """Do larger pump waists saturate at higher efficiency?"""
    if len(outcomes) < 2:
        raise InsufficientData("need at least 2 fit outcomes to compare")
    waists = sorted(outcomes)
    sat = {}
    for wp in waists:
        o = outcomes[wp]
        sat[wp] = float(o.predict([o.abscissa_range[1]])[0])
    asym = {wp: float(outcomes[wp].params.get("amplitude", outcomes[wp].fixed.get("amplitude", 1.0)))
            for wp in waists}
    ties, increasing = [], True
    for a, b in zip(waists, waists[1:]):
        scale = max(abs(sat[a]), abs(sat[b]), 1.0)
        if abs(sat[b] - sat[a]) <= tie_tol * scale:
            ties.append((a, b))
        elif sat[b] < sat[a]:
            increasing = False
    return WaistComparison(sat, asym, increasing, tuple(ties), increasing and not ties)
