"""Covariate links and pointwise log-likelihoods for the three count families.

TDW and cTDW regressions link the design matrix to the per-row shifted
median, ``m_star_i = c + exp(x_i . beta)``, which stays above the truncation
bound for every finite linear predictor.  The TNB benchmark keeps the
conventional log link on the untruncated mean, ``mu_i = exp(x_i . beta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ctdw import dwcore

__all__ = [
    "FAMILIES",
    "Dataset",
    "RegressionModel",
    "linear_predictor",
    "link_median",
    "loglik_pointwise",
    "pointwise_loglik_fn",
    "build_design",
    "build_generic",
    "DESIGN_COLUMNS",
]

FAMILIES = ("tdw", "ctdw", "tnb")

#: Linear predictors are clamped to this magnitude before exponentiation.
LINPRED_CLAMP = 700.0

DESIGN_COLUMNS = (
    "intercept",
    "cabg",
    "urgent",
    "male",
    "cabg:urgent",
    "cabg:male",
    "urgent:male",
    "cabg:urgent:male",
)

_PROCEDURE = {"cabg": 1.0, "ptca": 0.0}
_ADMISSION = {"urgent": 1.0, "elective": 0.0}
_SEX = {"male": 1.0, "female": 0.0}


@dataclass(frozen=True)
class Dataset:
    """Counts, design matrix, and the shared lower truncation bound."""

    y: np.ndarray
    X: np.ndarray
    c: int
    colnames: tuple[str, ...]
    row_ids: tuple = ()

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=np.int64)
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        if y.ndim != 1 or X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("y must be 1-D and X 2-D with matching row count")
        if self.c < 0 or int(self.c) != self.c:
            raise ValueError("truncation bound c must be a nonnegative integer")
        if np.any(y < self.c):
            bad = int(np.argmax(y < self.c))
            raise ValueError(f"row {bad}: count {y[bad]} is below the truncation bound c={self.c}")
        if len(self.colnames) != X.shape[1]:
            raise ValueError("colnames must name every design column")
        if X.shape[0] < X.shape[1]:
            raise ValueError("need at least as many rows as design columns")
        if not self.row_ids:
            object.__setattr__(self, "row_ids", tuple(range(y.shape[0])))
        elif len(self.row_ids) != y.shape[0]:
            raise ValueError("row_ids must label every row")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class RegressionModel:
    """A fully specified member of one family, ready for likelihood evaluation."""

    family: str
    beta: np.ndarray
    alpha: float
    c: int
    eta: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "beta", np.ascontiguousarray(self.beta, dtype=np.float64))
        if self.beta.ndim != 1:
            raise ValueError("beta must be a vector")
        if not self.alpha > 0:
            raise ValueError("dispersion alpha must be positive")
        if self.c < 0 or int(self.c) != self.c:
            raise ValueError("truncation bound c must be a nonnegative integer")
        if self.family == "ctdw":
            if self.eta is None or self.delta is None:
                raise ValueError("ctdw models need both eta and delta")
            if not self.eta > 1.0:
                raise ValueError("tail inflation eta must be strictly greater than 1")
            if not 0.0 < self.delta < 1.0:
                raise ValueError("delta must lie strictly inside (0, 1)")
        elif self.eta is not None or self.delta is not None:
            raise ValueError(f"eta/delta are cTDW parameters, not {self.family}")


def linear_predictor(X, beta):
    """X @ beta clamped to +-700; returns (clamped values, clamp event count)."""
    lp = np.asarray(X, dtype=float) @ np.asarray(beta, dtype=float)
    clamped = int(np.count_nonzero(np.abs(lp) > LINPRED_CLAMP))
    if clamped:
        lp = np.clip(lp, -LINPRED_CLAMP, LINPRED_CLAMP)
    return lp, clamped


def link_median(X, beta, c):
    """Per-row shifted median m_star = c + exp(x . beta), always above c."""
    lp, _ = linear_predictor(X, beta)
    return c + np.exp(lp)


def pointwise_loglik_fn(family, data: Dataset):
    """Build the hot-path evaluator used by the sampler and the diagnostics.

    Returns ``f(beta, alpha, eta, delta) -> (loglik_vector, clamp_events)``;
    eta and delta are ignored for single-component families.  Logs of the
    observed counts are precomputed once so repeated calls only pay for the
    dispersion-dependent powers.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    y = data.y.astype(float)
    X = data.X
    c = data.c

    if family == "tnb":

        def loglik_tnb(beta, alpha, eta=None, delta=None):
            lp, clamped = linear_predictor(X, beta)
            mu = np.exp(lp)
            return dwcore._tnb_log_pmf(y, mu, alpha, c), clamped

        return loglik_tnb

    # shared machinery for the discrete Weibull families
    log_y = np.log(np.where(y == 0, 1.0, y))          # placeholder at y == 0
    zero_y = y == 0
    step_log = np.log1p(1.0 / np.where(y == 0, 1.0, y))
    lc = np.log(c) if c >= 1 else None

    def tdw_kernel(m_star, alpha):
        rho = 1.0 / alpha
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if c == 0:
                gap_y = np.where(zero_y, 0.0, np.exp(rho * log_y))
                gap_m = m_star**rho
            else:
                gap_y = float(c) ** rho * np.expm1(rho * (log_y - lc))
                gap_m = float(c) ** rho * np.expm1(rho * (np.log(m_star) - lc))
            lq = dwcore._LN_HALF / gap_m
            step = np.where(zero_y, 1.0, np.exp(rho * log_y) * np.expm1(rho * step_log))
            return lq * gap_y + dwcore._log1mexp(lq * step)

    if family == "tdw":

        def loglik_tdw(beta, alpha, eta=None, delta=None):
            lp, clamped = linear_predictor(X, beta)
            return tdw_kernel(c + np.exp(lp), alpha), clamped

        return loglik_tdw

    def loglik_ctdw(beta, alpha, eta, delta):
        lp, clamped = linear_predictor(X, beta)
        m_star = c + np.exp(lp)
        mix = np.logaddexp(
            np.log(delta) + tdw_kernel(m_star, alpha),
            np.log1p(-delta) + tdw_kernel(m_star, eta * alpha),
        )
        return mix, clamped

    return loglik_ctdw


def loglik_pointwise(model: RegressionModel, data: Dataset):
    """Per-observation log mass under the model; the joint loglik is its sum."""
    if model.c != data.c:
        raise ValueError("model and data disagree on the truncation bound")
    if model.beta.shape[0] != data.p:
        raise ValueError("beta length must match the design width")
    fn = pointwise_loglik_fn(model.family, data)
    ll, _ = fn(model.beta, model.alpha, model.eta, model.delta)
    return ll


def _norm_level(value):
    return str(value).strip().lower()


def build_design(records, c=1):
    """Assemble the 8-column interaction design from categorical records.

    Each record must carry ``los`` (a count >= 1), ``procedure`` (CABG/PTCA),
    ``admission`` (urgent/elective), and ``sex`` (male/female).  Reference
    levels are PTCA, elective, and female; columns are ordered
    intercept, main effects, two-way products, three-way product.
    """
    rows = []
    ys = []
    ids = []
    for i, rec in enumerate(records):
        try:
            raw_los = rec["los"]
            proc = rec["procedure"]
            adm = rec["admission"]
            sex = rec["sex"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"row {i}: missing column {exc}") from None
        try:
            los = int(raw_los)
        except (TypeError, ValueError):
            raise ValueError(f"row {i}: column 'los' value {raw_los!r} is not an integer") from None
        if los < 1:
            raise ValueError(f"row {i}: column 'los' value {los} must be >= 1")
        try:
            cabg = _PROCEDURE[_norm_level(proc)]
        except KeyError:
            raise ValueError(f"row {i}: unknown 'procedure' level {proc!r}") from None
        try:
            urgent = _ADMISSION[_norm_level(adm)]
        except KeyError:
            raise ValueError(f"row {i}: unknown 'admission' level {adm!r}") from None
        try:
            male = _SEX[_norm_level(sex)]
        except KeyError:
            raise ValueError(f"row {i}: unknown 'sex' level {sex!r}") from None
        rows.append(
            (
                1.0,
                cabg,
                urgent,
                male,
                cabg * urgent,
                cabg * male,
                urgent * male,
                cabg * urgent * male,
            )
        )
        ys.append(los)
        ids.append(rec.get("id", i) if hasattr(rec, "get") else i)
    if not rows:
        raise ValueError("no data rows found")
    return Dataset(
        y=np.asarray(ys, dtype=np.int64),
        X=np.asarray(rows, dtype=np.float64),
        c=c,
        colnames=DESIGN_COLUMNS,
        row_ids=tuple(ids),
    )


def build_generic(records, c, y_column="y"):
    """Dataset from a y column plus numeric covariates (intercept prepended)."""
    rows = []
    ys = []
    covnames = None
    for i, rec in enumerate(records):
        if y_column not in rec:
            raise ValueError(f"row {i}: missing column {y_column!r}")
        if covnames is None:
            covnames = [k for k in rec.keys() if k != y_column]
        try:
            ys.append(int(rec[y_column]))
        except (TypeError, ValueError):
            raise ValueError(
                f"row {i}: column {y_column!r} value {rec[y_column]!r} is not an integer"
            ) from None
        vals = [1.0]
        for k in covnames:
            try:
                vals.append(float(rec[k]))
            except (TypeError, ValueError, KeyError):
                raise ValueError(f"row {i}: column {k!r} is not numeric") from None
        rows.append(vals)
    if not rows:
        raise ValueError("no data rows found")
    return Dataset(
        y=np.asarray(ys, dtype=np.int64),
        X=np.asarray(rows, dtype=np.float64),
        c=c,
        colnames=("intercept", *covnames),
    )
