"""Lower-truncated discrete Weibull primitives and their contaminated mixture.

Families
--------
* TDW -- discrete Weibull conditioned on ``Y >= c``, parameterized by the
  shifted median ``m_star > c`` and dispersion ``alpha > 0`` (tail exponent
  ``rho = 1/alpha``).  ``c = 0`` recovers the untruncated family; ``alpha = 1``
  with ``c = 0`` is geometric.
* cTDW -- two TDW components sharing ``(m_star, c)`` with dispersions
  ``alpha`` and ``eta * alpha`` (``eta > 1``), mixed with weight ``delta`` on
  the narrow component.  The shared shifted median makes the mixture's
  integer median ``ceil(m_star - 1)`` for every ``(eta, delta)``.
* TNB -- negative binomial (mean ``mu``, dispersion ``alpha_nb``, variance
  ``mu + mu**2 / alpha_nb``) conditioned on ``Y >= c``.  Mean-centered
  benchmark only; there is no closed-form median.

All tail powers ``q**x`` are evaluated as ``exp(x * log(q))`` and differences
of near-equal tail terms go through ``exp(a) * -expm1(b - a)`` with
``a >= b``, so log-masses stay accurate far beyond the 1e-300 mass region.
Every function broadcasts over its count/probability arguments and is pure;
the parameter containers are frozen and safe to share across threads and
worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

__all__ = [
    "SUPPORT_CAP",
    "MOMENT_TERM_CAP",
    "TDWParams",
    "CTDWParams",
    "TNBParams",
    "median_to_q",
    "log_q_from_median",
    "tdw_log_pmf",
    "tdw_pmf",
    "tdw_cdf",
    "tdw_quantile",
    "tdw_sample",
    "tdw_raw_moment",
    "tdw_kurtosis",
    "ctdw_log_pmf",
    "ctdw_pmf",
    "ctdw_cdf",
    "ctdw_quantile",
    "ctdw_sample",
    "tnb_log_pmf",
    "tnb_pmf",
    "tnb_cdf",
    "tnb_quantile",
    "tnb_sample",
    "tnb_truncated_mean",
]

_LN_HALF = math.log(0.5)
_LN2 = math.log(2.0)

#: Quantile searches and support scans refuse to walk past this count.
SUPPORT_CAP = 10**8

#: Hard cap on the number of series terms for raw moments.
MOMENT_TERM_CAP = 10**7


# ---------------------------------------------------------------------------
# low-level numerics
# ---------------------------------------------------------------------------


def _log1mexp(x):
    """log(1 - exp(x)) for x <= 0, switching identities at -log(2)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        near = np.log(-np.expm1(x))      # accurate for x close to 0
        far = np.log1p(-np.exp(x))       # accurate for very negative x
    return np.where(x > -_LN2, near, far)


def _pow_gap(y, c, rho):
    """y**rho - c**rho without cancellation, for y >= c >= 0, scalar c."""
    y = np.asarray(y, dtype=float)
    if c == 0:
        return y**rho
    lc = math.log(c)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = c**rho * np.expm1(rho * (np.log(y) - lc))
    return out


def _pow_step(y, rho):
    """(y+1)**rho - y**rho without cancellation, for integer y >= 0."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        big = y**rho * np.expm1(rho * np.log1p(1.0 / y))
    return np.where(y == 0, 1.0, big)


def _validate_support(y, c):
    y = np.asarray(y)
    if np.any(y < c):
        raise ValueError(f"count below truncation bound c={c}")
    return np.asarray(y, dtype=float)


def log_q_from_median(m_star, alpha, c):
    """log(q) for the geometric-like tail parameter implied by (m_star, alpha, c).

    ``q = exp(log(0.5) / (m_star**(1/alpha) - c**(1/alpha)))`` re-centers the
    distribution so that the real-valued median equals ``m_star``.
    """
    m_star = np.asarray(m_star, dtype=float)
    if np.any(m_star <= c):
        raise ValueError("shifted median m_star must exceed the truncation bound c")
    if alpha <= 0:
        raise ValueError("dispersion alpha must be positive")
    if c < 0 or int(c) != c:
        raise ValueError("truncation bound c must be a nonnegative integer")
    return _LN_HALF / _pow_gap(m_star, c, 1.0 / alpha)


def median_to_q(m_star, alpha, c):
    """Tail parameter q in (0, 1) implied by the shifted median."""
    return np.exp(log_q_from_median(m_star, alpha, c))


# ---------------------------------------------------------------------------
# truncated discrete Weibull
# ---------------------------------------------------------------------------


def _tdw_log_pmf(y, m_star, alpha, c, lq=None):
    rho = 1.0 / alpha
    if lq is None:
        lq = log_q_from_median(m_star, alpha, c)
    y = np.asarray(y, dtype=float)
    return lq * _pow_gap(y, c, rho) + _log1mexp(lq * _pow_step(y, rho))


def tdw_log_pmf(y, m_star, alpha, c):
    """Log mass of the truncated discrete Weibull at integer counts y >= c."""
    y = _validate_support(y, c)
    return _tdw_log_pmf(y, m_star, alpha, c)


def tdw_pmf(y, m_star, alpha, c):
    return np.exp(tdw_log_pmf(y, m_star, alpha, c))


def _tdw_log_sf(y, m_star, alpha, c, lq=None):
    """log P(Y > y); the cdf is -expm1 of this."""
    rho = 1.0 / alpha
    if lq is None:
        lq = log_q_from_median(m_star, alpha, c)
    y = np.asarray(y, dtype=float)
    return lq * _pow_gap(y + 1.0, c, rho)


def tdw_cdf(y, m_star, alpha, c):
    """P(Y <= y) = 1 - q**((y+1)**rho - c**rho) for integer y >= c."""
    y = _validate_support(y, c)
    return -np.expm1(_tdw_log_sf(y, m_star, alpha, c))


def _tdw_quantile_core(u, m_star, alpha, c, lq=None, saturate=False):
    """Smallest y >= c with cdf(y) >= u; accepts u in [0, 1).

    With ``saturate=True`` results clip to SUPPORT_CAP instead of raising;
    sampling paths use this because a draw past the cap (tail mass well under
    1e-4 in any realistic regime) is indistinguishable from "very large".
    """
    rho = 1.0 / alpha
    if lq is None:
        lq = log_q_from_median(m_star, alpha, c)
    u = np.asarray(u, dtype=float)

    def cdf_ge(y):
        return -np.expm1(_tdw_log_sf(y, m_star, alpha, c, lq=lq)) >= u

    t = float(c) ** rho + np.log1p(-u) / lq
    with np.errstate(over="ignore"):
        raw = np.power(t, alpha) - 1.0
    over_cap = ~np.isfinite(raw) | (raw > SUPPORT_CAP)
    if np.any(over_cap):
        if not saturate:
            raise RuntimeError(f"quantile exceeds the support scan cap of {SUPPORT_CAP}")
        raw = np.where(over_cap, SUPPORT_CAP, raw)
    y = np.maximum(np.ceil(raw), c).astype(np.int64)

    # the closed form is within a step or two of the answer except in extreme
    # tails, where t**alpha amplifies float error; quick +-1 passes first
    for _ in range(4):
        low = ~cdf_ge(y) & (y < SUPPORT_CAP)
        if not np.any(low):
            break
        y = y + low
    for _ in range(4):
        over = (y > c) & cdf_ge(np.maximum(y - 1, c))
        if not np.any(over):
            break
        y = y - over

    ok_hi = cdf_ge(y)
    if saturate:
        ok_hi = ok_hi | (y >= SUPPORT_CAP)
    ok_lo = (y == c) | ~cdf_ge(np.maximum(y - 1, c))
    if np.all(ok_hi & ok_lo):
        return y

    # fallback: gallop for an upper bracket, then lower-bound bisection
    hi = np.where(cdf_ge(y), y, np.minimum(y + 1, SUPPORT_CAP)).astype(np.int64)
    step = np.ones_like(hi)
    for _ in range(64):
        bad = ~cdf_ge(hi) & (hi < SUPPORT_CAP)
        if not np.any(bad):
            break
        hi = np.where(bad, np.minimum(hi + step, SUPPORT_CAP), hi)
        step = np.where(bad, step * 2, step)
    else:
        raise RuntimeError("quantile inversion failed to stabilize")
    if not saturate and np.any(~cdf_ge(hi)):
        raise RuntimeError(f"quantile exceeds the support scan cap of {SUPPORT_CAP}")
    lo = np.full_like(hi, c)
    while np.any(lo < hi):
        mid = (lo + hi) // 2
        ge = cdf_ge(mid)
        hi = np.where(ge, mid, hi)
        lo = np.where(ge, lo, mid + 1)
    return lo


def tdw_quantile(u, m_star, alpha, c):
    """Generalized inverse cdf: smallest integer y >= c with cdf(y) >= u."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("quantile level u must lie strictly inside (0, 1)")
    return _tdw_quantile_core(u, m_star, alpha, c)


def tdw_sample(m_star, alpha, c, size, rng):
    """Inverse-cdf draws; one uniform is consumed per variate.

    Draws saturate at SUPPORT_CAP rather than failing on astronomically
    deep tail hits.
    """
    return _tdw_quantile_core(rng.random(size), m_star, alpha, c, saturate=True)


def tdw_raw_moment(k, m_star, alpha, c, tol=1e-12, max_terms=MOMENT_TERM_CAP):
    """E[Y**k] for k in 1..4 via the telescoped tail series.

    ``E[Y**k] = (c-1)**k + sum_{m >= c} (m**k - (m-1)**k) * q**(m**rho - c**rho)``
    (the ``(c-1)**k`` offset vanishes for ``c = 0``, where the sum starts at 1).
    Terms are accumulated in blocks until the latest term falls below
    ``tol`` times the partial sum *and* an incomplete-gamma bound on the
    remaining tail is below the same relative threshold.
    """
    if k not in (1, 2, 3, 4):
        raise ValueError("raw moments are implemented for k in 1..4")
    if tol <= 0:
        raise ValueError("tol must be positive")
    rho = 1.0 / alpha
    lq = float(log_q_from_median(m_star, alpha, c))
    s = -lq
    c_rho = float(c) ** rho

    start = max(c, 1)
    base = float(c - 1) ** k if c >= 1 else 0.0
    total = 0.0
    block = 4096
    m0 = start
    while m0 <= start + max_terms:
        m = np.arange(m0, m0 + block, dtype=float)
        terms = (m**k - (m - 1.0) ** k) * np.exp(lq * (m**rho - c_rho))
        total += float(terms.sum())
        m0 += block
        last = float(terms[-1])
        if last <= tol * total:
            m_top = m0 - 1.0
            # tail bound valid once x**(k-1) * exp(-s x**rho) is decreasing
            if m_top**rho * s * rho > (k - 1):
                a = k / rho
                with np.errstate(divide="ignore"):
                    log_tail = (
                        math.log(k)
                        - math.log(rho)
                        - a * math.log(s)
                        + special.gammaln(a)
                        + np.log(special.gammaincc(a, s * m_top**rho))
                        + s * c_rho
                    )
                if log_tail <= math.log(tol * total):
                    return base + total
    raise RuntimeError(f"moment series did not converge within {max_terms} terms")


def tdw_kurtosis(m_star, alpha, c, tol=1e-12):
    """Pearson kurtosis E[(Y-mu)**4] / Var(Y)**2 from the raw-moment series."""
    m1, m2, m3, m4 = (tdw_raw_moment(k, m_star, alpha, c, tol=tol) for k in (1, 2, 3, 4))
    var = m2 - m1 * m1
    if var < 1e-12:
        raise ArithmeticError("variance is numerically degenerate")
    fourth = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1**4
    return fourth / (var * var)


# ---------------------------------------------------------------------------
# contaminated mixture
# ---------------------------------------------------------------------------


def _ctdw_log_pmf(y, m_star, alpha, eta, delta, c):
    narrow = _tdw_log_pmf(y, m_star, alpha, c)
    heavy = _tdw_log_pmf(y, m_star, eta * alpha, c)
    return np.logaddexp(math.log(delta) + narrow, math.log1p(-delta) + heavy)


def ctdw_log_pmf(y, m_star, alpha, eta, delta, c):
    """Log mass of the delta-weighted two-component mixture sharing (m_star, c)."""
    y = _validate_support(y, c)
    return _ctdw_log_pmf(y, m_star, alpha, eta, delta, c)


def ctdw_pmf(y, m_star, alpha, eta, delta, c):
    return np.exp(ctdw_log_pmf(y, m_star, alpha, eta, delta, c))


def _ctdw_cdf(y, m_star, alpha, eta, delta, c):
    y = np.asarray(y, dtype=float)
    f1 = -np.expm1(_tdw_log_sf(y, m_star, alpha, c))
    f2 = -np.expm1(_tdw_log_sf(y, m_star, eta * alpha, c))
    return delta * f1 + (1.0 - delta) * f2


def ctdw_cdf(y, m_star, alpha, eta, delta, c):
    """Mixture cdf delta*F_narrow + (1-delta)*F_heavy."""
    y = _validate_support(y, c)
    return _ctdw_cdf(y, m_star, alpha, eta, delta, c)


def _ctdw_quantile_core(u, m_star, alpha, eta, delta, c):
    u = np.asarray(u, dtype=float)
    q1 = _tdw_quantile_core(u, m_star, alpha, c)
    q2 = _tdw_quantile_core(u, m_star, eta * alpha, c)
    lo = np.minimum(q1, q2)
    hi = np.maximum(q1, q2)
    # mixture cdf is sandwiched between the component cdfs, so the answer
    # lies in [lo, hi]; bisect on integers
    while np.any(lo < hi):
        mid = (lo + hi) // 2
        ge = _ctdw_cdf(mid, m_star, alpha, eta, delta, c) >= u
        hi = np.where(ge, mid, hi)
        lo = np.where(ge, lo, mid + 1)
    return lo


def ctdw_quantile(u, m_star, alpha, eta, delta, c):
    """Smallest integer y >= c with mixture cdf >= u; preserves the median."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("quantile level u must lie strictly inside (0, 1)")
    return _ctdw_quantile_core(u, m_star, alpha, eta, delta, c)


def ctdw_sample(m_star, alpha, eta, delta, c, size, rng):
    """Component-indicator sampling: two uniforms are consumed per variate.

    Draws saturate at SUPPORT_CAP rather than failing on astronomically
    deep tail hits.
    """
    narrow = rng.random(size) < delta
    u = rng.random(size)
    y1 = _tdw_quantile_core(u, m_star, alpha, c, saturate=True)
    y2 = _tdw_quantile_core(u, m_star, eta * alpha, c, saturate=True)
    return np.where(narrow, y1, y2)


# ---------------------------------------------------------------------------
# truncated negative binomial benchmark
# ---------------------------------------------------------------------------


def _nb_log_pmf(y, mu, alpha_nb):
    y = np.asarray(y, dtype=float)
    log_p = np.log(alpha_nb) - np.log(alpha_nb + mu)     # log alpha/(alpha+mu)
    log_1mp = np.log(mu) - np.log(alpha_nb + mu)
    return (
        special.gammaln(y + alpha_nb)
        - special.gammaln(alpha_nb)
        - special.gammaln(y + 1.0)
        + alpha_nb * log_p
        + y * log_1mp
    )


def _nb_sf(y, mu, alpha_nb):
    """P(X > y) for the untruncated NB via the regularized incomplete beta."""
    y = np.asarray(y, dtype=float)
    return special.betainc(y + 1.0, alpha_nb, mu / (alpha_nb + mu))


def _nb_trunc_mass(mu, alpha_nb, c):
    """P(X >= c); raises if the renormalizer underflows to zero."""
    if c == 0:
        return np.asarray(1.0) if np.ndim(mu) == 0 else np.ones(np.shape(mu))
    mass = special.betainc(float(c), alpha_nb, mu / (alpha_nb + mu))
    if np.any(mass <= 0.0):
        raise ArithmeticError("truncation renormalizer 1 - F(c-1) underflowed")
    return mass


def _validate_tnb(mu, alpha_nb, c):
    if np.any(np.asarray(mu) <= 0):
        raise ValueError("mu must be positive")
    if alpha_nb <= 0:
        raise ValueError("alpha_nb must be positive")
    if c < 0 or int(c) != c:
        raise ValueError("truncation bound c must be a nonnegative integer")


def _tnb_log_pmf(y, mu, alpha_nb, c):
    return _nb_log_pmf(y, mu, alpha_nb) - np.log(_nb_trunc_mass(mu, alpha_nb, c))


def tnb_log_pmf(y, mu, alpha_nb, c):
    """Log mass of the NB renormalized to y >= c."""
    _validate_tnb(mu, alpha_nb, c)
    y = _validate_support(y, c)
    return _tnb_log_pmf(y, mu, alpha_nb, c)


def tnb_pmf(y, mu, alpha_nb, c):
    return np.exp(tnb_log_pmf(y, mu, alpha_nb, c))


def tnb_cdf(y, mu, alpha_nb, c):
    """(F(y) - F(c-1)) / (1 - F(c-1)), computed from survival ratios."""
    _validate_tnb(mu, alpha_nb, c)
    y = _validate_support(y, c)
    return 1.0 - _nb_sf(y, mu, alpha_nb) / _nb_trunc_mass(mu, alpha_nb, c)


def _tnb_quantile_core(u, mu, alpha_nb, c, saturate=False):
    u = np.asarray(u, dtype=float)
    mass = _nb_trunc_mass(mu, alpha_nb, c)
    p = alpha_nb / (alpha_nb + mu)
    # map the truncated level onto the untruncated cdf scale
    u_full = 1.0 - (1.0 - u) * mass
    y = np.asarray(stats.nbinom.ppf(u_full, alpha_nb, p))
    over_cap = ~np.isfinite(y) | (y > SUPPORT_CAP)
    if np.any(over_cap):
        if not saturate:
            raise RuntimeError(f"quantile exceeds the support scan cap of {SUPPORT_CAP}")
        y = np.where(over_cap, SUPPORT_CAP, y)
    y = np.maximum(y, c).astype(np.int64)
    for _ in range(64):
        low = (1.0 - _nb_sf(y, mu, alpha_nb) / mass) < u
        if not np.any(low):
            break
        y = y + low
    else:
        raise RuntimeError("quantile inversion failed to stabilize")
    for _ in range(64):
        over = (y > c) & ((1.0 - _nb_sf(y - 1, mu, alpha_nb) / mass) >= u)
        if not np.any(over):
            break
        y = y - over
    else:
        raise RuntimeError("quantile inversion failed to stabilize")
    return y


def tnb_quantile(u, mu, alpha_nb, c):
    """Smallest integer y >= c with truncated cdf >= u."""
    _validate_tnb(mu, alpha_nb, c)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("quantile level u must lie strictly inside (0, 1)")
    return _tnb_quantile_core(u, mu, alpha_nb, c)


def tnb_sample(mu, alpha_nb, c, size, rng):
    """Inverse-cdf draws; one uniform is consumed per variate."""
    _validate_tnb(mu, alpha_nb, c)
    return _tnb_quantile_core(rng.random(size), mu, alpha_nb, c, saturate=True)


def tnb_truncated_mean(mu, alpha_nb, c):
    """E[Y | Y >= c] = (mu - sum_{y<c} y P(y)) / P(X >= c).

    The lower-tail first moment uses the gamma-ratio expansion
    ``(alpha/(alpha+mu))**alpha * (mu/(alpha+mu)) *
    sum_{k=0}^{c-2} Gamma(k+alpha+1) / (Gamma(alpha) k!) * (mu/(alpha+mu))**k``
    evaluated in log space.
    """
    _validate_tnb(mu, alpha_nb, c)
    mass = float(_nb_trunc_mass(mu, alpha_nb, c))
    if c <= 1:
        # counts below c contribute nothing to the first moment
        return mu / mass
    k = np.arange(0, c - 1, dtype=float)
    log_ratio = np.log(mu) - np.log(alpha_nb + mu)
    log_terms = (
        special.gammaln(k + alpha_nb + 1.0)
        - special.gammaln(alpha_nb)
        - special.gammaln(k + 1.0)
        + k * log_ratio
    )
    log_lower = (
        special.logsumexp(log_terms)
        + alpha_nb * (np.log(alpha_nb) - np.log(alpha_nb + mu))
        + log_ratio
    )
    return (mu - math.exp(log_lower)) / mass


# ---------------------------------------------------------------------------
# parameter containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TDWParams:
    """Shifted median, dispersion, and truncation bound of a single TDW."""

    m_star: float
    alpha: float
    c: int = 0

    def __post_init__(self):
        if self.c < 0 or int(self.c) != self.c:
            raise ValueError("truncation bound c must be a nonnegative integer")
        if not self.alpha > 0:
            raise ValueError("dispersion alpha must be positive")
        if not self.m_star > self.c:
            raise ValueError("shifted median m_star must exceed c")
        q = float(median_to_q(self.m_star, self.alpha, self.c))
        if not 0.0 < q < 1.0:
            raise ValueError(f"implied tail parameter q={q} falls outside (0, 1)")

    @property
    def rho(self) -> float:
        return 1.0 / self.alpha

    @property
    def q(self) -> float:
        return float(median_to_q(self.m_star, self.alpha, self.c))

    @property
    def integer_median(self) -> int:
        return int(math.ceil(self.m_star - 1.0))

    def log_pmf(self, y):
        return tdw_log_pmf(y, self.m_star, self.alpha, self.c)

    def pmf(self, y):
        return tdw_pmf(y, self.m_star, self.alpha, self.c)

    def cdf(self, y):
        return tdw_cdf(y, self.m_star, self.alpha, self.c)

    def quantile(self, u):
        return tdw_quantile(u, self.m_star, self.alpha, self.c)

    def sample(self, size, rng):
        return tdw_sample(self.m_star, self.alpha, self.c, size, rng)

    def raw_moment(self, k, tol=1e-12):
        return tdw_raw_moment(k, self.m_star, self.alpha, self.c, tol=tol)

    def kurtosis(self, tol=1e-12):
        return tdw_kurtosis(self.m_star, self.alpha, self.c, tol=tol)


@dataclass(frozen=True)
class CTDWParams:
    """TDW base plus tail inflation eta > 1 and narrow-component weight delta.

    ``eta = 1`` collapses both components onto the same TDW and makes delta
    unidentifiable, so the constructor rejects it; tests that need the
    degenerate mixture go through :meth:`degenerate_for_tests`.
    """

    base: TDWParams
    eta: float
    delta: float
    delta_max: float = 1.0
    _allow_unit_eta: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 < self.delta_max <= 1.0:
            raise ValueError("delta_max must lie in (0, 1]")
        if not 0.0 < self.delta < self.delta_max:
            raise ValueError("delta must lie strictly inside (0, delta_max)")
        if self._allow_unit_eta:
            if not self.eta >= 1.0:
                raise ValueError("eta must be >= 1")
        elif not self.eta > 1.0:
            raise ValueError("tail inflation eta must be strictly greater than 1")

    @classmethod
    def degenerate_for_tests(cls, base, delta, delta_max=1.0):
        """Test-only constructor that bypasses the eta > 1 identifiability rule."""
        return cls(base=base, eta=1.0, delta=delta, delta_max=delta_max, _allow_unit_eta=True)

    @property
    def heavy(self) -> TDWParams:
        return TDWParams(self.base.m_star, self.eta * self.base.alpha, self.base.c)

    @property
    def integer_median(self) -> int:
        return self.base.integer_median

    def log_pmf(self, y):
        return ctdw_log_pmf(y, self.base.m_star, self.base.alpha, self.eta, self.delta, self.base.c)

    def pmf(self, y):
        return np.exp(self.log_pmf(y))

    def cdf(self, y):
        return ctdw_cdf(y, self.base.m_star, self.base.alpha, self.eta, self.delta, self.base.c)

    def quantile(self, u):
        return ctdw_quantile(u, self.base.m_star, self.base.alpha, self.eta, self.delta, self.base.c)

    def sample(self, size, rng):
        return ctdw_sample(
            self.base.m_star, self.base.alpha, self.eta, self.delta, self.base.c, size, rng
        )


@dataclass(frozen=True)
class TNBParams:
    """Untruncated-mean parameterization of the truncated negative binomial."""

    mu: float
    alpha_nb: float
    c: int = 0

    def __post_init__(self):
        _validate_tnb(self.mu, self.alpha_nb, self.c)

    def log_pmf(self, y):
        return tnb_log_pmf(y, self.mu, self.alpha_nb, self.c)

    def pmf(self, y):
        return tnb_pmf(y, self.mu, self.alpha_nb, self.c)

    def cdf(self, y):
        return tnb_cdf(y, self.mu, self.alpha_nb, self.c)

    def quantile(self, u):
        return tnb_quantile(u, self.mu, self.alpha_nb, self.c)

    def sample(self, size, rng):
        return tnb_sample(self.mu, self.alpha_nb, self.c, size, rng)

    def truncated_mean(self):
        return tnb_truncated_mean(self.mu, self.alpha_nb, self.c)
