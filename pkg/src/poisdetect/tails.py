"""Exact log-space Poisson tail probabilities and analytic envelopes.

Everything here works on the log scale so that survival probabilities far
into the tails (down to exp(-700) and below as log values) keep full relative
accuracy. Tail sums run over the dominant side of the distribution, summing
whichever of {0..x-1} or {x..} has fewer effective terms and complementing
when needed.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, ndtr

__all__ = [
    "log_pmf",
    "survival_upper",
    "survival_lower",
    "two_sided_tail",
    "two_sided_pvalue",
    "log_two_sided_pvalue",
    "one_sided_pvalue",
    "log_one_sided_pvalue",
    "pvalue_null_cdf",
    "support_cap",
    "support_tables",
    "pvalue_support",
    "h_rate",
    "chernoff_upper_tail_bounds",
    "chernoff_lower_tail_bounds",
    "bohman_lower_bound",
    "berry_esseen_gap",
]

# Truncation rule for support enumeration: extend until the omitted upper
# mass drops below SUPPORT_TAIL_MASS, never past mean + 50 sd + 50.
SUPPORT_TAIL_MASS = 1e-14

_LOG_TAIL_MASS = math.log(SUPPORT_TAIL_MASS)


def _check_mean(lam: float) -> float:
    lam = float(lam)
    if not (lam > 0.0) or not math.isfinite(lam):
        raise ValueError(f"Poisson mean must be positive and finite, got {lam!r}")
    return lam


def _check_count(x) -> int:
    if isinstance(x, (np.floating, float)):
        if not float(x).is_integer():
            raise ValueError(f"count must be integral, got {x!r}")
        x = int(x)
    else:
        x = int(x)
    return x


_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)


def _stirling_remainder(x: float) -> float:
    # lgamma(x+1) - ((x+0.5)log x - x + log(2 pi)/2); series good for x >= 32
    x2 = x * x
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * x2)) / x2) / x2) / x


def log_pmf(lam: float, x: int) -> float:
    """Log of P(X = x) for X ~ Poisson(lam): -lam + x*log(lam) - lgamma(x+1).

    For large counts the three terms nearly cancel, so the value is
    assembled from the large-deviation rate x*log(x/lam) - (x - lam) and a
    Stirling tail instead; relative error stays below 1e-13 either way.
    """
    lam = _check_mean(lam)
    x = _check_count(x)
    if x < 0:
        return -math.inf
    if x < 32:
        return -lam + x * math.log(lam) - float(gammaln(x + 1))
    rate = x * math.log1p((x - lam) / lam) - (x - lam)
    return -rate - 0.5 * math.log(x) - _HALF_LOG_TWO_PI - _stirling_remainder(x)


def _log_pmf_grid(lam: float, lo: int, hi: int) -> np.ndarray:
    ks = np.arange(lo, hi + 1, dtype=np.float64)
    return -lam + ks * math.log(lam) - gammaln(ks + 1.0)


def _logsumexp(terms: np.ndarray) -> float:
    m = np.max(terms)
    if m == -math.inf:
        return -math.inf
    # numpy's pairwise summation keeps the reduction error near eps even for
    # ~1e5 terms
    return float(m + np.log(np.sum(np.exp(terms - m))))


def _log1mexp(a: float) -> float:
    """log(1 - exp(a)) for a <= 0."""
    if a >= 0.0:
        return -math.inf
    if a > -math.log(2.0):
        return math.log(-math.expm1(a))
    return math.log1p(-math.exp(a))


def _upper_tail_extent(lam: float) -> int:
    # Far enough that the omitted geometric remainder is below 1e-300
    # relative to the included sum in every regime.
    return int(math.ceil(60.0 * math.sqrt(lam))) + 60


def _log_upper_sum(lam: float, x: int) -> float:
    """Direct log-space sum of P(X >= x) over {x..}; intended for x > lam."""
    hi = x + _upper_tail_extent(lam)
    return _logsumexp(_log_pmf_grid(lam, x, hi))


def _log_lower_sum(lam: float, x: int) -> float:
    """Direct log-space sum of P(X <= x) over {0..x}; intended for x < lam."""
    if x < 0:
        return -math.inf
    return _logsumexp(_log_pmf_grid(lam, 0, x))


def survival_upper(lam: float, x: int) -> float:
    """log P(X >= x) for X ~ Poisson(lam), exact in log space.

    Sums the upper tail directly when x > lam; otherwise sums the (smaller)
    lower tail {0..x-1} and complements.
    """
    lam = _check_mean(lam)
    x = _check_count(x)
    if x <= 0:
        return 0.0
    if x > lam:
        return _log_upper_sum(lam, x)
    return _log1mexp(_log_lower_sum(lam, x - 1))


def survival_lower(lam: float, x: int) -> float:
    """log P(X <= x) for X ~ Poisson(lam), exact in log space."""
    lam = _check_mean(lam)
    x = _check_count(x)
    if x < 0:
        return -math.inf
    if x < lam:
        return _log_lower_sum(lam, x)
    return _log1mexp(_log_upper_sum(lam, x + 1))


def two_sided_tail(lam: float, z: float) -> float:
    """P(|X - lam| / sqrt(lam) > z), with strict inequality on both sides."""
    lam = _check_mean(lam)
    z = float(z)
    if z < 0:
        raise ValueError("z must be nonnegative")
    root = math.sqrt(lam)
    # X > lam + z*sqrt(lam)  <=>  X >= floor(.)+1 for integer X
    hi = math.floor(lam + z * root) + 1
    up = survival_upper(lam, hi)
    # X < lam - z*sqrt(lam)  <=>  X <= ceil(.)-1
    lo_thr = math.ceil(lam - z * root) - 1
    lo = survival_lower(lam, lo_thr)
    return min(math.exp(np.logaddexp(up, lo)), 1.0)


def _two_sided_thresholds(lam: float, x: int) -> tuple[int, int]:
    # Event |X - lam| >= |x - lam| as {X >= hi} u {X <= lo}. The mirror
    # point 2*lam - x is exact in floating point whenever it is an integer
    # (2*lam is exact, and subtracting the integer x is exactly rounded).
    if x >= lam:
        return x, math.floor(2.0 * lam - x)
    return math.ceil(2.0 * lam - x), x


def log_two_sided_pvalue(lam: float, x: int) -> float:
    """log of G(x) = P(|X - lam| >= |x - lam|), non-strict inequality."""
    lam = _check_mean(lam)
    x = _check_count(x)
    if x < 0:
        raise ValueError("count must be nonnegative")
    if x == lam:
        return 0.0
    hi, lo = _two_sided_thresholds(lam, x)
    up = survival_upper(lam, hi)
    low = survival_lower(lam, lo)
    return min(float(np.logaddexp(up, low)), 0.0)


def two_sided_pvalue(lam: float, x: int) -> float:
    """Exact two-sided P-value G(x) = P(|X - lam| >= |x - lam|)."""
    return math.exp(log_two_sided_pvalue(lam, x))


def log_one_sided_pvalue(lam: float, x: int) -> float:
    """log of the one-sided P-value P(X >= x)."""
    lam = _check_mean(lam)
    x = _check_count(x)
    if x < 0:
        raise ValueError("count must be nonnegative")
    return survival_upper(lam, x)


def one_sided_pvalue(lam: float, x: int) -> float:
    """One-sided P-value P(X >= x)."""
    return math.exp(log_one_sided_pvalue(lam, x))


def support_tables(lam: float) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    """(cap, log_pmf, log_cdf, log_sf) arrays over the truncated support.

    The support {0..cap} extends until the omitted upper mass is below
    1e-14, with a hard cap at lam + 50*sqrt(lam) + 50.
    """
    lam = _check_mean(lam)
    hard = int(math.ceil(lam + 50.0 * math.sqrt(lam) + 50.0))
    logpmf = _log_pmf_grid(lam, 0, hard)
    logsf = np.logaddexp.accumulate(logpmf[::-1])[::-1]
    # smallest cap whose omitted tail P(X > cap) is already negligible
    beyond = np.flatnonzero(logsf < _LOG_TAIL_MASS)
    cap = max(int(beyond[0]) - 1, 0) if beyond.size else hard
    logpmf = logpmf[: cap + 1]
    logsf = logsf[: cap + 1]
    logcdf = np.logaddexp.accumulate(logpmf)
    return cap, logpmf, logcdf, logsf


def support_cap(lam: float) -> int:
    """Largest count kept when enumerating the support of Poisson(lam)."""
    return support_tables(lam)[0]


def pvalue_support(lam: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Attainable two-sided P-values over the truncated support.

    Returns (counts, log_pvalues, log_pmf) over {0..cap} with the cap from
    support_cap. Used for exact null CDFs of the P-value and for table-driven
    detector evaluation.
    """
    lam = _check_mean(lam)
    cap, logpmf, logcdf, logsf = support_tables(lam)
    xs = np.arange(cap + 1)
    above = xs >= lam
    hi = np.where(above, xs, np.ceil(2.0 * lam - xs)).astype(np.int64)
    lo = np.where(above, np.floor(2.0 * lam - xs), xs).astype(np.int64)
    up_part = np.where(hi <= cap, logsf[np.clip(hi, 0, cap)], -np.inf)
    low_part = np.where(lo >= 0, logcdf[np.clip(lo, 0, cap)], -np.inf)
    logg = np.logaddexp(up_part, low_part)
    logg = np.minimum(logg, 0.0)
    logg[xs == lam] = 0.0
    return xs, logg, logpmf


def pvalue_null_cdf(lam: float, t: float) -> float:
    """F(t) = P(G(X) <= t) under the null, by exact support enumeration.

    G is the two-sided P-value; F is a right-continuous step function and is
    super-uniform: F(t) <= t for every t.
    """
    lam = _check_mean(lam)
    t = float(t)
    if not (0.0 <= t <= 1.0):
        raise ValueError("t must lie in [0, 1]")
    if t == 0.0:
        return 0.0
    xs, logg, logpmf = pvalue_support(lam)
    mask = np.exp(logg) <= t
    if not mask.any():
        return 0.0
    return min(math.exp(_logsumexp(logpmf[mask])), 1.0)


def h_rate(x: float) -> float:
    """Large-deviation rate h(x) = x log x - x + 1, with h(0) = 1."""
    x = float(x)
    if x < 0:
        raise ValueError("h_rate is defined for x >= 0")
    if x == 0.0:
        return 1.0
    return x * math.log(x) - x + 1.0


def chernoff_upper_tail_bounds(lam: float, x: float) -> tuple[float, float]:
    """Bounds on log P(X >= x) for x >= lam.

    Returns (lower, upper) with
      lower = -lam*h(ceil(x)/lam) - 0.5*log(ceil(x)) - 1,
      upper = -lam*h(x/lam).
    """
    lam = _check_mean(lam)
    x = float(x)
    if x < lam:
        raise ValueError("upper-tail form needs x >= lam")
    m = math.ceil(x)
    upper = -lam * h_rate(x / lam)
    lower = -lam * h_rate(m / lam) - 0.5 * math.log(m) - 1.0
    return lower, upper


def chernoff_lower_tail_bounds(lam: float, x: float) -> tuple[float, float]:
    """Bounds on log P(X <= x) for 0 <= x <= lam, mirroring the upper form."""
    lam = _check_mean(lam)
    x = float(x)
    if x < 0 or x > lam:
        raise ValueError("lower-tail form needs 0 <= x <= lam")
    m = math.floor(x)
    upper = -lam * h_rate(x / lam)
    if m == 0:
        # the floor(x)=0 display degenerates (log 0); P(X <= 0) = pmf(0)
        lower = -lam
    else:
        lower = -lam * h_rate(m / lam) - 0.5 * math.log(m) - 1.0
    return lower, upper


def bohman_lower_bound(lam: float, x: int) -> float:
    """Normal lower bound on P(X >= x): Phi-bar((x - lam)/sqrt(lam))."""
    lam = _check_mean(lam)
    x = _check_count(x)
    return float(ndtr(-(x - lam) / math.sqrt(lam)))


def berry_esseen_gap(lam: float) -> float:
    """sup_z |P((X - lam)/sqrt(lam) <= z) - Phi(z)|, exact over the support.

    The supremum is attained at the CDF jump points; both one-sided limits at
    each jump are checked.
    """
    lam = _check_mean(lam)
    cap, _, logcdf, _ = support_tables(lam)
    cdf = np.exp(logcdf)
    xs = np.arange(cap + 1)
    phi = ndtr((xs - lam) / math.sqrt(lam))
    right = np.abs(cdf - phi)
    left = np.abs(np.concatenate(([0.0], cdf[:-1])) - phi)
    return float(max(right.max(), left.max()))
