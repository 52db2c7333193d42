"""Detection statistics for independent Poisson counts with known baseline means.

All detectors reject for large values of their statistic. Threshold-scan
detectors whose admissible threshold set comes out empty return -inf as a
sentinel instead of raising, so that Monte Carlo loops over small n keep
running; the sentinel is recorded in the result diagnostics.

Heavy per-sample work (P-values, tail probabilities at scan thresholds) runs
off precomputed per-mean tables shared across samples, deduplicated over the
distinct means in the vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .tails import (
    log_one_sided_pvalue,
    log_two_sided_pvalue,
    pvalue_support,
    support_tables,
)

__all__ = [
    "DetectorResult",
    "NullTables",
    "PvalDist",
    "chi_squared",
    "g2_statistic",
    "freeman_tukey",
    "max_abs_z",
    "max_z",
    "one_sided_sum",
    "tukey_hc",
    "bonferroni",
    "fisher",
    "higher_criticism_z",
    "higher_criticism_pval",
    "one_sided_hc",
    "oracle_lrt_statistic",
    "DETECTOR_NAMES",
    "detector_info",
    "make_detector",
    "Detector",
]

SENTINEL = float("-inf")


def _check_lambdas(lambdas) -> np.ndarray:
    lam = np.asarray(lambdas, dtype=np.float64)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("means must form a nonempty 1-D array")
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
        raise ValueError("means must be positive and finite")
    return lam


def _check_counts(counts, n: int) -> np.ndarray:
    x = np.asarray(counts)
    if x.ndim != 1 or x.size != n:
        raise ValueError(f"counts must be a 1-D array of length {n}")
    if np.issubdtype(x.dtype, np.floating):
        if not np.all(np.isfinite(x)) or np.any(x != np.floor(x)):
            raise ValueError("counts must be integral")
        x = x.astype(np.int64)
    elif not np.issubdtype(x.dtype, np.integer):
        raise ValueError("counts must be integers")
    else:
        x = x.astype(np.int64)
    if np.any(x < 0):
        raise ValueError("counts must be nonnegative")
    return x


@dataclass(frozen=True)
class DetectorResult:
    """A single detector evaluation: the statistic plus optional diagnostics."""

    kind: str
    statistic: float
    diagnostics: Optional[dict] = None

    @property
    def is_sentinel(self) -> bool:
        return self.statistic == SENTINEL


# ---------------------------------------------------------------------------
# closed-form statistics


def chi_squared(lambdas, counts) -> float:
    """Sum of (X_i - lam_i)^2 / lam_i."""
    lam = _check_lambdas(lambdas)
    x = _check_counts(counts, lam.size)
    return float(np.sum((x - lam) ** 2 / lam))


def g2_statistic(lambdas, counts) -> float:
    """Likelihood-ratio chi-squared 2 * sum X_i log(X_i / lam_i), 0 log 0 = 0.

    Not monotone in a downward count excursion: the per-term contribution is
    minimized at X_i = lam_i / e, so only upward shifts of a count are
    guaranteed not to decrease the statistic.
    """
    lam = _check_lambdas(lambdas)
    x = _check_counts(counts, lam.size)
    pos = x > 0
    total = 2.0 * np.sum(x[pos] * np.log(x[pos] / lam[pos]))
    return float(total)


def freeman_tukey(lambdas, counts) -> float:
    """4 * sum (sqrt(X_i) - sqrt(lam_i))^2."""
    lam = _check_lambdas(lambdas)
    x = _check_counts(counts, lam.size)
    return float(4.0 * np.sum((np.sqrt(x) - np.sqrt(lam)) ** 2))


def max_abs_z(lambdas, counts) -> float:
    """max_i |X_i - lam_i| / sqrt(lam_i)."""
    lam = _check_lambdas(lambdas)
    x = _check_counts(counts, lam.size)
    return float(np.max(np.abs(x - lam) / np.sqrt(lam)))


def max_z(lambdas, counts) -> float:
    """max_i (X_i - lam_i) / sqrt(lam_i), signed; sensitive to upward shifts only."""
    lam = _check_lambdas(lambdas)
    x = _check_counts(counts, lam.size)
    return float(np.max((x - lam) / np.sqrt(lam)))


def one_sided_sum(lambdas, counts) -> float:
    """sum_i (X_i - lam_i) / sqrt(lam_i); divided by sqrt(n) it is asymptotically N(0,1)."""
    lam = _check_lambdas(lambdas)
    x = _check_counts(counts, lam.size)
    return float(np.sum((x - lam) / np.sqrt(lam)))


def tukey_hc(pvalues) -> float:
    """Tukey's higher criticism over the smallest half of the P-values.

    T = max over i <= n/2 of sqrt(n) * (i/n - p_(i)) / sqrt(p_(i) (1 - p_(i))),
    skipping order statistics equal to 1 (degenerate denominator). Returns
    -inf when every admissible order statistic is 1.
    """
    p = np.asarray(pvalues, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("p-values must form a nonempty 1-D array")
    if np.any(p <= 0.0) or np.any(p > 1.0):
        raise ValueError("p-values must lie in (0, 1]")
    n = p.size
    m = n // 2
    ps = np.sort(p)[:m]
    ii = np.arange(1, m + 1, dtype=np.float64)
    keep = ps < 1.0
    if not keep.any():
        return SENTINEL
    ps = ps[keep]
    ii = ii[keep]
    vals = math.sqrt(n) * (ii / n - ps) / np.sqrt(ps * (1.0 - ps))
    return float(vals.max())


# ---------------------------------------------------------------------------
# per-mean null tables


class NullTables:
    """Exact per-mean null tables shared across Monte Carlo evaluations.

    Holds log pmf/cdf/sf and two-sided log P-value rows for every distinct
    mean in the vector, padded to a common support cap. Counts beyond a row's
    cap (null probability below 1e-14) fall back to direct tail evaluation.
    """

    def __init__(self, lambdas):
        lam = _check_lambdas(lambdas)
        self.lambdas = lam.copy()
        self.lambdas.flags.writeable = False
        self.n = lam.size
        uniq, inverse, mult = np.unique(lam, return_inverse=True, return_counts=True)
        self.uniq = uniq
        self.inverse = inverse
        self.mult = mult.astype(np.float64)
        caps = []
        pmf_rows, cdf_rows, sf_rows, g_rows = [], [], [], []
        for lam_j in uniq:
            cap, logpmf, logcdf, logsf = support_tables(float(lam_j))
            _, logg, _ = pvalue_support(float(lam_j))
            caps.append(cap)
            pmf_rows.append(logpmf)
            cdf_rows.append(logcdf)
            sf_rows.append(logsf)
            g_rows.append(logg)
        self.caps = np.asarray(caps, dtype=np.int64)
        width = int(self.caps.max()) + 1
        m = uniq.size

        def padded(rows, fill):
            out = np.full((m, width), fill, dtype=np.float64)
            for j, row in enumerate(rows):
                out[j, : row.size] = row
            return out

        self.log_pmf = padded(pmf_rows, -np.inf)
        self.log_cdf = padded(cdf_rows, 0.0)
        self.log_sf = padded(sf_rows, -np.inf)
        self.log_g = padded(g_rows, -np.inf)
        self._pval_dists: dict[str, PvalDist] = {}

    def log_pvalues(self, counts, sided: str = "two-sided") -> np.ndarray:
        """Per-coordinate log P-values, exact, via table lookup."""
        x = _check_counts(counts, self.n)
        caps = self.caps[self.inverse]
        inside = x <= caps
        xin = np.minimum(x, caps)
        if sided == "two-sided":
            out = self.log_g[self.inverse, xin]
            direct = log_two_sided_pvalue
        elif sided == "one-sided":
            out = self.log_sf[self.inverse, xin]
            direct = log_one_sided_pvalue
        else:
            raise ValueError(f"unknown sidedness {sided!r}")
        if not inside.all():
            out = out.copy()
            for i in np.flatnonzero(~inside):
                out[i] = direct(self.lambdas[i], int(x[i]))
        return out

    def two_sided_exceed(self, z: float) -> np.ndarray:
        """Per-distinct-mean K(z) = P(|X - lam| / sqrt(lam) > z), strict."""
        if z < 0:
            raise ValueError("z must be nonnegative")
        root = np.sqrt(self.uniq)
        hi = np.floor(self.uniq + z * root).astype(np.int64) + 1
        lo = np.ceil(self.uniq - z * root).astype(np.int64) - 1
        up = np.where(
            hi <= self.caps, self.log_sf[np.arange(self.uniq.size), np.minimum(hi, self.caps)], -np.inf
        )
        down = np.where(
            lo >= 0, self.log_cdf[np.arange(self.uniq.size), np.maximum(lo, 0)], -np.inf
        )
        return np.exp(np.logaddexp(up, down))

    def one_sided_exceed_rows(self) -> np.ndarray:
        """G_j(x) = P(X_j >= x) for every distinct mean j over the padded support."""
        return np.exp(self.log_sf)

    def pval_dist(self, sided: str = "two-sided") -> "PvalDist":
        """Pooled exact distribution of the per-coordinate P-values (cached)."""
        if sided not in self._pval_dists:
            groups = []
            for j in range(self.uniq.size):
                cap = int(self.caps[j])
                if sided == "two-sided":
                    logp = self.log_g[j, : cap + 1]
                elif sided == "one-sided":
                    logp = self.log_sf[j, : cap + 1]
                else:
                    raise ValueError(f"unknown sidedness {sided!r}")
                mass = np.exp(self.log_pmf[j, : cap + 1])
                vals = np.exp(logp)
                groups.append(_pooled_group(vals, mass, self.mult[j]))
            self._pval_dists[sided] = _build_pval_dist(groups, self.n)
        return self._pval_dists[sided]


def _pooled_group(vals: np.ndarray, mass: np.ndarray, mult: float):
    """Collapse one support into (distinct p-values ascending, cdf, multiplicity)."""
    order = np.argsort(vals, kind="stable")
    vs = vals[order]
    ws = mass[order]
    starts = np.concatenate(([True], vs[1:] != vs[:-1]))
    uniq_vals = vs[starts]
    summed = np.add.reduceat(ws, np.flatnonzero(starts))
    return uniq_vals, np.cumsum(summed), mult


@dataclass(frozen=True)
class PvalDist:
    """Pooled null distribution of per-coordinate P-values.

    values holds every attainable P-value across coordinates in ascending
    order; sum_cdf and sum_cdf_sq hold sum_i F_i and sum_i F_i^2 at those
    values. The admissible threshold window [lo, hi) keeps thresholds t with
    1/n <= F_i(t) <= 1/2 for every coordinate; candidates() returns the
    attainable values inside it.
    """

    values: np.ndarray
    sum_cdf: np.ndarray
    sum_cdf_sq: np.ndarray
    lo: float
    hi: float
    start: int
    stop: int
    n: int

    @property
    def is_empty(self) -> bool:
        return self.stop <= self.start

    def candidates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        sl = slice(self.start, self.stop)
        return self.values[sl], self.sum_cdf[sl], self.sum_cdf_sq[sl]


def _build_pval_dist(groups, n: int) -> PvalDist:
    los, his = [], []
    vs, df, df2 = [], [], []
    for vals, cdf, mult in groups:
        i_lo = int(np.searchsorted(cdf, 1.0 / n, side="left"))
        los.append(vals[min(i_lo, vals.size - 1)])
        i_hi = int(np.searchsorted(cdf, 0.5, side="right"))
        his.append(vals[i_hi] if i_hi < vals.size else np.inf)
        prev = np.concatenate(([0.0], cdf[:-1]))
        vs.append(vals)
        df.append(mult * (cdf - prev))
        df2.append(mult * (cdf**2 - prev**2))
    lo = max(los)
    hi = min(his)
    values = np.concatenate(vs)
    order = np.argsort(values, kind="stable")
    values = values[order]
    cum = np.cumsum(np.concatenate(df)[order])
    cum2 = np.cumsum(np.concatenate(df2)[order])
    last = np.concatenate((values[1:] != values[:-1], [True]))
    values = values[last]
    cum = cum[last]
    cum2 = cum2[last]
    start = int(np.searchsorted(values, lo, side="left"))
    stop = int(np.searchsorted(values, hi, side="left"))
    return PvalDist(values, cum, cum2, float(lo), float(hi), start, stop, n)


def simulated_pval_dist(
    tables: NullTables, sided: str, reps: int, stream
) -> PvalDist:
    """Estimate the per-coordinate P-value CDFs from null draws.

    Replaces the exact F_i in the pooled threshold machinery with empirical
    CDFs from `reps` null samples per coordinate, drawn from `stream`.
    """
    from .rng import poisson

    if reps < 2:
        raise ValueError("need at least 2 simulation reps")
    draws = np.empty((reps, tables.n), dtype=np.int64)
    for r in range(reps):
        draws[r] = poisson(tables.lambdas, stream)
    groups = []
    for i in range(tables.n):
        logp = tables.log_pvalues(draws[:, i], sided)
        vals, counts = np.unique(np.exp(logp), return_counts=True)
        groups.append((vals, np.cumsum(counts) / reps, 1.0))
    return _build_pval_dist(groups, tables.n)


# ---------------------------------------------------------------------------
# threshold-scan detectors


def bonferroni(lambdas, counts, sided: str = "two-sided", tables: Optional[NullTables] = None) -> float:
    """Minimum-P-value statistic on the -log scale: max_i -log p_i."""
    tables = tables if tables is not None else NullTables(lambdas)
    logp = tables.log_pvalues(counts, sided)
    return float(-logp.min())


def fisher(lambdas, counts, sided: str = "two-sided", tables: Optional[NullTables] = None) -> float:
    """Fisher combination -2 * sum_i log p_i."""
    tables = tables if tables is not None else NullTables(lambdas)
    logp = tables.log_pvalues(counts, sided)
    return float(-2.0 * logp.sum())


def higher_criticism_z(lambdas, counts, tables: Optional[NullTables] = None) -> DetectorResult:
    """Higher criticism over integer standardized-exceedance thresholds.

    Scans z = 0, 1, 2, ... and keeps thresholds whose exceedance-count
    variance sum_i K_i(z)(1 - K_i(z)) is at least log n; the scan stops once
    sum_i K_i(z) falls below log n, which bounds every later variance. The
    statistic is the maximal standardized exceedance count over the kept set,
    -inf if the set is empty.
    """
    tables = tables if tables is not None else NullTables(lambdas)
    n = tables.n
    if n < 2:
        raise ValueError("higher criticism needs n >= 2")
    x = _check_counts(counts, n)
    logn = math.log(n)
    absz = np.sort(np.abs(x - tables.lambdas) / np.sqrt(tables.lambdas))
    best = SENTINEL
    best_z = None
    kept = 0
    z = 0
    while True:
        k = tables.two_sided_exceed(float(z))
        total = float(np.dot(tables.mult, k))
        if total < logn:
            break
        var = float(np.dot(tables.mult, k * (1.0 - k)))
        if var >= logn:
            kept += 1
            exceed = n - int(np.searchsorted(absz, z, side="right"))
            stat = (exceed - total) / math.sqrt(var)
            if stat > best:
                best = stat
                best_z = z
        z += 1
    diag = {"thresholds": kept}
    if best_z is not None:
        diag["threshold"] = best_z
    else:
        diag["empty_threshold_set"] = True
    return DetectorResult("hc-z", best, diag)


def higher_criticism_pval(
    lambdas,
    counts,
    sided: str = "two-sided",
    tables: Optional[NullTables] = None,
    dist: Optional[PvalDist] = None,
) -> DetectorResult:
    """Higher criticism over attainable P-value thresholds.

    Thresholds are the attainable P-values t with 1/n <= F_i(t) <= 1/2 for
    all i, where F_i is the null CDF of coordinate i's P-value. The statistic
    standardizes #{p_i <= t} by its exact null mean and variance. Returns the
    -inf sentinel when the threshold window contains no attainable value.
    """
    tables = tables if tables is not None else NullTables(lambdas)
    if tables.n < 2:
        raise ValueError("higher criticism needs n >= 2")
    if dist is None:
        dist = tables.pval_dist(sided)
    if dist.is_empty:
        return DetectorResult("hc-p", SENTINEL, {"empty_threshold_set": True})
    p = np.sort(np.exp(tables.log_pvalues(counts, sided)))
    ts, sum_f, sum_f2 = dist.candidates()
    hits = np.searchsorted(p, ts, side="right").astype(np.float64)
    stats = (hits - sum_f) / np.sqrt(sum_f - sum_f2)
    k = int(np.argmax(stats))
    return DetectorResult(
        "hc-p",
        float(stats[k]),
        {"threshold": float(ts[k]), "thresholds": int(ts.size)},
    )


def one_sided_hc(lambdas, counts, tables: Optional[NullTables] = None) -> DetectorResult:
    """Higher criticism over one-sided count thresholds.

    For integer thresholds x, compares #{X_i >= x} with its null mean
    sum_i G_i(x), standardized by sqrt(sum_i G_i(x)(1 - G_i(x))), over the
    x whose variance reaches log n.
    """
    tables = tables if tables is not None else NullTables(lambdas)
    n = tables.n
    if n < 2:
        raise ValueError("higher criticism needs n >= 2")
    x = _check_counts(counts, n)
    logn = math.log(n)
    g = tables.one_sided_exceed_rows()
    sum_g = tables.mult @ g
    var = tables.mult @ (g * (1.0 - g))
    member = var >= logn
    if not member.any():
        return DetectorResult("hc1", SENTINEL, {"empty_threshold_set": True})
    xs = np.flatnonzero(member)
    sorted_counts = np.sort(x)
    hits = n - np.searchsorted(sorted_counts, xs, side="left")
    stats = (hits - sum_g[xs]) / np.sqrt(var[xs])
    k = int(np.argmax(stats))
    return DetectorResult(
        "hc1",
        float(stats[k]),
        {"threshold": int(xs[k]), "thresholds": int(xs.size)},
    )


def oracle_lrt_statistic(spec, counts) -> float:
    """Log likelihood ratio of the specified mixture against the null."""
    from .model import oracle_lrt

    return oracle_lrt(spec, counts)


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class DetectorInfo:
    """Static per-detector declaration used by the harness and CLI."""

    name: str
    sided: str
    needs_null_cdf: bool
    needs_alternative: bool = False
    description: str = ""


_REGISTRY = {
    info.name: info
    for info in [
        DetectorInfo("chi2", "two-sided", False, description="Pearson chi-squared sum"),
        DetectorInfo("g2", "two-sided", False, description="likelihood-ratio chi-squared sum"),
        DetectorInfo("ft", "two-sided", False, description="Freeman-Tukey variance-stabilized sum"),
        DetectorInfo("max", "two-sided", False, description="maximal absolute standardized count"),
        DetectorInfo("max1", "one-sided", False, description="maximal signed standardized count"),
        DetectorInfo("sum1", "one-sided", False, description="sum of standardized counts"),
        DetectorInfo("bonferroni", "two-sided", False, description="minimum exact P-value"),
        DetectorInfo("fisher", "two-sided", False, description="Fisher P-value combination"),
        DetectorInfo("hc-z", "two-sided", True, description="higher criticism over standardized exceedances"),
        DetectorInfo("hc-p", "two-sided", True, description="higher criticism over attainable P-values"),
        DetectorInfo("hc-tukey", "two-sided", False, description="Tukey higher criticism on exact P-values"),
        DetectorInfo("hc1", "one-sided", True, description="one-sided threshold higher criticism"),
        DetectorInfo("lrt", "two-sided", False, True, description="oracle likelihood ratio for a known alternative"),
    ]
}

DETECTOR_NAMES = tuple(_REGISTRY)


def detector_info(kind: str) -> DetectorInfo:
    try:
        return _REGISTRY[kind]
    except KeyError:
        raise ValueError(
            f"unknown detector {kind!r}; known: {', '.join(DETECTOR_NAMES)}"
        ) from None


@dataclass
class Detector:
    """A detector bound to a fixed mean vector (and alternative, if needed)."""

    kind: str
    _fn: Callable[[np.ndarray], DetectorResult] = field(repr=False)

    def evaluate(self, counts) -> DetectorResult:
        return self._fn(counts)


def make_detector(
    kind: str,
    spec,
    tables: Optional[NullTables] = None,
    hc_dist: Optional[PvalDist] = None,
) -> Detector:
    """Bind a detector by name to a model's mean vector.

    `spec` must expose .lambdas and .sidedness; the oracle likelihood ratio
    additionally needs a positive signal fraction on the spec. Passing a
    prebuilt NullTables avoids recomputing tables across detectors. hc_dist
    substitutes a P-value null distribution (e.g. simulation-estimated) for
    the exact one; only the attainable-P-value scan uses it.
    """
    info = detector_info(kind)
    lam = spec.lambdas
    if tables is None:
        tables = NullTables(lam)

    def plain(fn):
        return lambda counts: DetectorResult(kind, fn(lam, counts))

    if kind == "chi2":
        fn = plain(chi_squared)
    elif kind == "g2":
        fn = plain(g2_statistic)
    elif kind == "ft":
        fn = plain(freeman_tukey)
    elif kind == "max":
        fn = plain(max_abs_z)
    elif kind == "max1":
        fn = plain(max_z)
    elif kind == "sum1":
        fn = plain(one_sided_sum)
    elif kind == "bonferroni":
        fn = lambda counts: DetectorResult(
            kind, bonferroni(lam, counts, info.sided, tables)
        )
    elif kind == "fisher":
        fn = lambda counts: DetectorResult(kind, fisher(lam, counts, info.sided, tables))
    elif kind == "hc-z":
        fn = lambda counts: higher_criticism_z(lam, counts, tables)
    elif kind == "hc-p":
        dist = hc_dist if hc_dist is not None else tables.pval_dist(info.sided)
        fn = lambda counts: higher_criticism_pval(lam, counts, info.sided, tables, dist)
    elif kind == "hc-tukey":
        fn = lambda counts: DetectorResult(
            kind, tukey_hc(np.exp(tables.log_pvalues(counts, info.sided)))
        )
    elif kind == "hc1":
        fn = lambda counts: one_sided_hc(lam, counts, tables)
    elif kind == "lrt":
        if getattr(spec, "epsilon", 0.0) <= 0.0:
            raise ValueError(
                "the oracle likelihood ratio needs an alternative with a "
                "positive signal fraction"
            )
        fn = lambda counts: DetectorResult(kind, oracle_lrt_statistic(spec, counts))
    else:  # pragma: no cover - registry and dispatch kept in sync
        raise AssertionError(kind)
    return Detector(kind, fn)
