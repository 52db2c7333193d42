"""Sparse Poisson mixture alternatives and sampling.

Null: X_i ~ Poisson(lambda_i) independently. Alternative: each coordinate is
independently replaced, with probability eps, by an elevated mean lambda_i +
delta_i or (two-sided case, with probability eps/2 each) by the clamped
lowered mean max(0, lambda_i - delta_i). The sparsity level is eps = n^-beta
and delta follows one of the bundled parameterizations (dense, sparse,
small-means) or an explicit vector.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
from scipy.special import gammaln

from .rng import RngStream, poisson

__all__ = [
    "DenseSignal",
    "SparseSignal",
    "SmallMeansSignal",
    "ExplicitSignal",
    "Regime",
    "Sidedness",
    "ModelSpec",
    "Sample",
    "build_spec",
    "regime_from_json",
    "constant_means",
    "shifted_exponential_means",
    "sample",
    "oracle_lrt",
]

Sidedness = Literal["two-sided", "one-sided"]

# Stream id offset for mean-vector generation; keeps mean draws disjoint
# from every sampling stream used by the harness.
MEANS_STREAM_ID = 3 << 48


@dataclass(frozen=True)
class DenseSignal:
    """Per-coordinate shift delta_i = n^s * sqrt(lambda_i)."""

    s: float

    kind = "s"

    def deltas(self, n: int, lambdas: np.ndarray) -> np.ndarray:
        return float(n) ** self.s * np.sqrt(lambdas)

    @property
    def value(self) -> float:
        return self.s


@dataclass(frozen=True)
class SparseSignal:
    """Per-coordinate shift delta_i = sqrt(2 r log n) * sqrt(lambda_i)."""

    r: float

    kind = "r"

    def __post_init__(self):
        if not (0.0 < self.r):
            raise ValueError("r must be positive")

    def deltas(self, n: int, lambdas: np.ndarray) -> np.ndarray:
        return math.sqrt(2.0 * self.r * math.log(n)) * np.sqrt(lambdas)

    @property
    def value(self) -> float:
        return self.r


@dataclass(frozen=True)
class SmallMeansSignal:
    """Elevated mean lambda_i^(1-gamma) * (log n)^gamma, lowered mean 0."""

    gamma: float

    kind = "gamma"

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must lie in (0, 1)")

    @property
    def value(self) -> float:
        return self.gamma


@dataclass(frozen=True)
class ExplicitSignal:
    """Explicit per-coordinate shift vector."""

    delta: np.ndarray

    kind = "delta"

    def __post_init__(self):
        d = np.asarray(self.delta, dtype=np.float64)
        if (d <= 0).any() or not np.isfinite(d).all():
            raise ValueError("explicit deltas must be positive and finite")
        d = d.copy()
        d.flags.writeable = False
        object.__setattr__(self, "delta", d)

    @property
    def value(self) -> float:
        return float("nan")


Regime = Union[DenseSignal, SparseSignal, SmallMeansSignal, ExplicitSignal]


@dataclass(frozen=True)
class Sample:
    """Counts plus per-coordinate component labels (0 null, +1 up, -1 down)."""

    counts: np.ndarray
    labels: np.ndarray


@dataclass(frozen=True)
class ModelSpec:
    """Fully resolved mixture specification.

    lambda_up and lambda_down are the elevated and lowered component means;
    the lowered mean is clamped at zero and is identically zero in the
    small-means regime.
    """

    n: int
    lambdas: np.ndarray
    epsilon: float
    regime: Regime
    sidedness: Sidedness
    beta: Optional[float] = None
    means_descriptor: str = "explicit"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        lam = np.asarray(self.lambdas, dtype=np.float64)
        if lam.shape != (self.n,):
            raise ValueError("lambdas must have shape (n,)")
        if (lam <= 0).any() or not np.isfinite(lam).all():
            raise ValueError("all null means must be positive and finite")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in [0, 1]")
        if self.sidedness not in ("two-sided", "one-sided"):
            raise ValueError(f"unknown sidedness {self.sidedness!r}")
        lam = lam.copy()
        lam.flags.writeable = False
        object.__setattr__(self, "lambdas", lam)
        up, down = self._component_means(lam)
        up.flags.writeable = False
        down.flags.writeable = False
        object.__setattr__(self, "lambda_up", up)
        object.__setattr__(self, "lambda_down", down)

    def _component_means(self, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if isinstance(self.regime, SmallMeansSignal):
            logn = math.log(self.n)
            if logn <= 0:
                raise ValueError("small-means regime needs n >= 2")
            up = lam ** (1.0 - self.regime.gamma) * logn**self.regime.gamma
            down = np.zeros_like(lam)
            return up, down
        delta = (
            np.asarray(self.regime.delta, dtype=np.float64)
            if isinstance(self.regime, ExplicitSignal)
            else self.regime.deltas(self.n, lam)
        )
        if delta.shape != lam.shape:
            raise ValueError("delta must have one entry per coordinate")
        up = lam + delta
        down = np.maximum(lam - delta, 0.0)
        return up, down

    @property
    def delta(self) -> np.ndarray:
        return self.lambda_up - self.lambdas

    def null_fingerprint(self) -> str:
        """Hash of the null portion (n, lambdas); calibration compatibility key."""
        h = hashlib.sha256()
        h.update(str(self.n).encode())
        h.update(self.lambdas.tobytes())
        return h.hexdigest()[:16]

    def to_json(self) -> dict:
        doc = {
            "format": "poisdetect/spec-v1",
            "n": self.n,
            "lambdas": [float(v) for v in self.lambdas],
            "epsilon": self.epsilon,
            "sidedness": self.sidedness,
            "means_descriptor": self.means_descriptor,
            "regime": _regime_to_json(self.regime),
        }
        if self.beta is not None:
            doc["beta"] = self.beta
        return doc

    @staticmethod
    def from_json(doc: dict) -> "ModelSpec":
        if doc.get("format") != "poisdetect/spec-v1":
            raise ValueError("unrecognized spec document format")
        return ModelSpec(
            n=int(doc["n"]),
            lambdas=np.asarray(doc["lambdas"], dtype=np.float64),
            epsilon=float(doc["epsilon"]),
            regime=_regime_from_json(doc["regime"]),
            sidedness=doc["sidedness"],
            beta=doc.get("beta"),
            means_descriptor=doc.get("means_descriptor", "explicit"),
        )


def _regime_to_json(regime: Regime) -> dict:
    if isinstance(regime, DenseSignal):
        return {"kind": "dense", "s": regime.s}
    if isinstance(regime, SparseSignal):
        return {"kind": "sparse", "r": regime.r}
    if isinstance(regime, SmallMeansSignal):
        return {"kind": "small-means", "gamma": regime.gamma}
    return {"kind": "explicit", "delta": [float(v) for v in regime.delta]}


def _regime_from_json(doc: dict) -> Regime:
    kind = doc.get("kind")
    if kind == "dense":
        return DenseSignal(float(doc["s"]))
    if kind == "sparse":
        return SparseSignal(float(doc["r"]))
    if kind == "small-means":
        return SmallMeansSignal(float(doc["gamma"]))
    if kind == "explicit":
        return ExplicitSignal(np.asarray(doc["delta"], dtype=np.float64))
    raise ValueError(f"unknown regime kind {kind!r}")


def regime_from_json(doc: dict) -> Regime:
    """Parse a signal parameterization from its JSON form."""
    if not isinstance(doc, dict):
        raise ValueError("regime must be a JSON object")
    return _regime_from_json(doc)


def constant_means(n: int, lambda0: float) -> np.ndarray:
    """All-equal mean vector."""
    if lambda0 <= 0:
        raise ValueError("lambda0 must be positive")
    return np.full(n, float(lambda0))


def shifted_exponential_means(n: int, lambda0: float, seed: int) -> np.ndarray:
    """Means lambda0 + Exponential(mean lambda0), drawn on a dedicated stream."""
    if lambda0 <= 0:
        raise ValueError("lambda0 must be positive")
    stream = RngStream(seed, MEANS_STREAM_ID)
    u = stream.uniforms(n)
    return lambda0 - lambda0 * np.log1p(-u)


def build_spec(
    n: int,
    *,
    regime: Regime,
    lambdas=None,
    lambda0: Optional[float] = None,
    lambda_dist: str = "constant",
    means_seed: Optional[int] = None,
    beta: Optional[float] = None,
    epsilon: Optional[float] = None,
    sidedness: Sidedness = "two-sided",
) -> ModelSpec:
    """Resolve a mixture specification.

    The mean vector comes either from `lambdas` directly or from a generator
    (`lambda_dist` "constant" or "shifted-exp" with `lambda0`; the latter
    needs `means_seed`). Sparsity comes from `beta` (eps = n^-beta) or a
    literal `epsilon`; exactly one must be given.
    """
    if (beta is None) == (epsilon is None):
        raise ValueError("give exactly one of beta and epsilon")
    if beta is not None:
        if not (0.0 < beta < 1.0):
            raise ValueError("beta must lie in (0, 1)")
        epsilon = math.exp(-beta * math.log(n))
    if lambdas is not None:
        lam = np.asarray(lambdas, dtype=np.float64)
        descriptor = "explicit"
    else:
        if lambda0 is None:
            raise ValueError("give lambdas or lambda0")
        if lambda_dist == "constant":
            lam = constant_means(n, lambda0)
            descriptor = f"const({lambda0:g})"
        elif lambda_dist == "shifted-exp":
            if means_seed is None:
                raise ValueError("shifted-exp means need means_seed")
            lam = shifted_exponential_means(n, lambda0, means_seed)
            descriptor = f"shifted-exp({lambda0:g},seed={means_seed})"
        else:
            raise ValueError(f"unknown lambda_dist {lambda_dist!r}")
    return ModelSpec(
        n=n,
        lambdas=lam,
        epsilon=float(epsilon),
        regime=regime,
        sidedness=sidedness,
        beta=beta,
        means_descriptor=descriptor,
    )


def sample(
    spec: ModelSpec,
    stream: RngStream,
    under: Literal["null", "alternative"] = "alternative",
) -> Sample:
    """One draw of all n coordinates.

    Under the alternative, component labels are drawn first (one uniform per
    coordinate), then counts from the selected means. Deterministic given
    (spec, stream).
    """
    if under == "null":
        counts = poisson(spec.lambdas, stream)
        return Sample(counts=counts, labels=np.zeros(spec.n, dtype=np.int8))
    if under != "alternative":
        raise ValueError(f"unknown sampling mode {under!r}")
    eps = spec.epsilon
    u = stream.uniforms(spec.n)
    labels = np.zeros(spec.n, dtype=np.int8)
    if spec.sidedness == "one-sided":
        labels[u >= 1.0 - eps] = 1
    else:
        labels[u >= 1.0 - eps] = 1
        labels[u >= 1.0 - eps / 2.0] = -1
    means = np.where(
        labels == 0,
        spec.lambdas,
        np.where(labels == 1, spec.lambda_up, spec.lambda_down),
    )
    counts = poisson(means, stream)
    return Sample(counts=counts, labels=labels)


def _log_pmf_vec(lam: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Elementwise Poisson log pmf, handling zero means (point mass at 0)."""
    out = np.full(x.shape, -np.inf)
    zero = lam == 0.0
    out[zero & (x == 0)] = 0.0
    pos = ~zero
    if pos.any():
        lp = lam[pos]
        xp = x[pos]
        out[pos] = -lp + xp * np.log(lp) - gammaln(xp + 1.0)
    return out


def oracle_lrt(spec: ModelSpec, counts: np.ndarray) -> float:
    """Exact log likelihood ratio of the mixture alternative vs the null.

    Sum over coordinates of log of the per-coordinate likelihood ratio,
    assembled with log-sum-exp; returns 0 when eps = 0.
    """
    counts = np.asarray(counts)
    if counts.shape != (spec.n,):
        raise ValueError("counts must have one entry per coordinate")
    if (counts < 0).any():
        raise ValueError("counts must be nonnegative")
    eps = spec.epsilon
    if eps == 0.0:
        return 0.0
    x = counts.astype(np.float64)
    lp0 = _log_pmf_vec(spec.lambdas, x)
    lp_up = _log_pmf_vec(spec.lambda_up, x)
    with np.errstate(divide="ignore"):
        if spec.sidedness == "one-sided":
            terms = np.logaddexp(
                math.log1p(-eps) if eps < 1.0 else -np.inf,
                math.log(eps) + lp_up - lp0,
            )
        else:
            lp_down = _log_pmf_vec(spec.lambda_down, x)
            terms = np.logaddexp(
                math.log1p(-eps) if eps < 1.0 else -np.inf,
                np.logaddexp(lp_up, lp_down) + math.log(eps / 2.0) - lp0,
            )
    return float(np.sum(terms))
