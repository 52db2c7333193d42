"""Closed-form detection boundaries in the sparsity/strength plane.

Each function maps the sparsity exponent beta to the critical signal
strength exponent separating detectable from undetectable alternatives.
Arguments outside the stated open domain raise ValueError.
"""

from __future__ import annotations

import math

__all__ = [
    "dense_boundary",
    "sparse_boundary",
    "one_sided_dense_boundary",
    "small_means_boundary",
    "max_test_boundary",
    "boundary_for",
    "regime_label",
    "side_of_boundary",
]


def _check_domain(beta: float, lo: float, hi: float) -> float:
    beta = float(beta)
    if not (lo < beta < hi):
        raise ValueError(f"beta must lie in ({lo}, {hi}), got {beta!r}")
    return beta


def dense_boundary(beta: float) -> float:
    """Critical scaling exponent beta/2 - 1/4 for dense two-sided signals."""
    beta = _check_domain(beta, 0.0, 0.5)
    return beta / 2.0 - 0.25


def sparse_boundary(beta: float) -> float:
    """Critical strength for sparse two-sided signals.

    Equals beta - 1/2 on (1/2, 3/4] and (1 - sqrt(1 - beta))^2 on (3/4, 1);
    the two branches agree at beta = 3/4.
    """
    beta = _check_domain(beta, 0.5, 1.0)
    if beta <= 0.75:
        return beta - 0.5
    return (1.0 - math.sqrt(1.0 - beta)) ** 2


def one_sided_dense_boundary(beta: float) -> float:
    """Critical scaling exponent beta - 1/2 for dense one-sided signals."""
    beta = _check_domain(beta, 0.0, 0.5)
    return beta - 0.5


def small_means_boundary(beta: float) -> float:
    """Critical mean-inflation exponent for vanishing-mean alternatives.

    The detectable region is gamma > beta, so the boundary is the identity
    map on the sparse range.
    """
    return _check_domain(beta, 0.5, 1.0)


def max_test_boundary(beta: float) -> float:
    """Strength above which the maximum statistic detects sparse signals.

    (1 - sqrt(1 - beta))^2 over the whole sparse range; meets the full
    boundary on (3/4, 1) and sits strictly above it on (1/2, 3/4).
    """
    beta = _check_domain(beta, 0.5, 1.0)
    return (1.0 - math.sqrt(1.0 - beta)) ** 2


def boundary_for(signal_kind: str, sidedness: str, beta: float) -> float:
    """Boundary value for a grid cell, NaN when no closed form applies.

    signal_kind is the signal parameterization tag ("s", "r", "gamma",
    "delta"); sidedness is "two-sided" or "one-sided".
    """
    try:
        if signal_kind == "s":
            if sidedness == "one-sided":
                return one_sided_dense_boundary(beta)
            return dense_boundary(beta)
        if signal_kind == "r":
            return sparse_boundary(beta)
        if signal_kind == "gamma":
            return small_means_boundary(beta)
    except ValueError:
        return math.nan
    return math.nan


def regime_label(beta: float) -> str:
    """Sparsity regime name for a given beta in (0, 1)."""
    beta = _check_domain(beta, 0.0, 1.0)
    if beta < 0.5:
        return "dense"
    if beta > 0.75:
        return "very-sparse"
    return "moderately-sparse"


def side_of_boundary(signal_kind: str, sidedness: str, beta: float, signal: float) -> str:
    """Classify a grid cell as "above", "below", or "at" its boundary.

    Returns "undefined" where boundary_for has no closed form.
    """
    value = boundary_for(signal_kind, sidedness, beta)
    if math.isnan(value):
        return "undefined"
    signal = float(signal)
    if signal > value:
        return "above"
    if signal < value:
        return "below"
    return "at"
