"""VaR, ES and the left quantile on discrete random variables.

All three functionals sort the distinct values once, merge tied atoms and
read the answer off the cumulative distribution.  Level comparisons carry an
absolute slack of ``LEVEL_TOL`` so that e.g. ``P(X <= 3) = 0.6000000000000001``
is not mistaken for being strictly above ``p = 0.6``.
"""

from __future__ import annotations

import numpy as np

from .prob_core import FiniteProbSpace, RandomVariable

LEVEL_TOL = 1e-12


def check_level(p: float, name: str = "p", *, closed: bool = False) -> float:
    p = float(p)
    ok = (0.0 <= p <= 1.0) if closed else (0.0 < p < 1.0)
    if not ok:
        interval = "[0, 1]" if closed else "(0, 1)"
        raise ValueError(f"level {name}={p!r} outside {interval}")
    return p


def _steps(X: RandomVariable):
    """Distinct values of ``X`` (ascending), their masses and the cdf."""
    keep = X.space.support
    vals, inv = np.unique(X.values[keep], return_inverse=True)
    masses = np.bincount(inv, weights=X.space.probs[keep], minlength=vals.size)
    cdf = np.cumsum(masses)
    cdf[-1] = 1.0
    return vals, masses, cdf


def _staircase(X: RandomVariable):
    """Distinct values of ``X`` (ascending) and the cdf at each of them."""
    vals, _, cdf = _steps(X)
    return vals, cdf


def var(X: RandomVariable, p: float) -> float:
    """Right quantile ``inf{x : P(X <= x) > p}``.

    >>> var(RandomVariable.equal_weight([1, 2, 3, 4, 5]), 0.6)
    4.0
    """
    p = check_level(p)
    vals, cdf = _staircase(X)
    k = int(np.searchsorted(cdf, p + LEVEL_TOL, side="right"))
    return float(vals[min(k, vals.size - 1)])


def left_q(X: RandomVariable, alpha: float) -> float:
    """Left ``(1 - alpha)``-quantile ``inf{x : P(X <= x) >= 1 - alpha}``."""
    alpha = check_level(alpha, "alpha")
    vals, cdf = _staircase(X)
    k = int(np.searchsorted(cdf, 1.0 - alpha - LEVEL_TOL, side="left"))
    return float(vals[min(k, vals.size - 1)])


def es(X: RandomVariable, p: float) -> float:
    """Expected Shortfall, the average of ``VaR_q`` over ``q`` in ``(p, 1)``.

    The quantile function is a staircase, so the integral is a finite sum:
    ``VaR_q = x_k`` for ``q`` in ``[F(x_{k-1}), F(x_k))``.  Steps entirely
    above ``p`` contribute their full mass, which keeps grid-aligned cases
    free of cancellation; the weighted sum is divided by the total length.
    """
    p = check_level(p)
    vals, masses, cdf = _steps(X)
    lower = np.concatenate(([0.0], cdf[:-1]))
    lengths = np.where(lower >= p - LEVEL_TOL, masses, np.clip(cdf - p, 0.0, None))
    return float(lengths @ vals / lengths.sum())


def grid_aligned(p: float, space: FiniteProbSpace) -> bool:
    """Whether an event of probability ``p`` is a union of leading atoms.

    On an equal-weight space this is ``p * m`` being an integer.  Otherwise
    ``p`` must equal one of the partial sums of ``space.probs``.
    """
    p = float(p)
    if space.is_equal_weight:
        pm = p * space.m
        return abs(pm - round(pm)) <= 1e-12 * max(1.0, space.m)
    partial = np.concatenate(([0.0], np.cumsum(space.probs)))
    return bool(np.any(np.abs(partial - p) <= 1e-12))


def equal_weight_left_q(sorted_values: np.ndarray, alpha: float) -> np.ndarray:
    """:func:`left_q` along the last axis of pre-sorted equal-weight samples."""
    m = sorted_values.shape[-1]
    k = int(np.ceil((1.0 - alpha) * m - 1e-9))
    return sorted_values[..., max(k, 1) - 1]


def equal_weight_var(sorted_values: np.ndarray, p: float) -> np.ndarray:
    """:func:`var` along the last axis of pre-sorted equal-weight samples."""
    m = sorted_values.shape[-1]
    k = int(np.floor(p * m + 1e-9))
    return sorted_values[..., min(k, m - 1)]
