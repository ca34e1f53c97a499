"""Worst-case VaR and ES of a sum of two risks with fixed marginals.

Marginals are multisets of ``m`` equally likely values.  A coupling pairs
the two multisets atom by atom.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GridMisaligned, InvariantViolation, TiedValues, TooLarge
from .prob_core import FiniteProbSpace, RandomVariable, equal_weight_space
from .risk_measures import LEVEL_TOL, check_level, es, grid_aligned, var
from .weak_comon import family_tail_P, wc_family


def _multiset(F) -> np.ndarray:
    if isinstance(F, RandomVariable):
        F = F.values
    a = np.sort(np.asarray(F, dtype=float).ravel())
    if a.size == 0:
        raise ValueError("empty marginal")
    return a


def _check_pair(FX, FY, p):
    x, y = _multiset(FX), _multiset(FY)
    if x.size != y.size:
        raise ValueError(f"marginals have {x.size} and {y.size} atoms")
    p = check_level(p)
    if not grid_aligned(p, equal_weight_space(x.size)):
        raise GridMisaligned(f"p={p!r} is not a multiple of 1/{x.size}")
    return x, y, p


@dataclass(frozen=True, eq=False)
class Coupling:
    """Two random variables on a common equal-weight space."""

    X: RandomVariable
    Y: RandomVariable

    def __post_init__(self):
        if self.X.space.m != self.Y.space.m or not self.X.space.is_equal_weight:
            raise ValueError("a coupling needs one equal-weight space")

    @classmethod
    def from_arrays(cls, x, y) -> "Coupling":
        x = np.asarray(x, dtype=float)
        space = equal_weight_space(x.size)
        return cls(RandomVariable(space, x, "X"), RandomVariable(space, np.asarray(y, dtype=float), "Y"))

    @property
    def space(self) -> FiniteProbSpace:
        return self.X.space

    @property
    def marginal_x(self) -> np.ndarray:
        return np.sort(self.X.values)

    @property
    def marginal_y(self) -> np.ndarray:
        return np.sort(self.Y.values)

    @property
    def total(self) -> RandomVariable:
        return RandomVariable(self.space, self.X.values + self.Y.values, "X+Y")

    def has_marginals(self, FX, FY) -> bool:
        return bool(np.array_equal(self.marginal_x, _multiset(FX))
                    and np.array_equal(self.marginal_y, _multiset(FY)))

    def pairs(self) -> list:
        return [(float(a), float(b)) for a, b in zip(self.X.values, self.Y.values)]


def worst_var_two(FX, FY, p: float) -> float:
    """``inf{VaR_{p+t}(X) + VaR_{1-t}(Y) : t in (0, 1-p)}`` on equal-weight marginals.

    Both staircases are constant between the breakpoints where either
    quantile jumps, so the infimum is the minimum over the breakpoints inside
    the open interval and the midpoints of the pieces between them (the
    one-sided limits).
    """
    x, y, p = _check_pair(FX, FY, p)
    m = x.size
    X, Y = RandomVariable.equal_weight(x), RandomVariable.equal_weight(y)
    grid = np.arange(m + 1) / m
    ts = np.union1d(grid - p, 1.0 - grid)
    ts = ts[(ts > LEVEL_TOL) & (ts < 1.0 - p - LEVEL_TOL)]
    knots = np.concatenate(([0.0], ts, [1.0 - p]))
    probes = np.concatenate((ts, 0.5 * (knots[:-1] + knots[1:])))
    return min(var(X, p + t) + var(Y, 1.0 - t) for t in probes)


def worst_es_two(FX, FY, p: float) -> float:
    """``ES_p(X) + ES_p(Y)``, the largest ES of ``X + Y`` over all couplings."""
    x, y, p = _check_pair(FX, FY, p)
    return es(RandomVariable.equal_weight(x), p) + es(RandomVariable.equal_weight(y), p)


def comonotone_coupling(FX, FY) -> Coupling:
    return Coupling.from_arrays(_multiset(FX), _multiset(FY))


def build_worst_coupling(FX, FY, p: float) -> Coupling:
    """Coupling attaining the worst-case ``VaR_p`` of the sum.

    Atoms are ordered by the rank of ``X``.  The lowest ``p*m`` values of the
    two marginals are matched in the same order; the top ``(1-p)*m`` values
    are matched in reverse order.  The result is weakly comonotonic on the
    tail-versus-body point masses and weakly antimonotonic inside the tail.
    """
    x, y, p = _check_pair(FX, FY, p)
    for name, a in (("FX", x), ("FY", y)):
        if np.unique(a).size < a.size:
            raise TiedValues(f"{name} has tied values")
    m = x.size
    split = int(round(p * m))
    y_paired = np.concatenate((y[:split], y[split:][::-1]))
    return Coupling.from_arrays(x, y_paired)


@dataclass(frozen=True)
class EsMaximizerCheck:
    es_additive: bool
    wc_tail: bool


def es_maximizer_check(c: Coupling, p: float, atol: float = 1e-10, tol: float = 0.0) -> EsMaximizerCheck:
    """ES additivity of the sum versus weak comonotonicity over the tail family of ``X``.

    The two are equivalent; a disagreement raises :class:`InvariantViolation`.
    """
    if not grid_aligned(p, c.space):
        raise GridMisaligned(f"p={p!r} is not a multiple of 1/{c.space.m}")
    if c.X.has_ties() or c.Y.has_ties():
        raise TiedValues("coupling marginals have tied values")
    lhs = es(c.total, p)
    rhs = es(c.X, p) + es(c.Y, p)
    scale = max(1.0, abs(rhs))
    r = EsMaximizerCheck(abs(lhs - rhs) <= atol * scale,
                         wc_family(c.X, c.Y, family_tail_P(c.X, p), tol).all_comonotonic)
    if r.es_additive != r.wc_tail:
        raise InvariantViolation(f"ES additivity {r.es_additive} but tail wc {r.wc_tail} at p={p}")
    return r


@dataclass(frozen=True)
class BruteForceResult:
    max_value: float
    argmax_permutation: tuple
    n_maximizers: int


def brute_force_worst_var(FX, FY, p: float, max_m: int = 8) -> BruteForceResult:
    """Maximum of ``VaR_p(X + Y)`` over all ``m!`` pairings, by enumeration.

    ``X`` takes its sorted values; ``Y`` on atom ``i`` is ``sorted(FY)[perm[i]]``.
    Ties are broken by the lexicographically smallest permutation.
    """
    x, y = _multiset(FX), _multiset(FY)
    if x.size != y.size:
        raise ValueError("marginals differ in size")
    m = x.size
    if m > max_m:
        raise TooLarge(f"m={m} exceeds max_m={max_m}")
    p = check_level(p)
    perms = np.array(list(itertools.permutations(range(m))), dtype=np.int64)
    sums = np.sort(x[None, :] + y[perms], axis=1)
    k = min(int(np.floor(p * m + LEVEL_TOL * m)), m - 1)
    vals = sums[:, k]
    best = vals.max()
    hits = np.flatnonzero(vals == best)
    return BruteForceResult(float(best), tuple(int(i) for i in perms[hits[0]]), int(hits.size))


def maximizing_couplings(FX, FY, p: float, max_m: int = 8):
    """Every pairing attaining the brute-force maximum, as :class:`Coupling` objects."""
    x, y = _multiset(FX), _multiset(FY)
    res = brute_force_worst_var(x, y, p, max_m)
    m = x.size
    k = min(int(np.floor(p * m + LEVEL_TOL * m)), m - 1)
    out = []
    for perm in itertools.permutations(range(m)):
        yy = y[list(perm)]
        if np.sort(x + yy)[k] == res.max_value:
            out.append(Coupling.from_arrays(x, yy))
    return out
