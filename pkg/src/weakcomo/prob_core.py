"""Finite probability spaces, random variables and the measures built on them.

Atoms are identified by their index ``0..m-1``.  Every object here is
immutable after construction: arrays are copied and flagged read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateNormalizer,
    EmptySpace,
    NegativeMass,
    NegativeWeight,
    NullEvent,
    SpaceMismatch,
    ZeroTotalMass,
)

MASS_TOL = 1e-9
EQUAL_WEIGHT_TOL = 1e-12
DEFAULT_QUAD_NODES = 64


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _normalized_masses(masses, *, renormalize_any: bool) -> np.ndarray:
    w = np.asarray(masses, dtype=float)
    if w.size == 0:
        raise EmptySpace("no atoms given")
    if not np.all(np.isfinite(w)):
        raise NegativeMass("masses must be finite")
    if np.any(w < 0):
        raise NegativeMass(f"negative mass at index {int(np.argmax(w < 0))}")
    total = w.sum()
    if total <= 0:
        raise ZeroTotalMass("masses sum to zero")
    if not renormalize_any and abs(total - 1.0) > MASS_TOL:
        raise ZeroTotalMass(f"masses sum to {total!r}, expected 1 within {MASS_TOL}")
    return w / total


# --------------------------------------------------------------------------
# Spaces, random variables, events
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteProbSpace:
    """Atoms ``0..m-1`` carrying the probabilities ``probs``."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(self.probs))

    @property
    def atom_count(self) -> int:
        return self.probs.size

    m = atom_count

    @property
    def is_equal_weight(self) -> bool:
        return bool(np.all(np.abs(self.probs - 1.0 / self.m) <= EQUAL_WEIGHT_TOL))

    @property
    def support(self) -> np.ndarray:
        """Mask of atoms with positive probability."""
        return self.probs > 0

    def same_atoms(self, other: "FiniteProbSpace") -> bool:
        return self.m == other.m

    def __eq__(self, other):
        if not isinstance(other, FiniteProbSpace):
            return NotImplemented
        return self.m == other.m and bool(np.array_equal(self.probs, other.probs))

    def __hash__(self):
        return hash((self.m, self.probs.tobytes()))

    def __repr__(self):
        return f"FiniteProbSpace(m={self.m}, probs={np.array2string(self.probs, threshold=8)})"


def make_space(probs: Sequence[float]) -> FiniteProbSpace:
    """Build a space from non-negative masses, renormalized to sum to one.

    >>> make_space([1, 1, 1, 1]).probs
    array([0.25, 0.25, 0.25, 0.25])
    """
    return FiniteProbSpace(_normalized_masses(probs, renormalize_any=True))


def equal_weight_space(m: int) -> FiniteProbSpace:
    if m < 1:
        raise EmptySpace("m must be positive")
    return FiniteProbSpace(np.full(m, 1.0 / m))


@dataclass(frozen=True, eq=False)
class RandomVariable:
    space: FiniteProbSpace
    values: np.ndarray
    name: str = "X"

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 1 or v.size != self.space.m:
            raise SpaceMismatch(f"{v.size} values for a space of {self.space.m} atoms")
        if not np.all(np.isfinite(v)):
            raise ValueError("random variable values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def equal_weight(cls, values, name: str = "X") -> "RandomVariable":
        values = np.asarray(values, dtype=float)
        return cls(equal_weight_space(values.size), values, name)

    def expectation(self, probs=None) -> float:
        p = self.space.probs if probs is None else np.asarray(probs)
        return float(p @ self.values)

    def has_ties(self) -> bool:
        v = self.values[self.space.support]
        return np.unique(v).size < v.size

    def apply(self, f: Callable, name: Optional[str] = None) -> "RandomVariable":
        out = np.broadcast_to(np.asarray(f(self.values), dtype=float), self.values.shape)
        return RandomVariable(self.space, out, name or f"f({self.name})")

    def distribution(self) -> "LineMeasure":
        """The law of this variable as a discrete measure on the line."""
        vals, inv = np.unique(self.values, return_inverse=True)
        masses = np.bincount(inv, weights=self.space.probs, minlength=vals.size)
        keep = masses > 0
        return LineMeasure.atoms(vals[keep], masses[keep])

    def _other(self, other):
        if isinstance(other, RandomVariable):
            if not self.space.same_atoms(other.space):
                raise SpaceMismatch("random variables live on different spaces")
            return other.values
        return other

    def __add__(self, other):
        return RandomVariable(self.space, self.values + self._other(other), self.name)

    __radd__ = __add__

    def __sub__(self, other):
        return RandomVariable(self.space, self.values - self._other(other), self.name)

    def __rsub__(self, other):
        return RandomVariable(self.space, self._other(other) - self.values, self.name)

    def __mul__(self, other):
        return RandomVariable(self.space, self.values * self._other(other), self.name)

    __rmul__ = __mul__

    def __neg__(self):
        return RandomVariable(self.space, -self.values, f"-{self.name}")

    def __repr__(self):
        return f"RandomVariable({self.name}, m={self.space.m})"


@dataclass(frozen=True, eq=False)
class Event:
    """A set of atoms, stored as a boolean mask."""

    space: FiniteProbSpace
    mask: np.ndarray

    def __post_init__(self):
        mask = _frozen(self.mask, dtype=bool)
        if mask.shape != (self.space.m,):
            raise SpaceMismatch("event mask does not match the space")
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_indices(cls, space: FiniteProbSpace, indices) -> "Event":
        mask = np.zeros(space.m, dtype=bool)
        idx = np.asarray(list(indices), dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= space.m):
            raise SpaceMismatch("atom index out of range")
        mask[idx] = True
        return cls(space, mask)

    @property
    def members(self) -> tuple:
        return tuple(int(i) for i in np.flatnonzero(self.mask))

    @property
    def probability(self) -> float:
        return float(self.space.probs[self.mask].sum())

    def complement(self) -> "Event":
        return Event(self.space, ~self.mask)

    def indicator(self) -> RandomVariable:
        return RandomVariable(self.space, self.mask.astype(float), "1_A")

    def as_sure(self) -> np.ndarray:
        """Mask with zero-probability atoms dropped (the a.s. identity)."""
        return self.mask & self.space.support

    def equals_as(self, other: "Event") -> bool:
        """Equality up to null sets."""
        return bool(np.array_equal(self.as_sure(), other.as_sure()))

    def __len__(self):
        return int(self.mask.sum())

    def __eq__(self, other):
        if not isinstance(other, Event):
            return NotImplemented
        return self.space.m == other.space.m and bool(np.array_equal(self.mask, other.mask))

    def __hash__(self):
        return hash(self.mask.tobytes())

    def __repr__(self):
        return f"Event({list(self.members)[:10]}{'...' if len(self) > 10 else ''}, P={self.probability:.6g})"


def conditional_measure(space: FiniteProbSpace, A: Event) -> FiniteProbSpace:
    """``P(. | A)`` on the same atoms: zero off ``A``, ``probs/P(A)`` on it."""
    pa = A.probability
    if pa <= 0:
        raise NullEvent("conditioning on an event of probability zero")
    probs = np.where(A.mask, space.probs, 0.0) / pa
    return FiniteProbSpace(probs)


# --------------------------------------------------------------------------
# Functions and measures on the line
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FunctionHandle:
    """A named real function, evaluated elementwise on numpy arrays.

    ``monotone`` is one of ``"nondecreasing"``, ``"nonincreasing"`` or ``None``;
    it is advisory and can be checked on a grid with :meth:`check_monotone`.
    """

    id: str
    fn: Callable = field(compare=False)
    monotone: Optional[str] = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.fn(x), dtype=float)
        return np.broadcast_to(out, x.shape).copy() if out.shape != x.shape else out

    def check_monotone(self, grid) -> bool:
        if self.monotone is None:
            return True
        grid = np.sort(np.asarray(grid, dtype=float))
        d = np.diff(self(grid))
        if self.monotone == "nondecreasing":
            return bool(np.all(d >= -1e-12))
        if self.monotone == "nonincreasing":
            return bool(np.all(d <= 1e-12))
        raise ValueError(f"unknown monotonicity tag {self.monotone!r}")


def constant(c: float, id: Optional[str] = None) -> FunctionHandle:
    return FunctionHandle(id or f"const({c:g})", lambda x: np.full_like(x, c, dtype=float))


IDENTITY = FunctionHandle("identity", lambda x: x, "nondecreasing")


@dataclass(frozen=True, eq=False)
class LineMeasure:
    """A probability measure on the real line.

    ``kind`` is ``"atoms"`` (finite support), ``"uniform"`` (on ``[a, b]``,
    integrated by Gauss-Legendre quadrature) or ``"weighted"`` (a base
    measure reweighted by a non-negative function and renormalized).
    """

    kind: str
    points: Optional[np.ndarray] = None
    masses: Optional[np.ndarray] = None
    a: float = 0.0
    b: float = 1.0
    base: Optional["LineMeasure"] = None
    weight: Optional[FunctionHandle] = None
    normalizer: float = 1.0
    nodes: int = DEFAULT_QUAD_NODES
    label: str = ""

    @classmethod
    def atoms(cls, points, masses=None, label: str = "") -> "LineMeasure":
        points = np.asarray(points, dtype=float).ravel()
        if masses is None:
            masses = np.full(points.size, 1.0 / max(points.size, 1))
        masses = _normalized_masses(masses, renormalize_any=False)
        if masses.size != points.size:
            raise SpaceMismatch("points and masses differ in length")
        if not label:
            label = "atoms" if points.size > 1 else f"delta({points[0]:.6g})"
        return cls("atoms", _frozen(points), _frozen(masses), label=label)

    @classmethod
    def point_mass(cls, x: float) -> "LineMeasure":
        return cls.atoms([x], [1.0])

    @classmethod
    def uniform(cls, a: float, b: float, nodes: int = DEFAULT_QUAD_NODES) -> "LineMeasure":
        if not a < b:
            raise ValueError(f"uniform interval needs a < b, got [{a}, {b}]")
        if nodes < 1:
            raise ValueError("nodes must be positive")
        return cls("uniform", a=float(a), b=float(b), nodes=int(nodes),
                   label=f"U[{a:.6g},{b:.6g}]")

    @property
    def is_discrete(self) -> bool:
        if self.kind == "weighted":
            return self.base.is_discrete
        return self.kind == "atoms"

    def discretize(self, nodes: Optional[int] = None):
        """Return ``(points, masses)`` integrating this measure.

        Exact for atomic measures; Gauss-Legendre with ``nodes`` points on
        uniform ones.
        """
        if self.kind == "atoms":
            return self.points, self.masses
        if self.kind == "uniform":
            n = nodes or self.nodes
            t, w = np.polynomial.legendre.leggauss(n)
            half = 0.5 * (self.b - self.a)
            return self.a + half * (t + 1.0), 0.5 * w
        pts, w = self.base.discretize(nodes)
        return pts, w * self.weight(pts) / self.normalizer

    def expect(self, f, nodes: Optional[int] = None) -> float:
        pts, w = self.discretize(nodes)
        return float(w @ np.asarray(f(pts), dtype=float))

    def __repr__(self):
        return f"LineMeasure({self.label or self.kind})"


def weighted_measure(base: LineMeasure, w: FunctionHandle) -> LineMeasure:
    """``F^w(dx) = w(x) / E[w] F(dx)``."""
    pts, masses = base.discretize()
    vals = w(pts)
    if np.any(vals[masses > 0] < 0):
        raise NegativeWeight(f"weight {w.id} is negative on the support")
    norm = float(masses @ vals)
    if not np.isfinite(norm) or norm <= 0:
        raise DegenerateNormalizer(f"E[{w.id}] = {norm!r} is not in (0, inf)")
    return LineMeasure("weighted", base=base, weight=w, normalizer=norm,
                       nodes=base.nodes, label=f"{base.label or base.kind}^{w.id}")


@dataclass(frozen=True)
class ProductMeasure:
    rho1: LineMeasure
    rho2: LineMeasure

    @property
    def id(self) -> str:
        return f"{self.rho1.label or self.rho1.kind} x {self.rho2.label or self.rho2.kind}"


def independent_product(rho1: LineMeasure, rho2: LineMeasure) -> ProductMeasure:
    return ProductMeasure(rho1, rho2)


# --------------------------------------------------------------------------
# Joint measures on pairs of atoms / grid points
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointMeasure:
    """A probability matrix ``weights[i, j]`` on a product of two finite sets.

    On ``Omega x Omega`` the matrix is square.  ``row_values`` and
    ``col_values`` optionally tag rows/columns with points of the line, so
    the same object serves as the joint law of a pair ``(V, W)``.
    """

    weights: np.ndarray
    row_values: Optional[np.ndarray] = None
    col_values: Optional[np.ndarray] = None
    label: str = "joint"

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 2:
            raise ValueError("joint weights must be a matrix")
        object.__setattr__(self, "weights", w)
        for name, n in (("row_values", w.shape[0]), ("col_values", w.shape[1])):
            vals = getattr(self, name)
            if vals is not None:
                vals = _frozen(vals)
                if vals.shape != (n,):
                    raise SpaceMismatch(f"{name} has the wrong length")
                object.__setattr__(self, name, vals)
        object.__setattr__(self, "pi1", _frozen(w.sum(axis=1)))
        object.__setattr__(self, "pi2", _frozen(w.sum(axis=0)))

    @property
    def shape(self):
        return self.weights.shape

    @property
    def symmetric(self) -> bool:
        w = self.weights
        return w.shape[0] == w.shape[1] and bool(np.array_equal(w, w.T))

    @property
    def marginals(self):
        return self.pi1, self.pi2

    def is_product(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.weights - np.outer(self.pi1, self.pi2)) <= tol))

    def on_common_support(self):
        """Re-express a grid joint as a square joint on the union of grid points.

        Returns ``(joint, support)`` where ``support`` is the sorted union of
        row and column values; the new joint lives on ``support x support``.
        """
        if self.row_values is None or self.col_values is None:
            raise ValueError("joint has no grid values")
        support = np.union1d(self.row_values, self.col_values)
        ri = np.searchsorted(support, self.row_values)
        ci = np.searchsorted(support, self.col_values)
        sq = np.zeros((support.size, support.size))
        np.add.at(sq, (ri[:, None], ci[None, :]), self.weights)
        return JointMeasure(sq, support, support, label=self.label), support

    def __repr__(self):
        return f"JointMeasure({self.label}, shape={self.shape})"


def joint_from_matrix(weights, row_values=None, col_values=None, label: str = "joint") -> JointMeasure:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.size == 0:
        raise EmptySpace("joint weights must be a non-empty matrix")
    flat = _normalized_masses(w.ravel(), renormalize_any=False)
    return JointMeasure(flat.reshape(w.shape), row_values, col_values, label)


def product_joint(pi1, pi2, row_values=None, col_values=None, label: str = "product") -> JointMeasure:
    return joint_from_matrix(np.outer(pi1, pi2), row_values, col_values, label)


def joint_distribution(X: RandomVariable, Y: RandomVariable) -> JointMeasure:
    """Joint law of ``(X, Y)`` on the grid of their distinct values."""
    if not X.space.same_atoms(Y.space):
        raise SpaceMismatch("X and Y live on different spaces")
    keep = X.space.support
    xv, xi = np.unique(X.values[keep], return_inverse=True)
    yv, yi = np.unique(Y.values[keep], return_inverse=True)
    w = np.zeros((xv.size, yv.size))
    np.add.at(w, (xi, yi), X.space.probs[keep])
    return JointMeasure(w, xv, yv, label=f"law({X.name},{Y.name})")
