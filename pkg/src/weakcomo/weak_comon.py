"""Weak (anti)comonotonicity integrals, measure families and association checks.

The central quantity is

    I = double integral of (X(w) - X(w')) (Y(w) - Y(w')) over a measure on pairs,

evaluated for product measures (on the line or on the atoms of a finite
space) and for general joint measures.  A pair is weakly comonotonic with
respect to a family when ``I >= 0`` for every member, weakly antimonotonic
when ``I <= 0``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ContinuitySurrogateViolated,
    DegenerateTail,
    DegenerateVariance,
    InvariantViolation,
    NullConditioningAtom,
    QuadratureFailure,
    SpaceMismatch,
)
from .prob_core import (
    Event,
    FiniteProbSpace,
    FunctionHandle,
    JointMeasure,
    ProductMeasure,
    RandomVariable,
    conditional_measure,
)
from .risk_measures import check_level, grid_aligned, left_q

DEFAULT_TOL = 1e-9
QUAD_BUDGET = 1e-6
SET_MASS_EXHAUSTIVE_MAX = 12
SET_MASS_SAMPLES = 256


@dataclass(frozen=True)
class WcVerdict:
    value: float
    tolerance: float
    measure_id: str

    @property
    def comonotonic(self) -> bool:
        return self.value >= -self.tolerance

    @property
    def antimonotonic(self) -> bool:
        return self.value <= self.tolerance

    @property
    def classification(self) -> str:
        if math.isnan(self.value):
            return "neither"
        if self.comonotonic and self.antimonotonic:
            return "both"
        return "comonotonic_witness" if self.comonotonic else "antimonotonic_witness"

    def to_dict(self) -> dict:
        return {
            "measure_id": self.measure_id,
            "value": self.value,
            "tolerance": self.tolerance,
            "classification": self.classification,
            "comonotonic_witness": self.comonotonic,
            "antimonotonic_witness": self.antimonotonic,
        }


# --------------------------------------------------------------------------
# Integrals
# --------------------------------------------------------------------------


def _four_expectations(x1, y1, w1, x2, y2, w2) -> float:
    # E1[XY] + E2[XY] - E1[X] E2[Y] - E2[X] E1[Y]
    return float(w1 @ (x1 * y1) + w2 @ (x2 * y2) - (w1 @ x1) * (w2 @ y2) - (w2 @ x2) * (w1 @ y1))


def _line_integral(g, h, pm: ProductMeasure, nodes: Optional[int] = None) -> float:
    p1, w1 = pm.rho1.discretize(nodes)
    p2, w2 = pm.rho2.discretize(nodes)
    if pm.rho1.is_discrete and pm.rho2.is_discrete:
        dg = g(p1)[:, None] - g(p2)[None, :]
        dh = h(p1)[:, None] - h(p2)[None, :]
        return float(w1 @ (dg * dh) @ w2)
    return _four_expectations(g(p1), h(p1), w1, g(p2), h(p2), w2)


def wc_fun(g: FunctionHandle, h: FunctionHandle, pm: ProductMeasure,
           tol: float = DEFAULT_TOL, quad_budget: float = QUAD_BUDGET) -> WcVerdict:
    """Integral of ``(g(x)-g(x'))(h(x)-h(x'))`` against ``rho1 x rho2``.

    Atomic factors are summed exactly.  When either factor is continuous the
    integral is also computed with half the quadrature nodes; the difference
    is the error estimate, which is added to ``tol``.
    """
    value = _line_integral(g, h, pm)
    err = 0.0
    if not (pm.rho1.is_discrete and pm.rho2.is_discrete):
        n = max(pm.rho1.nodes, pm.rho2.nodes)
        coarse = _line_integral(g, h, pm, nodes=max(n // 2, 1))
        err = abs(value - coarse)
        if not math.isfinite(value) or err > quad_budget:
            raise QuadratureFailure(
                f"error estimate {err:.3g} exceeds budget {quad_budget:.3g} for {pm.id}")
    return WcVerdict(value, tol + err, f"{g.id},{h.id} | {pm.id}")


def _check_same(*objs):
    m = objs[0].space.m if isinstance(objs[0], RandomVariable) else objs[0].m
    for o in objs:
        n = o.space.m if isinstance(o, RandomVariable) else (o.m if isinstance(o, FiniteProbSpace) else o.shape[0])
        if n != m:
            raise SpaceMismatch(f"atom counts differ ({m} vs {n})")


def wc_rv(X: RandomVariable, Y: RandomVariable,
          pi1: Optional[FiniteProbSpace] = None, pi2: Optional[FiniteProbSpace] = None,
          tol: float = DEFAULT_TOL, measure_id: str = "pi1 x pi2") -> WcVerdict:
    """Weak comonotonicity integral of two random variables under ``pi1 x pi2``.

    Computed in O(m) through
    ``E1[XY] + E2[XY] - E1[X] E2[Y] - E2[X] E1[Y]``.
    Both measures default to the probability of ``X``'s space.
    """
    pi1 = X.space if pi1 is None else pi1
    pi2 = pi1 if pi2 is None else pi2
    _check_same(X, Y, pi1, pi2)
    x, y = X.values, Y.values
    value = _four_expectations(x, y, pi1.probs, x, y, pi2.probs)
    return WcVerdict(value, tol, measure_id)


def wc_joint(X: RandomVariable, Y: RandomVariable, pi: JointMeasure,
             tol: float = DEFAULT_TOL) -> WcVerdict:
    """Exact double sum of the integrand against a joint measure on pairs of atoms."""
    if pi.shape != (X.space.m, X.space.m):
        raise SpaceMismatch(f"joint of shape {pi.shape} on a space of {X.space.m} atoms")
    _check_same(X, Y)
    dx = X.values[:, None] - X.values[None, :]
    dy = Y.values[:, None] - Y.values[None, :]
    return WcVerdict(float(np.sum(pi.weights * dx * dy)), tol, pi.label)


def wc_rv_grid(g: FunctionHandle, h: FunctionHandle, joint: JointMeasure,
               tol: float = DEFAULT_TOL) -> WcVerdict:
    """:func:`wc_joint` for ``g``, ``h`` applied to a grid-valued joint ``(V, W)``."""
    sq, support = joint.on_common_support()
    space = FiniteProbSpace(np.full(support.size, 1.0 / support.size))
    return wc_joint(RandomVariable(space, g(support)), RandomVariable(space, h(support)), sq, tol)


# --------------------------------------------------------------------------
# Tail events and measure families
# --------------------------------------------------------------------------


def tail_event(X: RandomVariable, p: float) -> Event:
    """Atoms where ``X`` exceeds its lower ``p``-quantile.

    For a grid-aligned ``p`` and distinct values this is the event of
    probability ``1 - p`` carrying the largest values of ``X``, which is what
    the tail has in the continuous case.
    """
    p = check_level(p, closed=True)
    if p <= 0.0:
        return Event(X.space, np.ones(X.space.m, dtype=bool))
    if p >= 1.0:
        return Event(X.space, np.zeros(X.space.m, dtype=bool))
    threshold = left_q(X, 1.0 - p)
    return Event(X.space, X.values > threshold)


def require_surrogate(X: RandomVariable, p: float, what: str = "") -> None:
    """Raise unless ``X`` has distinct values and ``p`` is grid-aligned."""
    if X.has_ties():
        raise ContinuitySurrogateViolated(f"{what}{X.name} has tied values")
    if not grid_aligned(p, X.space):
        raise ContinuitySurrogateViolated(f"{what}level {p!r} is not grid-aligned for m={X.space.m}")


@dataclass(frozen=True, eq=False)
class MeasureFamily:
    """A finite family of product (and optionally joint) measures on atom pairs.

    Product members ``pi_a x pi_b`` are described by a matrix ``marginals``
    whose rows are probability vectors on the atoms, and ``pairs``, an
    ``(L, 2)`` array of row indices; ``pairs=None`` means every ordered pair
    of rows.  Point-mass families set ``atoms`` so that row ``k`` is the
    point mass at ``atoms[k]`` and are evaluated without any rounding in the
    sign of the integrand.
    """

    id: str
    provenance: str
    marginals: np.ndarray
    pairs: Optional[np.ndarray] = None
    labels: tuple = ()
    atoms: Optional[np.ndarray] = None
    joints: tuple = ()

    def __post_init__(self):
        if len(self) == 0:
            raise DegenerateTail(f"family {self.id} is empty")

    def __len__(self):
        k = self.marginals.shape[0]
        n = k * k if self.pairs is None else len(self.pairs)
        return n + len(self.joints)

    def member_id(self, a: int, b: int) -> str:
        la = self.labels[a] if self.labels else str(a)
        lb = self.labels[b] if self.labels else str(b)
        return f"{la} x {lb}"

    def members(self):
        """Materialize members as ``(id, pi1, pi2)`` or ``(id, JointMeasure)``."""
        k = self.marginals.shape[0]
        it = itertools.product(range(k), repeat=2) if self.pairs is None else map(tuple, self.pairs)
        for a, b in it:
            yield self.member_id(a, b), self.marginals[a], self.marginals[b]
        for j in self.joints:
            yield j.label, j


def _point_mass_family(space: FiniteProbSpace, idx_a, idx_b, fid: str, provenance: str,
                       all_pairs: bool = False) -> MeasureFamily:
    atoms = np.union1d(idx_a, idx_b).astype(int)
    pos = {int(a): k for k, a in enumerate(atoms)}
    marg = np.zeros((atoms.size, space.m))
    marg[np.arange(atoms.size), atoms] = 1.0
    labels = tuple(f"d{a}" for a in atoms)
    pairs = None if all_pairs else np.array(
        [(pos[int(a)], pos[int(b)]) for a in idx_a for b in idx_b], dtype=int).reshape(-1, 2)
    return MeasureFamily(fid, provenance, marg, pairs, labels, atoms)


def _proper_tail(X: RandomVariable, p: float, what: str):
    require_surrogate(X, p, what)
    A = tail_event(X, p)
    inside = np.flatnonzero(A.as_sure())
    outside = np.flatnonzero(~A.mask & X.space.support)
    if inside.size == 0 or outside.size == 0:
        raise DegenerateTail(f"{what}tail event at p={p} is empty or full")
    return inside, outside


def family_tail_P(X: RandomVariable, p: float) -> MeasureFamily:
    """Point masses ``delta_w x delta_w'`` with ``w`` in the tail, ``w'`` outside."""
    inside, outside = _proper_tail(X, p, "tail_P: ")
    return _point_mass_family(X.space, inside, outside, f"tail_P({p:g},{X.name})", "tail_P")


def family_tail_Q(X: RandomVariable, p: float) -> MeasureFamily:
    """Point masses ``delta_w x delta_w'`` with both atoms in the tail."""
    inside, _ = _proper_tail(X, p, "tail_Q: ")
    return _point_mass_family(X.space, inside, inside, f"tail_Q({p:g},{X.name})", "tail_Q")


def family_point_masses(space: FiniteProbSpace, diagonal: bool = False) -> MeasureFamily:
    """All point-mass pairs on positive atoms, or only the diagonal ones."""
    atoms = np.flatnonzero(space.support)
    if diagonal:
        fam = _point_mass_family(space, atoms, atoms, "point_masses_diagonal", "point_masses",
                                 all_pairs=True)
        k = atoms.size
        return MeasureFamily(fam.id, fam.provenance, fam.marginals,
                             np.column_stack([np.arange(k), np.arange(k)]), fam.labels, fam.atoms)
    return _point_mass_family(space, atoms, atoms, "point_masses", "point_masses", all_pairs=True)


def explicit_family(members: Sequence, space: FiniteProbSpace, fid: str = "explicit") -> MeasureFamily:
    """Family from explicit ``(pi1, pi2)`` probability-vector pairs and joints."""
    marg, pairs, joints = [], [], []
    for mem in members:
        if isinstance(mem, JointMeasure):
            joints.append(mem)
            continue
        pi1, pi2 = mem
        for pi in (pi1, pi2):
            pv = pi.probs if isinstance(pi, FiniteProbSpace) else np.asarray(pi, dtype=float)
            if pv.shape != (space.m,):
                raise SpaceMismatch("family member has the wrong number of atoms")
            marg.append(pv)
        pairs.append((len(marg) - 2, len(marg) - 1))
    marg = np.array(marg).reshape(-1, space.m)
    pairs = np.array(pairs, dtype=int).reshape(-1, 2)
    labels = tuple(f"pi{k}" for k in range(marg.shape[0]))
    return MeasureFamily(fid, "explicit", marg, pairs, labels, joints=tuple(joints))


def _level_set_unions(X: RandomVariable, max_exhaustive: int, n_samples: int, seed: int):
    support = X.space.support
    levels = np.unique(X.values[support])
    k = levels.size
    member = (X.values[None, :] == levels[:, None]) & support[None, :]
    if k <= max_exhaustive:
        codes = np.arange(1, 2 ** k)
    else:
        rng = np.random.default_rng(seed)
        codes = []
        while len(codes) < n_samples:
            bits = rng.integers(0, 2, size=k)
            if bits.any():
                codes.append(bits)
        codes = np.array(codes)
        masks = (codes.astype(bool)) @ member
        return masks, tuple(f"U{j}" for j in range(len(codes)))
    bits = (codes[:, None] >> np.arange(k)[None, :]) & 1
    masks = bits.astype(bool) @ member
    return masks, tuple(f"U{int(c)}" for c in codes)


def family_set_masses(X: RandomVariable, mode: str = "pairs",
                      max_exhaustive: int = SET_MASS_EXHAUSTIVE_MAX,
                      n_samples: int = SET_MASS_SAMPLES, seed: int = 0) -> MeasureFamily:
    """Conditional measures ``P_A x P_B`` over events generated by ``X``.

    Events are unions of level sets of ``X``.  With at most
    ``max_exhaustive`` distinct values every non-empty union is used;
    otherwise ``n_samples`` random unions are drawn (a sampled, not
    exhaustive, family).  ``mode="diagonal"`` keeps only ``P_A x P_A``.
    """
    if mode not in ("pairs", "diagonal"):
        raise ValueError(f"mode must be 'pairs' or 'diagonal', not {mode!r}")
    masks, labels = _level_set_unions(X, max_exhaustive, n_samples, seed)
    probs = np.where(masks, X.space.probs[None, :], 0.0)
    marg = probs / probs.sum(axis=1, keepdims=True)
    k = marg.shape[0]
    pairs = None if mode == "pairs" else np.column_stack([np.arange(k), np.arange(k)])
    prov = "set_masses" if mode == "pairs" else "set_masses_diagonal"
    return MeasureFamily(f"{prov}({X.name})", prov, marg, pairs, labels)


# --------------------------------------------------------------------------
# Family evaluation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyVerdict:
    all_comonotonic: bool
    all_antimonotonic: bool
    worst_member: tuple  # (measure_id, value) minimizing the integral
    worst_antimonotonic_member: tuple  # (measure_id, value) maximizing it
    n_members: int
    tolerance: float
    family_id: str

    def to_dict(self) -> dict:
        return {
            "family_id": self.family_id,
            "n_members": self.n_members,
            "tolerance": self.tolerance,
            "all_comonotonic": self.all_comonotonic,
            "all_antimonotonic": self.all_antimonotonic,
            "worst_member": {"measure_id": self.worst_member[0], "value": self.worst_member[1]},
            "worst_antimonotonic_member": {"measure_id": self.worst_antimonotonic_member[0],
                                           "value": self.worst_antimonotonic_member[1]},
        }


def family_values(X: RandomVariable, Y: RandomVariable, fam: MeasureFamily,
                  chunk: int = 512):
    """Yield ``(ids, values)`` blocks covering every member of ``fam``."""
    _check_same(X, Y)
    if fam.marginals.shape[1] != X.space.m:
        raise SpaceMismatch("family and random variables have different atom counts")
    x, y = X.values, Y.values
    k = fam.marginals.shape[0]
    if fam.atoms is not None:
        xa, ya = x[fam.atoms], y[fam.atoms]

        def block(a, b):
            return (xa[a] - xa[b]) * (ya[a] - ya[b])
    else:
        ex, ey, exy = fam.marginals @ x, fam.marginals @ y, fam.marginals @ (x * y)

        def block(a, b):
            return exy[a] + exy[b] - ex[a] * ey[b] - ex[b] * ey[a]

    if fam.pairs is None:
        cols = np.arange(k)
        for start in range(0, k, chunk):
            rows = np.arange(start, min(start + chunk, k))
            a = np.repeat(rows, k)
            b = np.tile(cols, rows.size)
            yield (a, b), block(a, b)
    elif len(fam.pairs):
        for start in range(0, len(fam.pairs), chunk * 64):
            pr = fam.pairs[start:start + chunk * 64]
            yield (pr[:, 0], pr[:, 1]), block(pr[:, 0], pr[:, 1])
    for j in fam.joints:
        yield j.label, np.array([wc_joint(X, Y, j).value])


def wc_family(X: RandomVariable, Y: RandomVariable, fam: MeasureFamily,
              tol: float = DEFAULT_TOL) -> FamilyVerdict:
    """Evaluate the integral over every member; reduce by min and max."""
    lo = (None, math.inf)
    hi = (None, -math.inf)
    for ids, vals in family_values(X, Y, fam):
        i, j = int(np.argmin(vals)), int(np.argmax(vals))
        if vals[i] < lo[1]:
            lo = (_block_id(fam, ids, i), float(vals[i]))
        if vals[j] > hi[1]:
            hi = (_block_id(fam, ids, j), float(vals[j]))
    return FamilyVerdict(lo[1] >= -tol, hi[1] <= tol, lo, hi, len(fam), tol, fam.id)


def _block_id(fam, ids, i):
    if isinstance(ids, str):
        return ids
    a, b = ids
    return fam.member_id(int(a[i]), int(b[i]))


def wc_fun_family(g: FunctionHandle, h: FunctionHandle, products: Sequence[ProductMeasure],
                  tol: float = DEFAULT_TOL, fid: str = "explicit") -> FamilyVerdict:
    """:func:`wc_family` for functions on the line and a list of product measures."""
    verdicts = [wc_fun(g, h, pm, tol) for pm in products]
    if not verdicts:
        raise DegenerateTail("empty family")
    lo = min(verdicts, key=lambda v: v.value)
    hi = max(verdicts, key=lambda v: v.value)
    return FamilyVerdict(all(v.comonotonic for v in verdicts), all(v.antimonotonic for v in verdicts),
                         (lo.measure_id, lo.value), (hi.measure_id, hi.value),
                         len(verdicts), max(v.tolerance for v in verdicts), fid)


# --------------------------------------------------------------------------
# Tail lemma and strong checks
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LemmaVarResult:
    wc_PX: bool
    wc_PY: bool
    tails_equal: bool


def lemma_var_check(X: RandomVariable, Y: RandomVariable, p: float, tol: float = 0.0) -> LemmaVarResult:
    """Weak comonotonicity over both tail families versus equality of the tails.

    The three statements are equivalent for distinct values and grid ``p``;
    a disagreement raises :class:`InvariantViolation`.  Point-mass integrals
    are exact products of differences, hence the default ``tol=0``.
    """
    require_surrogate(X, p, "lemma_var_check: ")
    require_surrogate(Y, p, "lemma_var_check: ")
    _check_same(X, Y)
    r = LemmaVarResult(
        wc_family(X, Y, family_tail_P(X, p), tol).all_comonotonic,
        wc_family(X, Y, family_tail_P(Y, p), tol).all_comonotonic,
        tail_event(X, p).equals_as(tail_event(Y, p)),
    )
    if not (r.wc_PX == r.wc_PY == r.tails_equal):
        raise InvariantViolation(f"tail lemma violated at p={p}: {r}")
    return r


@dataclass(frozen=True)
class StrongCheck:
    comonotonic: bool
    antimonotonic: bool
    injective_pair: bool


def _ordered_by_groups(x, y) -> bool:
    # True iff x(w) < x(w') implies y(w) <= y(w') for all atom pairs.
    xs, inv = np.unique(x, return_inverse=True)
    lo = np.full(xs.size, np.inf)
    hi = np.full(xs.size, -np.inf)
    np.minimum.at(lo, inv, y)
    np.maximum.at(hi, inv, y)
    return bool(np.all(hi[:-1] <= lo[1:]))


def strong_check(X: RandomVariable, Y: RandomVariable) -> StrongCheck:
    """Pointwise (strong) co- and antimonotonicity on the positive atoms."""
    _check_same(X, Y)
    keep = X.space.support
    x, y = X.values[keep], Y.values[keep]
    injective = np.unique(x).size == x.size and np.unique(y).size == y.size
    return StrongCheck(_ordered_by_groups(x, y), _ordered_by_groups(x, -y), bool(injective))


# --------------------------------------------------------------------------
# Conditional correlation and Gaussian checks
# --------------------------------------------------------------------------


def cond_corr(X: RandomVariable, Y: RandomVariable, A: Event) -> float:
    """Pearson correlation of ``X`` and ``Y`` under ``P(. | A)``."""
    _check_same(X, Y)
    q = conditional_measure(X.space, A).probs
    mx, my = q @ X.values, q @ Y.values
    dx, dy = X.values - mx, Y.values - my
    vx, vy = q @ (dx * dx), q @ (dy * dy)
    if vx <= 0 or vy <= 0:
        raise DegenerateVariance("a conditional variance vanishes")
    return float(q @ (dx * dy) / math.sqrt(vx * vy))


@dataclass(frozen=True)
class CorrEstimate:
    estimate: float
    std_error: float
    n: int

    @property
    def z(self) -> float:
        return self.estimate / self.std_error if self.std_error > 0 else math.inf

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "std_error": self.std_error, "n": self.n, "z": self.z}


def cond_corr_estimate(X: RandomVariable, Y: RandomVariable, A: Event) -> CorrEstimate:
    """Conditional correlation of an equal-weight sample with its standard error.

    The standard error comes from the influence function of Pearson's r,
    ``zx*zy - r (zx^2 + zy^2) / 2``, which does not assume normality (the
    conditional law of a Gaussian pair given a region is not Gaussian).
    """
    r = cond_corr(X, Y, A)
    x, y = X.values[A.mask], Y.values[A.mask]
    n = x.size
    zx = (x - x.mean()) / x.std()
    zy = (y - y.mean()) / y.std()
    infl = zx * zy - 0.5 * r * (zx * zx + zy * zy)
    return CorrEstimate(r, float(infl.std() / math.sqrt(n)), n)


GAUSSIAN_REGIONS = {
    "X>0": lambda x: x > 0,
    "|X|<1": lambda x: np.abs(x) < 1,
    "X<-1": lambda x: x < -1,
}


def gaussian_sample(c: float, n: int, seed: int = 0):
    """``n`` draws of a standard bivariate Gaussian pair with correlation ``c``."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    z = rng.standard_normal(n)
    y = c * x + math.sqrt(max(1.0 - c * c, 0.0)) * z
    return RandomVariable.equal_weight(x, "X"), RandomVariable.equal_weight(y, "Y")


def gaussian_cond_corr(c: float, region: str, n: int = 10**6, seed: int = 0) -> CorrEstimate:
    X, Y = gaussian_sample(c, n, seed)
    A = Event(X.space, GAUSSIAN_REGIONS[region](X.values))
    return cond_corr_estimate(X, Y, A)


# --------------------------------------------------------------------------
# Joint measures: C^pi, dominance of the product of marginals
# --------------------------------------------------------------------------


def _grid_values(joint: JointMeasure):
    if joint.row_values is None or joint.col_values is None:
        raise ValueError("joint needs row_values and col_values")
    return joint.row_values, joint.col_values


def cross_covariances(g: FunctionHandle, h: FunctionHandle, joint: JointMeasure):
    """``(Cov[g(V), h(W)], Cov[h(V), g(W)])`` for ``(V, W)`` distributed as ``joint``."""
    v, w = _grid_values(joint)
    W = joint.weights

    def cov(f1, f2):
        a, b = f1(v), f2(w)
        return float(a @ W @ b - (joint.pi1 @ a) * (joint.pi2 @ b))

    return cov(g, h), cov(h, g)


def cpi(g: FunctionHandle, h: FunctionHandle, joint: JointMeasure) -> float:
    """Symmetric cross-covariance ``(Cov[g(V),h(W)] + Cov[h(V),g(W)]) / 2``."""
    c1, c2 = cross_covariances(g, h, joint)
    return 0.5 * (c1 + c2)


def cpi_rv(X: RandomVariable, Y: RandomVariable, joint: JointMeasure) -> float:
    """Symmetric cross-covariance of two random variables under a joint on atom pairs."""
    x, y, W = X.values, Y.values, joint.weights
    first = x @ W @ y - (joint.pi1 @ x) * (joint.pi2 @ y)
    second = y @ W @ x - (joint.pi1 @ y) * (joint.pi2 @ x)
    return float(0.5 * (first + second))


@dataclass(frozen=True)
class DominanceGap:
    lhs: float
    rhs: float
    cpi_value: float

    @property
    def product_dominates(self) -> bool:
        return self.lhs <= self.rhs


def product_dominance_gap(X: RandomVariable, Y: RandomVariable, joint: JointMeasure,
                          atol: float = 1e-10) -> DominanceGap:
    """Compare the joint integral with the one under the product of its marginals.

    ``rhs - lhs`` equals ``2 C^pi(X, Y)``, so the product of marginals
    dominates exactly when the symmetric cross-covariance is non-negative.
    """
    lhs = wc_joint(X, Y, joint).value
    rhs = wc_rv(X, Y, FiniteProbSpace(joint.pi1), FiniteProbSpace(joint.pi2)).value
    c = cpi_rv(X, Y, joint)
    scale = max(1.0, float(np.max(np.abs(X.values)) * np.max(np.abs(Y.values))))
    if abs((rhs - lhs) - 2.0 * c) > atol * scale:
        raise InvariantViolation(f"rhs - lhs = {rhs - lhs!r} but 2 C^pi = {2 * c!r}")
    return DominanceGap(lhs, rhs, c)


def h_star(h: FunctionHandle, joint: JointMeasure) -> FunctionHandle:
    """Tabulated ``x -> E[h(Y) | X = x]`` for a joint on an ``(x, y)`` grid (rows are ``x``).

    Exact on the grid points; between them the function is the step taking
    the value at the nearest grid point on the left (first value below).
    """
    xs, ys = _grid_values(joint)
    if np.any(joint.pi1 <= 0):
        raise NullConditioningAtom(f"row {int(np.argmin(joint.pi1))} has zero mass")
    table = joint.weights @ h(ys) / joint.pi1
    order = np.argsort(xs)
    xs_sorted, tab_sorted = xs[order], table[order]

    def fn(x):
        idx = np.searchsorted(xs_sorted, x, side="right") - 1
        return tab_sorted[np.clip(idx, 0, xs_sorted.size - 1)]

    return FunctionHandle(f"{h.id}*[{joint.label}]", fn)


def prd_check(joint: JointMeasure, tol: float = 1e-12) -> bool:
    """Positive regression dependence: ``x -> F(y | x)`` non-increasing for every ``y``."""
    xs, ys = _grid_values(joint)
    if np.any(joint.pi1 <= 0):
        raise NullConditioningAtom(f"row {int(np.argmin(joint.pi1))} has zero mass")
    W = joint.weights[np.argsort(xs)][:, np.argsort(ys)]
    cond_cdf = np.cumsum(W, axis=1) / W.sum(axis=1, keepdims=True)
    return bool(np.all(np.diff(cond_cdf, axis=0) <= tol))


def _subset_indicators(k: int) -> np.ndarray:
    codes = np.arange(1, 2 ** k)
    return ((codes[:, None] >> np.arange(k)[None, :]) & 1).astype(float)


def independence_test_S4(joint: JointMeasure, tol: float = 1e-12, exhaustive_max: int = 8) -> bool:
    """Independence via indicators of rectangle events.

    For every pair of unions ``A`` (rows) and ``B`` (columns) the indicators
    of ``{V in A}`` and ``{W in B}`` must be both weakly comonotonic and
    weakly antimonotonic under ``P x P``, i.e. ``P(A x B) = P(A) P(B)``.
    Grids up to ``exhaustive_max`` on each side are enumerated; larger ones
    are checked on single cells, which is equivalent.
    """
    r, c = joint.shape
    if r <= exhaustive_max and c <= exhaustive_max:
        SA, SB = _subset_indicators(r), _subset_indicators(c)
    else:
        SA, SB = np.eye(r), np.eye(c)
    joint_mass = SA @ joint.weights @ SB.T
    cov = joint_mass - np.outer(SA @ joint.pi1, SB @ joint.pi2)
    # The integral for the indicator pair under P x P is 2 * cov.
    return bool(np.all(np.abs(2.0 * cov) <= tol))
