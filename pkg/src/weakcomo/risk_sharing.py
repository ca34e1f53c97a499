"""Quantile risk sharing under a tail-comonotonicity constraint.

Agents ``i = 1..n`` measure risk with the left quantiles ``Q_{alpha_i}``.  A
total loss ``X`` is split into parts with ``sum(parts) >= X``, and every part
must satisfy ``part ↑_beta X``: on the top ``beta`` share of the outcomes of
``X`` the part is ordered like ``X`` and dominates its values elsewhere.
``beta = 0`` imposes nothing, ``beta = 1`` is strong comonotonicity.

Everything here lives on an equal-weight space with distinct values of
``X`` and grid-aligned levels, where the continuous-case results hold
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ContinuitySurrogateViolated, PartitionInfeasible, PreconditionViolated
from .prob_core import Event, RandomVariable
from .risk_measures import LEVEL_TOL, check_level, equal_weight_left_q, grid_aligned, left_q
from .weak_comon import family_tail_P, tail_event, wc_family


def _on_grid(level: float, m: int) -> bool:
    return abs(level * m - round(level * m)) <= 1e-9


@dataclass(frozen=True)
class SharingProblem:
    X: RandomVariable
    alphas: tuple
    beta: float

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "beta", float(self.beta))
        if not alphas:
            raise ValueError("at least one agent is needed")
        if any(a <= 0 for a in alphas):
            raise ValueError(f"every alpha must be positive, got {alphas}")
        if sum(alphas) >= 1 - 1e-12:
            raise ValueError(f"alphas must sum to less than 1, got {sum(alphas)!r}")
        check_level(self.beta, "beta", closed=True)

    @property
    def n(self) -> int:
        return len(self.alphas)

    @property
    def m(self) -> int:
        return self.X.space.m

    @property
    def gamma(self) -> float:
        return gamma_of(self.alphas, self.beta)

    def check_surrogate(self) -> None:
        """Equal weights, distinct values, and ``beta``, ``gamma`` on the ``1/m`` grid."""
        if not self.X.space.is_equal_weight:
            raise ContinuitySurrogateViolated("X must live on an equal-weight space")
        if self.X.has_ties():
            raise ContinuitySurrogateViolated("X has tied values")
        for name, lvl in (("beta", self.beta), ("gamma", self.gamma)):
            if not _on_grid(lvl, self.m):
                raise ContinuitySurrogateViolated(f"{name}={lvl!r} is not a multiple of 1/{self.m}")


def gamma_of(alphas: Sequence[float], beta: float) -> float:
    """``min(beta, max alpha) + sum((alpha_i - beta)_+)``."""
    return min(beta, max(alphas)) + sum(max(a - beta, 0.0) for a in alphas)


def v_beta(prob: SharingProblem) -> float:
    """Minimal total quantile risk, ``Q_gamma(X)``."""
    prob.check_surrogate()
    return left_q(prob.X, prob.gamma)


# --------------------------------------------------------------------------
# The ↑_beta relation
# --------------------------------------------------------------------------


def _tail_levels(Z: RandomVariable, beta: float):
    m = Z.space.m
    k0 = int(math.ceil((1.0 - beta) * m - 1e-9))
    return [k / m for k in range(max(k0, 1), m)]


def up_beta_check(Y: RandomVariable, Z: RandomVariable, beta: float, tol: float = 0.0,
                  method: str = "sorted") -> bool:
    """Whether ``Y ↑_beta Z``.

    By definition: ``Y`` and ``Z`` are weakly comonotonic over the tail
    families of ``Z`` at every grid level ``p`` in ``[1 - beta, 1)``.  The
    default ``method="sorted"`` uses the equivalent O(m log m) form: with the
    atoms in decreasing order of ``Z``, for every cut ``j`` of the top
    ``beta*m`` atoms, ``min Y`` above the cut is at least ``max Y`` below it.
    ``method="families"`` evaluates the families directly.
    """
    beta = check_level(beta, "beta", closed=True)
    if Y.space.m != Z.space.m:
        raise ValueError("Y and Z live on different spaces")
    if Z.has_ties() or not Z.space.is_equal_weight:
        raise ContinuitySurrogateViolated("Z needs distinct values on an equal-weight space")
    if not _on_grid(beta, Z.space.m):
        raise ContinuitySurrogateViolated(f"1 - beta = {1 - beta!r} is not grid-aligned")
    if method == "families":
        return all(wc_family(Y, Z, family_tail_P(Z, p), tol).all_comonotonic
                   for p in _tail_levels(Z, beta))
    if method != "sorted":
        raise ValueError(f"unknown method {method!r}")
    return bool(up_beta_batch(Y.values[None, :], Z.values, beta, tol)[0])


def up_beta_batch(parts: np.ndarray, z: np.ndarray, beta: float, tol: float = 0.0) -> np.ndarray:
    """Vectorized ``↑_beta`` over the leading axes of ``parts`` (last axis = atoms)."""
    m = z.size
    cuts = int(round(beta * m))
    cuts = min(cuts, m - 1)
    if cuts <= 0:
        return np.ones(parts.shape[:-1], dtype=bool)
    s = parts[..., np.argsort(-z, kind="stable")]
    prefix_min = np.minimum.accumulate(s, axis=-1)[..., :cuts]
    suffix_max = np.maximum.accumulate(s[..., ::-1], axis=-1)[..., ::-1][..., 1:cuts + 1]
    return np.all(prefix_min >= suffix_max - tol, axis=-1)


# --------------------------------------------------------------------------
# Optimal allocation
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Allocation:
    parts: tuple
    covers_total: bool
    up_beta: tuple
    objective: float
    permutation: tuple = ()
    gamma: float = float("nan")
    meta: dict = field(default_factory=dict)

    def as_matrix(self) -> np.ndarray:
        return np.array([p.values for p in self.parts])

    def to_dict(self) -> dict:
        return {
            "parts": [p.values.tolist() for p in self.parts],
            "certificates": {
                "covers_total": self.covers_total,
                "up_beta": list(self.up_beta),
                "objective": self.objective,
            },
            "gamma": self.gamma,
            "permutation": list(self.permutation),
            **self.meta,
        }


def certify(prob: SharingProblem, parts, permutation=(), meta=None) -> Allocation:
    """Wrap parts with their admissibility certificates and objective."""
    parts = tuple(parts)
    mat = np.array([p.values for p in parts])
    covers = bool(np.all(mat.sum(axis=0) >= prob.X.values - 1e-9 * max(1.0, np.abs(prob.X.values).max())))
    up = tuple(bool(b) for b in up_beta_batch(mat, prob.X.values, prob.beta))
    obj = float(sum(left_q(p, a) for p, a in zip(parts, prob.alphas)))
    return Allocation(parts, covers, up, obj, tuple(permutation), prob.gamma, dict(meta or {}))


def solve(prob: SharingProblem) -> Allocation:
    """Explicit optimal allocation attaining ``Q_gamma(X)``.

    Agent order: ``lead`` is the first index of the largest ``alpha``.  If
    ``beta >= max alpha`` the lead agent takes ``X`` and everyone else 0.
    Otherwise, with ``y = Q_beta(X)``, ``z = Q_gamma(X)``, ``B`` the top-``beta``
    event and ``J`` the agents with ``alpha_i > beta``:

    * the event ``{z < X}`` minus ``B`` is cut into pieces ``A_i`` of mass
      ``alpha_i - beta`` (largest values first, agents by decreasing alpha);
    * the lead agent takes ``X`` on ``B``, on ``A_lead`` and on ``{X <= z}``,
      and ``z`` on the other pieces;
    * each other agent in ``J`` takes ``c`` on ``B`` and ``X - z`` on its
      own piece, where ``c = max(y_+, y - z)``;
    * agents outside ``J`` take 0.

    ``c`` equals ``y_+`` whenever ``z >= 0``.  For ``z < 0`` the larger
    constant keeps ``X - z`` on ``A_i`` below the part's values on ``B``.
    """
    prob.check_surrogate()
    X, m, n = prob.X, prob.m, prob.n
    alphas, beta = np.array(prob.alphas), prob.beta
    lead = int(np.argmax(alphas))
    perm = (lead,) + tuple(i for i in np.argsort(-alphas, kind="stable") if i != lead)
    zero = RandomVariable(X.space, np.zeros(m), "0")
    z = left_q(X, prob.gamma)

    if beta >= alphas.max():
        parts = [zero] * n
        parts[lead] = RandomVariable(X.space, X.values.copy(), f"X{lead + 1}")
        return certify(prob, parts, perm, {"case": 1, "z": z})

    J = [i for i in perm if alphas[i] > beta]
    for i in J:
        if not _on_grid(alphas[i] - beta, m):
            raise PartitionInfeasible(
                f"alpha_{i + 1} - beta = {alphas[i] - beta!r} is not a multiple of 1/{m}")

    x = X.values
    y = left_q(X, beta) if beta > 0 else float(x.max())
    B = x > y if beta > 0 else np.zeros(m, dtype=bool)
    top_gamma = x > z
    middle = np.flatnonzero(top_gamma & ~B)
    middle = middle[np.argsort(-x[middle], kind="stable")]
    pieces, start = {}, 0
    for i in J:
        size = int(round((alphas[i] - beta) * m))
        pieces[i] = middle[start:start + size]
        start += size
    if start != middle.size:
        raise PartitionInfeasible(f"pieces cover {start} of {middle.size} atoms")

    c = max(max(y, 0.0), y - z)
    parts = [zero] * n
    lead_vals = np.full(m, z)
    keep = B | ~top_gamma
    keep[pieces[lead]] = True
    lead_vals[keep] = x[keep]
    parts[lead] = RandomVariable(X.space, lead_vals, f"X{lead + 1}")
    for i in J:
        if i == lead:
            continue
        v = np.zeros(m)
        v[B] = c
        v[pieces[i]] = x[pieces[i]] - z
        parts[i] = RandomVariable(X.space, v, f"X{i + 1}")
    meta = {"case": 2, "y": y, "z": z, "c": c, "J": [int(i) for i in J],
            "pieces": {int(i): [int(a) for a in pieces[i]] for i in J}}
    return certify(prob, parts, perm, meta)


# --------------------------------------------------------------------------
# Lower-bound oracle
# --------------------------------------------------------------------------


def _random_admissible(prob: SharingProblem, T: int, rng: np.random.Generator) -> np.ndarray:
    """``T`` random admissible allocations, shape ``(T, n, m)``.

    Off the top-``beta`` event the first ``n - 1`` agents take random
    Dirichlet shares of the loss plus zero-mean noise, and the last agent
    covers the remainder plus non-negative slack.  On the top event the first
    ``n - 1`` agents get non-increasing values above their off-tail maximum,
    and the last agent the smallest non-increasing values that still cover
    ``X``.  A relative pad of ``1e-12`` absorbs rounding in the sums.
    """
    x = prob.X.values
    n, m = prob.n, prob.m
    scale = float(np.std(x)) or 1.0
    pad = 1e-12 * (np.abs(x) + scale)
    order = np.argsort(-x, kind="stable")
    k = min(int(round(prob.beta * m)), m)
    top, rest = order[:k], order[k:]

    out = np.empty((T, n, m))
    share = rng.dirichlet(np.ones(n), size=(T, rest.size)).transpose(0, 2, 1)
    noise = rng.normal(0, scale, size=(T, n - 1, rest.size)) * rng.random((T, 1, 1))
    first = share[:, :-1] * x[rest] + noise
    slack = rng.exponential(scale, size=(T, rest.size)) * (rng.random((T, rest.size)) < 0.1)
    out[:, :-1, rest] = first
    out[:, -1, rest] = x[rest] - first.sum(axis=1) + slack + pad[rest]
    if k == 0:
        return out
    off_max = out[:, :, rest].max(axis=2) if rest.size else np.zeros((T, n))
    gaps = rng.exponential(scale / m, size=(T, n - 1, k)) * (rng.random((T, n - 1, k)) < 0.7)
    # descending order along the top atoms: value_j = off_max + sum_{l >= j} gap_l
    head = off_max[:, :-1, None] + np.cumsum(gaps[:, :, ::-1], axis=2)[:, :, ::-1]
    out[:, :-1, top] = head
    need = np.maximum(x[top] - head.sum(axis=1) + pad[top], off_max[:, -1:])
    out[:, -1, top] = np.maximum.accumulate(need[:, ::-1], axis=1)[:, ::-1]
    return out


def _perturbed_optimum(prob: SharingProblem, base: np.ndarray, T: int, rng) -> np.ndarray:
    """Admissible variations of an allocation: zero-sum shifts and added slack.

    Shifts are multiples of ``2**-10`` so that they cancel exactly.
    """
    n, m = base.shape
    scale = float(np.std(prob.X.values)) or 1.0
    shifts = np.round(rng.normal(0, scale, size=(T, n)) * 1024) / 1024
    shifts[:, -1] = -shifts[:, :-1].sum(axis=1)
    slack = rng.exponential(1.0, size=(T, n, m)) * (rng.random((T, n, m)) < 0.05)
    return base[None] + shifts[:, :, None] + slack


def randomized_admissible_search(prob: SharingProblem, trials: int, seed: int = 0,
                                 batch: int = 2000) -> float:
    """Smallest objective among ``trials`` random admissible allocations.

    Trial 0 is the output of :func:`solve`; the rest are random allocations
    that must pass ``sum >= X`` (exactly, atom by atom) and ``↑_beta`` before
    they count.  Deterministic given ``seed``.
    """
    rng = np.random.default_rng(seed)
    x = prob.X.values
    alphas = prob.alphas
    best = math.inf
    opt = solve(prob).as_matrix()
    pending = [opt[None]]
    left = trials - 1
    while left > 0:
        t = min(batch, left)
        half = t // 2
        pending.append(_random_admissible(prob, t - half, rng))
        if half:
            pending.append(_perturbed_optimum(prob, opt, half, rng))
        left -= t
    for cand in pending:
        ok = np.all(cand.sum(axis=1) >= x, axis=1) & np.all(up_beta_batch(cand, x, prob.beta), axis=1)
        if not ok.any():
            continue
        srt = np.sort(cand[ok], axis=2)
        obj = sum(equal_weight_left_q(srt[:, i, :], a) for i, a in enumerate(alphas))
        best = min(best, float(obj.min()))
    return best


# --------------------------------------------------------------------------
# Quantile identities behind the lower bound
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RS1Predicates:
    """Truth of each identity; ``None`` where that part's precondition fails."""

    i: Optional[bool]
    ii: Optional[bool]
    iii: Optional[bool]
    iv: Optional[bool]
    v: Optional[bool]

    def as_tuple(self):
        return (self.i, self.ii, self.iii, self.iv, self.v)


def _mix(on_b, off_b, B: np.ndarray, space) -> RandomVariable:
    vals = np.where(B, on_b, off_b)
    return RandomVariable(space, np.asarray(vals, dtype=float))


def rs1_part(part: int, Y: RandomVariable, X: RandomVariable, beta: float, alpha: float, z: float,
             check: bool = True) -> bool:
    """Evaluate one identity; with ``check=True`` raise if its precondition fails.

    ``B`` is the top-``beta`` event of ``X``.  Parts:

    1. ``B`` lies in ``{Y >= Q_beta(Y)}`` and its complement in ``{Y <= Q_beta(Y)}``.
    2. ``Q_alpha(Y) = Q_{alpha-beta}(z on B, Y off B)`` for ``alpha > beta``, ``z <= Q_alpha(Y)``.
    3. ``Q_alpha(Y) = Q_alpha(z on B, Y off B)`` for ``alpha > beta``, ``z >= Q_alpha(Y)``.
    4. ``Q_alpha(Y) = Q_alpha(Y on B, z off B)`` for ``alpha <= beta``, ``z <= Q_alpha(Y)``,
       with ``z = Q_alpha(Y)`` when ``alpha = beta`` (any lower ``z`` drags the
       quantile down to ``z`` because ``B`` then carries exactly ``alpha``).
    5. ``Q_alpha(Y) >= Q_{alpha+beta}(z on B, Y off B)`` for ``alpha + beta < 1``.

    Parts 1 to 4 also need ``Y ↑_beta X`` and ``0 < beta < 1``.
    """
    if check:
        reason = _rs1_precondition(part, Y, X, beta, alpha, z)
        if reason:
            raise PreconditionViolated(f"part {part}: {reason}")
    B = tail_event(X, 1.0 - beta).mask
    qa = left_q(Y, alpha)
    if part == 1:
        qb = left_q(Y, beta)
        sure = Y.space.support
        return bool(np.all(Y.values[B & sure] >= qb) and np.all(Y.values[~B & sure] <= qb))
    if part == 2:
        return left_q(_mix(z, Y.values, B, Y.space), alpha - beta) == qa
    if part == 3:
        return left_q(_mix(z, Y.values, B, Y.space), alpha) == qa
    if part == 4:
        return left_q(_mix(Y.values, z, B, Y.space), alpha) == qa
    if part == 5:
        return qa >= left_q(_mix(z, Y.values, B, Y.space), alpha + beta)
    raise ValueError(f"part must be 1..5, got {part}")


def _rs1_precondition(part, Y, X, beta, alpha, z) -> str:
    if not 0.0 < alpha < 1.0:
        return f"alpha={alpha} outside (0, 1)"
    if part == 5:
        if not 0.0 < beta < 1.0:
            return f"beta={beta} outside (0, 1)"
        return "" if alpha + beta < 1.0 - LEVEL_TOL else "needs alpha + beta < 1"
    if not 0.0 < beta < 1.0:
        return f"beta={beta} outside (0, 1)"
    try:
        if not up_beta_check(Y, X, beta):
            return "Y is not ↑_beta X"
    except ContinuitySurrogateViolated as exc:
        return str(exc)
    qa = left_q(Y, alpha)
    if part in (2, 3) and not alpha > beta + LEVEL_TOL:
        return "needs alpha > beta"
    if part == 2 and not z <= qa:
        return "needs z <= Q_alpha(Y)"
    if part == 3 and not z >= qa:
        return "needs z >= Q_alpha(Y)"
    if part == 4:
        if alpha > beta + LEVEL_TOL:
            return "needs alpha <= beta"
        if not z <= qa:
            return "needs z <= Q_alpha(Y)"
        if alpha > beta - LEVEL_TOL and z != qa:
            return "alpha = beta needs z = Q_alpha(Y)"
    return ""


def lemma_rs1_predicates(Y: RandomVariable, X: RandomVariable, beta: float, alpha: float, z: float,
                         strict: bool = False) -> RS1Predicates:
    """All five identities at once.

    Parts whose precondition fails are reported as ``None`` (not asserted),
    or raise :class:`PreconditionViolated` when ``strict``.
    """
    out = []
    for part in range(1, 6):
        reason = _rs1_precondition(part, Y, X, beta, alpha, z)
        if reason:
            if strict:
                raise PreconditionViolated(f"part {part}: {reason}")
            out.append(None)
        else:
            out.append(rs1_part(part, Y, X, beta, alpha, z, check=False))
    return RS1Predicates(*out)
