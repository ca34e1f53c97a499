import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import equal_weight_pairs
from weakcomo.errors import (
    ContinuitySurrogateViolated,
    DegenerateTail,
    DegenerateVariance,
    NullConditioningAtom,
    NullEvent,
    QuadratureFailure,
    SpaceMismatch,
)
from weakcomo.prob_core import (
    IDENTITY,
    Event,
    FiniteProbSpace,
    FunctionHandle,
    LineMeasure,
    RandomVariable,
    equal_weight_space,
    independent_product,
    joint_distribution,
    joint_from_matrix,
    make_space,
    product_joint,
)
from weakcomo.weak_comon import (
    WcVerdict,
    cond_corr,
    cond_corr_estimate,
    cpi,
    cpi_rv,
    cross_covariances,
    explicit_family,
    family_point_masses,
    family_set_masses,
    family_tail_P,
    family_tail_Q,
    h_star,
    independence_test_S4,
    lemma_var_check,
    prd_check,
    product_dominance_gap,
    strong_check,
    tail_event,
    wc_family,
    wc_fun,
    wc_fun_family,
    wc_joint,
    wc_rv,
    wc_rv_grid,
)

SIN = FunctionHandle("sin", np.sin)
COS = FunctionHandle("cos", np.cos)
EW = RandomVariable.equal_weight


def double_sum(x, y, w1, w2):
    """O(m^2) oracle for the integral under a product of two atom measures."""
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    return float(w1 @ (dx * dy) @ w2)


def two_point_joint():
    return joint_from_matrix([[0.1, 0.2], [0.2, 0.5]], [0.0, math.pi / 2],
                             [2 * math.pi / 3, math.pi])


class TestVerdict:
    @pytest.mark.parametrize("value, cls", [
        (0.5, "comonotonic_witness"),
        (-0.5, "antimonotonic_witness"),
        (1e-12, "both"),
        (float("nan"), "neither"),
    ])
    def test_classification(self, value, cls):
        v = WcVerdict(value, 1e-9, "m")
        assert v.classification == cls
        assert (v.comonotonic and v.antimonotonic) == (abs(value) <= 1e-9)

    def test_to_dict(self):
        d = WcVerdict(-1.0, 0.0, "id").to_dict()
        assert d["measure_id"] == "id" and d["classification"] == "antimonotonic_witness"


class TestWcFun:
    def test_identity_uniform_is_twice_variance(self):
        u = LineMeasure.uniform(0.0, 1.0)
        assert_allclose(wc_fun(IDENTITY, IDENTITY, independent_product(u, u)).value, 1 / 6, atol=1e-14)

    def test_point_masses(self):
        pm = independent_product(LineMeasure.point_mass(0.0), LineMeasure.point_mass(math.pi / 2))
        v = wc_fun(SIN, COS, pm)
        assert_allclose(v.value, -1.0, atol=1e-15)
        assert v.tolerance == 1e-9

    def test_right_window_at_half_pi(self):
        u = LineMeasure.uniform(math.pi / 2, math.pi)
        v = wc_fun(SIN, COS, independent_product(u, u))
        assert_allclose(v.value, 8 / math.pi**2 - 2 / math.pi, atol=1e-12)
        assert v.comonotonic and not v.antimonotonic

    def test_mixed_discrete_and_uniform(self):
        # E over delta_0 x U[0,1] of (x - x')^2 = E[x'^2] = 1/3
        pm = independent_product(LineMeasure.point_mass(0.0), LineMeasure.uniform(0.0, 1.0))
        assert_allclose(wc_fun(IDENTITY, IDENTITY, pm).value, 1 / 3, atol=1e-14)

    def test_quadrature_failure(self):
        wild = FunctionHandle("wild", lambda x: np.sin(400 * x))
        u = LineMeasure.uniform(0.0, 10.0, nodes=16)
        with pytest.raises(QuadratureFailure):
            wc_fun(wild, wild, independent_product(u, u))

    def test_family_of_windows(self):
        ms = [LineMeasure.uniform(math.pi - a, math.pi) for a in np.linspace(0.1, math.pi, 7)]
        fv = wc_fun_family(SIN, COS, [independent_product(m, m) for m in ms])
        assert fv.all_comonotonic and fv.n_members == 7


class TestWcRv:
    @pytest.mark.parametrize("x, y, expected", [
        ([0, 1], [0, 1], 0.5),
        ([0, 1], [1, 0], -0.5),
    ])
    def test_examples(self, x, y, expected):
        assert_allclose(wc_rv(EW(x), EW(y)).value, expected, atol=1e-15)

    def test_independent_coordinates(self):
        space = equal_weight_space(6)
        X = RandomVariable(space, [1, 1, 1, 4, 4, 4])
        Y = RandomVariable(space, [0, 2, 7, 0, 2, 7])
        assert_allclose(wc_rv(X, Y).value, 0.0, atol=1e-12)

    def test_space_mismatch(self):
        with pytest.raises(SpaceMismatch):
            wc_rv(EW([1, 2]), EW([1, 2, 3]))

    @given(st.integers(1, 15), st.integers(0, 2**32 - 1))
    def test_four_expectations_vs_double_sum(self, m, seed):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=m), rng.normal(size=m)
        w1, w2 = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(m))
        X, Y = EW(x), EW(y)
        got = wc_rv(X, Y, FiniteProbSpace(w1), FiniteProbSpace(w2)).value
        assert_allclose(got, double_sum(x, y, w1, w2), atol=1e-12)

    @given(equal_weight_pairs(), st.integers(0, 2**32 - 1))
    def test_symmetry(self, pair, seed):
        X, Y = pair
        rng = np.random.default_rng(seed)
        p1 = FiniteProbSpace(rng.dirichlet(np.ones(X.space.m)))
        p2 = FiniteProbSpace(rng.dirichlet(np.ones(X.space.m)))
        v = wc_rv(X, Y, p1, p2).value
        assert_allclose(wc_rv(Y, X, p1, p2).value, v, atol=1e-10)
        assert_allclose(wc_rv(X, Y, p2, p1).value, v, atol=1e-10)

    @given(equal_weight_pairs(), st.floats(0.1, 5), st.floats(0.1, 5),
           st.floats(-5, 5), st.floats(-5, 5))
    def test_increasing_linear_maps(self, pair, l1, l2, a1, a2):
        X, Y = pair
        v = wc_rv(X, Y).value
        w = wc_rv(l1 * X + a1, l2 * Y + a2).value
        assert_allclose(w, l1 * l2 * v, rtol=1e-9, atol=1e-8)
        if abs(v) > 1e-6:
            assert np.sign(w) == np.sign(v)

    @given(equal_weight_pairs())
    def test_twice_the_covariance(self, pair):
        X, Y = pair
        cov = np.cov(X.values, Y.values, bias=True)[0, 1]
        assert_allclose(wc_rv(X, Y).value, 2 * cov, atol=1e-12)


class TestWcJoint:
    def test_product_joint_matches_wc_rv(self, rng):
        x, y = rng.normal(size=5), rng.normal(size=5)
        p1, p2 = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
        j = product_joint(p1, p2)
        assert_allclose(wc_joint(EW(x), EW(y), j).value,
                        wc_rv(EW(x), EW(y), FiniteProbSpace(j.pi1), FiniteProbSpace(j.pi2)).value,
                        atol=1e-12)

    def test_diagonal_joint_is_zero(self, rng):
        x, y = rng.normal(size=4), rng.normal(size=4)
        assert wc_joint(EW(x), EW(y), joint_from_matrix(np.diag([0.1, 0.2, 0.3, 0.4]))).value == 0

    def test_two_point_joint_on_common_support(self):
        j = two_point_joint()
        v = wc_rv_grid(SIN, COS, j).value
        sq, support = j.on_common_support()
        x, y = np.sin(support), np.cos(support)
        oracle = float(np.sum(sq.weights * (x[:, None] - x[None, :]) * (y[:, None] - y[None, :])))
        assert_allclose(v, oracle, atol=1e-15)
        space = FiniteProbSpace(np.full(support.size, 1 / support.size))
        gap = product_dominance_gap(RandomVariable(space, x), RandomVariable(space, y), sq)
        assert_allclose(gap.rhs - v, 2 * gap.cpi_value, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(SpaceMismatch):
            wc_joint(EW([1, 2, 3]), EW([1, 2, 3]), joint_from_matrix(np.eye(2) / 2))


class TestTailEvent:
    def test_top_atom(self):
        A = tail_event(EW([1, 2, 3, 4, 5]), 0.8)
        assert A.members == (4,)
        assert_allclose(A.probability, 0.2)

    def test_grid_level_has_mass_one_minus_p(self):
        A = tail_event(EW([1, 2, 3, 4, 5]), 0.6)
        assert A.members == (3, 4)
        assert_allclose(A.probability, 0.4)

    def test_constant_is_empty(self):
        assert len(tail_event(EW([2, 2, 2]), 0.5)) == 0

    def test_closed_ends(self):
        X = EW([3, 1, 2])
        assert len(tail_event(X, 0.0)) == 3 and len(tail_event(X, 1.0)) == 0

    @given(st.lists(st.integers(-50, 50), min_size=2, max_size=20, unique=True), st.data())
    def test_mass_on_grid(self, x, data):
        m = len(x)
        k = data.draw(st.integers(1, m - 1))
        X = EW(x)
        A = tail_event(X, k / m)
        assert len(A) == m - k
        assert min(X.values[A.mask]) > max(X.values[~A.mask])


class TestTailFamilies:
    def test_three_atoms(self):
        fam = family_tail_P(EW([1, 2, 3]), 2 / 3)
        assert len(fam) == 2 and set(fam.atoms) == {0, 1, 2}

    def test_four_atoms(self):
        X = EW([1, 2, 3, 4])
        assert len(family_tail_P(X, 0.5)) == 4
        q = family_tail_Q(X, 0.5)
        assert len(q) == 4 and set(q.atoms) == {2, 3}

    def test_singleton_q_is_zero(self):
        X = EW([1, 2, 3, 4])
        q = family_tail_Q(X, 0.75)
        assert len(q) == 1
        v = wc_family(X, EW([9, -1, 3, 0]), q, tol=0)
        assert v.all_comonotonic and v.all_antimonotonic

    @pytest.mark.parametrize("builder", [family_tail_P, family_tail_Q])
    def test_constant_is_surrogate_error(self, builder):
        with pytest.raises(ContinuitySurrogateViolated):
            builder(EW([1, 1, 1, 1]), 0.5)

    @pytest.mark.parametrize("p", [0.0, 1.0])
    def test_degenerate_tail(self, p):
        with pytest.raises(DegenerateTail):
            family_tail_P(EW([1, 2, 3]), p)

    def test_off_grid(self):
        with pytest.raises(ContinuitySurrogateViolated):
            family_tail_P(EW([1, 2, 3, 4, 5]), 0.5)


class TestWcFamily:
    @given(equal_weight_pairs())
    def test_self_pair(self, pair):
        X, _ = pair
        assert wc_family(X, X, family_set_masses(X)).all_comonotonic

    def test_strong_comonotone_over_point_masses(self):
        X, Y = EW([1, 5, 2, 7]), EW([0, 3, 1, 9])
        assert wc_family(X, Y, family_point_masses(X.space)).all_comonotonic

    def test_reversed_over_tail(self):
        X, Y = EW([1, 2, 3, 4]), EW([4, 3, 2, 1])
        v = wc_family(X, Y, family_tail_P(X, 0.5))
        brute = [(X.values[a] - X.values[b]) * (Y.values[a] - Y.values[b]) for a in (2, 3) for b in (0, 1)]
        assert not v.all_comonotonic
        assert v.worst_member[1] == min(brute)

    def test_explicit_with_joint(self):
        X, Y = EW([0, 1]), EW([0, 1])
        fam = explicit_family([([0.5, 0.5], [0.5, 0.5]), joint_from_matrix(np.eye(2) / 2)], X.space)
        v = wc_family(X, Y, fam)
        assert len(fam) == 2 and v.all_comonotonic
        assert v.worst_member[1] == 0.0 and v.worst_antimonotonic_member[1] == 0.5


class TestSetMasses:
    def test_counts(self):
        X = EW([1, 2, 1, 2, 2])
        assert len(family_set_masses(X)) == 9
        assert len(family_set_masses(X, "diagonal")) == 3

    def test_independent_pair_is_both(self):
        space = equal_weight_space(9)
        X = RandomVariable(space, np.repeat([1.0, 2.0, 5.0], 3))
        Y = RandomVariable(space, np.tile([0.0, 3.0, 4.0], 3))
        v = wc_family(X, Y, family_set_masses(X))
        assert v.all_comonotonic and v.all_antimonotonic

    def test_sampled_beyond_limit(self):
        X = EW(np.arange(14))
        fam = family_set_masses(X, max_exhaustive=12, n_samples=20, seed=3)
        assert fam.marginals.shape == (20, 14)
        again = family_set_masses(X, max_exhaustive=12, n_samples=20, seed=3)
        assert np.array_equal(fam.marginals, again.marginals)

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            family_set_masses(EW([1, 2]), "both")


class TestLemmaVar:
    def test_square(self):
        X = EW([1, 2, 3, 4, 5])
        r = lemma_var_check(X, X * X, 0.6)
        assert r.wc_PX and r.wc_PY and r.tails_equal

    def test_reversed(self):
        X = EW([1, 2, 3, 4, 5])
        r = lemma_var_check(X, -X, 0.6)
        assert not (r.wc_PX or r.wc_PY or r.tails_equal)

    @given(equal_weight_pairs(min_m=2, max_m=10, distinct=True), st.data())
    def test_three_statements_agree(self, pair, data):
        X, Y = pair
        m = X.space.m
        k = data.draw(st.integers(1, m - 1))
        r = lemma_var_check(X, Y, k / m)
        assert r.wc_PX == r.wc_PY == r.tails_equal

    def test_requires_distinct_values(self):
        with pytest.raises(ContinuitySurrogateViolated):
            lemma_var_check(EW([1, 1, 2, 3]), EW([1, 2, 3, 4]), 0.5)


class TestStrongCheck:
    def test_examples(self):
        X = EW([3, 1, 2])
        assert strong_check(X, 2 * X + 1).comonotonic
        s = strong_check(X, -X)
        assert s.antimonotonic and s.injective_pair and not s.comonotonic
        t = strong_check(EW([1, 1, 2]), EW([1, 2, 2]))
        assert t.comonotonic and not t.injective_pair

    @given(equal_weight_pairs(min_m=1, max_m=12))
    def test_point_mass_equivalence(self, pair):
        X, Y = pair
        fam = family_point_masses(X.space)
        v = wc_family(X, Y, fam, tol=0)
        s = strong_check(X, Y)
        assert s.comonotonic == v.all_comonotonic
        assert s.antimonotonic == v.all_antimonotonic

    @given(equal_weight_pairs(min_m=2, max_m=10, distinct=True))
    def test_only_diagonal_survives_for_injective_antimonotone(self, pair):
        X, _ = pair
        Y = -X
        fam = family_point_masses(X.space)
        k = fam.marginals.shape[0]
        nonneg = [(a, b) for a in range(k) for b in range(k)
                  if (X.values[a] - X.values[b]) * (Y.values[a] - Y.values[b]) >= 0]
        assert nonneg == [(a, a) for a in range(k)]


class TestCondCorr:
    def test_self(self):
        X = EW([1, 4, 2, 8, 5])
        A = Event.from_indices(X.space, [0, 1, 3])
        assert_allclose(cond_corr(X, X, A), 1.0, atol=1e-15)

    def test_independent_full_space(self):
        space = equal_weight_space(4)
        X = RandomVariable(space, [0, 0, 1, 1])
        Y = RandomVariable(space, [0, 1, 0, 1])
        assert_allclose(cond_corr(X, Y, Event(space, np.ones(4, bool))), 0.0, atol=1e-15)

    def test_errors(self):
        X = EW([1, 2, 3])
        with pytest.raises(NullEvent):
            cond_corr(X, X, Event.from_indices(X.space, []))
        with pytest.raises(DegenerateVariance):
            cond_corr(X, X, Event.from_indices(X.space, [1]))

    def test_standard_error_is_sensible(self, rng):
        x = rng.normal(size=4000)
        X, Y = EW(x), EW(0.3 * x + rng.normal(size=4000))
        est = cond_corr_estimate(X, Y, Event(X.space, np.ones(4000, bool)))
        assert 0 < est.std_error < 0.05 and est.n == 4000

    @given(equal_weight_pairs(min_m=3, max_m=10), st.data())
    def test_sign_matches_conditional_integral(self, pair, data):
        X, Y = pair
        members = data.draw(st.sets(st.integers(0, X.space.m - 1), min_size=2))
        A = Event.from_indices(X.space, members)
        x, y = X.values[A.mask], Y.values[A.mask]
        assume(np.ptp(x) > 0 and np.ptp(y) > 0)
        pa = FiniteProbSpace(np.where(A.mask, 1.0, 0.0) / len(A))
        v = wc_rv(X, Y, pa, pa).value
        r = cond_corr(X, Y, A)
        assert (v >= 0) == (r >= -1e-12) or abs(v) < 1e-9


class TestJointFunctions:
    def test_cpi_two_point(self):
        j = two_point_joint()
        c1, c2 = cross_covariances(SIN, COS, j)
        assert_allclose(c1, -0.005, atol=1e-12)
        assert_allclose(c2, math.sqrt(3) / 200, atol=1e-12)
        assert_allclose(cpi(SIN, COS, j), 0.5 * (-1 + math.sqrt(3)) / 200, atol=1e-12)

    def test_cpi_same_function(self):
        j = two_point_joint()
        a, b = np.sin(j.row_values), np.sin(j.col_values)
        cov = a @ j.weights @ b - (j.pi1 @ a) * (j.pi2 @ b)
        assert_allclose(cpi(SIN, SIN, j), cov, atol=1e-15)

    def test_cpi_independent(self):
        j = product_joint([0.3, 0.7], [0.4, 0.6], [0.0, 1.0], [2.0, 5.0])
        assert_allclose(cpi(SIN, COS, j), 0.0, atol=1e-15)

    def test_dominance_product_joint(self):
        j = product_joint([0.2, 0.8], [0.2, 0.8])
        X, Y = EW([1.0, 3.0]), EW([2.0, -1.0])
        g = product_dominance_gap(X, Y, j)
        assert_allclose(g.lhs, g.rhs, atol=1e-15)
        assert_allclose(g.cpi_value, 0.0, atol=1e-15)

    def test_dominance_comonotone(self):
        X = EW([-1.0, 1.0])
        g = product_dominance_gap(X, X, joint_from_matrix(np.eye(2) / 2))
        assert g.lhs == 0.0 and g.rhs == 2.0 and g.product_dominates

    @given(st.integers(2, 7), st.integers(0, 2**32 - 1))
    def test_dominance_identity(self, m, seed):
        rng = np.random.default_rng(seed)
        w = rng.random((m, m))
        j = joint_from_matrix(w / w.sum())
        X, Y = EW(rng.normal(size=m)), EW(rng.normal(size=m))
        g = product_dominance_gap(X, Y, j)
        assert_allclose(g.rhs - g.lhs, 2 * cpi_rv(X, Y, j), atol=1e-10)
        assert g.product_dominates == (g.cpi_value >= 0) or abs(g.cpi_value) < 1e-12

    def test_h_star(self):
        hs = h_star(COS, two_point_joint())
        assert_allclose(hs(0.0), -5 / 6, atol=1e-15)
        diag = joint_from_matrix(np.eye(3) / 3, [0.0, 1.0, 2.0], [0.0, 1.0, 2.0])
        assert_allclose(h_star(COS, diag)([0.0, 1.0, 2.0]), np.cos([0.0, 1.0, 2.0]))
        ind = product_joint([0.5, 0.5], [0.25, 0.75], [0.0, 1.0], [0.0, math.pi])
        assert_allclose(h_star(COS, ind)([0.0, 1.0]), [-0.5, -0.5])

    def test_null_row(self):
        j = joint_from_matrix([[0.0, 0.0], [0.5, 0.5]], [0.0, 1.0], [0.0, 1.0])
        with pytest.raises(NullConditioningAtom):
            h_star(COS, j)
        with pytest.raises(NullConditioningAtom):
            prd_check(j)

    def test_prd(self):
        grid = [0.0, 1.0, 2.0]
        assert prd_check(joint_from_matrix(np.eye(3) / 3, grid, grid))
        assert prd_check(product_joint([0.2, 0.3, 0.5], [0.5, 0.25, 0.25], grid, grid))
        assert not prd_check(joint_from_matrix(np.fliplr(np.eye(3)) / 3, grid, grid))

    def test_independence(self):
        assert independence_test_S4(product_joint([0.3, 0.7], [0.5, 0.5]))
        assert not independence_test_S4(two_point_joint())
        assert not independence_test_S4(joint_from_matrix(np.eye(3) / 3))


class TestAssociation:
    @given(st.integers(2, 12), st.integers(0, 2**32 - 1))
    def test_spearman_sign(self, m, seed):
        rng = np.random.default_rng(seed)
        x, y = rng.permutation(m) + 0.0, rng.permutation(m) + 0.0
        rx, ry = EW((np.argsort(np.argsort(x)) + 1) / m), EW((np.argsort(np.argsort(y)) + 1) / m)
        v = wc_rv(rx, ry).value
        rho = np.corrcoef(rx.values, ry.values)[0, 1]
        assert np.sign(round(v, 12)) == np.sign(round(rho, 12))

    @given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 2**32 - 1))
    def test_conditional_expectation_chain(self, r, c, seed):
        # Cov[g(V), h(W)] = Cov[g(V), h*(V)] and both integrals agree
        rng = np.random.default_rng(seed)
        w = rng.random((r, c)) + 0.01
        xs, ys = np.sort(rng.normal(size=r)), np.sort(rng.normal(size=c))
        j = joint_from_matrix(w / w.sum(), xs, ys)
        g, h = FunctionHandle("g", np.tanh), FunctionHandle("h", lambda t: t**3)
        hs = h_star(h, j)
        rows, cols = np.nonzero(np.ones((r, c)))
        space = FiniteProbSpace(j.weights.ravel())
        lhs = wc_rv(RandomVariable(space, g(xs[rows])), RandomVariable(space, h(ys[cols]))).value
        fx = LineMeasure.atoms(xs, j.pi1)
        rhs = wc_fun(g, hs, independent_product(fx, fx)).value
        assert_allclose(lhs, rhs, atol=1e-10)

    @given(st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_prd_implies_wc_of_conditional_expectation(self, k, seed):
        rng = np.random.default_rng(seed)
        # a positively regression dependent joint: comonotone mixture with an independent one
        lam = rng.random()
        grid = np.arange(k, dtype=float)
        w = lam * np.eye(k) / k + (1 - lam) * np.full((k, k), 1 / k**2)
        j = joint_from_matrix(w, grid, grid)
        assert prd_check(j)
        g = FunctionHandle("g", lambda t: t**3, "nondecreasing")
        h = FunctionHandle("h", np.tanh, "nondecreasing")
        hs = h_star(h, j)
        for _ in range(10):
            m1 = LineMeasure.atoms(grid, rng.dirichlet(np.ones(k)))
            m2 = LineMeasure.atoms(grid, rng.dirichlet(np.ones(k)))
            assert wc_fun(g, hs, independent_product(m1, m2)).comonotonic

    def test_joint_distribution_roundtrip(self):
        X, Y = EW([0, 1, 1, 2]), EW([1, 1, 2, 2])
        j = joint_distribution(X, Y)
        assert not independence_test_S4(j)
