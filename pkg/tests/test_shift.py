import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treeshift.errors import IndexOutOfRange, NotBalanced, QTooSmall, SpecError, TruncationOverflow
from treeshift.generators import perturb_weight, random_balanced_shift, random_tree
from treeshift.seqclass import dirichlet
from treeshift.shift import (
    ShiftOperator,
    apply_adjoint,
    apply_shift,
    balanced_shift,
    bergman_shift,
    bergman_weights,
    dirichlet_shift,
    dirichlet_weights,
    from_weights,
    is_balanced,
    is_locally_power_balanced,
    moment,
    moment_formula,
    moment_table,
    power_balance_violation,
    power_norms,
)
from treeshift.tree import kary_tree, path_tree


def unit(V, v):
    x = np.zeros(V)
    x[v] = 1.0
    return x


class TestApply:
    def test_path_unit_weights(self):
        t = path_tree(4)
        S = ShiftOperator(t, np.ones(t.n_vertices))
        np.testing.assert_array_equal(apply_shift(S, unit(5, 0)), unit(5, 1))

    def test_two_rays_isometry(self, tree_T):
        S = dirichlet_shift(tree_T, 1).operator
        y = apply_shift(S, unit(tree_T.n_vertices, 0))
        np.testing.assert_allclose(y[1:3], [1 / math.sqrt(2)] * 2, rtol=1e-15)
        assert math.isclose(np.linalg.norm(y), 1.0, rel_tol=1e-15)

    def test_boundary_overflow(self):
        t = path_tree(2)
        S = ShiftOperator(t, np.ones(3))
        with pytest.raises(TruncationOverflow):
            apply_shift(S, unit(3, 2))

    def test_complex_vectors(self, rng):
        S = random_balanced_shift(rng, depth=5).operator
        V = S.n_vertices
        x = rng.standard_normal(V) + 1j * rng.standard_normal(V)
        x[S.tree.gen_ptr[5]:] = 0
        y = rng.standard_normal(V) + 1j * rng.standard_normal(V)
        assert np.isclose(np.vdot(y, apply_shift(S, x)), np.vdot(apply_adjoint(S, y), x), rtol=1e-13)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_adjoint_identity(self, seed):
        rng = np.random.default_rng(seed)
        t = random_tree(rng, int(rng.integers(1, 7)))
        w = rng.uniform(0.1, 3, size=t.n_vertices)
        S = ShiftOperator(t, w)
        x = rng.standard_normal(t.n_vertices)
        x[t.gen_ptr[t.trunc_depth]:] = 0
        y = rng.standard_normal(t.n_vertices)
        lhs, rhs = y @ apply_shift(S, x), apply_adjoint(S, y) @ x
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, np.abs(y).sum() * np.abs(x).sum() * 3)

    def test_adjoint_of_root_is_zero(self, rng):
        S = random_balanced_shift(rng, depth=4).operator
        assert apply_adjoint(S, unit(S.n_vertices, 0))[0] == 0

    def test_rejects_nonpositive_weights(self):
        with pytest.raises(SpecError):
            ShiftOperator(path_tree(2), [0.0, 1.0, 0.0])


class TestBalanced:
    @pytest.mark.parametrize("q", [1, 1.5, 2, 3, math.pi])
    def test_dirichlet(self, q, rng):
        t = random_tree(rng, 6)
        ok, table = is_balanced(ShiftOperator(t, dirichlet_weights(t, q)))
        assert ok
        np.testing.assert_allclose(table.c, [math.sqrt((n + q) / (n + 1)) for n in range(6)], rtol=1e-14)

    @pytest.mark.parametrize("q", [1, 2, 3])
    def test_bergman(self, q, rng):
        t = random_tree(rng, 6)
        ok, table = is_balanced(ShiftOperator(t, bergman_weights(t, q)))
        assert ok
        np.testing.assert_allclose(table.c, [math.sqrt((n + 1) / (n + q)) for n in range(6)], rtol=1e-14)

    def test_perturbed_not_balanced(self, rng):
        bs = random_balanced_shift(rng, depth=6, p_branch=0.9)
        op, u = perturb_weight(rng, bs.operator)
        ok, viol = is_balanced(op)
        assert not ok
        assert viol.generation == op.tree.depth[op.tree.parent[u]]
        with pytest.raises(NotBalanced):
            moment_table(op)
        assert not is_locally_power_balanced(op, 1)
        assert power_balance_violation(op, 1) is not None

    @pytest.mark.parametrize("seed", range(10))
    def test_balanced_iff_power_balanced(self, seed):
        rng = np.random.default_rng(seed)
        bs = random_balanced_shift(rng, depth=7)
        assert is_locally_power_balanced(bs.operator, 6)
        pert = perturb_weight(rng, bs.operator)
        if pert is not None:
            ok, _ = is_balanced(pert[0])
            assert not ok and not is_locally_power_balanced(pert[0], 6)

    def test_path_power_balanced(self, rng):
        t = path_tree(6)
        S = ShiftOperator(t, rng.uniform(0.1, 5, size=7))
        assert is_locally_power_balanced(S, 5)

    def test_power_window_bounds(self):
        S = dirichlet_shift(path_tree(3), 2).operator
        with pytest.raises(TruncationOverflow):
            is_locally_power_balanced(S, 3)

    def test_consistency_check(self, rng):
        bs = random_balanced_shift(rng, depth=5)
        bs.check_consistency()
        from treeshift.shift import BalancedShift

        with pytest.raises(NotBalanced):
            BalancedShift(bs.operator, dirichlet(2)).check_consistency()


class TestMoments:
    def test_zero_power(self, rng):
        S = random_balanced_shift(rng, depth=4).operator
        assert all(moment(S, v, 0) == 1.0 for v in range(S.n_vertices))

    def test_dirichlet_telescoping(self):
        S = dirichlet_shift(kary_tree(2, 5), 2).operator
        assert math.isclose(moment(S, 0, 3), 2.0, rel_tol=1e-14)

    def test_isometry(self, tree_T):
        S = dirichlet_shift(tree_T, 1).operator
        for v in range(S.n_vertices):
            for n in range(0, 5 - int(S.tree.depth[v])):
                assert math.isclose(moment(S, v, n), 1.0, rel_tol=1e-14)

    def test_overflow(self):
        S = dirichlet_shift(path_tree(3), 2).operator
        with pytest.raises(TruncationOverflow):
            moment(S, 1, 3)

    @pytest.mark.parametrize("seed", range(10))
    def test_factorization(self, seed):
        rng = np.random.default_rng(seed)
        bs = random_balanced_shift(rng, depth=8)
        S = bs.operator
        c = moment_table(S).c
        T = power_norms(S, 6)
        for v in range(S.n_vertices):
            d = int(S.tree.depth[v])
            for n in range(min(6, 8 - d) + 1):
                ref = moment_formula(c, d, n)
                assert abs(T[n, v] - ref) <= 1e-12 * ref

    def test_power_norms_vs_moment(self, rng):
        S = ShiftOperator(*(lambda t: (t, rng.uniform(0.3, 2, size=t.n_vertices)))(random_tree(rng, 5)))
        T = power_norms(S, 3)
        for v in range(S.n_vertices):
            for n in range(4):
                if S.tree.depth[v] + n <= 5:
                    assert math.isclose(T[n, v], moment(S, v, n), rel_tol=1e-13)
                else:
                    assert np.isnan(T[n, v])

    def test_formula_with_spec(self):
        assert math.isclose(moment_formula(dirichlet(2), 0, 63), 8.0, rel_tol=1e-12)
        with pytest.raises(IndexOutOfRange):
            moment_formula(np.ones(3), 2, 2)


class TestWeights:
    def test_dirichlet_examples(self):
        assert math.isclose(dirichlet_weights(kary_tree(2, 3), 2)[1], 1.0, rel_tol=1e-15)
        assert math.isclose(dirichlet_weights(path_tree(3), 2)[1], math.sqrt(2), rel_tol=1e-15)

    def test_bergman_example(self):
        assert math.isclose(bergman_weights(kary_tree(2, 3), 2)[1], 0.5, rel_tol=1e-15)

    @pytest.mark.parametrize("fn", [dirichlet_shift, bergman_shift])
    def test_q_one_is_isometry(self, fn, rng):
        t = random_tree(rng, 5)
        np.testing.assert_allclose(moment_table(fn(t, 1).operator).c, 1.0, rtol=1e-15)

    def test_q_too_small(self):
        with pytest.raises(QTooSmall):
            dirichlet_weights(path_tree(2), 0.5)
        with pytest.raises(QTooSmall):
            dirichlet(0.5)

    def test_split_preserves_moments(self, rng):
        t = random_tree(rng, 6, p_branch=0.8)
        split = rng.uniform(0.1, 1, size=t.n_vertices)
        bs = balanced_shift(t, dirichlet(3), split)
        bs.check_consistency()

    def test_from_weights(self, rng):
        bs = random_balanced_shift(rng, depth=5)
        again = from_weights(bs.tree, bs.operator.weights)
        np.testing.assert_allclose([again.moments(n) for n in range(5)],
                                   [bs.moments(n) for n in range(5)], rtol=1e-12)
