import math

import numpy as np
import pytest

from treeshift.analytic import (
    bpe_radius,
    cauchy_dual,
    kernel_eval,
    kernel_psd_min_eig,
    model_space,
    mz_gram_check,
    parse_complex,
)
from treeshift.errors import IndexOutOfRange, NotLeftInvertible, RadiusExceeded, TruncationOverflow
from treeshift.generators import random_balanced_shift
from treeshift.seqclass import EventuallyPeriodic, PrefixOnly, bergman, dirichlet
from treeshift.shift import ShiftOperator, balanced_shift, dirichlet_shift, from_weights, moment_table
from treeshift.tree import ALL_RAYS, kary_tree, path_tree, self_similar
from treeshift.wandering import gram_restriction


@pytest.fixture(scope="module")
def dirichlet_binary():
    return dirichlet_shift(kary_tree(2, 6, self_similar(1)), 2)


class TestModel:
    def test_b_weights_match_gram(self, rng):
        bs = random_balanced_shift(rng, depth=7)
        M = model_space(bs)
        for n in range(5):
            G = gram_restriction(bs.operator, n, M.decomposition)
            for k, B in enumerate(G.blocks):
                if B.size:
                    ref = M.b_weights(n, k) ** 2
                    assert np.abs(np.diag(B) - ref).max() <= 1e-12 * ref

    def test_block_levels(self, tree_T_tilde):
        M = model_space(dirichlet_shift(tree_T_tilde, 2))
        assert M.block_levels() == {"root": 0, 1: 2}

    def test_mz_dirichlet(self, dirichlet_binary):
        assert mz_gram_check(dirichlet_binary, 4, rng=0) <= 1e-11

    @pytest.mark.parametrize("seed", range(5))
    def test_mz_random(self, seed):
        rng = np.random.default_rng(seed)
        bs = random_balanced_shift(rng, depth=7, c_range=(0.5, 2.0))
        assert mz_gram_check(bs, 4, trials=4, rng=rng) <= 1e-11

    def test_mz_window(self, dirichlet_binary):
        with pytest.raises(TruncationOverflow):
            mz_gram_check(dirichlet_binary, 7)


class TestKernel:
    def test_origin(self, dirichlet_binary):
        M = model_space(dirichlet_binary)
        for z, w in ((0, 0.3 + 0.2j), (0.5j, 0)):
            kv = kernel_eval(M, z, w)
            assert all(v == 1 for v in kv.blocks.values())

    def test_isometry_geometric(self, tree_T):
        M = model_space(dirichlet_shift(tree_T, 1))
        r = 0.6
        kv = kernel_eval(M, r, r, order=200)
        for v in kv.blocks.values():
            assert math.isclose(v.real, 1 / (1 - r * r), rel_tol=1e-13) and v.imag == 0

    def test_dirichlet_root_block(self, dirichlet_binary):
        # sum (1/4)^n / (n + 1) = 4 log(4/3)
        kv = kernel_eval(model_space(dirichlet_binary), 0.5, 0.5, order=64)
        assert abs(kv.blocks["root"] - 4 * math.log(4 / 3)) <= 1e-15 + kv.tail_bound * 2
        assert kv.tail_bound < 1e-30

    def test_hermitian_exact(self, dirichlet_binary):
        M = model_space(dirichlet_binary)
        a, b = kernel_eval(M, 0.3 + 0.4j, -0.2 + 0.5j), kernel_eval(M, -0.2 + 0.5j, 0.3 + 0.4j)
        for k in a.levels:
            assert a.levels[k] == b.levels[k].conjugate()

    def test_psd(self, dirichlet_binary):
        M = model_space(dirichlet_binary)
        pts = [0, 0.5, 0.3j, -0.4 + 0.4j, 0.7 * np.exp(2j)]
        assert kernel_psd_min_eig(M, pts) >= -1e-10

    def test_outside_radius(self, tree_T):
        M = model_space(dirichlet_shift(tree_T, 1))
        with pytest.warns(RuntimeWarning):
            with pytest.raises(RadiusExceeded):
                kernel_eval(M, 1.1, 1.0)

    def test_bergman_warns_near_boundary(self):
        M = model_space(balanced_shift(kary_tree(2, 4, ALL_RAYS), bergman(2)))
        with pytest.warns(RuntimeWarning):
            kernel_eval(M, 0.99, 0.99)

    def test_prefix_only_truncates_series(self, rng):
        bs = random_balanced_shift(rng, depth=5, c_range=(1.0, 2.0))
        kv = kernel_eval(model_space(bs), 0.3, 0.3)
        assert max(kv.orders.values()) <= 5

    def test_json(self, dirichlet_binary):
        doc = kernel_eval(model_space(dirichlet_binary), 0.1j, 0.2).to_json()
        assert doc["z"] == [0.0, 0.1] and "root" in doc["blocks"]


class TestCauchyDual:
    def test_isometry_is_self_dual(self, tree_T):
        bs = dirichlet_shift(tree_T, 1)
        np.testing.assert_allclose(cauchy_dual(bs).dual_weights, bs.operator.weights, rtol=1e-15)

    def test_path_weight_two(self):
        t = path_tree(5)
        bs = from_weights(t, np.full(6, 2.0))
        np.testing.assert_allclose(cauchy_dual(bs).dual_weights[1:], 0.5, rtol=1e-15)

    def test_dual_moments(self, rng):
        bs = random_balanced_shift(rng, depth=6)
        d = cauchy_dual(bs)
        c = moment_table(bs.operator).c
        np.testing.assert_allclose(moment_table(d.operator).c, 1 / c, rtol=1e-13)
        d.as_balanced().check_consistency()

    def test_not_left_invertible(self):
        t = path_tree(3)
        S = ShiftOperator(t, [0, 1.0, 1e-16, 1.0])
        with pytest.raises(NotLeftInvertible):
            cauchy_dual(from_weights(t, S.weights))


class TestBPE:
    def test_isometry(self):
        rep = bpe_radius(dirichlet(1), 64)
        assert rep.radius == 1.0 and rep.r_dual == 1.0 and rep.certified == "exact"

    def test_dirichlet_two(self):
        rep = bpe_radius(dirichlet(2), 64)
        assert abs(rep.gelfand[-1] - 1) <= 0.05
        assert rep.non_increasing and rep.submultiplicative

    def test_bergman_two_from_above(self):
        rep = bpe_radius(bergman(2), 64)
        assert all(g > 1 for g in rep.gelfand)
        assert all(b <= a for a, b in zip(rep.gelfand, rep.gelfand[1:]))
        assert math.isclose(rep.gelfand[-1], 65 ** (1 / 128), rel_tol=1e-12)

    def test_periodic(self):
        spec = EventuallyPeriodic((), (2, 0.5))
        rep = bpe_radius(spec, 8)
        assert rep.gelfand[0] == 2 and rep.gelfand[1] == 1 and rep.radius == 1.0

    @pytest.mark.parametrize("spec", [dirichlet(3), bergman(1.5, {0: 0.7}), EventuallyPeriodic((3,), (0.5, 2, 1))])
    def test_submultiplicative(self, spec):
        g = bpe_radius(spec, 32).gelfand
        for n in range(1, 17):
            assert g[2 * n - 1] <= g[n - 1] + 1e-12

    def test_prefix(self):
        rep = bpe_radius(PrefixOnly((1.0, 2.0, 0.5)), 3)
        assert rep.certified.startswith("prefix")
        with pytest.raises(IndexOutOfRange):
            bpe_radius(PrefixOnly((1.0, 2.0)), 3)

    def test_not_left_invertible(self):
        with pytest.raises(NotLeftInvertible):
            bpe_radius(PrefixOnly((1.0, 1e-20)), 2)

    def test_from_shift(self, dirichlet_binary):
        assert bpe_radius(dirichlet_binary, 8) == bpe_radius(dirichlet(2), 8)


@pytest.mark.parametrize("text,value", [("1+2i", 1 + 2j), ("0.5", 0.5), ("-i", -1j), ("i", 1j),
                                        ("0.3 - 0.4i", 0.3 - 0.4j), ("2j", 2j)])
def test_parse_complex(text, value):
    assert parse_complex(text) == value
