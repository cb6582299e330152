"""Weighted shifts ``S`` on a truncated rooted tree.

``S e_v = sum(lam_u e_u for u in Chi(v))``, so ``(S x)(u) = lam_u x(par(u))``
and ``(S* x)(v) = sum(lam_u x(u) for u in Chi(v))``.  Vectors are numpy arrays
indexed by vertex id (1-D, or 2-D with one column per vector).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import IndexOutOfRange, NotBalanced, QTooSmall, SpecError, TruncationOverflow
from .seqclass import ClosedForm, MomentSequenceSpec, PrefixOnly, evaluate
from .tree import RootedTree

RTOL = 1e-12


class ShiftOperator:
    """A weighted shift with positive weights on a truncated tree.

    ``weights[u]`` is ``lam_u`` for non-root ``u``; ``weights[0]`` is unused
    and stored as ``0.0``.  ``local_norms[v] = ||S e_v||`` is ``nan`` on the
    last generation, whose children lie outside the truncation.
    """

    def __init__(self, tree: RootedTree, weights):
        w = np.array(weights, dtype=np.float64)
        if w.shape != (tree.n_vertices,):
            raise SpecError(f"expected {tree.n_vertices} weights, got shape {w.shape}")
        w[0] = 0.0
        if not np.all(w[1:] > 0) or not np.all(np.isfinite(w)):
            bad = int(np.flatnonzero(~(w[1:] > 0) | ~np.isfinite(w[1:]))[0]) + 1
            raise SpecError(f"weight of vertex {bad} must be positive and finite, got {w[bad]}")
        w.setflags(write=False)
        self.tree = tree
        self.weights = w
        sq = _kernels.segment_sum_scaled(tree.child_ptr, w * w, np.ones(tree.n_vertices))
        norms = np.sqrt(sq)
        norms[tree.gen_ptr[tree.trunc_depth]:] = np.nan
        norms.setflags(write=False)
        self.local_norms = norms

    @property
    def n_vertices(self) -> int:
        return self.tree.n_vertices

    @property
    def norm_estimate(self) -> float:
        """``sup_v ||S e_v||`` over the truncation (equals ``||S||`` restricted there)."""
        finite = self.local_norms[np.isfinite(self.local_norms)]
        return float(finite.max()) if finite.size else 0.0

    def apply(self, x):
        return apply_shift(self, x)

    def adjoint(self, x):
        return apply_adjoint(self, x)

    def __repr__(self):
        return f"ShiftOperator({self.tree!r})"


def _check_vector(S: ShiftOperator, x):
    x = np.asarray(x)
    if x.shape[0] != S.n_vertices:
        raise ValueError(f"vector has {x.shape[0]} entries, tree has {S.n_vertices} vertices")
    return x


def apply_shift(S: ShiftOperator, x):
    """``S x``; raises :class:`TruncationOverflow` if ``x`` touches depth ``D``."""
    x = _check_vector(S, x)
    last = int(S.tree.gen_ptr[S.tree.trunc_depth])
    if np.any(x[last:] != 0):
        raise TruncationOverflow("vector is supported on the truncation boundary")
    dtype = np.complex128 if x.dtype.kind == "c" else np.float64
    out = np.zeros(x.shape, dtype=dtype)
    out[1:] = _kernels.gather_scale(S.tree.parent[1:], S.weights[1:], x)
    return out


def apply_adjoint(S: ShiftOperator, x):
    """``S* x``."""
    x = _check_vector(S, x)
    return _kernels.segment_sum_scaled(S.tree.child_ptr, S.weights, x)


def power_norms(S: ShiftOperator, N: int) -> np.ndarray:
    """Table ``T[n, v] = ||S^n e_v||`` for ``0 <= n <= N``; ``nan`` where
    ``depth(v) + n`` exceeds the truncation."""
    P = _kernels.power_norms_sq(S.tree.child_ptr, S.weights**2, N)
    T = np.sqrt(P)
    D = S.tree.trunc_depth
    for n in range(1, N + 1):
        if n > D:
            T[n] = np.nan
        else:
            T[n, S.tree.gen_ptr[D - n + 1]:] = np.nan
    return T


def shift_generation(S: ShiftOperator, X, g: int):
    """``S`` restricted to generation ``g``: rows of ``X`` are the vertices of
    ``G_g`` in order, rows of the result those of ``G_{g+1}``."""
    tree = S.tree
    if g >= tree.trunc_depth:
        raise TruncationOverflow(f"generation {g} has no children inside the truncation")
    lo, hi = int(tree.gen_ptr[g + 1]), int(tree.gen_ptr[g + 2])
    idx = tree.parent[lo:hi] - tree.gen_ptr[g]
    return _kernels.gather_scale(idx, S.weights[lo:hi], X)


def adjoint_generation(S: ShiftOperator, X, g: int):
    """``S*`` from vectors on ``G_g`` (rows of ``X``) to vectors on ``G_{g-1}``."""
    tree = S.tree
    if g < 1:
        return np.zeros((0,) + np.shape(X)[1:], dtype=np.asarray(X).dtype)
    lo, hi = int(tree.gen_ptr[g]), int(tree.gen_ptr[g + 1])
    ptr = tree.child_ptr[int(tree.gen_ptr[g - 1]):lo + 1] - lo
    return _kernels.segment_sum_scaled(ptr, S.weights[lo:hi], X)


# ---------------------------------------------------------------- balancedness


@dataclass(frozen=True)
class MomentTable:
    """``c[n]``, the common value of ``||S e_v||`` on generation ``n``."""

    c: np.ndarray

    def __len__(self):
        return len(self.c)

    def __getitem__(self, n):
        return self.c[n]

    def as_spec(self) -> PrefixOnly:
        return PrefixOnly(tuple(float(v) for v in self.c))


@dataclass(frozen=True)
class BalanceViolation:
    generation: int
    u: int
    v: int
    norm_u: float
    norm_v: float


def is_balanced(S: ShiftOperator, rtol: float = RTOL):
    """``(True, MomentTable)`` or ``(False, BalanceViolation)``."""
    tree = S.tree
    c = np.empty(tree.trunc_depth)
    for n in range(tree.trunc_depth):
        gen = tree.generation_range(n)
        vals = S.local_norms[gen.start:gen.stop]
        ref = vals[0]
        bad = np.flatnonzero(np.abs(vals - ref) > rtol * np.maximum(np.abs(vals), abs(ref)))
        if bad.size:
            j = int(bad[0])
            return False, BalanceViolation(n, gen.start, gen.start + j, float(ref), float(vals[j]))
        c[n] = ref
    c.setflags(write=False)
    return True, MomentTable(c)


def moment_table(S: ShiftOperator, rtol: float = RTOL) -> MomentTable:
    ok, res = is_balanced(S, rtol)
    if not ok:
        raise NotBalanced(f"shift is not balanced: {res}")
    return res


def power_balance_violation(S: ShiftOperator, N: int, rtol: float = RTOL):
    """First sibling pair ``(n, u, v)`` with ``||S^n e_u|| != ||S^n e_v||``, or None."""
    D = S.tree.trunc_depth
    if N < 1 or N > D - 1:
        raise TruncationOverflow(f"power N={N} outside 1..{D - 1}")
    T = power_norms(S, N)
    parent = S.tree.parent[1:]
    first_sibling = S.tree.child_ptr[parent]
    for n in range(1, N + 1):
        vals = T[n, 1:]
        ref = T[n, first_sibling]
        ok = np.isnan(vals) | (np.abs(vals - ref) <= rtol * np.maximum(vals, ref))
        if not ok.all():
            j = int(np.flatnonzero(~ok)[0])
            return n, int(first_sibling[j]), j + 1
    return None


def is_locally_power_balanced(S: ShiftOperator, N: int, rtol: float = RTOL) -> bool:
    """Siblings have equal ``||S^n e_u||`` for ``n = 1..N`` wherever the
    truncation determines the value."""
    return power_balance_violation(S, N, rtol) is None


def moment(S: ShiftOperator, v: int, n: int) -> float:
    """``||S^n e_v||`` by repeated application of ``S``."""
    D = S.tree.trunc_depth
    if n < 0 or S.tree.depth[v] + n > D:
        raise TruncationOverflow(f"S^{n} e_{v} leaves the truncation (depth {D})")
    x = np.zeros(S.n_vertices)
    x[v] = 1.0
    for _ in range(n):
        x = apply_shift(S, x)
    return float(np.linalg.norm(x))


def moment_formula(c, d: int, n: int) -> float:
    """``c[d] * c[d+1] * ... * c[d+n-1]``."""
    if d < 0 or n < 0:
        raise IndexOutOfRange("negative index")
    if isinstance(c, MomentSequenceSpec):
        return math.prod(evaluate(c, d + j) for j in range(n))
    if d + n > len(c):
        raise IndexOutOfRange(f"moment table has {len(c)} entries, need index {d + n - 1}")
    return math.prod(float(c[d + j]) for j in range(n))


# ---------------------------------------------------------------- constructors


def _family_weights(tree: RootedTree, q: float, dirichlet: bool) -> np.ndarray:
    q = float(q)
    if q < 1:
        raise QTooSmall(q)
    parent = tree.parent[1:]
    d = tree.depth[parent].astype(np.float64)
    ratio = (d + q) / (d + 1) if dirichlet else (d + 1) / (d + q)
    w = np.zeros(tree.n_vertices)
    w[1:] = np.sqrt(ratio) / np.sqrt(tree.num_children[parent])
    return w


def dirichlet_weights(tree: RootedTree, q) -> np.ndarray:
    """``lam_u = sqrt((d_v+q)/(d_v+1)) / sqrt(Card Chi(v))`` for ``u`` in ``Chi(v)``."""
    return _family_weights(tree, q, True)


def bergman_weights(tree: RootedTree, q) -> np.ndarray:
    """``lam_u = sqrt((d_v+1)/(d_v+q)) / sqrt(Card Chi(v))`` for ``u`` in ``Chi(v)``."""
    return _family_weights(tree, q, False)


def balanced_weights(tree: RootedTree, moments, split=None) -> np.ndarray:
    """Weights with ``||S e_v|| = c_{d_v}``.

    ``moments`` is a sequence spec or an array of at least ``D`` values.
    ``split`` optionally gives positive per-vertex shares; siblings divide
    ``c_{d_v}**2`` in proportion to them (uniformly by default).
    """
    D = tree.trunc_depth
    if isinstance(moments, MomentSequenceSpec):
        c = np.array([evaluate(moments, n) for n in range(D)])
    else:
        c = np.asarray(moments, dtype=np.float64)[:D]
        if c.shape[0] < D:
            raise IndexOutOfRange(f"need {D} moments, got {c.shape[0]}")
    parent = tree.parent[1:]
    if split is None:
        share = 1.0 / tree.num_children[parent]
    else:
        s = np.asarray(split, dtype=np.float64)[1:]
        totals = np.zeros(tree.n_vertices)
        np.add.at(totals, parent, s)
        share = s / totals[parent]
    w = np.zeros(tree.n_vertices)
    w[1:] = c[tree.depth[parent]] * np.sqrt(share)
    return w


@dataclass(frozen=True)
class BalancedShift:
    """A balanced shift together with an exact description of its moments."""

    operator: ShiftOperator
    moments: MomentSequenceSpec

    @property
    def tree(self) -> RootedTree:
        return self.operator.tree

    def check_consistency(self, rtol: float = 1e-12):
        """Measured ``c_n`` on the truncation must match the description."""
        table = moment_table(self.operator, rtol)
        for n, val in enumerate(table.c):
            ref = evaluate(self.moments, n)
            if abs(val - ref) > rtol * max(val, ref):
                raise NotBalanced(f"c_{n} measured {val!r}, described {ref!r}")
        return table


def balanced_shift(tree: RootedTree, moments: MomentSequenceSpec, split=None) -> BalancedShift:
    if isinstance(moments, ClosedForm) and not moments.overrides and split is None:
        fn = dirichlet_weights if moments.family == "dirichlet" else bergman_weights
        w = fn(tree, moments.q)
    else:
        w = balanced_weights(tree, moments, split)
    return BalancedShift(ShiftOperator(tree, w), moments)


def dirichlet_shift(tree: RootedTree, q) -> BalancedShift:
    return balanced_shift(tree, ClosedForm("dirichlet", q))


def bergman_shift(tree: RootedTree, q) -> BalancedShift:
    return balanced_shift(tree, ClosedForm("bergman", q))


def from_weights(tree: RootedTree, weights) -> BalancedShift:
    """Wrap explicit weights; the moments become a prefix-only description."""
    S = ShiftOperator(tree, weights)
    return BalancedShift(S, moment_table(S).as_spec())
