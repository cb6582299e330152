"""Unitary equivalence of balanced shifts.

Four independent routes:

* :func:`decide_nonperiodic` compares moment sequences and generation
  cardinalities, exactly when both are finitely presented;
* :func:`joint_multiplicity_oracle` compares the joint spectra of
  ``S*^n S^n`` restricted to ``ker S*`` for ``n = 1..N``, with multiplicities;
* :func:`build_block_unitary` writes down the intertwiner block by block;
* :func:`wold_isometry_oracle` handles pure isometries through ``dim ker S*``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    MomentMismatch,
    NotIsometric,
    NotNonPeriodic,
    TruncationOverflow,
)
from .seqclass import classify, evaluate, first_mismatch
from .shift import BalancedShift, ShiftOperator, from_weights, moment_table
from .tree import INFINITE, first_profile_mismatch, generation_profile
from .wandering import WanderingDecomposition, gram_restriction, kernel_basis

TUPLE_RTOL = 1e-10
UNITARY_TOL = 1e-12
INTERTWINING_TOL = 1e-11


@dataclass(frozen=True)
class FirstMismatch:
    """Smallest index where an invariant differs.

    ``which`` is ``"moment"`` (``c_n``), ``"generation"`` (``Card G_n``) or
    ``"kernel_dimension"`` (``index`` is then None).
    """

    index: int | None
    which: str
    values: tuple

    def to_json(self):
        return {"index": self.index, "which": self.which, "values": list(self.values)}


@dataclass(frozen=True)
class BlockUnitary:
    """``U = U_0 + U_1 + ...`` with ``U_n`` mapping the basis of ``W_n`` to
    that of ``W~_n``.  ``residuals[n]`` is the intertwining residual for
    ``S*^n S^n``."""

    blocks: tuple
    residuals: dict = field(default_factory=dict)

    @property
    def dims(self) -> tuple:
        return tuple(U.shape[0] for U in self.blocks)

    @property
    def unitarity_error(self) -> float:
        worst = 0.0
        for U in self.blocks:
            if U.size:
                worst = max(worst, float(np.abs(U.T @ U - np.eye(U.shape[1])).max()))
        return worst

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def is_identity(self) -> bool:
        return all(np.array_equal(U, np.eye(U.shape[0])) for U in self.blocks)

    def to_json(self):
        return {
            "dims": list(self.dims),
            "identity": self.is_identity(),
            "unitarity_error": self.unitarity_error,
            "max_intertwining_residual": self.max_residual,
        }


@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    certified: str = "exact"
    depth: int | None = None
    witness: FirstMismatch | None = None
    block_unitary: BlockUnitary | None = None
    method: str = "theorem"
    notes: tuple = ()

    @property
    def kind(self) -> str:
        if self.certified == "prefix":
            return "PrefixCertified"
        return "Equivalent" if self.equivalent else "NotEquivalent"

    @property
    def label(self) -> str:
        if self.certified == "prefix":
            return f"prefix-certified({self.depth})"
        return "exact"

    def to_json(self):
        return {
            "kind": self.kind,
            "equivalent": self.equivalent,
            "certification": self.label,
            "method": self.method,
            "witness": None if self.witness is None else self.witness.to_json(),
            "block_unitary": None if self.block_unitary is None else self.block_unitary.to_json(),
            "notes": list(self.notes),
        }


def _balanced(x) -> BalancedShift:
    if isinstance(x, BalancedShift):
        return x
    if isinstance(x, ShiftOperator):
        return from_weights(x.tree, x.weights)
    raise TypeError(f"expected a shift, got {type(x).__name__}")


def _operator(x) -> ShiftOperator:
    return x.operator if isinstance(x, BalancedShift) else x


def _earliest(*candidates):
    """Earliest mismatch; on a tie the moment witness wins."""
    found = [c for c in candidates if c is not None]
    if not found:
        return None
    return min(found, key=lambda m: (m.index, m.which != "moment"))


# ---------------------------------------------------------------- theorem path


def theorem_criterion(A, B):
    """Compare ``c_n`` and ``Card G_n`` without checking periodicity.

    Returns ``(FirstMismatch or None, exact, depth)``; ``exact`` says whether
    a ``None`` result covers every ``n`` and ``depth`` how far it is known
    otherwise.
    """
    A, B = _balanced(A), _balanced(B)
    n_c, exact_c = first_mismatch(A.moments, B.moments)
    pa, pb = generation_profile(A.tree), generation_profile(B.tree)
    n_g, exact_g = first_profile_mismatch(pa, pb)
    mc = None if n_c is None else FirstMismatch(
        n_c, "moment", (evaluate(A.moments, n_c), evaluate(B.moments, n_c))
    )
    mg = None if n_g is None else FirstMismatch(n_g, "generation", (pa.card(n_g), pb.card(n_g)))
    depth = min(A.tree.trunc_depth, B.tree.trunc_depth)
    return _earliest(mc, mg), exact_c and exact_g, depth


def decide_nonperiodic(A: BalancedShift, B: BalancedShift) -> EquivalenceVerdict:
    """Equivalent iff ``c_n = c~_n`` and ``Card G_n = Card G~_n`` for all ``n``.

    Both moment sequences must be exact and non-periodic.  Without tail rules
    on both trees an agreement is only certified up to the truncation depth.
    """
    for side, shift in (("left", A), ("right", B)):
        verdict = classify(shift.moments)
        if verdict.kind != "non_periodic" or verdict.certified != "exact":
            raise NotNonPeriodic(
                f"{side} moment sequence classifies as {verdict.kind} ({verdict.certified})"
            )
    mismatch, exact, depth = theorem_criterion(A, B)
    if mismatch is not None:
        return EquivalenceVerdict(False, "exact", None, mismatch, method="theorem")
    if exact:
        return EquivalenceVerdict(True, "exact", method="theorem")
    return EquivalenceVerdict(
        True, "prefix", depth, method="theorem",
        notes=("generation counts compared only inside the truncation",),
    )


# ---------------------------------------------------------------- joint spectrum oracle


def joint_tuples(S: ShiftOperator, N: int, kmax: int, dec: WanderingDecomposition | None = None):
    """Per basis vector ``b`` of ``W_0 + ... + W_kmax``: the diagonal entries
    ``<S^n b, S^n b>`` for ``n = 1..N`` and the block index.  Also returns the
    largest relative off-diagonal entry seen."""
    if dec is None:
        dec = kernel_basis(S)
    cols = []
    offdiag = 0.0
    for n in range(1, N + 1):
        g = gram_restriction(S, n, dec)
        cols.append(np.concatenate([np.diag(B) for B in g.blocks[: kmax + 1]]))
        offdiag = max(offdiag, g.offdiag_max)
    blocks = np.repeat(np.arange(kmax + 1), dec.dims[: kmax + 1])
    tuples = np.stack(cols, axis=1) if cols else np.zeros((blocks.size, 0))
    return tuples, blocks, offdiag


def _close(a, b, rtol):
    return bool(np.all(np.abs(a - b) <= rtol * np.maximum(np.abs(a), np.abs(b))))


def _cluster_counts(ta, tb, rtol):
    """Multiplicity of each joint eigenvalue tuple on the two sides."""
    reps = []
    counts = []
    for side, T in ((0, ta), (1, tb)):
        for t in T:
            for i, r in enumerate(reps):
                if _close(t, r, rtol):
                    counts[i][side] += 1
                    break
            else:
                reps.append(t)
                counts.append([0, 0])
                counts[-1][side] += 1
    return reps, counts


def _moment_estimates(tuples, blocks, N):
    """``c_n**2`` read off the tuples: on ``W_k`` entry ``n`` is
    ``c_k**2 ... c_{k+n-1}**2``."""
    est = {}
    for k in np.unique(blocks):
        t = tuples[blocks == k][0]
        prev = 1.0
        for n in range(N):
            est.setdefault(int(k) + n, t[n] / prev)
            prev = t[n]
    return est


def joint_multiplicity_oracle(S, S_tilde, N: int, rtol: float = TUPLE_RTOL) -> EquivalenceVerdict:
    """Compare the joint spectra of ``S*^n S^n |ker S*`` for ``n = 1..N``.

    On ``W_k`` every ``S*^n S^n`` acts as a scalar, so an intertwining unitary
    exists iff each tuple of scalars occurs with the same total multiplicity on
    both sides.  Only blocks ``W_k`` with ``k + N`` inside both truncations
    take part; the verdict is certified up to ``N``.
    """
    A, B = _operator(S), _operator(S_tilde)
    moment_table(A)
    moment_table(B)
    D = min(A.tree.trunc_depth, B.tree.trunc_depth)
    if N < 1 or N > D:
        raise TruncationOverflow(f"window N={N} outside 1..{D}")
    kmax = D - N
    dec_a, dec_b = kernel_basis(A), kernel_basis(B)
    ta, ka, off_a = joint_tuples(A, N, kmax, dec_a)
    tb, kb, off_b = joint_tuples(B, N, kmax, dec_b)
    reps, counts = _cluster_counts(ta, tb, rtol)
    equivalent = all(a == b for a, b in counts)

    # diagnostics in the vocabulary of the theorem path
    ea, eb = _moment_estimates(ta, ka, N), _moment_estimates(tb, kb, N)
    mc = None
    for n in sorted(set(ea) & set(eb)):
        if not _close(np.array(ea[n]), np.array(eb[n]), rtol):
            mc = FirstMismatch(n, "moment", (math.sqrt(ea[n]), math.sqrt(eb[n])))
            break
    mg = None
    for n in range(kmax + 1):
        if dec_a.dims[n] != dec_b.dims[n]:
            mg = FirstMismatch(n, "generation", (A.tree.card(n), B.tree.card(n)))
            break
    witness = None if equivalent else _earliest(mc, mg)
    notes = (
        f"{len(reps)} distinct joint eigenvalue tuples over blocks W_0..W_{kmax}",
        f"max relative off-diagonal Gram entry {max(off_a, off_b):.3e}",
    )
    return EquivalenceVerdict(equivalent, "prefix", N, witness, method="joint", notes=notes)


# ---------------------------------------------------------------- block unitary


def _intertwining_residuals(A, B, dec_a, dec_b, blocks, N):
    res = {}
    for n in range(N + 1):
        ga = gram_restriction(A, n, dec_a).blocks
        gb = gram_restriction(B, n, dec_b).blocks
        worst = 0.0
        for k in range(len(ga)):
            U = blocks[k]
            if U.size:
                worst = max(worst, float(np.abs(U @ ga[k] - gb[k] @ U).max()))
        res[n] = worst
    return res


def build_block_unitary(S, S_tilde, N: int | None = None, rtol: float = 1e-12) -> BlockUnitary:
    """Identity blocks between the deterministic kernel bases.

    Requires ``dims[n] = dims~[n]`` and ``c_n = c~_n`` inside the common
    truncation; the intertwining residual is measured for ``n = 0..N``.
    """
    A, B = _operator(S), _operator(S_tilde)
    D = min(A.tree.trunc_depth, B.tree.trunc_depth)
    dec_a, dec_b = kernel_basis(A), kernel_basis(B)
    for n in range(D + 1):
        if dec_a.dims[n] != dec_b.dims[n]:
            raise DimensionMismatch(f"dim W_{n}: {dec_a.dims[n]} vs {dec_b.dims[n]}")
    ca, cb = moment_table(A).c, moment_table(B).c
    for n in range(D):
        if abs(ca[n] - cb[n]) > rtol * max(ca[n], cb[n]):
            raise MomentMismatch(f"c_{n}: {ca[n]!r} vs {cb[n]!r}")
    blocks = tuple(np.eye(d) for d in dec_a.dims[: D + 1])
    N = D if N is None else N
    return BlockUnitary(blocks, _intertwining_residuals(A, B, dec_a, dec_b, blocks, N))


def change_of_basis(S, dec_a: WanderingDecomposition, dec_b: WanderingDecomposition, N: int | None = None) -> BlockUnitary:
    """``U_n = B_n^T A_n`` between two orthonormal bases of the same kernel."""
    A = _operator(S)
    blocks = tuple(Qb.T @ Qa for Qa, Qb in zip(dec_a.local, dec_b.local))
    N = A.tree.trunc_depth if N is None else N
    return BlockUnitary(blocks, _intertwining_residuals(A, A, dec_a, dec_b, blocks, N))


# ---------------------------------------------------------------- isometries


def _kernel_dim(S: ShiftOperator):
    """``(dim ker S*, exact)``; ``INFINITE`` for a self-similar tail that keeps branching."""
    dims = kernel_basis(S).dims
    total = sum(dims)
    tail = S.tree.tail
    if tail is None:
        return total, False
    if tail.rule == "self_similar":
        lo = S.tree.trunc_depth - tail.period
        if any(dims[n] for n in range(lo + 1, S.tree.trunc_depth + 1)):
            return INFINITE, True
    return total, True


def is_isometric(S: ShiftOperator, rtol: float = 1e-12) -> bool:
    norms = S.local_norms[np.isfinite(S.local_norms)]
    return bool(np.all(np.abs(norms - 1.0) <= rtol))


def wold_isometry_oracle(S, S_tilde, rtol: float = 1e-12) -> EquivalenceVerdict:
    """Two pure isometries are unitarily equivalent iff their kernels of the
    adjoint have equal dimension."""
    A, B = _operator(S), _operator(S_tilde)
    for side, op in (("left", A), ("right", B)):
        if not is_isometric(op, rtol):
            raise NotIsometric(f"{side} shift has ||S e_v|| != 1")
    (da, xa), (db, xb) = _kernel_dim(A), _kernel_dim(B)
    depth = min(A.tree.trunc_depth, B.tree.trunc_depth)
    witness = FirstMismatch(None, "kernel_dimension", (da, db))
    notes = (f"dim ker S* = {da}, dim ker S~* = {db}",)
    if xa and xb:
        eq = da == db
        return EquivalenceVerdict(eq, "exact", None, None if eq else witness, method="wold", notes=notes)
    # a truncated count is a lower bound for the full tree
    if (xa and not xb and db > da) or (xb and not xa and da > db):
        return EquivalenceVerdict(False, "exact", None, witness, method="wold", notes=notes)
    eq = da == db
    return EquivalenceVerdict(eq, "prefix", depth, None if eq else witness, method="wold", notes=notes)
