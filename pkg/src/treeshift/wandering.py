"""The kernel of ``S*`` split into generation blocks, and checks on it.

``ker S* = W_0 + W_1 + ...`` with ``W_0 = [e_root]`` and ``W_n`` the direct
sum, over branching vertices ``v`` of depth ``n - 1``, of the complement of
the weight vector ``(lam_u)_{u in Chi(v)}`` inside ``l2(Chi(v))``.  Every
vector of ``W_n`` lives on generation ``n``, so blocks are stored as dense
matrices whose rows are the vertices of ``G_n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyChildList, TruncationOverflow, UndecidableWithoutTail
from .shift import ShiftOperator, adjoint_generation, shift_generation
from .tree import INFINITE, RootedTree, branching_index, branching_vertices


def complement_basis(chi_weights) -> np.ndarray:
    """Orthonormal basis of the complement of ``chi_weights`` as columns.

    Builds the Householder reflector ``H`` sending the normalised weight
    vector to ``-e_1``; the remaining columns of ``H`` span the complement.
    """
    w = np.asarray(chi_weights, dtype=np.float64)
    k = w.shape[0]
    if k == 0:
        raise EmptyChildList("no children")
    a = w / np.linalg.norm(w)
    v = a.copy()
    v[0] += 1.0 if a[0] >= 0 else -1.0
    H = np.eye(k) - (2.0 / (v @ v)) * np.outer(v, v)
    return H[:, 1:]


@dataclass(frozen=True, eq=False)
class WanderingDecomposition:
    """Orthonormal bases of the blocks ``W_n``.

    ``local[n]`` has shape ``(Card G_n, dims[n])``; column ``j`` is the
    ``j``-th basis vector of ``W_n`` restricted to ``G_n``.  ``owners[n][j]``
    is the branching vertex whose children carry it (``-1`` for ``e_root``).
    """

    tree: RootedTree
    local: tuple
    owners: tuple

    @property
    def dims(self) -> tuple:
        return tuple(m.shape[1] for m in self.local)

    @property
    def dim(self) -> int:
        return sum(self.dims)

    def block(self, n: int) -> np.ndarray:
        """Basis of ``W_n`` as full-length vectors (``V x dims[n]``)."""
        out = np.zeros((self.tree.n_vertices, self.dims[n]))
        g = self.tree.generation_range(n)
        out[g.start:g.stop] = self.local[n]
        return out

    def vectors(self) -> np.ndarray:
        """All basis vectors, block by block, as a ``V x dim`` array."""
        return np.hstack([self.block(n) for n in range(len(self.local))])

    def block_of(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.local)), self.dims)


def kernel_basis(S: ShiftOperator) -> WanderingDecomposition:
    tree = S.tree
    D = tree.trunc_depth
    nc = tree.num_children
    local = [np.ones((1, 1))]
    owners = [np.array([-1])]
    for n in range(1, D + 1):
        g = tree.generation_range(n)
        parents = tree.generation_range(n - 1)
        cols = []
        own = []
        for v in parents:
            if nc[v] < 2:
                continue
            lo, hi = int(tree.child_ptr[v]), int(tree.child_ptr[v + 1])
            Q = complement_basis(S.weights[lo:hi])
            M = np.zeros((len(g), Q.shape[1]))
            M[lo - g.start:hi - g.start] = Q
            cols.append(M)
            own.extend([v] * Q.shape[1])
        local.append(np.hstack(cols) if cols else np.zeros((len(g), 0)))
        owners.append(np.array(own, dtype=np.int64))
    return WanderingDecomposition(tree, tuple(local), tuple(owners))


def kernel_residual(S: ShiftOperator, dec: WanderingDecomposition) -> float:
    """``max ||S* b||`` over the basis."""
    worst = 0.0
    for n, M in enumerate(dec.local):
        if n == 0 or M.shape[1] == 0:
            continue
        R = adjoint_generation(S, M, n)
        worst = max(worst, float(np.abs(R).max()))
    return worst


def _images(S: ShiftOperator, dec: WanderingDecomposition, N: int):
    """For each generation ``g`` yield ``(g, [(k, m, X)])`` with ``X = S^m W_k``
    restricted to ``G_g``, over ``k + m = g`` and ``m <= N``."""
    D = S.tree.trunc_depth
    current = {}
    for g in range(D + 1):
        if g > 0:
            current = {
                k: shift_generation(S, X, g - 1) for k, X in current.items() if g - k <= N
            }
        current[g] = dec.local[g]
        yield g, [(k, g - k, X) for k, X in sorted(current.items())]


@dataclass
class OrthogonalityReport:
    """Worst overlap between ``S^m W_k`` and ``S^n W_l`` for ``m != n``.

    ``max_cosine`` is ``|<S^m x, S^n y>| / (||S^m x|| ||S^n y||)`` and decides
    ``passed``; ``max_inner`` is the raw inner product.
    """

    N: int
    tol: float
    max_cosine: float = 0.0
    max_inner: float = 0.0
    witness: dict | None = None

    @property
    def passed(self) -> bool:
        return self.max_cosine <= self.tol

    def to_json(self):
        return {
            "window": self.N,
            "tol": self.tol,
            "max_cosine": self.max_cosine,
            "max_inner": self.max_inner,
            "passed": self.passed,
            "witness": self.witness,
        }


def check_mutual_orthogonality(S: ShiftOperator, N: int, tol: float = 1e-10) -> OrthogonalityReport:
    """Compare every ``S^m b`` and ``S^n b'`` (``b, b'`` basis vectors of the
    kernel, ``m != n <= N``) landing on the same generation.  Vectors on
    different generations have disjoint supports."""
    D = S.tree.trunc_depth
    if N < 0 or N > D:
        raise TruncationOverflow(f"window N={N} outside 0..{D}")
    dec = kernel_basis(S)
    offsets = np.concatenate([[0], np.cumsum(dec.dims)])
    rep = OrthogonalityReport(N, tol)
    for g, items in _images(S, dec, N):
        items = [(k, m, X) for k, m, X in items if X.shape[1]]
        if len(items) < 2:
            continue
        Y = np.hstack([X for _, _, X in items])
        power = np.concatenate([np.full(X.shape[1], m) for _, m, X in items])
        index = np.concatenate([offsets[k] + np.arange(X.shape[1]) for k, _, X in items])
        G = Y.T @ Y
        norms = np.sqrt(np.diag(G))
        cos = np.abs(G) / np.outer(norms, norms)
        cross = power[:, None] != power[None, :]
        cos = np.where(cross, cos, 0.0)
        i, j = np.unravel_index(int(np.argmax(cos)), cos.shape)
        if cos[i, j] > rep.max_cosine:
            rep.max_cosine = float(cos[i, j])
            rep.witness = {
                "m": int(power[i]),
                "n": int(power[j]),
                "x": int(index[i]),
                "y": int(index[j]),
                "generation": g,
                "inner": float(G[i, j]),
                "cosine": float(cos[i, j]),
            }
        rep.max_inner = max(rep.max_inner, float(np.abs(np.where(cross, G, 0.0)).max()))
    return rep


@dataclass
class GramRestriction:
    """Matrix of ``<S^n b_j, S^n b_i>`` over the kernel basis vectors ``b`` of
    blocks ``W_k`` with ``k + n <= D``.  Blocks for distinct ``k`` live on
    distinct generations after ``n`` shifts, so the matrix is block diagonal
    with blocks ``blocks[k]``."""

    n: int
    blocks: list = field(default_factory=list)

    @property
    def block_of(self) -> np.ndarray:
        return np.concatenate([np.full(B.shape[0], k) for k, B in enumerate(self.blocks)])

    @property
    def diagonal(self) -> np.ndarray:
        return np.concatenate([np.diag(B) for B in self.blocks])

    @property
    def min_diagonal(self) -> float:
        d = self.diagonal
        return float(d.min()) if d.size else float("inf")

    @property
    def offdiag_max(self) -> float:
        """Largest ``|M_ij| / sqrt(M_ii M_jj)`` over ``i != j``."""
        worst = 0.0
        for B in self.blocks:
            if B.shape[0] < 2:
                continue
            d = np.sqrt(np.diag(B))
            R = np.abs(B) / np.outer(d, d)
            np.fill_diagonal(R, 0.0)
            worst = max(worst, float(R.max()))
        return worst

    def toarray(self) -> np.ndarray:
        size = sum(B.shape[0] for B in self.blocks)
        out = np.zeros((size, size))
        i = 0
        for B in self.blocks:
            k = B.shape[0]
            out[i:i + k, i:i + k] = B
            i += k
        return out


def gram_restriction(S: ShiftOperator, n: int, dec: WanderingDecomposition | None = None) -> GramRestriction:
    D = S.tree.trunc_depth
    if n < 0 or n > D:
        raise TruncationOverflow(f"power n={n} outside 0..{D}")
    if dec is None:
        dec = kernel_basis(S)
    out = GramRestriction(n)
    for k in range(D - n + 1):
        X = dec.local[k]
        for j in range(n):
            X = shift_generation(S, X, k + j)
        out.blocks.append(X.T @ X)
    return out


def power_invariance_residual(S: ShiftOperator, n: int, dec: WanderingDecomposition | None = None) -> float:
    """``max ||(I - P_E) S*^n S^n b|| / ||S*^n S^n b||`` over basis vectors ``b``."""
    D = S.tree.trunc_depth
    if dec is None:
        dec = kernel_basis(S)
    worst = 0.0
    for k in range(D - n + 1):
        Q = dec.local[k]
        if Q.shape[1] == 0:
            continue
        X = Q
        for j in range(n):
            X = shift_generation(S, X, k + j)
        for j in range(n, 0, -1):
            X = adjoint_generation(S, X, k + j)
        # E restricted to G_k is exactly W_k
        R = X - Q @ (Q.T @ X)
        scale = np.linalg.norm(X, axis=0)
        worst = max(worst, float((np.linalg.norm(R, axis=0) / scale).max()))
    return worst


def wandering_ranks(S: ShiftOperator, N: int, dec: WanderingDecomposition | None = None, tol: float = 1e-10):
    """Per generation ``g <= N``: ``(g, rank, Card G_g)`` of ``{S^m b : k + m = g}``.

    Columns are normalised first; the rank counts singular values above
    ``tol``.
    """
    if dec is None:
        dec = kernel_basis(S)
    out = []
    for g, items in _images(S, dec, N):
        if g > N:
            break
        Y = np.hstack([X for _, _, X in items])
        Y = Y / np.linalg.norm(Y, axis=0)
        s = np.linalg.svd(Y, compute_uv=False)
        out.append((g, int(np.sum(s > tol)), S.tree.card(g)))
    return out


@dataclass
class InvertibilityReport:
    """Whether ``S*^n S^n`` restricted to the kernel is invertible for ``n <= N``."""

    N: int
    min_diagonal: float
    threshold: float
    finite_dimensional_kernel: bool | None
    left_invertible: bool
    finite_branching_index: bool | None

    @property
    def invertible(self) -> bool:
        return self.min_diagonal > self.threshold

    def to_json(self):
        return {
            "window": self.N,
            "min_diagonal": self.min_diagonal,
            "threshold": self.threshold,
            "invertible": self.invertible,
            "finite_dimensional_kernel": self.finite_dimensional_kernel,
            "left_invertible": self.left_invertible,
            "finite_branching_index": self.finite_branching_index,
        }


def invertibility_report(S: ShiftOperator, N: int, threshold: float = 1e-14) -> InvertibilityReport:
    dec = kernel_basis(S)
    low = min(gram_restriction(S, n, dec).min_diagonal for n in range(N + 1))
    try:
        finite = branching_index(S.tree) != INFINITE
    except UndecidableWithoutTail:
        finite = None
    # locally finite: finitely many branching vertices iff bounded branching depth;
    # without a tail rule only the truncated kernel is known, and it is finite
    finite_dim = True if S.tree.tail is None else finite
    norms = S.local_norms[np.isfinite(S.local_norms)]
    left = bool(norms.size == 0 or norms.min() > threshold)
    return InvertibilityReport(N, low, threshold, finite_dim, left, finite)


def kernel_dimension(S: ShiftOperator) -> int:
    """``1 + sum(Card Chi(v) - 1)`` over branching vertices inside the truncation."""
    nc = S.tree.num_children[branching_vertices(S.tree)]
    return 1 + int(np.sum(nc - 1))
