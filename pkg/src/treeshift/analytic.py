"""The analytic model of a balanced shift.

``S`` is unitarily equivalent to multiplication by ``z`` on a space of
``ker S*``-valued power series ``sum x_n z^n`` with norm
``sum ||B_n x_n||^2``, where ``B_n`` acts on ``W_k`` as the scalar
``c_k c_{k+1} ... c_{k+n-1}``.  The reproducing kernel is block scalar, and
point evaluations are bounded on the disc of radius ``1 / r(S')`` where
``S'`` is the Cauchy dual.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import IndexOutOfRange, NotLeftInvertible, RadiusExceeded, TruncationOverflow
from .seqclass import MomentSequenceSpec, PrefixOnly, evaluate, reciprocal, sup_window_product
from .shift import BalancedShift, ShiftOperator, apply_shift, from_weights, moment_table
from .wandering import WanderingDecomposition, kernel_basis

LEFT_INVERTIBLE_EPS = 1e-14


def _balanced(x) -> BalancedShift:
    if isinstance(x, BalancedShift):
        return x
    if isinstance(x, ShiftOperator):
        return from_weights(x.tree, x.weights)
    raise TypeError(f"expected a shift, got {type(x).__name__}")


# ---------------------------------------------------------------- model space


@dataclass(frozen=True, eq=False)
class ModelSpace:
    """``H^2_E(B)`` for a balanced shift, truncated at series order ``order``."""

    shift: BalancedShift
    decomposition: WanderingDecomposition
    order: int = 64

    @property
    def moments(self) -> MomentSequenceSpec:
        return self.shift.moments

    def c(self, n: int) -> float:
        return evaluate(self.moments, n)

    def b_weights(self, n: int, k: int) -> float:
        """Eigenvalue of ``B_n`` on ``W_k``: ``c_k ... c_{k+n-1}``."""
        return math.prod(self.c(k + j) for j in range(n))

    def block_levels(self) -> dict:
        """Block key to level ``k``: ``"root"`` is level 0, a branching vertex
        ``v`` is level ``d_v + 1``."""
        tree = self.decomposition.tree
        out = {"root": 0}
        for n in range(1, len(self.decomposition.local)):
            for v in dict.fromkeys(self.decomposition.owners[n].tolist()):
                out[int(v)] = n
        assert all(tree.depth[v] + 1 == k for v, k in out.items() if v != "root")
        return out


def model_space(shift, order: int = 64) -> ModelSpace:
    bs = _balanced(shift)
    return ModelSpace(bs, kernel_basis(bs.operator), order)


def b_weights(model: ModelSpace, n: int, k: int) -> float:
    return model.b_weights(n, k)


def mz_gram_check(shift, N: int, trials: int = 8, rng=None) -> float:
    """Largest ``|<S^n x, S^m y> - delta_nm <B_n x, B_n y>| / (||x|| ||y||)``
    over random ``x, y`` in ``ker S*`` and ``n, m <= N``.

    Only blocks ``W_k`` with ``k + N`` inside the truncation are sampled.
    """
    model = model_space(shift)
    S = model.shift.operator
    D = S.tree.trunc_depth
    if N < 0 or N > D:
        raise TruncationOverflow(f"window N={N} outside 0..{D}")
    rng = np.random.default_rng(rng)
    dec = model.decomposition
    kmax = D - N
    dims = dec.dims[: kmax + 1]
    basis = np.hstack([dec.block(k) for k in range(kmax + 1)])
    level = np.repeat(np.arange(kmax + 1), dims)
    B = np.array([[model.b_weights(n, int(k)) for k in level] for n in range(N + 1)])
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(basis.shape[1])
        y = rng.standard_normal(basis.shape[1])
        px, py = [basis @ x], [basis @ y]
        for _n in range(N):
            px.append(apply_shift(S, px[-1]))
            py.append(apply_shift(S, py[-1]))
        scale = np.linalg.norm(x) * np.linalg.norm(y)
        for n in range(N + 1):
            for m in range(N + 1):
                lhs = px[n] @ py[m]
                rhs = (B[n] * x) @ (B[n] * y) if n == m else 0.0
                worst = max(worst, abs(lhs - rhs) / scale)
    return float(worst)


# ---------------------------------------------------------------- kernel


@dataclass(frozen=True)
class KernelValue:
    """Block scalars of the reproducing kernel at ``(z, w)``.

    ``blocks`` maps ``"root"`` and each branching vertex to its scalar;
    ``levels`` maps each level ``k`` to the scalar shared by its blocks.
    ``tail_bound`` estimates the neglected terms geometrically.
    """

    z: complex
    w: complex
    order: int
    levels: dict
    blocks: dict
    tail_bound: float
    orders: dict = field(default_factory=dict)

    def to_json(self):
        def cx(v):
            return [v.real, v.imag]

        return {
            "z": cx(self.z),
            "w": cx(self.w),
            "order": self.order,
            "levels": {str(k): cx(v) for k, v in sorted(self.levels.items())},
            "blocks": {str(k): cx(v) for k, v in self.blocks.items()},
            "tail_bound": self.tail_bound,
        }


def _level_coefficients(model: ModelSpace, k: int, order: int):
    """``1 / (c_k^2 ... c_{k+n-1}^2)`` for ``n = 0..order`` (cut short for
    prefix-only moments)."""
    avail = order
    if isinstance(model.moments, PrefixOnly):
        avail = min(order, len(model.moments.values) - k)
    c2 = np.array([model.c(k + j) ** 2 for j in range(max(avail, 0))])
    return np.concatenate([[1.0], 1.0 / np.cumprod(c2)])


def kernel_eval(model: ModelSpace, z: complex, w: complex, order: int | None = None) -> KernelValue:
    order = model.order if order is None else order
    z, w = complex(z), complex(w)
    window = order
    if isinstance(model.moments, PrefixOnly):
        window = min(order, len(model.moments.values))
    radius = bpe_radius(model.moments, window).radius
    if max(abs(z), abs(w)) >= radius:
        warnings.warn(
            f"|z| or |w| is outside the guaranteed bounded point evaluation disc (radius {radius:.6g})",
            RuntimeWarning,
            stacklevel=2,
        )
    u = z * w.conjugate()
    levels = {}
    orders = {}
    bound = 0.0
    for k in sorted(set(model.block_levels().values())):
        a = _level_coefficients(model, k, order)
        n = len(a) - 1
        powers = np.concatenate([[1.0 + 0j], np.cumprod(np.full(n, u))])
        levels[k] = complex(np.sum(a * powers))
        orders[k] = n
        if n >= 1 and u != 0:
            ratio = abs(u) * a[n] / a[n - 1]
            if ratio >= 1:
                raise RadiusExceeded(
                    f"kernel series at level {k} does not converge: term ratio {ratio:.6g} at order {n}"
                )
            bound = max(bound, abs(a[n] * powers[n]) * ratio / (1 - ratio))
    blocks = {key: levels[k] for key, k in model.block_levels().items()}
    return KernelValue(z, w, order, levels, blocks, bound, orders)


def kernel_psd_min_eig(model: ModelSpace, points, order: int | None = None) -> float:
    """Smallest eigenvalue over levels of ``[K_k(z_i, z_j)]_{ij}``."""
    pts = [complex(p) for p in points]
    vals = [[kernel_eval(model, a, b, order).levels for b in pts] for a in pts]
    worst = math.inf
    for k in vals[0][0]:
        K = np.array([[vals[i][j][k] for j in range(len(pts))] for i in range(len(pts))])
        worst = min(worst, float(np.linalg.eigvalsh(K).min()))
    return worst


# ---------------------------------------------------------------- Cauchy dual


@dataclass(frozen=True, eq=False)
class CauchyDualShift:
    """``S' = S (S*S)^{-1}``: weights ``lam_u / c_{d_par(u)}^2``, moments ``1/c_n``."""

    base: BalancedShift
    operator: ShiftOperator
    moments: MomentSequenceSpec
    min_c: float

    @property
    def dual_weights(self) -> np.ndarray:
        return self.operator.weights

    def as_balanced(self) -> BalancedShift:
        return BalancedShift(self.operator, self.moments)


def cauchy_dual(shift, eps: float = LEFT_INVERTIBLE_EPS) -> CauchyDualShift:
    bs = _balanced(shift)
    S = bs.operator
    c = moment_table(S).c
    lo = float(c.min()) if c.size else math.inf
    if lo < eps:
        raise NotLeftInvertible(f"min c_n = {lo!r} below {eps}")
    w = np.zeros(S.n_vertices)
    d = S.tree.depth[S.tree.parent[1:]]
    w[1:] = S.weights[1:] / c[d] ** 2
    return CauchyDualShift(bs, ShiftOperator(S.tree, w), reciprocal(bs.moments), lo)


# ---------------------------------------------------------------- bounded point evaluations


@dataclass(frozen=True)
class BPEReport:
    """``gelfand[n-1] = ||S'^n||^(1/n)`` for ``n = 1..N``; ``radius = 1/gelfand[N-1]``."""

    gelfand: tuple
    radius: float
    certified: str
    non_increasing: bool
    submultiplicative: bool

    @property
    def r_dual(self) -> float:
        return self.gelfand[-1]

    def to_json(self):
        return {
            "gelfand": list(self.gelfand),
            "r_dual": self.r_dual,
            "radius": self.radius,
            "certification": self.certified,
            "non_increasing": self.non_increasing,
            "submultiplicative": self.submultiplicative,
        }


def bpe_radius(shift_or_spec, N: int = 64, eps: float = LEFT_INVERTIBLE_EPS) -> BPEReport:
    """Radius of the disc of bounded point evaluations guaranteed by the
    Cauchy dual, from ``||S'^n|| = sup_m prod_{j<n} 1/c_{m+j}``."""
    if isinstance(shift_or_spec, MomentSequenceSpec):
        spec = shift_or_spec
    else:
        spec = _balanced(shift_or_spec).moments
    if isinstance(spec, PrefixOnly):
        lo = min(spec.values)
        if N > len(spec.values):
            raise IndexOutOfRange(f"prefix of length {len(spec.values)} cannot give window {N}")
    else:
        lo = min(evaluate(spec, n) for n in range(N + 1))
    if lo < eps:
        raise NotLeftInvertible(f"min c_n = {lo!r} below {eps}")
    dual = reciprocal(spec)
    gelfand = []
    certified = "exact"
    for n in range(1, N + 1):
        val, cert = sup_window_product(dual, n)
        if cert != "exact":
            certified = f"prefix({len(spec.values)})"
        gelfand.append(val ** (1.0 / n))
    non_inc = all(b <= a * (1 + 1e-12) for a, b in zip(gelfand, gelfand[1:]))
    submult = all(gelfand[2 * n - 1] <= gelfand[n - 1] + 1e-12 for n in range(1, N // 2 + 1))
    return BPEReport(tuple(gelfand), 1.0 / gelfand[-1], certified, non_inc, submult)


def parse_complex(s: str) -> complex:
    """Parse ``a+bi`` style input; ``i`` and ``j`` both denote the imaginary unit."""
    t = s.strip().replace(" ", "").replace("i", "j")
    if t.endswith("j") and (len(t) == 1 or t[-2] in "+-"):
        t = t[:-1] + "1j"
    return complex(t)
