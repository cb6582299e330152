"""Random trees, weight systems and moment sequences for property checks.

Every function takes a ``numpy.random.Generator`` so that runs are
reproducible from a single seed.
"""

from __future__ import annotations

import numpy as np

from .seqclass import ClosedForm, PrefixOnly
from .shift import BalancedShift, ShiftOperator, balanced_shift
from .tree import ALL_RAYS, RootedTree, TailSpec, from_child_counts

Q_CHOICES = (1.5, 2, 3, "pi")


def random_child_counts(
    rng: np.random.Generator,
    depth: int,
    max_branching: int = 4,
    max_width: int = 64,
    p_branch: float = 0.4,
    branch_until: int | None = None,
):
    """Per-generation child counts; no branching below ``branch_until`` and no
    generation wider than ``max_width``."""
    counts = []
    width = 1
    for n in range(depth):
        if branch_until is not None and n > branch_until:
            row = [1] * width
        else:
            row = [int(rng.integers(2, max_branching + 1)) if rng.random() < p_branch else 1 for _ in range(width)]
            excess = sum(row) - max_width
            for i in rng.permutation(width):
                if excess <= 0:
                    break
                cut = min(row[i] - 1, excess)
                row[i] -= cut
                excess -= cut
        counts.append(row)
        width = sum(row)
    return counts


def random_tree(rng: np.random.Generator, depth: int, tail: TailSpec | None = ALL_RAYS, **kw) -> RootedTree:
    return from_child_counts(random_child_counts(rng, depth, **kw), tail)


def random_profile(rng: np.random.Generator, branch_depth: int, max_branching: int = 3, max_width: int = 24):
    """Generation sizes ``Card G_0..Card G_{branch_depth+1}``; constant afterwards."""
    cards = [1]
    for _ in range(branch_depth + 1):
        w = cards[-1]
        cap = min(w * (max_branching - 1), max_width - w)
        extra = int(rng.integers(0, max(cap, 0) + 1)) if rng.random() < 0.6 else 0
        cards.append(w + extra)
    return cards


def tree_with_profile(rng: np.random.Generator, cards, depth: int, tail: TailSpec | None = ALL_RAYS) -> RootedTree:
    """A random tree whose first generations have the sizes ``cards``."""
    counts = []
    for n in range(depth):
        w = cards[n] if n < len(cards) else cards[-1]
        nxt = cards[n + 1] if n + 1 < len(cards) else cards[-1]
        row = [1] * w
        for i in rng.integers(0, w, size=nxt - w):
            row[i] += 1
        counts.append(row)
    return from_child_counts(counts, tail)


def random_moments(rng: np.random.Generator, n: int, lo: float = 0.2, hi: float = 3.0) -> np.ndarray:
    return rng.uniform(lo, hi, size=n)


def random_split(rng: np.random.Generator, tree: RootedTree, lo: float = 0.2, hi: float = 1.0) -> np.ndarray:
    """Positive shares in which siblings divide ``c_n**2``."""
    s = rng.uniform(lo, hi, size=tree.n_vertices)
    s[0] = 0.0
    return s


def random_balanced_shift(
    rng: np.random.Generator,
    depth: int = 10,
    max_branching: int = 4,
    c_range=(0.2, 3.0),
    tail: TailSpec | None = ALL_RAYS,
    **kw,
) -> BalancedShift:
    """Random tree, random generation-constant ``c_n`` and random sibling splits."""
    tree = random_tree(rng, depth, tail, max_branching=max_branching, **kw)
    c = random_moments(rng, depth, *c_range)
    return balanced_shift(tree, PrefixOnly(tuple(float(x) for x in c)), random_split(rng, tree))


def perturbable_vertices(tree: RootedTree) -> np.ndarray:
    """Non-root vertices whose parent shares its generation with another
    vertex inside ``G_1..G_{D-1}``; scaling such a weight breaks balance."""
    D = tree.trunc_depth
    u = np.arange(1, tree.n_vertices)
    pd = tree.depth[tree.parent[u]]
    cards = np.diff(tree.gen_ptr)
    ok = (pd >= 1) & (pd <= D - 1) & (cards[pd] >= 2)
    return u[ok]


def perturb_weight(rng: np.random.Generator, S: ShiftOperator, rel: tuple = (0.01, 0.1)):
    """Scale one weight by ``1 +- delta`` with ``delta`` in ``rel``.

    Returns ``(perturbed operator, vertex)``, or None when every generation
    below the root is a single vertex.
    """
    cand = perturbable_vertices(S.tree)
    if cand.size == 0:
        return None
    u = int(rng.choice(cand))
    delta = rng.uniform(*rel) * (1 if rng.random() < 0.5 else -1)
    w = S.weights.copy()
    w[u] *= 1 + delta
    return ShiftOperator(S.tree, w), u


def random_closed_form(
    rng: np.random.Generator,
    q_choices=Q_CHOICES,
    max_overrides: int = 2,
    max_index: int = 5,
) -> ClosedForm:
    """Dirichlet or Bergman family, possibly with a few values replaced.

    Replacement values are three-decimal numbers in ``[0.5, 2.5]`` so that
    they compare exactly.
    """
    family = "dirichlet" if rng.random() < 0.5 else "bergman"
    q = q_choices[int(rng.integers(len(q_choices)))]
    k = int(rng.integers(0, max_overrides + 1))
    idx = sorted(int(i) for i in rng.choice(max_index + 1, size=k, replace=False))
    overrides = tuple((i, round(float(rng.uniform(0.5, 2.5)), 3)) for i in idx)
    return ClosedForm(family, q, overrides)


def vary_closed_form(rng: np.random.Generator, spec: ClosedForm, max_index: int = 5) -> ClosedForm:
    """A different closed form: change family/q or one replacement value."""
    if rng.random() < 0.5:
        while True:
            other = random_closed_form(rng, max_index=max_index)
            if (other.family, str(other.q), other.overrides) != (spec.family, str(spec.q), spec.overrides):
                return other
    ov = dict(spec.overrides)
    i = int(rng.integers(0, max_index + 1))
    old = ov.get(i)
    while True:
        val = round(float(rng.uniform(0.5, 2.5)), 3)
        if val != old:
            break
    ov[i] = val
    return ClosedForm(spec.family, spec.q, tuple(sorted(ov.items())))


def random_nonperiodic_pair(rng: np.random.Generator, depth: int = 12, branch_depth: int = 5):
    """Two balanced shifts with exact non-periodic moments and all-rays tails.

    Equal and unequal moment sequences and generation profiles are drawn
    with comparable frequency; every difference shows up by index
    ``branch_depth + 1``.
    """
    kind = int(rng.integers(4))
    spec_a = random_closed_form(rng, max_index=branch_depth)
    spec_b = spec_a if kind in (0, 2) else vary_closed_form(rng, spec_a, branch_depth)
    cards_a = random_profile(rng, branch_depth)
    cards_b = cards_a
    if kind in (2, 3):
        while cards_b == cards_a:
            cards_b = random_profile(rng, branch_depth)
    ta = tree_with_profile(rng, cards_a, depth)
    tb = tree_with_profile(rng, cards_b, depth)
    split_a = random_split(rng, ta) if rng.random() < 0.5 else None
    split_b = random_split(rng, tb) if rng.random() < 0.5 else None
    return balanced_shift(ta, spec_a, split_a), balanced_shift(tb, spec_b, split_b)
