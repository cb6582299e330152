"""Rooted directed trees truncated at a finite depth.

Vertices are re-indexed breadth-first: the root is 0, each generation is a
contiguous index range and the children of every vertex are contiguous too.
A :class:`TailSpec` optionally describes how the tree continues below the
truncation depth, which is what makes statements about *all* generations
decidable.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    CycleDetected,
    DepthOutOfRange,
    DisconnectedSpec,
    EmptySpec,
    LeafBeforeTruncation,
    MultipleParents,
    SpecError,
    UndecidableWithoutTail,
)

INFINITE = math.inf


@dataclass(frozen=True)
class TailSpec:
    """Continuation rule below the truncation depth ``D``.

    ``all_rays``
        every vertex of depth ``D`` continues as a single infinite path.
    ``self_similar`` with period ``p``
        a vertex of depth ``n >= D`` has as many children as its ancestor
        at depth ``n - p``; the branching pattern of depths ``D-p .. D-1``
        therefore repeats forever.
    """

    rule: str
    period: int | None = None

    def __post_init__(self):
        if self.rule not in ("all_rays", "self_similar"):
            raise SpecError(f"unknown tail rule {self.rule!r}")
        if self.rule == "self_similar":
            if not isinstance(self.period, int) or self.period < 1:
                raise SpecError("self_similar tail needs an integer period >= 1")
        elif self.period is not None:
            raise SpecError("all_rays tail takes no period")

    def to_json(self):
        if self.rule == "all_rays":
            return "all_rays"
        return {"self_similar": self.period}

    @classmethod
    def from_json(cls, obj) -> TailSpec | None:
        if obj is None:
            return None
        if isinstance(obj, TailSpec):
            return obj
        if obj == "all_rays":
            return cls("all_rays")
        if isinstance(obj, Mapping) and set(obj) == {"self_similar"}:
            return cls("self_similar", int(obj["self_similar"]))
        raise SpecError(f"cannot parse tail rule {obj!r}")


ALL_RAYS = TailSpec("all_rays")


def self_similar(period: int) -> TailSpec:
    return TailSpec("self_similar", period)


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RootedTree:
    """Immutable breadth-first indexed tree truncated at depth ``trunc_depth``.

    Attributes
    ----------
    parent : ndarray of int64
        ``parent[v]``, with ``-1`` for the root.
    depth : ndarray of int64
        ``depth[v]`` (the root has depth 0).
    child_ptr : ndarray of int64
        children of ``v`` are ``range(child_ptr[v], child_ptr[v + 1])``.
        Vertices of depth ``trunc_depth`` have no recorded children.
    gen_ptr : ndarray of int64
        generation ``n`` is ``range(gen_ptr[n], gen_ptr[n + 1])``.
    labels : tuple of str
        the identifiers the vertices had in the input description.
    """

    parent: np.ndarray
    depth: np.ndarray
    child_ptr: np.ndarray
    gen_ptr: np.ndarray
    trunc_depth: int
    tail: TailSpec | None = None
    labels: tuple = field(default=(), repr=False)

    @property
    def n_vertices(self) -> int:
        return int(self.parent.shape[0])

    @property
    def num_children(self) -> np.ndarray:
        return np.diff(self.child_ptr)

    def children(self, v: int) -> list[int]:
        return list(range(int(self.child_ptr[v]), int(self.child_ptr[v + 1])))

    def generation_range(self, n: int) -> range:
        if not 0 <= n <= self.trunc_depth:
            raise DepthOutOfRange(f"generation {n} outside 0..{self.trunc_depth}")
        return range(int(self.gen_ptr[n]), int(self.gen_ptr[n + 1]))

    def card(self, n: int) -> int:
        return len(self.generation_range(n))

    def index_of(self, label) -> int:
        lookup = getattr(self, "_lookup", None)
        if lookup is None:
            lookup = {lab: i for i, lab in enumerate(self.labels)}
            object.__setattr__(self, "_lookup", lookup)
        return lookup[str(label)]

    def to_spec(self) -> dict:
        """Tree description (keyed by vertex labels) accepted by :func:`build_tree`."""
        lab = self.labels
        children = {}
        for v in range(int(self.gen_ptr[-2])):
            children[lab[v]] = [lab[u] for u in self.children(v)]
        return {
            "depth": self.trunc_depth,
            "children": children,
            "tail": None if self.tail is None else self.tail.to_json(),
        }

    def __repr__(self):
        return (
            f"RootedTree(n_vertices={self.n_vertices}, trunc_depth={self.trunc_depth}, "
            f"tail={self.tail})"
        )


def _from_generation_lists(child_lists, labels, trunc_depth, tail) -> RootedTree:
    """Assemble arrays from children lists already in breadth-first order."""
    V = len(labels)
    nchild = np.array([len(c) for c in child_lists], dtype=np.int64)
    child_ptr = np.empty(V + 1, dtype=np.int64)
    child_ptr[0] = 1
    np.cumsum(nchild, out=child_ptr[1:])
    child_ptr[1:] += 1
    parent = np.full(V, -1, dtype=np.int64)
    parent[1:] = np.repeat(np.arange(V, dtype=np.int64), nchild)
    depth = np.zeros(V, dtype=np.int64)
    for u in range(1, V):
        depth[u] = depth[parent[u]] + 1
    gen_ptr = np.searchsorted(depth, np.arange(trunc_depth + 2), side="left").astype(np.int64)
    return RootedTree(
        _readonly(parent),
        _readonly(depth),
        _readonly(child_ptr),
        _readonly(gen_ptr),
        int(trunc_depth),
        tail,
        tuple(labels),
    )


def build_tree(spec: Mapping) -> RootedTree:
    """Build a :class:`RootedTree` from a structured description.

    Accepted forms::

        {"depth": D, "children": {"0": ["1", "2"], ...}, "tail": ...}
        {"depth": D, "branching": k or [k_0, ..., k_{D-1}], "tail": ...}

    ``"0"`` is the root.  Children beyond depth ``D`` are dropped.  Under an
    ``all_rays`` tail a vertex of depth ``< D`` without children is continued
    by a single path down to depth ``D``; otherwise it is an error.
    """
    if not spec or "depth" not in spec:
        raise EmptySpec("tree description needs at least a 'depth' field")
    D = spec["depth"]
    if not isinstance(D, int) or isinstance(D, bool) or D < 0:
        raise SpecError(f"depth must be a non-negative integer, got {D!r}")
    tail = _check_tail(TailSpec.from_json(spec.get("tail")), D)

    if "branching" in spec:
        return spherical_tree(spec["branching"], D, tail)

    raw = spec.get("children")
    if raw is None:
        raw = {}
    if not isinstance(raw, Mapping):
        raise SpecError("'children' must map vertex ids to lists of ids")
    children: dict[str, list[str]] = {}
    for key, kids in raw.items():
        if not isinstance(kids, (list, tuple)):
            raise SpecError(f"children of {key!r} must be a list")
        children[str(key)] = [str(k) for k in kids]
    if not children and D > 0 and tail is None:
        raise EmptySpec("no vertices below the root")

    parent_of: dict[str, str] = {}
    for p, kids in children.items():
        for c in kids:
            if c in parent_of:
                raise MultipleParents(c, [parent_of[c], p])
            parent_of[c] = p

    root = "0"
    if root in parent_of:
        seen = [root]
        cur = parent_of[root]
        while cur != root and cur in parent_of and cur not in seen:
            seen.append(cur)
            cur = parent_of[cur]
        if cur == root:
            raise CycleDetected(seen)
        raise SpecError(f"vertex '0' must be the root but is a child of {parent_of[root]!r}")

    # connectivity over the full description, before truncation
    reached = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for c in children.get(v, ()):
            reached.add(c)
            queue.append(c)
    mentioned = set(children) | set(parent_of)
    stray = sorted(mentioned - reached, key=_id_key)
    if stray:
        start = stray[0]
        path = [start]
        cur = start
        while cur in parent_of:
            cur = parent_of[cur]
            if cur in path:
                raise CycleDetected(path[path.index(cur):])
            path.append(cur)
        raise DisconnectedSpec(stray)

    labels = [root]
    child_lists: list[list[int]] = []
    frontier = [root]
    next_id = 1
    for d in range(D + 1):
        new_frontier = []
        for v in frontier:
            if d == D:
                child_lists.append([])
                continue
            kids = children.get(v, [])
            if not kids:
                if tail is None or tail.rule != "all_rays":
                    raise LeafBeforeTruncation(v, d)
                kids = [f"{v}~"]
            ids = list(range(next_id, next_id + len(kids)))
            next_id += len(kids)
            child_lists.append(ids)
            labels.extend(kids)
            new_frontier.extend(kids)
        frontier = new_frontier
    return _from_generation_lists(child_lists, labels, D, tail)


def _check_tail(tail: TailSpec | None, D: int) -> TailSpec | None:
    if tail is not None and tail.rule == "self_similar" and tail.period > D:
        raise SpecError(f"self_similar period {tail.period} exceeds depth {D}")
    return tail


def _id_key(s: str):
    return (0, int(s), s) if s.isdigit() else (1, 0, s)


def spherical_tree(branching, depth: int, tail: TailSpec | None = None) -> RootedTree:
    """Tree where every vertex of generation ``n`` has ``branching[n]`` children.

    ``branching`` may be a single integer used for every generation.
    """
    D = int(depth)
    if isinstance(branching, (int, np.integer)):
        b = np.full(D, int(branching), dtype=np.int64)
    else:
        b = np.asarray(list(branching), dtype=np.int64)
        if b.shape[0] < D:
            raise SpecError(f"branching list has {b.shape[0]} entries, need {D}")
        b = b[:D]
    if np.any(b < 1):
        raise LeafBeforeTruncation("<spherical>", int(np.argmax(b < 1)))
    tail = _check_tail(TailSpec.from_json(tail), D)
    sizes = np.ones(D + 1, dtype=np.int64)
    for n in range(D):
        sizes[n + 1] = sizes[n] * b[n]
    gen_ptr = np.zeros(D + 2, dtype=np.int64)
    np.cumsum(sizes, out=gen_ptr[1:])
    V = int(gen_ptr[-1])
    depth_arr = np.repeat(np.arange(D + 1, dtype=np.int64), sizes)
    nchild = np.zeros(V, dtype=np.int64)
    nchild[: int(gen_ptr[D])] = b[depth_arr[: int(gen_ptr[D])]]
    child_ptr = np.empty(V + 1, dtype=np.int64)
    child_ptr[0] = 1
    np.cumsum(nchild, out=child_ptr[1:])
    child_ptr[1:] += 1
    parent = np.full(V, -1, dtype=np.int64)
    parent[1:] = np.repeat(np.arange(V, dtype=np.int64), nchild)
    return RootedTree(
        _readonly(parent),
        _readonly(depth_arr),
        _readonly(child_ptr),
        _readonly(gen_ptr),
        D,
        tail,
        tuple(str(i) for i in range(V)),
    )


def path_tree(depth: int, tail: TailSpec | None = ALL_RAYS) -> RootedTree:
    return spherical_tree(1, depth, tail)


def kary_tree(k: int, depth: int, tail: TailSpec | None = None) -> RootedTree:
    return spherical_tree(k, depth, tail)


def from_child_counts(counts: Sequence[Sequence[int]], tail: TailSpec | None = None) -> RootedTree:
    """Tree from per-generation child counts.

    ``counts[n][i]`` is the number of children of the ``i``-th vertex of
    generation ``n`` (breadth-first order); ``len(counts)`` is the depth.
    """
    D = len(counts)
    child_lists = []
    labels = ["0"]
    width = 1
    next_id = 1
    for n, row in enumerate(counts):
        if len(row) != width:
            raise SpecError(f"generation {n} has {width} vertices, got {len(row)} counts")
        for k in row:
            if k < 1:
                raise LeafBeforeTruncation(str(len(child_lists)), n)
            child_lists.append(list(range(next_id, next_id + k)))
            labels.extend(str(i) for i in range(next_id, next_id + k))
            next_id += k
        width = sum(row)
    child_lists.extend([] for _ in range(width))
    return _from_generation_lists(child_lists, labels, D, _check_tail(TailSpec.from_json(tail), D))


# ---------------------------------------------------------------- queries


def generation(tree: RootedTree, n: int) -> range:
    """Vertices of depth ``n`` as a contiguous id range."""
    return tree.generation_range(n)


def branching_vertices(tree: RootedTree) -> np.ndarray:
    """Sorted ids of vertices with at least two children inside the truncation."""
    return np.flatnonzero(tree.num_children >= 2)


def branching_index(tree: RootedTree):
    """``1 + max depth of a branching vertex``, ``0`` for a path, or ``INFINITE``.

    Without a tail rule a branching vertex at depth ``D - 1`` leaves the value
    undetermined by the truncation; :class:`UndecidableWithoutTail` is raised
    and carries the prefix value.
    """
    vb = branching_vertices(tree)
    prefix = 0 if vb.size == 0 else 1 + int(tree.depth[vb].max())
    D = tree.trunc_depth
    tail = tree.tail
    if tail is None:
        if vb.size and int(tree.depth[vb].max()) == D - 1:
            raise UndecidableWithoutTail(
                "branching at depth D-1 without a tail rule", prefix_value=prefix
            )
        return prefix
    if tail.rule == "self_similar":
        lo = D - tail.period
        if vb.size and np.any(tree.depth[vb] >= lo):
            return INFINITE
    return prefix


# ---------------------------------------------------------------- profiles


@dataclass(frozen=True)
class GenerationProfile:
    """Generation cardinalities ``Card(G_n)``.

    ``cards`` holds ``n = 0..N``.  When a tail rule is known, :meth:`card`
    answers for every ``n`` exactly (arbitrary-size integers).
    """

    cards: tuple
    tail: TailSpec | None = None
    trunc_depth: int = 0
    trunc_cards: tuple = field(default=(), repr=False)
    # all_rays: (Card G_D,).  self_similar: (Card Chi(u), ancestor child counts) per u in G_{D-1}
    tail_data: tuple = field(default=(), repr=False)

    def card(self, n: int) -> int:
        if n < 0:
            raise DepthOutOfRange(f"negative generation {n}")
        if n < len(self.cards):
            return self.cards[n]
        D = self.trunc_depth
        if self.tail is None:
            raise DepthOutOfRange(f"generation {n} beyond truncation depth {D} without a tail rule")
        if n <= D:
            return self.trunc_cards[n]
        if self.tail.rule == "all_rays":
            return self.tail_data[0]
        p = self.tail.period
        q, r = divmod(n - D, p)
        total = 0
        for n_children, chain in self.tail_data:
            full = math.prod(chain)
            total += n_children * full**q * math.prod(chain[:r])
        return total

    def recurrence(self):
        """``(start, period, n_bases)`` such that on each residue class mod
        ``period`` beyond ``start`` the cards are a sum of at most ``n_bases``
        geometric sequences."""
        if self.tail is None:
            return None
        if self.tail.rule == "all_rays":
            return (self.trunc_depth, 1, 1)
        return (self.trunc_depth, self.tail.period, max(1, len(self.tail_data)))

    @property
    def exact(self) -> bool:
        return self.tail is not None

    def describe_tail(self) -> str | None:
        if self.tail is None:
            return None
        D = self.trunc_depth
        if self.tail.rule == "all_rays":
            return f"Card(G_n) = {self.tail_data[0]} for n >= {D}"
        return f"self-similar with period {self.tail.period} from depth {D}"


def generation_profile(tree: RootedTree, N: int | None = None) -> GenerationProfile:
    D = tree.trunc_depth
    if N is None:
        N = D
    if N < 0:
        raise DepthOutOfRange(f"negative depth {N}")
    if N > D and tree.tail is None:
        raise DepthOutOfRange(f"N={N} exceeds truncation depth {D} and no tail rule is given")
    trunc = tuple(int(x) for x in np.diff(tree.gen_ptr))
    tail_data: tuple = ()
    if tree.tail is not None:
        if tree.tail.rule == "all_rays":
            tail_data = (trunc[D],)
        else:
            p = tree.tail.period
            nc = tree.num_children
            classes = []
            for u in tree.generation_range(D - 1):
                chain = []
                a = u
                for _ in range(p):
                    chain.append(int(nc[a]))
                    a = int(tree.parent[a])
                classes.append((int(nc[u]), tuple(reversed(chain))))
            tail_data = tuple(classes)
    prof = GenerationProfile(trunc[: N + 1], tree.tail, D, trunc, tail_data)
    if N > D:
        prof = GenerationProfile(tuple(prof.card(n) for n in range(N + 1)), tree.tail, D, trunc, tail_data)
    return prof


def first_profile_mismatch(a: GenerationProfile, b: GenerationProfile):
    """First ``n`` with ``Card(G_n) != Card(G~_n)``.

    Returns ``(n or None, exact)``.  With tail rules on both sides the answer
    covers all ``n``: on every residue class modulo the common period the
    difference is an exponential sum with at most ``m_a + m_b`` distinct
    positive integer bases, so it vanishes identically once it vanishes on
    ``m_a + m_b`` consecutive terms.
    """
    ra, rb = a.recurrence(), b.recurrence()
    if ra is None or rb is None:
        limit = min(a.trunc_depth, b.trunc_depth)
        for n in range(limit + 1):
            if a.card(n) != b.card(n):
                return n, True
        return None, False
    start = max(ra[0], rb[0])
    period = math.lcm(ra[1], rb[1])
    bound = start + period * (ra[2] + rb[2])
    for n in range(bound + 1):
        if a.card(n) != b.card(n):
            return n, True
    return None, True
