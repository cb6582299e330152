"""Reading shift descriptions from JSON and writing structured reports.

A shift file combines a tree and a weight description::

    {"tree": {"depth": 6, "branching": 2, "tail": {"self_similar": 1}},
     "weights": {"family": "dirichlet", "q": 2}}

The weight part is one of ``{"family": ..., "q": ..., "overrides": ...}``,
``{"moments": <sequence>, "split": {...}}`` or ``{"weights": {"<id>": w}}``
(optionally with ``"moments"`` declaring an exact description of the
resulting ``c_n``).  Bundled examples are found by name when no file of
that name exists.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import IncompatibleSpecs, NotBalanced, SpecError, SpecParseError
from .seqclass import ClosedForm, MomentSequenceSpec, parse_sequence_spec
from .shift import BalancedShift, ShiftOperator, balanced_shift, from_weights, is_balanced
from .tree import RootedTree, build_tree


def bundled_names() -> list[str]:
    root = resources.files("treeshift") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_json(path) -> dict:
    """Load ``path``; fall back to a bundled example of the same name."""
    p = Path(path)
    if p.exists():
        text = p.read_text()
    else:
        name = p.name[:-5] if p.name.endswith(".json") else p.name
        res = resources.files("treeshift") / "data" / f"{name}.json"
        if not res.is_file():
            raise SpecParseError(f"no such file or bundled example: {path}")
        text = res.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"{path}: {exc}") from exc


@dataclass(frozen=True, eq=False)
class LoadedShift:
    """A tree plus its shift; ``balanced`` is None for unbalanced weights."""

    tree: RootedTree
    operator: ShiftOperator
    balanced: BalancedShift | None
    source: str = ""

    @property
    def moments(self) -> MomentSequenceSpec | None:
        return None if self.balanced is None else self.balanced.moments


def _explicit_weights(tree: RootedTree, raw) -> np.ndarray:
    if not isinstance(raw, Mapping):
        raise SpecParseError("'weights' must map vertex ids to positive numbers")
    w = np.zeros(tree.n_vertices)
    seen = set()
    for key, val in raw.items():
        try:
            v = tree.index_of(str(key))
        except KeyError as exc:
            raise IncompatibleSpecs(f"weight given for vertex {key!r}, which is not in the tree") from exc
        if v == 0:
            raise IncompatibleSpecs("the root carries no weight")
        try:
            w[v] = float(val)
        except (TypeError, ValueError) as exc:
            raise SpecParseError(f"weight of {key!r} is not a number: {val!r}") from exc
        seen.add(v)
    missing = [tree.labels[v] for v in range(1, tree.n_vertices) if v not in seen]
    if missing:
        raise IncompatibleSpecs(f"no weight for vertices {missing[:8]}{'...' if len(missing) > 8 else ''}")
    return w


def _split(tree: RootedTree, raw):
    if raw is None:
        return None
    s = np.ones(tree.n_vertices)
    for key, val in raw.items():
        try:
            s[tree.index_of(str(key))] = float(val)
        except KeyError as exc:
            raise IncompatibleSpecs(f"split given for unknown vertex {key!r}") from exc
    return s


def shift_from_parts(tree: RootedTree, wspec: Mapping, source: str = "") -> LoadedShift:
    if not isinstance(wspec, Mapping):
        raise SpecParseError("weight description must be an object")
    if "family" in wspec:
        bs = balanced_shift(tree, parse_sequence_spec(wspec))
        return LoadedShift(tree, bs.operator, bs, source)
    if "weights" in wspec:
        S = ShiftOperator(tree, _explicit_weights(tree, wspec["weights"]))
        ok, _ = is_balanced(S)
        bs = None
        if ok:
            if "moments" in wspec:
                bs = BalancedShift(S, parse_sequence_spec(wspec["moments"]))
                try:
                    bs.check_consistency()
                except NotBalanced as exc:
                    raise IncompatibleSpecs(f"declared moments do not match the weights: {exc}") from exc
            else:
                bs = from_weights(tree, S.weights)
        return LoadedShift(tree, S, bs, source)
    if "moments" in wspec:
        spec = parse_sequence_spec(wspec["moments"])
        bs = balanced_shift(tree, spec, _split(tree, wspec.get("split")))
        return LoadedShift(tree, bs.operator, bs, source)
    raise SpecParseError(f"unrecognised weight description with keys {sorted(wspec)}")


def load_shift(path) -> LoadedShift:
    doc = read_json(path)
    if not isinstance(doc, Mapping) or "tree" not in doc or "weights" not in doc:
        raise SpecParseError(f"{path}: expected an object with 'tree' and 'weights'")
    return shift_from_parts(build_tree(doc["tree"]), doc["weights"], str(path))


def load_specs(*paths) -> LoadedShift:
    """One combined shift file, or a tree file followed by a weight file."""
    if len(paths) == 1:
        return load_shift(paths[0])
    if len(paths) == 2:
        tree_doc = read_json(paths[0])
        tree = build_tree(tree_doc.get("tree", tree_doc))
        return shift_from_parts(tree, read_json(paths[1]), str(paths[0]))
    raise SpecError("expected one shift file or a tree file and a weight file")


def shift_to_json(ls: LoadedShift) -> dict:
    """Explicit-weight description that reloads to the same operator."""
    w = {ls.tree.labels[v]: float(ls.operator.weights[v]) for v in range(1, ls.tree.n_vertices)}
    out = {"tree": ls.tree.to_spec(), "weights": {"weights": w}}
    if ls.balanced is not None and isinstance(ls.balanced.moments, ClosedForm):
        out["weights"]["moments"] = ls.balanced.moments.to_json()
    return out


# ---------------------------------------------------------------- reports


def _plain(obj):
    """JSON-native copy; non-finite floats become strings."""
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


@dataclass
class Report:
    """Structured result of one command.

    Every verdict carries a certification label and every numeric check its
    tolerance.  Wall-clock timing is kept out of the structured document so
    that equal inputs give byte-identical output.
    """

    command: list
    ok: bool
    results: dict = field(default_factory=dict)
    exit_code: int = 0

    def __post_init__(self):
        self.command = _plain(self.command)
        self.results = _plain(self.results)
        self.ok = bool(self.ok)

    def emit(self) -> str:
        doc = {"command": self.command, "ok": self.ok, "exit_code": self.exit_code, "results": self.results}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @classmethod
    def parse(cls, text: str) -> Report:
        doc = json.loads(text)
        return cls(doc["command"], doc["ok"], doc["results"], doc["exit_code"])
