"""Command-line front end: ``treeshift <subcommand> ...``.

Exit status is 0 when every requested check passes (or the shifts are
equivalent), 1 when a check fails (or they are not), and 2 on usage or
input errors.  ``--format json`` prints one structured document; the text
format adds wall-clock timing, which the structured document leaves out.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .analytic import bpe_radius, kernel_eval, model_space, parse_complex
from .equivalence import (
    build_block_unitary,
    decide_nonperiodic,
    is_isometric,
    joint_multiplicity_oracle,
    theorem_criterion,
    wold_isometry_oracle,
)
from .errors import NotNonPeriodic, TreeShiftError
from .seqclass import classify, parse_sequence_spec
from .shift import apply_adjoint, apply_shift, is_balanced, power_balance_violation
from .specfile import Report, bundled_names, load_shift, read_json
from .suites import SUITE_NAMES, run_suite
from .tree import INFINITE, branching_index, branching_vertices, build_tree, generation_profile
from .wandering import (
    check_mutual_orthogonality,
    gram_restriction,
    invertibility_report,
    kernel_basis,
    kernel_residual,
)

OPEN_PROBLEM_CAVEAT = (
    "note: equal moments and equal generation sizes characterise equivalence only for "
    "non-periodic moment sequences; for periodic or eventually periodic ones the condition "
    "is sufficient, whether it is necessary is an open problem."
)
FALLBACK_NOTE = "the moment/generation criterion does not decide this pair; using the oracles instead"


def default_seed() -> int:
    return int(os.environ.get("TREESHIFT_SEED", "0"))


# ---------------------------------------------------------------- subcommands


def cmd_tree_info(args) -> Report:
    doc = read_json(args.spec)
    tree = build_tree(doc.get("tree", doc))
    N = args.depth if args.depth is not None else tree.trunc_depth
    prof = generation_profile(tree, N)
    try:
        k = branching_index(tree)
        k_label = "exact"
    except TreeShiftError as exc:
        k = getattr(exc, "prefix_value", None)
        k_label = f"prefix-certified({tree.trunc_depth})"
    vb = branching_vertices(tree)
    nc = tree.num_children
    return Report(args.argv, True, {
        "trunc_depth": tree.trunc_depth,
        "n_vertices": tree.n_vertices,
        "tail": None if tree.tail is None else tree.tail.to_json(),
        "cards": list(prof.cards),
        "cards_certification": "exact" if prof.exact else f"prefix-certified({tree.trunc_depth})",
        "tail_description": prof.describe_tail(),
        "branching_vertices": [tree.labels[v] for v in vb],
        "branching_index": "infinite" if k == INFINITE else k,
        "branching_index_certification": k_label,
        "kernel_dimension_in_truncation": 1 + int(np.sum(nc[vb] - 1)),
    })


def cmd_verify(args) -> Report:
    ls = load_shift(args.spec)
    S = ls.operator
    D = S.tree.trunc_depth
    window = min(args.window, D) if args.window is not None else min(4, D)
    chosen = [c for c in ("balanced", "power_balanced", "orthogonality", "moments", "gram", "adjoint")
              if getattr(args, c)]
    if not chosen:
        chosen = ["balanced", "power_balanced", "orthogonality", "moments", "gram", "adjoint"]
    results = {}
    ok = True
    if "balanced" in chosen:
        bal, res = is_balanced(S, args.rtol)
        entry = {"passed": bal, "rtol": args.rtol}
        if bal:
            entry["c"] = [float(x) for x in res.c]
        else:
            entry["witness"] = vars(res)
        results["balanced"] = entry
        ok &= bal
    if "power_balanced" in chosen and D >= 2:
        N = min(window, D - 1)
        viol = power_balance_violation(S, N, args.rtol)
        results["power_balanced"] = {"passed": viol is None, "window": N, "rtol": args.rtol,
                                     "witness": None if viol is None else dict(zip(("n", "u", "v"), viol))}
        ok &= viol is None
    if "orthogonality" in chosen:
        rep = check_mutual_orthogonality(S, window, args.tol)
        results["orthogonality"] = rep.to_json()
        ok &= rep.passed
    if "moments" in chosen:
        if ls.balanced is None:
            results["moments"] = {"passed": False, "reason": "shift is not balanced"}
            ok = False
        else:
            try:
                ls.balanced.check_consistency(args.rtol)
                results["moments"] = {"passed": True, "rtol": args.rtol,
                                      "description": ls.balanced.moments.to_json()}
            except TreeShiftError as exc:
                results["moments"] = {"passed": False, "reason": str(exc)}
                ok = False
    if "gram" in chosen:
        dec = kernel_basis(S)
        worst = max(gram_restriction(S, n, dec).offdiag_max for n in range(window + 1))
        inv = invertibility_report(S, window)
        passed = worst <= args.rtol and inv.invertible
        results["gram"] = {"passed": passed, "window": window, "tol": args.rtol,
                           "max_offdiag_relative": worst, "invertibility": inv.to_json()}
        ok &= passed
    if "adjoint" in chosen:
        rng = np.random.default_rng(args.seed)
        last = int(S.tree.gen_ptr[D])
        x = rng.standard_normal(S.n_vertices)
        x[last:] = 0
        y = rng.standard_normal(S.n_vertices)
        err = abs(apply_shift(S, x) @ y - x @ apply_adjoint(S, y)) / (np.linalg.norm(x) * np.linalg.norm(y))
        results["adjoint"] = {"passed": err <= 1e-13, "tol": 1e-13, "residual": err}
        ok &= err <= 1e-13
    return Report(args.argv, ok, results, 0 if ok else 1)


def cmd_kernel(args) -> Report:
    S = load_shift(args.spec).operator
    D = S.tree.trunc_depth
    window = min(args.window, D) if args.window is not None else min(4, D)
    dec = kernel_basis(S)
    rep = check_mutual_orthogonality(S, window, args.tol)
    res = kernel_residual(S, dec)
    results = {
        "dims": list(dec.dims),
        "dim": dec.dim,
        "adjoint_residual": res,
        "orthogonality": rep.to_json(),
        "invertibility": invertibility_report(S, window).to_json(),
    }
    if args.vectors:
        results["blocks"] = [
            {"owners": [S.tree.labels[v] if v >= 0 else "root" for v in dec.owners[n]],
             "local": dec.local[n].T.tolist()}
            for n in range(len(dec.local))
        ]
    return Report(args.argv, rep.passed, results, 0 if rep.passed else 1)


def cmd_equiv(args) -> Report:
    left, right = load_shift(args.left), load_shift(args.right)
    results = {}
    notes = []
    if left.balanced is None or right.balanced is None:
        raise TreeShiftError("both shifts must be balanced")
    A, B = left.balanced, right.balanced
    oracle = args.oracle
    window = args.window if args.window is not None else min(6, A.tree.trunc_depth, B.tree.trunc_depth)
    kinds = [classify(s.moments) for s in (A, B)]
    nonperiodic = all(k.kind == "non_periodic" and k.certified == "exact" for k in kinds)
    results["classification"] = [k.to_json() for k in kinds]
    if oracle in ("auto", "theorem") and not nonperiodic:
        notes.append(OPEN_PROBLEM_CAVEAT)
        notes.append(FALLBACK_NOTE)
        if oracle == "theorem":
            decide_nonperiodic(A, B)  # raises with the reason
        mismatch, exact, depth = theorem_criterion(A, B)
        results["criterion"] = {"holds": mismatch is None,
                                "mismatch": None if mismatch is None else mismatch.to_json(),
                                "certification": "exact" if exact else f"prefix-certified({depth})"}
        oracle = "wold" if is_isometric(A.operator) and is_isometric(B.operator) else "joint"
    if oracle == "auto":
        oracle = "theorem"
    if oracle == "theorem":
        verdict = decide_nonperiodic(A, B)
    elif oracle == "joint":
        verdict = joint_multiplicity_oracle(A, B, window, args.rtol)
    elif oracle == "wold":
        verdict = wold_isometry_oracle(A.operator, B.operator)
    else:
        bu = build_block_unitary(A, B, window)
        results["block_unitary"] = bu.to_json()
        passed = bu.max_residual <= 1e-11 and bu.unitarity_error <= 1e-12
        results["verdict"] = {"kind": "PrefixCertified", "equivalent": passed,
                              "certification": f"prefix-certified({window})", "method": "block"}
        results["notes"] = notes
        return Report(args.argv, passed, results, 0 if passed else 1)
    results["verdict"] = verdict.to_json()
    results["notes"] = notes + list(verdict.notes)
    ok = bool(verdict.equivalent)
    return Report(args.argv, ok, results, 0 if ok else 1)


def cmd_kernel_eval(args) -> Report:
    ls = load_shift(args.spec)
    if ls.balanced is None:
        raise TreeShiftError("the kernel formula needs a balanced shift")
    model = model_space(ls.balanced, args.order)
    kv = kernel_eval(model, parse_complex(args.z), parse_complex(args.w), args.order)
    return Report(args.argv, True, kv.to_json())


def cmd_bpe(args) -> Report:
    if args.seq is not None:
        spec = parse_sequence_spec(json.loads(args.seq))
    else:
        ls = load_shift(args.spec)
        if ls.balanced is None:
            raise TreeShiftError("bounded point evaluations need a balanced shift")
        spec = ls.balanced.moments
    rep = bpe_radius(spec, args.order)
    return Report(args.argv, True, rep.to_json())


def cmd_classify_seq(args) -> Report:
    if args.json is not None:
        obj = json.loads(args.json)
    elif args.file is not None:
        obj = read_json(args.file)
        if "weights" in obj and isinstance(obj["weights"], dict) and "family" in obj["weights"]:
            obj = obj["weights"]
    else:
        raise TreeShiftError("give a sequence file or --json")
    spec = parse_sequence_spec(obj)
    verdict = classify(spec)
    results = {"sequence": spec.to_json(), "verdict": verdict.to_json()}
    if verdict.kind in ("periodic", "eventually_periodic"):
        results["note"] = OPEN_PROBLEM_CAVEAT
    return Report(args.argv, True, results)


def cmd_examples(args) -> Report:
    what = args.what
    if what == "list":
        return Report(args.argv, True, {"bundled": bundled_names(), "suites": list(SUITE_NAMES)})
    if what == "show":
        if not args.name:
            raise TreeShiftError("examples show needs a name")
        return Report(args.argv, True, read_json(args.name))
    if what == "section4":
        res = run_suite("section4", args.seed)
        return Report(args.argv, res["passed"], res, 0 if res["passed"] else 1)
    if what == "all":
        res = {name: run_suite(name, args.seed, None) for name in SUITE_NAMES}
        ok = all(r["passed"] for r in res.values())
        return Report(args.argv, ok, res, 0 if ok else 1)
    if what in SUITE_NAMES:
        res = run_suite(what, args.seed, args.trials)
        return Report(args.argv, res["passed"], res, 0 if res["passed"] else 1)
    raise TreeShiftError(f"unknown example {what!r}; try 'examples list'")


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--output", help="also write the structured report to this file")
    common.add_argument("--seed", type=int, default=None, help="default: $TREESHIFT_SEED or 0")
    common.add_argument("--rtol", type=float, default=1e-12, help="relative tolerance for norm equalities")
    common.add_argument("--tol", type=float, default=1e-10, help="orthogonality tolerance")

    p = argparse.ArgumentParser(prog="treeshift", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("tree-info", parents=[common], help="generation sizes and branching data")
    s.add_argument("spec")
    s.add_argument("--depth", type=int, help="profile length (may exceed the truncation with a tail rule)")
    s.set_defaults(func=cmd_tree_info)

    s = sub.add_parser("verify", parents=[common], help="balance, orthogonality and moment checks")
    s.add_argument("spec")
    s.add_argument("--window", type=int)
    for flag in ("balanced", "power-balanced", "orthogonality", "moments", "gram", "adjoint"):
        s.add_argument(f"--{flag}", action="store_true")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("kernel", parents=[common], help="blocks of ker S* and the orthogonality report")
    s.add_argument("spec")
    s.add_argument("--window", type=int)
    s.add_argument("--vectors", action="store_true", help="include the basis vectors")
    s.set_defaults(func=cmd_kernel)

    s = sub.add_parser("equiv", parents=[common], help="decide unitary equivalence")
    s.add_argument("--left", required=True)
    s.add_argument("--right", required=True)
    s.add_argument("--oracle", choices=("auto", "theorem", "joint", "wold", "block"), default="auto")
    s.add_argument("--window", type=int)
    s.set_defaults(func=cmd_equiv)

    s = sub.add_parser("kernel-eval", parents=[common], help="reproducing kernel block scalars")
    s.add_argument("spec")
    s.add_argument("--z", required=True)
    s.add_argument("--w", required=True)
    s.add_argument("--order", type=int, default=64)
    s.set_defaults(func=cmd_kernel_eval)

    s = sub.add_parser("bpe", parents=[common], help="bounded point evaluation radius")
    s.add_argument("spec", nargs="?")
    s.add_argument("--seq", help="sequence description as inline JSON")
    s.add_argument("--order", type=int, default=64)
    s.set_defaults(func=cmd_bpe)

    s = sub.add_parser("classify-seq", parents=[common], help="periodicity of a moment sequence")
    s.add_argument("file", nargs="?")
    s.add_argument("--json", help="sequence description as inline JSON")
    s.set_defaults(func=cmd_classify_seq)

    s = sub.add_parser("examples", parents=[common], help="bundled examples and randomized suites")
    s.add_argument("what", help="list | show | section4 | all | " + " | ".join(SUITE_NAMES))
    s.add_argument("name", nargs="?")
    s.add_argument("--trials", type=int)
    s.set_defaults(func=cmd_examples)
    return p


def _text(report: Report, elapsed: float) -> str:
    lines = [f"{'PASS' if report.ok else 'FAIL'}  {' '.join(report.command)}"]
    for key, val in report.results.items():
        lines.append(f"{key}: {json.dumps(val, sort_keys=True)}")
    lines.append(f"elapsed: {elapsed:.3f} s")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    if args.seed is None:
        args.seed = default_seed()
    start = time.perf_counter()
    try:
        report = args.func(args)
    except NotNonPeriodic as exc:
        report = Report(argv, False, {"error": type(exc).__name__, "message": str(exc),
                                      "note": OPEN_PROBLEM_CAVEAT}, 2)
    except TreeShiftError as exc:
        report = Report(argv, False, {"error": type(exc).__name__, "message": str(exc)}, 2)
    except (OSError, json.JSONDecodeError) as exc:
        report = Report(argv, False, {"error": type(exc).__name__, "message": str(exc)}, 2)
    elapsed = time.perf_counter() - start
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(report.emit())
    if args.format == "json":
        sys.stdout.write(report.emit())
    else:
        out = sys.stderr if report.exit_code == 2 else sys.stdout
        out.write(_text(report, elapsed))
    return report.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
