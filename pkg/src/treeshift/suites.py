"""Seeded randomized property suites.

Each suite returns a JSON-ready dict with a ``passed`` flag, the tolerances
used, worst observed values and the first few failures.  The same seed
always produces the same dict.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import generators as gen
from .analytic import bpe_radius, kernel_eval, kernel_psd_min_eig, model_space, mz_gram_check
from .equivalence import (
    decide_nonperiodic,
    joint_multiplicity_oracle,
    theorem_criterion,
    wold_isometry_oracle,
)
from .seqclass import EventuallyPeriodic, bergman, dirichlet, evaluate
from .shift import apply_shift, balanced_shift, is_balanced, moment_formula
from .specfile import bundled_names, load_shift
from .tree import kary_tree
from .wandering import check_mutual_orthogonality, gram_restriction, kernel_basis, kernel_dimension, kernel_residual

MAX_FAILURES = 5


def _rng(seed, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed), stream])


def balanced_instances(seed, trials: int, depth=(6, 10), c_range=(0.2, 3.0)):
    """Random balanced shifts on trees with at least one perturbable weight."""
    rng = _rng(seed)
    out = []
    while len(out) < trials:
        D = int(rng.integers(depth[0], depth[1] + 1))
        bs = gen.random_balanced_shift(rng, D, max_branching=4, c_range=c_range, max_width=64)
        if gen.perturbable_vertices(bs.tree).size:
            out.append(bs)
    return out


def _power_images(S, N):
    """``||S^n e_v||`` by repeated application, for ``d_v + n <= D``."""
    D = S.tree.trunc_depth
    table = np.full((N + 1, S.n_vertices), np.nan)
    table[0] = 1.0
    X = np.eye(S.n_vertices)
    for n in range(1, N + 1):
        # breadth-first order: vertices of depth <= D - n form a prefix
        m = int(S.tree.gen_ptr[D - n + 1])
        X = apply_shift(S, X[:, :m])
        table[n, :m] = np.linalg.norm(X, axis=0)
    return table


def suite_moments(seed, trials: int = 100, N: int = 6, rtol: float = 1e-12):
    worst = 0.0
    failures = []
    checked = 0
    for t, bs in enumerate(balanced_instances(seed, trials)):
        S = bs.operator
        ok, table = is_balanced(S)
        if not ok:
            failures.append({"trial": t, "reason": "not balanced"})
            continue
        T = _power_images(S, min(N, S.tree.trunc_depth))
        for n in range(1, T.shape[0]):
            cols = np.flatnonzero(~np.isnan(T[n]))
            for v in cols:
                ref = moment_formula(bs.moments, int(S.tree.depth[v]), n)
                err = abs(T[n, v] - ref) / ref
                checked += 1
                if err > worst:
                    worst = err
                if err > rtol and len(failures) < MAX_FAILURES:
                    failures.append({"trial": t, "v": int(v), "n": n, "rel_err": err})
    return {"passed": not failures, "rtol": rtol, "trials": trials, "window": N,
            "pairs_checked": checked, "max_rel_err": worst, "failures": failures}


def suite_orthogonality(seed, trials: int = 100, tol: float = 1e-10):
    rng = _rng(seed, 1)
    max_pass = 0.0
    min_fail = math.inf
    failures = []
    witnesses = []
    detected = 0
    for t, bs in enumerate(balanced_instances(seed, trials)):
        S = bs.operator
        D = S.tree.trunc_depth
        rep = check_mutual_orthogonality(S, D, tol)
        max_pass = max(max_pass, rep.max_cosine)
        if not rep.passed and len(failures) < MAX_FAILURES:
            failures.append({"trial": t, "balanced": True, "max_cosine": rep.max_cosine})
        P, u = gen.perturb_weight(rng, S)
        rep = check_mutual_orthogonality(P, D, tol)
        min_fail = min(min_fail, rep.max_cosine)
        if rep.passed or rep.witness is None:
            if len(failures) < MAX_FAILURES:
                failures.append({"trial": t, "balanced": False, "vertex": u, "max_cosine": rep.max_cosine})
        else:
            detected += 1
            if len(witnesses) < 3:
                witnesses.append(dict(rep.witness, trial=t, perturbed_vertex=u))
    return {"passed": not failures, "tol": tol, "trials": trials,
            "max_cosine_balanced": max_pass, "min_cosine_perturbed": min_fail,
            "perturbed_detected": detected,
            "sample_witnesses": witnesses, "failures": failures}


def suite_kernel_structure(seed, trials: int = 100, resid_tol: float = 1e-12, ortho_tol: float = 1e-13):
    failures = []
    worst_resid = 0.0
    worst_ortho = 0.0
    instances = balanced_instances(seed, trials)
    shifts = [bs.operator for bs in instances]
    shifts += [load_shift(name).operator for name in bundled_names()]
    for t, S in enumerate(shifts):
        tree = S.tree
        dec = kernel_basis(S)
        nc = tree.num_children
        formula = 1 + int(np.sum(nc[nc >= 2] - 1))
        cards = [tree.card(n) for n in range(tree.trunc_depth + 1)]
        dims_ok = all(dec.dims[n] == cards[n] - cards[n - 1] for n in range(1, len(cards))) and dec.dims[0] == 1
        dim_ok = dec.dim == formula == kernel_dimension(S)
        Q = dec.vectors()
        ortho = float(np.abs(Q.T @ Q - np.eye(Q.shape[1])).max())
        resid = kernel_residual(S, dec)
        worst_resid = max(worst_resid, resid)
        worst_ortho = max(worst_ortho, ortho)
        if not (dims_ok and dim_ok and resid <= resid_tol and ortho <= ortho_tol):
            if len(failures) < MAX_FAILURES:
                failures.append({"instance": t, "dims_ok": dims_ok, "dim_ok": dim_ok,
                                 "residual": resid, "orthonormality": ortho})
    return {"passed": not failures, "instances": len(shifts), "residual_tol": resid_tol,
            "orthonormality_tol": ortho_tol, "max_residual": worst_resid,
            "max_orthonormality_err": worst_ortho, "failures": failures}


def suite_gram(seed, trials: int = 100, N: int = 6, tol: float = 1e-12):
    failures = []
    worst_off = 0.0
    worst_diag = 0.0
    min_diag = math.inf
    for t, bs in enumerate(balanced_instances(seed, trials)):
        S = bs.operator
        dec = kernel_basis(S)
        for n in range(0, min(N, S.tree.trunc_depth) + 1):
            g = gram_restriction(S, n, dec)
            worst_off = max(worst_off, g.offdiag_max)
            for k, B in enumerate(g.blocks):
                if not B.size:
                    continue
                ref = moment_formula(bs.moments, k, n) ** 2
                err = float(np.abs(np.diag(B) - ref).max()) / ref
                worst_diag = max(worst_diag, err)
            min_diag = min(min_diag, g.min_diagonal)
            bad = g.offdiag_max > tol or worst_diag > tol or not g.min_diagonal > 0
            if bad and len(failures) < MAX_FAILURES:
                failures.append({"trial": t, "n": n, "offdiag": g.offdiag_max, "diag_rel_err": worst_diag})
    return {"passed": not failures, "tol": tol, "trials": trials, "window": N,
            "max_offdiag_relative": worst_off, "max_diag_rel_err": worst_diag,
            "min_diagonal": min_diag, "failures": failures}


def suite_concordance(seed, trials: int = 200, window: int = 6):
    rng = _rng(seed, 2)
    failures = []
    tally = {"Equivalent": 0, "NotEquivalent": 0}
    by_kind = {"moment": 0, "generation": 0}
    for t in range(trials):
        A, B = gen.random_nonperiodic_pair(rng)
        d = decide_nonperiodic(A, B)
        j = joint_multiplicity_oracle(A, B, window)
        tally[d.kind] = tally.get(d.kind, 0) + 1
        if d.witness is not None:
            by_kind[d.witness.which] += 1
        same = d.equivalent == j.equivalent
        if same and d.witness is not None:
            same = j.witness is not None and (d.witness.index, d.witness.which) == (j.witness.index, j.witness.which)
        if not same and len(failures) < MAX_FAILURES:
            failures.append({"trial": t, "theorem": d.to_json(), "oracle": j.to_json()})
    return {"passed": not failures, "trials": trials, "window": window,
            "verdicts": tally, "deciding_invariant": by_kind, "failures": failures}


def section4():
    T = load_shift("section4_T")
    Tt = load_shift("section4_T_tilde")
    wold = wold_isometry_oracle(T.operator, Tt.operator)
    mismatch, exact, _ = theorem_criterion(T.balanced, Tt.balanced)
    joint = joint_multiplicity_oracle(T.operator, Tt.operator, 4)
    dims = (kernel_basis(T.operator).dim, kernel_basis(Tt.operator).dim)
    cards = ([T.tree.card(n) for n in range(4)], [Tt.tree.card(n) for n in range(4)])
    passed = (
        wold.kind == "Equivalent"
        and joint.equivalent
        and mismatch is not None
        and (mismatch.index, mismatch.which, mismatch.values) == (1, "generation", (2, 1))
        and dims == (2, 2)
    )
    return {"passed": passed, "wold": wold.to_json(), "joint": joint.to_json(),
            "criterion_mismatch": None if mismatch is None else mismatch.to_json(),
            "criterion_exact": exact, "kernel_dims": list(dims), "cards": [list(c) for c in cards]}


def telescoping_check(n_max: int = 64):
    """Dirichlet(2): ``prod_{j<n} c_j^2 = n + 1`` by brute-force product."""
    spec = dirichlet(2)
    prod_exact = Fraction(1)
    prod_float = 1.0
    worst = 0.0
    exact_ok = True
    for n in range(n_max + 1):
        exact_ok &= prod_exact == n + 1
        worst = max(worst, abs(prod_float - (n + 1)) / (n + 1))
        prod_exact *= spec.sq(n)
        prod_float *= evaluate(spec, n) ** 2
    return exact_ok, worst


def suite_analytic(seed, trials: int = 50, N: int = 4, tol: float = 1e-11, psd_tol: float = 1e-10):
    rng = _rng(seed, 3)
    mz = [mz_gram_check(bs, N, 4, rng) for bs in balanced_instances(seed, trials, (6, 9), (0.5, 2.0))]
    models = [model_space(balanced_shift(kary_tree(2, 5), s)) for s in
              (dirichlet(2), bergman(2), dirichlet(3), bergman("pi"), dirichlet(1))]
    herm_ok = True
    min_eig = math.inf
    for m in models:
        radius = bpe_radius(m.moments).radius
        for _ in range(3):
            r = radius * 0.9 * np.sqrt(rng.uniform(size=5))
            pts = r * np.exp(2j * np.pi * rng.uniform(size=5))
            a, b = complex(pts[0]), complex(pts[1])
            ka, kb = kernel_eval(m, a, b), kernel_eval(m, b, a)
            herm_ok &= all(ka.levels[k] == kb.levels[k].conjugate() for k in ka.levels)
            min_eig = min(min_eig, kernel_psd_min_eig(m, pts))
    tele_exact, tele_float = telescoping_check(64)
    m2 = models[0]
    root = kernel_eval(m2, 0.5, 0.5).levels[0]
    closed = 4 * math.log(4 / 3)
    root_err = abs(root - closed)
    passed = (max(mz) <= tol and herm_ok and min_eig >= -psd_tol and tele_exact
              and tele_float <= 1e-12 and root_err <= 1e-12)
    return {"passed": passed, "mz_trials": len(mz), "mz_tol": tol, "mz_max_residual": max(mz),
            "hermitian_exact": herm_ok, "psd_tol": psd_tol, "psd_min_eigenvalue": min_eig,
            "telescoping_exact": tele_exact, "telescoping_float_rel_err": tele_float,
            "dirichlet2_root_half": root.real, "closed_form": closed, "closed_form_err": root_err}


def suite_bpe(N: int = 64, tol: float = 0.05):
    iso = [bpe_radius(dirichlet(1), N), bpe_radius(load_shift("section4_T").balanced, N)]
    d2 = bpe_radius(dirichlet(2), N)
    b2 = bpe_radius(bergman(2), N)
    ep = bpe_radius(EventuallyPeriodic((), (2, 0.5)), 8)
    passed = (all(r.radius == 1.0 for r in iso) and d2.non_increasing
              and abs(d2.gelfand[-1] - 1) <= tol and d2.submultiplicative)
    return {"passed": passed, "tol": tol, "order": N,
            "isometry_radius": [r.radius for r in iso],
            "dirichlet2": {"gelfand_first": list(d2.gelfand[:4]), "gelfand_last": d2.gelfand[-1],
                           "radius": d2.radius, "non_increasing": d2.non_increasing},
            "bergman2": {"gelfand_first": list(b2.gelfand[:4]), "gelfand_last": b2.gelfand[-1],
                         "radius": b2.radius, "non_increasing": b2.non_increasing},
            "periodic_2_half": {"gelfand": list(ep.gelfand), "radius": ep.radius}}


SUITES = {
    "moments": suite_moments,
    "orthogonality": suite_orthogonality,
    "kernel-structure": suite_kernel_structure,
    "gram": suite_gram,
    "concordance": suite_concordance,
    "analytic": suite_analytic,
}


def run_suite(name: str, seed, trials: int | None = None):
    if name == "section4":
        return section4()
    if name == "bpe":
        return suite_bpe()
    fn = SUITES[name]
    return fn(seed) if trials is None else fn(seed, trials)


SUITE_NAMES = tuple(SUITES) + ("section4", "bpe")
