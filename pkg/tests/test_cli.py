import json
import subprocess
import sys

import numpy as np
import pytest

from treeshift.cli import OPEN_PROBLEM_CAVEAT, main
from treeshift.errors import CycleDetected, IncompatibleSpecs, QTooSmall, SpecParseError
from treeshift.specfile import Report, bundled_names, load_shift, load_specs, shift_to_json


def run(capsys, *argv):
    code = main(list(argv) + ["--format", "json"])
    return code, json.loads(capsys.readouterr().out)


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


PATH_DOC = {"tree": {"depth": 3, "children": {"0": ["1"], "1": ["2"], "2": ["3"]}},
            "weights": {"family": "dirichlet", "q": 2}}


class TestLoading:
    def test_bundled(self):
        names = bundled_names()
        assert {"section4_T", "section4_T_tilde", "dirichlet_q2_binary", "path"} <= set(names)
        for name in names:
            ls = load_shift(name)
            assert ls.balanced is not None

    def test_path_file(self, tmp_path):
        ls = load_specs(write(tmp_path, "p.json", PATH_DOC))
        assert ls.tree.n_vertices == 4 and ls.moments.family == "dirichlet"

    def test_cycle(self, tmp_path):
        doc = {"tree": {"depth": 2, "children": {"0": ["1"], "1": ["0"]}}, "weights": {"family": "dirichlet", "q": 2}}
        with pytest.raises(CycleDetected) as exc:
            load_specs(write(tmp_path, "c.json", doc))
        assert "0" in str(exc.value) and "1" in str(exc.value)

    def test_q_too_small(self, tmp_path):
        doc = dict(PATH_DOC, weights={"family": "dirichlet", "q": 0.5})
        with pytest.raises(QTooSmall):
            load_specs(write(tmp_path, "q.json", doc))

    def test_tree_and_weight_files(self, tmp_path):
        tree = write(tmp_path, "t.json", {"depth": 3, "branching": 2})
        weights = write(tmp_path, "w.json", {"moments": {"period": [2, 0.5]}})
        ls = load_specs(tree, weights)
        assert ls.tree.card(3) == 8 and ls.balanced is not None

    def test_explicit_weights(self, tmp_path):
        doc = {"tree": {"depth": 1, "children": {"0": ["a", "b"]}}, "weights": {"weights": {"a": 0.6, "b": 0.8}}}
        ls = load_specs(write(tmp_path, "e.json", doc))
        assert ls.balanced is not None and ls.balanced.moments.values == (1.0,)
        doc["weights"]["weights"]["z"] = 1.0
        with pytest.raises(IncompatibleSpecs):
            load_specs(write(tmp_path, "bad.json", doc))
        del doc["weights"]["weights"]["z"], doc["weights"]["weights"]["b"]
        with pytest.raises(IncompatibleSpecs):
            load_specs(write(tmp_path, "missing.json", doc))

    def test_declared_moments_checked(self, tmp_path):
        doc = {"tree": {"depth": 1, "children": {"0": ["a"]}},
               "weights": {"weights": {"a": 1.0}, "moments": {"family": "dirichlet", "q": 2}}}
        with pytest.raises(IncompatibleSpecs):
            load_specs(write(tmp_path, "m.json", doc))

    def test_unbalanced_weights(self, tmp_path):
        doc = {"tree": {"depth": 2, "children": {"0": ["a", "b"], "a": ["c"], "b": ["d"]}},
               "weights": {"weights": {"a": 1, "b": 1, "c": 1, "d": 2}}}
        assert load_specs(write(tmp_path, "u.json", doc)).balanced is None

    def test_missing(self):
        with pytest.raises(SpecParseError):
            load_specs("no_such_file.json")

    def test_shift_roundtrip(self, tmp_path):
        ls = load_shift("section4_T_tilde")
        again = load_specs(write(tmp_path, "r.json", shift_to_json(ls)))
        np.testing.assert_allclose(again.operator.weights, ls.operator.weights, rtol=0)
        assert again.tree.labels == ls.tree.labels


class TestReport:
    def test_roundtrip(self):
        r = Report(["verify", "x"], True, {"a": np.float64(1.5), "b": [np.int64(2), float("inf")]}, 0)
        text = r.emit()
        assert Report.parse(text).emit() == text
        assert json.loads(text)["results"]["b"] == [2, "inf"]


class TestCommands:
    def test_equiv_moment(self, capsys):
        code, doc = run(capsys, "equiv", "--left", "dirichlet_q2_binary.json", "--right", "dirichlet_q3_binary.json")
        assert code == 1
        v = doc["results"]["verdict"]
        assert v["kind"] == "NotEquivalent" and v["witness"]["index"] == 0 and v["witness"]["which"] == "moment"

    def test_equiv_generation(self, capsys):
        code, doc = run(capsys, "equiv", "--left", "dirichlet_q2_binary", "--right", "dirichlet_q2_ternary")
        assert code == 1
        assert doc["results"]["verdict"]["witness"] == {"index": 1, "which": "generation", "values": [2, 3]}

    def test_equiv_equal(self, capsys):
        code, doc = run(capsys, "equiv", "--left", "dirichlet_q2_binary", "--right", "dirichlet_q2_binary")
        assert code == 0 and doc["results"]["verdict"]["certification"] == "exact"

    @pytest.mark.parametrize("oracle", ["joint", "block"])
    def test_equiv_oracles(self, capsys, oracle):
        code, doc = run(capsys, "equiv", "--left", "dirichlet_q2_binary", "--right", "dirichlet_q2_binary",
                        "--oracle", oracle, "--window", "3")
        assert code == 0

    def test_equiv_periodic_refused(self, capsys):
        code, doc = run(capsys, "equiv", "--left", "section4_T", "--right", "section4_T_tilde", "--oracle", "theorem")
        assert code == 2
        assert doc["results"]["error"] == "NotNonPeriodic" and doc["results"]["note"] == OPEN_PROBLEM_CAVEAT

    def test_equiv_periodic_auto(self, capsys):
        code, doc = run(capsys, "equiv", "--left", "section4_T", "--right", "section4_T_tilde")
        assert code == 0 and doc["results"]["verdict"]["method"] == "wold"

    def test_verify(self, capsys):
        code, doc = run(capsys, "verify", "--balanced", "--orthogonality", "--window", "4", "dirichlet_q2_binary.json")
        assert code == 0 and doc["ok"]

    def test_verify_all_checks(self, capsys):
        code, doc = run(capsys, "verify", "--balanced", "--power-balanced", "--orthogonality", "--moments",
                        "--gram", "--adjoint", "bergman_q2_binary")
        assert code == 0

    def test_verify_unbalanced(self, capsys, tmp_path):
        doc = {"tree": {"depth": 2, "children": {"0": ["a", "b"], "a": ["c"], "b": ["d"]}},
               "weights": {"weights": {"a": 1, "b": 1, "c": 1, "d": 2}}}
        code, out = run(capsys, "verify", "--balanced", "--orthogonality", write(tmp_path, "u.json", doc))
        assert code == 1 and not out["ok"]

    def test_section4(self, capsys):
        code, doc = run(capsys, "examples", "section4")
        assert code == 0
        r = doc["results"]
        assert r["wold"]["kind"] == "Equivalent"
        assert r["criterion_mismatch"] == {"index": 1, "which": "generation", "values": [2, 1]}

    def test_tree_info(self, capsys):
        code, doc = run(capsys, "tree-info", "dirichlet_q2_binary", "--depth", "8")
        assert code == 0 and doc["results"]["cards"][:9] == [2**n for n in range(9)]

    def test_kernel(self, capsys):
        code, doc = run(capsys, "kernel", "section4_T")
        assert code == 0 and doc["results"]["dim"] == 2

    def test_kernel_eval(self, capsys):
        code, doc = run(capsys, "kernel-eval", "path", "--z", "0", "--w", "0.5i")
        assert code == 0

    def test_bpe(self, capsys):
        code, doc = run(capsys, "bpe", "--seq", '{"family": "dirichlet", "q": 1}')
        assert code == 0 and doc["results"]["radius"] == 1.0

    def test_classify(self, capsys):
        code, doc = run(capsys, "classify-seq", "--json", '{"preperiod": [5, 5], "period": [5]}')
        assert code == 0 and doc["results"]["verdict"]["kind"] == "periodic" and doc["results"]["verdict"]["period"] == 1

    def test_missing_file(self, capsys):
        code, doc = run(capsys, "verify", "--balanced", "nope.json")
        assert code == 2

    def test_text_output(self, capsys):
        assert main(["examples", "list"]) == 0
        out = capsys.readouterr().out
        assert "section4_T" in out and "elapsed:" in out

    def test_output_file(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        main(["classify-seq", "--json", '{"family": "bergman", "q": 3}', "--output", str(out)])
        capsys.readouterr()
        assert Report.parse(out.read_text()).results["verdict"]["kind"] == "non_periodic"

    def test_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "treeshift.cli", "bpe", "--seq", '{"family": "dirichlet", "q": 2}',
                              "--order", "8", "--format", "json"], capture_output=True, text=True)
        assert res.returncode == 0 and json.loads(res.stdout)["ok"]
