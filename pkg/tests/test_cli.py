import json
import subprocess
import sys

import pytest

from seqmeasure.cli import main
from seqmeasure.natset import Dyadic, Finite, Shrink, Stack, term_to_json
from seqmeasure.selftest import run_selftest


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def write_term(tmp_path, t, name="t.json"):
    p = tmp_path / name
    p.write_text(json.dumps(term_to_json(t)))
    return str(p)


class TestDensity:
    def test_evens(self, tmp_path, capsys):
        assert run(["density", "--term", write_term(tmp_path, Dyadic(1, [0]))], capsys)[:2] == (0, "exact 1/2\n")

    def test_finite(self, tmp_path, capsys):
        assert run(["density", "--term", write_term(tmp_path, Finite([4, 9]))], capsys)[1] == "exact 0\n"

    def test_unknown_class_gives_estimate(self, tmp_path, capsys):
        from fractions import Fraction

        p = write_term(tmp_path, Stack(Shrink(1, "harmonic", Fraction(1), 1, 1)))
        code, out, _ = run(["density", "--term", p, "--N", str(1 << 16), "--format", "json"], capsys)
        rep = json.loads(out)
        assert code == 0 and rep["kind"] == "estimate" and rep["prefix"] == 1 << 16 and "bound" in rep

    def test_parse_errors(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(["density", "--term", str(bad)], capsys)[0] == 2
        bad.write_text('{"gen": "dyadic", "k": 1, "residues": [5]}')
        assert run(["density", "--term", str(bad)], capsys)[0] == 2
        assert run(["density", "--term", str(tmp_path / "missing.json")], capsys)[0] == 2

    def test_resource_limit(self, tmp_path, capsys):
        from fractions import Fraction

        p = write_term(tmp_path, Stack(Shrink(1, "harmonic", Fraction(1), 1, 1)))
        assert run(["--max-prefix", "100", "density", "--term", p, "--N", "1000"], capsys)[0] == 3


class TestBuild:
    def test_level_one(self, capsys):
        code, out, _ = run(["build", "--level", "1"], capsys)
        rows = out.splitlines()[2:]
        assert code == 0 and len(rows) == 30 and all(r.endswith(",1") for r in rows)
        assert rows[0] == "d1r0,1/2,1/2,1"

    def test_level_two_matches_level_one(self, capsys):
        one = run(["build", "--level", "1"], capsys)[1].splitlines()[2:]
        two = run(["build", "--level", "2"], capsys)[1].splitlines()[2:]
        assert one == two

    @pytest.mark.parametrize("level", ["0", "4"])
    def test_out_of_range(self, level, capsys):
        assert run(["build", "--level", level], capsys)[0] == 4


class TestConverge:
    def test_level_two(self, capsys):
        code, out, _ = run(["converge", "--level", "2", "--format", "json"], capsys)
        rep = json.loads(out)
        assert code == 0 and rep["verdict"] == "pass" and rep["horizon"] == 1000

    def test_honest_failure(self, capsys):
        code, out, _ = run(["converge", "--level", "1", "--horizon", "1", "--tol", "1/1000000000"], capsys)
        assert code == 0
        assert out.splitlines()[0].startswith("stage,generator_id,witness_num")
        assert out.splitlines()[-1].startswith("# verdict fail")

    def test_bad_tol(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["converge", "--level", "1", "--tol", "2"])
        assert exc.value.code == 2

    def test_csv_to_file_is_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(["converge", "--level", "2", "--horizon", "60", "--out", str(a)], capsys)
        run(["converge", "--level", "2", "--horizon", "60", "--out", str(b)], capsys)
        assert a.read_bytes() == b.read_bytes()
        assert len(a.read_text().splitlines()) == 1 + 61 * 30


class TestSeparate:
    def test_finsupp_point(self, tmp_path, capsys):
        inp = tmp_path / "in.json"
        inp.write_text(json.dumps({"nu": {"points": [3], "weights": [[1, 1]]}}))
        code, out, err = run(["separate", "finsupp", "--inputs", str(inp)], capsys)
        cert = json.loads(out)
        assert code == 0 and "verify ok" in err
        assert cert["witness"] == {"op": "compl", "arg": {"gen": "finite", "elems": [3]}}

    @pytest.mark.parametrize("mode", ["finsupp", "claim3", "claim4", "nullunion"])
    def test_fixtures_verify_in_a_fresh_process(self, mode, tmp_path):
        out = tmp_path / f"{mode}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "seqmeasure", "separate", mode, "--fixture", mode, "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        again = subprocess.run([sys.executable, "-m", "seqmeasure", "verify", str(out)],
                               capture_output=True, text=True)
        assert again.returncode == 0 and again.stdout == "ok\n"

    def test_tampered_file_fails(self, tmp_path, capsys):
        out = tmp_path / "c.json"
        run(["separate", "claim4", "--fixture", "claim4", "--out", str(out)], capsys)
        cert = json.loads(out.read_text())
        cert["claims"][0]["value"] = [1, 3]
        out.write_text(json.dumps(cert))
        code, text, _ = run(["verify", str(out)], capsys)
        assert code == 1 and text.startswith("fail:")

    def test_malformed_inputs(self, tmp_path, capsys):
        inp = tmp_path / "in.json"
        inp.write_text(json.dumps({"stream": "nope"}))
        assert run(["separate", "claim4", "--inputs", str(inp)], capsys)[0] == 2
        assert run(["separate", "claim3", "--fixture", "no-such-fixture"], capsys)[0] == 2
        assert run(["separate", "finsupp"], capsys)[0] == 2

    def test_byte_identical_certificates(self, tmp_path, capsys):
        outs = []
        for i in range(2):
            p = tmp_path / f"c{i}.json"
            run(["separate", "claim3", "--fixture", "claim3", "--out", str(p)], capsys)
            outs.append(p.read_bytes())
        assert outs[0] == outs[1]


class TestSelftest:
    def test_default_seed_passes(self, capsys):
        code, out, _ = run(["selftest"], capsys)
        assert code == 0 and out.endswith("result: pass\n")

    def test_reports_are_reproducible(self):
        assert run_selftest(17).render() == run_selftest(17).render()

    @pytest.mark.parametrize("fault,check", [
        ("density", "natset.density-oracle"),
        ("reweight", "measure.reweight-restrict"),
        ("certificate", "separators.finsupp-soundness"),
    ])
    def test_injected_fault_is_named(self, fault, check, capsys):
        code, out, _ = run(["selftest", "--inject-fault", fault], capsys)
        assert code == 1
        assert f"FAIL {check}:" in out and f"result: fail ({check})" in out
