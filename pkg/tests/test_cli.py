import csv
import io
import json

from numpy.testing import assert_allclose
from pytest import fixture, mark

from app.cli import main


@fixture
def run(capsys):
    def _run(*argv):
        code = main(list(argv))
        out, err = capsys.readouterr()
        return code, out, err
    return _run


def load(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


class TestBuildWitness:
    def test_canonical(self, run):
        code, out, _ = run("build-witness", "--kind", "canonical", "--d", "4", "--n", "2")
        assert code == 0
        report = json.loads(out)
        assert report["tool"] == "witnesskit"
        assert report["command"] == "build-witness"
        assert_allclose(report["result"]["trace"], 8.0)
        assert_allclose(report["result"]["bound"], -0.2)
        assert report["result"]["witness"]["provenance"]["kind"] == "canonical"
        assert set(report["tolerances"]) == {"hermitian", "eigen", "trace", "cert", "skew_rank", "bound"}

    def test_embedded_records_combo(self, run, tmp_path):
        path = tmp_path / "w.json"
        code, _, _ = run(
            "build-witness", "--kind", "embedded", "--d1", "4", "--d2", "5", "--combo", "0,1,2,4", "--out", str(path),
        )
        assert code == 0
        witness = load(path)["result"]["witness"]
        assert witness["provenance"]["combo"] == [0, 1, 2, 4]
        assert (witness["d1"], witness["d2"]) == (4, 5)
        assert len(witness["re"]) == 400

    def test_lambda_above_one_is_rejected(self, run):
        code, out, err = run("build-witness", "--kind", "canonical", "--d", "4", "--lambda", "1.5,1")
        assert code == 2
        assert out == ""
        assert "outside [0, 1]" in err

    def test_missing_parameter(self, run):
        code, _, err = run("build-witness", "--kind", "partition", "--d", "8")
        assert code == 2
        assert "--mu" in err

    def test_from_skew_file(self, run, tmp_path):
        path = tmp_path / "u.json"
        path.write_text(json.dumps({"d": 4, "upper": [1.0, 0, 0, 0, 0, 0.5]}))
        code, out, _ = run("build-witness", "--kind", "from-U", "--u", str(path))
        assert code == 0
        assert_allclose(json.loads(out)["result"]["witness"]["provenance"]["lambdas"], [1.0, 0.5], atol=1e-12)


class TestVerify:
    def test_canonical_certifies_and_is_reproducible(self, run, tmp_path):
        path = tmp_path / "w.json"
        run("build-witness", "--kind", "canonical", "--d", "4", "--n", "2", "--out", str(path))
        args = ("verify-witness", "--in", str(path), "--restarts", "16", "--seed", "7")
        code, first, _ = run(*args)
        assert code == 0
        report = json.loads(first)
        assert report["seed"] == 7
        assert report["result"]["report"]["is_ew"] is True
        assert report["result"]["report"]["min_value"] >= -1e-8
        assert report["result"]["witness"]["certified"] is True
        _, second, _ = run(*args)
        assert first == second

    def test_extended_fails_over_complex_products(self, run, tmp_path):
        path = tmp_path / "w.json"
        run("build-witness", "--kind", "extended", "--d", "4", "--out", str(path))
        code, out, _ = run("verify-witness", "--in", str(path), "--restarts", "50", "--seed", "1")
        assert code == 1
        assert json.loads(out)["result"]["report"]["is_ew"] is False

    def test_kernel_span(self, run, tmp_path):
        path = tmp_path / "w.json"
        run("build-witness", "--kind", "canonical", "--d", "4", "--n", "2", "--out", str(path))
        code, out, _ = run("verify-witness", "--in", str(path), "--restarts", "8", "--kernel-span")
        assert code == 0
        assert json.loads(out)["result"]["kernel_span"]["rank"] == 16

    def test_unreadable_input(self, run, tmp_path):
        code, _, err = run("verify-witness", "--in", str(tmp_path / "missing.json"))
        assert code == 2
        assert "error" in err


class TestStatesAndClassify:
    def test_boundary_state_is_detected(self, run, tmp_path):
        w, rho = tmp_path / "w.json", tmp_path / "rho.json"
        run("build-witness", "--kind", "canonical", "--d", "4", "--n", "2", "--out", str(w))
        code, _, _ = run("build-state", "--family", "canonical", "--d", "4", "--n", "2", "--out", str(rho))
        assert code == 0
        state = load(rho)["result"]
        assert state["conditions"]["ppt_ok"] is True
        assert state["params"]["a"]["0,1"] == 1.0
        code, out, _ = run("classify", "--witness", str(w), "--state", str(rho))
        assert code == 0
        result = json.loads(out)["result"]
        assert result["class"] == "ppt_entangled_detected"
        assert_allclose(result["trace"], -0.2, atol=1e-12)

    def test_seed_comes_from_environment(self, run, monkeypatch):
        monkeypatch.setenv("WITNESSKIT_SEED", "5")
        code, out, _ = run("build-state", "--family", "canonical", "--mode", "sampled", "--d", "4", "--n", "2")
        assert code == 0
        assert json.loads(out)["seed"] == 5

    def test_params_file_round_trip(self, run, tmp_path):
        first = tmp_path / "rho.json"
        run("build-state", "--family", "partition", "--d", "8", "--mu", "2,2", "--mode", "sampled", "--out", str(first))
        code, out, _ = run("build-state", "--params", str(first))
        assert code == 0
        again, before = json.loads(out)["result"]["state"], load(first)["result"]["state"]
        assert (again["d1"], again["d2"]) == (before["d1"], before["d2"])
        assert_allclose(again["re"], before["re"], atol=1e-14)
        assert_allclose(again["im"], before["im"], atol=1e-14)

    def test_npt_not_defined_for_extended(self, run):
        code, _, _ = run("build-state", "--family", "extended", "--d", "4", "--mode", "npt")
        assert code == 2


class TestSweep:
    def test_csv_and_summary(self, run, tmp_path):
        path = tmp_path / "sweep.csv"
        code, _, err = run("sweep", "--family", "canonical", "--d", "4", "--n", "2", "--draws", "20", "--out", str(path))
        assert code == 0
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 20
        assert min(float(r["trace"]) for r in rows) >= -0.2 - 1e-10
        line = [l for l in err.splitlines() if l.startswith("summary: ")][-1]
        summary = json.loads(line[len("summary: "):])
        assert summary["result"]["violations"] == 0

    def test_rows_on_stdout(self, run):
        code, out, _ = run("sweep", "--family", "extended", "--d", "6", "--draws", "3")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert {r["class"] for r in rows} == {"no-bound"}
        assert rows[0]["bound"] == ""


class TestDecomposeAndEnumerate:
    def test_decompose_upper(self, run):
        code, out, _ = run("decompose", "--d", "4", "--upper", "0,0,0.5,0,0,0")
        assert code == 0
        result = json.loads(out)["result"]
        assert_allclose(result["form"]["lambdas"], [0.5])
        assert result["reassembly_error"] < 1e-12

    def test_decompose_matrix_file(self, run, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"matrix": [[0, 2, 0], [-2, 0, 0], [0, 0, 0]]}))
        code, out, _ = run("decompose", "--in", str(path))
        assert code == 0
        assert_allclose(json.loads(out)["result"]["form"]["lambdas"], [2.0])

    @mark.parametrize("argv, count", [(("--partitions", "4"), 5), (("--combos", "5", "4"), 5), (("--partitions", "6"), 11)])
    def test_enumerate(self, run, argv, count):
        code, out, _ = run("enumerate", *argv)
        assert code == 0
        assert json.loads(out)["result"]["count"] == count

    def test_enumerate_partitions_order(self, run):
        _, out, _ = run("enumerate", "--partitions", "3")
        assert json.loads(out)["result"]["items"] == [[3], [2, 1], [1, 1, 1]]
