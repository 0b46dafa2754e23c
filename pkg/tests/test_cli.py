import csv
import json

import numpy as np

from lcs import catalog
from lcs.cli import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, main, substream

from conftest import SPECS


def spec(name, **run):
    raw = json.loads((SPECS / f"{name}.json").read_text())
    raw.setdefault("run", {}).update(run)
    return raw


def write(tmp_path, raw, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_decompose_dims(tmp_path, capsys):
    code, out, _ = run(capsys, "decompose", str(SPECS / "heis3_diagonal.json"))
    assert code == EXIT_OK
    res = json.loads(out)["result"]
    assert res["dims"] == {"plus": 1, "zero": 1, "minus": 1}
    assert res["grading"]["passed"] and res["structure"]["passed"]


def test_reach_csv_respects_bounds(tmp_path, capsys):
    path = write(tmp_path, spec("scalar_x_plus_u", n_samples=64))
    code, out, _ = run(capsys, "reach", path, "--out", str(tmp_path / "o"))
    assert code == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "o" / "reach.csv").open()))
    assert len(rows) == 64
    # x' = x + u from 0 with |u| <= 1 gives |x(1)| <= e - 1, stored in the unipotent corner
    vals = np.array([float(r["m01"]) for r in rows])
    assert np.all(np.abs(vals) <= (np.e - 1) + 1e-9)
    assert vals.max() > 1.5 and vals.min() < -1.5
    assert json.loads(out)["result"]["cloud"]["n_points"] == 64
    assert (tmp_path / "o" / "reach.json").exists()


def test_reach_single_sample_is_identity(tmp_path, capsys):
    path = write(tmp_path, spec("heis3_diagonal", n_samples=1))
    code, _, _ = run(capsys, "reach", path, "--out", str(tmp_path))
    assert code == EXIT_OK
    rows = list(csv.reader((tmp_path / "reach.csv").open()))
    assert len(rows) == 2
    assert np.allclose([float(x) for x in rows[1][2:]], np.eye(3).ravel())


def test_missing_seed_is_input_error(tmp_path, capsys):
    raw = spec("scalar_u")
    del raw["run"]["seed"]
    code, out, err = run(capsys, "decompose", write(tmp_path, raw))
    assert code == EXIT_INPUT and out == "" and "seed" in err
    code, _, _ = run(capsys, "decompose", write(tmp_path, raw), "--seed", "5")
    assert code == EXIT_OK


def test_schema_violation(tmp_path, capsys):
    raw = spec("scalar_u")
    raw["unexpected"] = 1
    assert run(capsys, "decompose", write(tmp_path, raw))[0] == EXIT_INPUT
    assert run(capsys, "decompose", str(tmp_path / "nope.json"))[0] == EXIT_INPUT
    (tmp_path / "junk.json").write_text("{not json")
    assert run(capsys, "decompose", str(tmp_path / "junk.json"))[0] == EXIT_INPUT


def test_inconsistent_basis_and_constants(tmp_path, capsys):
    alg = catalog.heis3()
    c = alg.structure_constants.copy()
    raw = spec("heis3_diagonal")
    raw["algebra"] = {"basis": alg.basis.tolist(), "structure_constants": c.tolist()}
    assert run(capsys, "decompose", write(tmp_path, raw))[0] == EXIT_OK
    c[0, 1, 2] = 2.0
    raw["algebra"]["structure_constants"] = c.tolist()
    code, _, err = run(capsys, "decompose", write(tmp_path, raw))
    assert code == EXIT_INPUT and "disagree" in err


def test_non_derivation_drift(tmp_path, capsys):
    raw = spec("heis3_diagonal")
    raw["drift"] = {"matrix": [[1, 0, 0], [0, 1, 0], [0, 0, 0]]}
    assert run(capsys, "decompose", write(tmp_path, raw))[0] == EXIT_INPUT


def test_numerical_failure_exit_code(tmp_path, capsys):
    path = write(tmp_path, spec("sl2", n_samples=20, step=0.5, tau=3.0))
    code, out, err = run(capsys, "reach", path, "--out", str(tmp_path))
    assert code == EXIT_NUMERICAL and out == "" and "numerical" in err


def test_verdict_trace_on_stderr(capsys):
    code, out, err = run(capsys, "verdict", str(SPECS / "sl2.json"))
    assert code == EXIT_OK
    res = json.loads(out)["result"]
    assert res["trace"] == ["R1", "R6"]
    assert any(n.startswith("R4 blocked") for n in res["notes"])
    assert "trace: R1 R6 -> unknown" in err


def test_verdict_with_evidence(tmp_path, capsys):
    path = write(tmp_path, spec("scalar_x_plus_u", n_samples=800))
    code, out, _ = run(capsys, "verdict", path, "--evidence")
    assert code == EXIT_OK
    res = json.loads(out)["result"]
    assert res["evidence_requested"] and res["trace"] == ["R1", "R3"]
    assert res["parameters"]["evidence"]["n_cloud"] == 800


def test_semigroup_report(tmp_path, capsys):
    path = write(tmp_path, spec("scalar_u", n_samples=800))
    code, out, _ = run(capsys, "semigroup", path)
    assert code == EXIT_OK
    res = json.loads(out)["result"]
    assert res["estimate"]["acceptance_fraction"] > 0.9
    assert res["closure"]["outcome"] == "evidence-for"


def test_substreams_are_independent():
    a = substream(1, "reach").random(4)
    assert np.array_equal(a, substream(1, "reach").random(4))
    assert not np.array_equal(a, substream(1, "semigroup").random(4))
    assert not np.array_equal(a, substream(2, "reach").random(4))
