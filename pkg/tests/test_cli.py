import csv
import io
import json
import subprocess
import sys

import pytest

from arfilt import cli, closedform, series, solver
from arfilt.errors import NoBracket


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--json")
    return code, json.loads(out)


def test_forward_hypergeom_path(capsys):
    code, doc = run_json(capsys, "forward", "--dim", "3", "--r", "4", "--index", "0,0,0")
    assert code == 0
    (entry,) = doc["results"]
    assert entry["index"] == [0, 0, 0]
    assert entry["method"] == "hypergeom"
    assert entry["value"] == pytest.approx(closedform.c000_hypergeom(4.0), rel=1e-15)


def test_forward_zero_slope(capsys):
    code, doc = run_json(capsys, "forward", "--dim", "2", "--s", "0", "--index", "1,0")
    assert code == 0 and doc["results"][0]["value"] == 0


def test_forward_series_matches_recurrence(capsys):
    _, doc = run_json(capsys, "forward", "--dim", "3", "--r", "4", "--index", "2,1,0",
                      "--method", "series")
    ext = closedform.recurrence_extend(closedform.coeffs_d3_unitcube(4.0), 4.0, 2)
    assert doc["results"][0]["method"] == "series"
    assert abs(doc["results"][0]["value"] - ext[(2, 1, 0)]) < 1e-9


def test_forward_auto_uses_recurrence(capsys):
    _, doc = run_json(capsys, "forward", "--dim", "3", "--r", "4", "--index", "2,1,0")
    assert doc["results"][0]["method"] == "recurrence"


def test_forward_negative_index_and_repeat(capsys):
    _, doc = run_json(capsys, "forward", "--dim", "3", "--r", "4", "--index=-1,0,0",
                      "--index", "0,1,1", "--method", "quadrature")
    vals = {tuple(e["index"]): e["value"] for e in doc["results"]}
    t = closedform.coeffs_d3_unitcube(4.0)
    assert abs(vals[(-1, 0, 0)] - t[(1, 0, 0)]) < 1e-9
    assert abs(vals[(0, 1, 1)] - t[(0, 1, 1)]) < 1e-9


def test_forward_csv(capsys):
    code, out, _ = run(capsys, "forward", "--dim", "2", "--r", "4", "--index", "1,-1", "--csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["k1", "k2", "value", "method"]
    assert float(rows[1][2]) == pytest.approx(closedform.coeff_d2(4.0, 1, -1), rel=1e-15)


def test_json_schema(capsys):
    _, doc = run_json(capsys, "forward", "--dim", "2", "--s", "0.1", "--index", "0,0")
    assert set(doc) == {"command", "params", "results", "diagnostics", "version"}
    assert set(doc["results"][0]) == {"index", "value", "method", "tol_achieved"}


def test_inverse_trivial(capsys):
    code, doc = run_json(capsys, "inverse", "--dim", "2", "--a", "1", "--b", "0")
    vals = {e["index"]: e["value"] for e in doc["results"]}
    assert code == 0 and vals["p0"] == 1 and vals["p1"] == 0
    assert doc["diagnostics"]["residuals_ok"] is True


def test_inverse_round_trip_d3(capsys):
    a, b, _ = series.forward_abc(series.SeriesParams(3, 0.25))
    code, doc = run_json(capsys, "inverse", "--dim", "3", "--a", repr(a), "--b", repr(abs(b)))
    vals = {e["index"]: e["value"] for e in doc["results"]}
    assert code == 0
    assert abs(vals["s"] - 0.25) / 0.25 < 1e-8
    assert vals["pd_min_eigenvalue"] > 0
    assert {"moment", "c_equation", "forward_a", "forward_b"} <= set(doc["diagnostics"]["residuals"])


def test_inverse_phase(capsys):
    a, b, _ = series.forward_abc(series.SeriesParams(3, 0.2))
    _, doc = run_json(capsys, "inverse", "--dim", "3", "--a", repr(a), "--b", repr(abs(b)),
                      "--b-phase", "1.0")
    s = doc["results"][1]["value"]
    assert s["re"] ** 2 + s["im"] ** 2 == pytest.approx(0.04, rel=1e-10)


def test_exit_usage(capsys):
    assert run(capsys, "forward", "--dim", "3", "--r", "4", "--index", "0,0")[0] == 2
    assert run(capsys, "forward", "--dim", "3", "--r", "4", "--s", "0.1", "--index", "0,0,0")[0] == 2
    assert run(capsys, "inverse", "--dim", "3", "--a", "1", "--b", "-0.1")[0] == 2
    assert run(capsys, "nonsense")[0] == 2


def test_exit_unstable(capsys):
    code, _, err = run(capsys, "forward", "--dim", "3", "--s", "0.4", "--index", "0,0,0")
    assert code == 3 and "error" in err


def test_exit_nonconvergent(capsys):
    # too close to the d = 3 boundary for a 1e-12 root residual
    assert run(capsys, "inverse", "--dim", "3", "--a", "1", "--b", "0.9")[0] == 4


def test_exit_infeasible_quotes_threshold(capsys):
    code, _, err = run(capsys, "inverse", "--dim", "2", "--a", "1", "--b", "1")
    assert code == 5 and "threshold" in err and "1.0" in err


def test_exit_no_bracket(capsys, monkeypatch):
    def fail(*args, **kw):
        raise NoBracket("forced")
    monkeypatch.setattr(solver, "solve_c", fail)
    assert run(capsys, "inverse", "--dim", "3", "--a", "1", "--b", "0.2")[0] == 6


def test_exit_verify_failure(capsys, monkeypatch):
    monkeypatch.setitem(cli.SUITES, "specfun", lambda args: [cli.Check("forced", 1.0, 0.0)])
    code, out, _ = run(capsys, "verify", "--suite", "specfun")
    assert code == 7 and "FAIL" in out


def test_gamma(capsys):
    code, out, _ = run(capsys, "gamma", "--dim", "3")
    assert code == 0 and "infinite" in out
    code, doc = run_json(capsys, "gamma", "--dim", "4")
    assert abs(doc["results"][0]["value"] - 1.7928815775535257) < 1e-10


def test_verify_identities(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "identities", "--rmin", "3.1",
                       "--rmax", "100", "--samples", "20")
    assert code == 0 and "FAIL" not in out


def test_verify_inverses_json(capsys):
    code, doc = run_json(capsys, "verify", "--suite", "inverses", "--samples", "3")
    assert code == 0 and doc["diagnostics"]["failed"] == []


def test_table_d2_csv(capsys):
    code, out, _ = run(capsys, "table", "--dim", "2", "--r", "4", "--kmax", "3", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 49
    vals = {(int(r["k1"]), int(r["k2"])): float(r["value"]) for r in rows}
    for (k1, k2), v in vals.items():
        assert vals[(-k1, -k2)] == v


def test_table_d3_reports_unresolved(capsys):
    code, doc = run_json_table(capsys)
    assert code == 0
    assert len(doc["results"]) + len(doc["diagnostics"]["unresolved"]) == 125


def run_json_table(capsys):
    code, out, _ = run(capsys, "table", "--dim", "3", "--r", "4", "--kmax", "2", "--format", "json")
    return code, json.loads(out)


def test_table_unstable(capsys):
    assert run(capsys, "table", "--dim", "3", "--r", "3", "--kmax", "1")[0] == 3


def test_out_file(capsys, tmp_path):
    target = tmp_path / "res.json"
    code, out, _ = run(capsys, "forward", "--dim", "2", "--r", "4", "--index", "0,0",
                       "--json", "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["command"] == "forward"


def test_bit_identical_runs():
    argv = [sys.executable, "-m", "arfilt", "table", "--dim", "3", "--r", "4.5",
            "--kmax", "2", "--format", "json"]
    first = subprocess.run(argv, capture_output=True, check=True).stdout
    second = subprocess.run(argv, capture_output=True, check=True).stdout
    assert first == second and len(first) > 1000
