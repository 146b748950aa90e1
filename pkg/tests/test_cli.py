import io
import json
import subprocess
import sys

import pytest

from busyvar.cli import EXIT_INFINITE, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


def run(*argv, env=None, monkeypatch=None):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_compute_all_json():
    code, out, err = run("compute", "--dist", "exp:mean=1", "--lambda", "1", "--method", "all")
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["schema_version"] == 1 and rep["command"] == "compute"
    methods = {r["method"] for r in rep["results"] if r["quantity"] == "variance"}
    assert methods == {"integral", "series", "mm_exact"}
    for r in rep["results"]:
        if r["quantity"] == "variance":
            assert r["value"] == pytest.approx(4.212366497958613, rel=1e-9)
            assert "err_est" in r
    devs = [r for r in rep["results"] if r["quantity"] == "relative_deviation"][0]["value"]
    assert max(devs.values()) < 1e-9
    assert "warning:" in err and rep["warnings"]


def test_compute_csv():
    code, out, _ = run("compute", "--dist", "det:mean=1", "--lambda", "1", "--format", "csv")
    lines = out.strip().splitlines()
    assert lines[0] == "quantity,method,value,err_est"
    assert lines[2].startswith("variance,integral,0.95249244201")


def test_infinite_second_moment_exit_3():
    code, out, err = run("compute", "--dist", "lomax:shape=1.5,scale=1", "--lambda", "1")
    assert code == EXIT_INFINITE
    rep = json.loads(out)
    assert rep["results"][1]["value"] == "inf"
    assert "infinite second moment" in err


def test_usage_errors_exit_1():
    assert run("compute", "--dist", "exp:mean=1")[0] == EXIT_USAGE
    assert run("compute", "--dist", "exp:mean=x", "--lambda", "1")[0] == EXIT_USAGE
    assert run("nosuch")[0] == EXIT_USAGE
    assert run()[0] == EXIT_USAGE
    code, _, err = run("bounds", "--lambda", "1", "--rho", "1", "--class", "dfr")
    assert code == EXIT_USAGE and "gamma-s2" in err


def test_parse_error_message_has_position():
    code, _, err = run("cv", "--dist", "exp:mean=1;", "--lambda", "1")
    assert code == EXIT_USAGE and "position 10" in err


def test_numeric_failure_exit_2():
    code, _, err = run("compute", "--dist", "exp:mean=400", "--lambda", "1")
    assert code == EXIT_NUMERIC and "overflow guard" in err


def test_bounds_from_moments():
    code, out, err = run("bounds", "--lambda", "1", "--alpha", "1", "--mu2", "2.5", "--mu3", "10.5",
                         "--class", "dfr", "--class", "imrl", "--class", "nwue")
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["inputs"]["rho"] == 1.0 and rep["inputs"]["gamma_s2"] == pytest.approx(1.5)
    by = {(r["quantity"], r["method"]): r for r in rep["results"]}
    assert by[("lower", "dfr_1_10")]["value"] == pytest.approx(2.2722771, rel=1e-7)
    assert by[("lower", "imrl_1_11")]["value"] == pytest.approx(4.725456, rel=1e-6)
    assert by[("reference", "class_nwue")]["relation"] == ">="


def test_bounds_improved_warns():
    code, out, err = run("bounds", "--lambda", "1", "--rho", "0.5", "--gamma-s2", "1", "--improved-M", "14")
    rep = json.loads(out)
    printed = [r for r in rep["results"] if r["method"] == "improved_1_7_as_printed"][0]
    assert printed["is_bound"] is False
    assert "as-printed" in err


def test_table1_csv():
    code, out, err = run("table1", "--extended")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[1] == "rho,upper_1_3,upper_1_7_printed,lower_1_3,upper_1_7_corrected,exact_1_4"
    assert len([l for l in lines if not l.startswith("#")]) == 7
    assert any(l.startswith("# note: rho=0.5 upper_1_3") for l in lines)
    code, out, _ = run("table1", "--rho-list", "1,2", "--M", "20")
    assert out.splitlines()[1] == "rho,upper_1_3,upper_1_7_printed,lower_1_3"
    assert out.splitlines()[2].startswith("1.0,4.8574773")


def test_sweep_inclusive_range():
    code, out, _ = run("sweep", "--dist", "det:mean=3", "--lambda", "2", "--rho-range", "0.1:0.3:0.1",
                       "--what", "mean", "--what", "md-exact", "--what", "integral")
    rows = [l for l in out.splitlines() if not l.startswith("#")]
    assert rows[0] == "rho,mean_busy,var_md_exact,var_integral,var_integral_err"
    assert [r.split(",")[0] for r in rows[1:]] == ["0.1", "0.2", "0.3"]
    for r in rows[1:]:
        _, _, md, integ, _ = (float(x) for x in r.split(","))
        assert integ == pytest.approx(md, rel=1e-9)


def test_cv_command():
    code, out, _ = run("cv", "--dist", "det:mean=20", "--lambda", "1")
    rep = json.loads(out)
    gap = [r for r in rep["results"] if r["quantity"] == "exponentiality_gap"][0]
    assert gap["verdict"] == "approximately-exponential" and gap["value"] < 1e-6


def test_order_command():
    code, out, _ = run("order", "--dist1", "exp:mean=1", "--dist2", "det:mean=1")
    r = json.loads(out)["results"][0]
    assert r["outcome"] == "fails" and r["witness_t"] == pytest.approx(1.0)
    code, out, _ = run("order", "--dist1", "det:mean=1", "--dist2", "erlang:k=2,mean=1", "--lambda", "1")
    res = json.loads(out)["results"]
    assert res[0]["outcome"] == "holds" and res[-1]["violated"] is False
    assert run("order", "--dist1", "det:mean=1", "--dist2", "exp:mean=1", "--empirical")[0] == EXIT_USAGE


def test_simulate_emit_samples(tmp_path):
    path = tmp_path / "samples.txt"
    code, out, _ = run("simulate", "--dist", "exp:mean=1", "--lambda", "1", "--n", "2000", "--seed", "3",
                       "--emit-samples", str(path))
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["results"][0]["n"] == 2000
    assert len(path.read_text().splitlines()) == 2000
    code2, out2, _ = run("simulate", "--dist", "exp:mean=1", "--lambda", "1", "--n", "2000", "--seed", "3")
    assert json.loads(out2)["results"][0] == rep["results"][0]


def test_tolerance_env_and_config(tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dist": "exp:mean=1", "lambda": 1.0, "method": "series"}))
    monkeypatch.setenv("BUSYVAR_TOL", "1e-6")
    code, out, _ = run("compute", "--config", str(cfg))
    rep = json.loads(out)
    assert rep["inputs"]["tol"] == 1e-6
    assert rep["results"][1]["method"] == "series"
    # command-line flag wins over the file
    code, out, _ = run("compute", "--config", str(cfg), "--method", "integral", "--tol", "1e-12")
    rep = json.loads(out)
    assert rep["inputs"]["tol"] == 1e-12 and rep["results"][1]["method"] == "integral"
    monkeypatch.setenv("BUSYVAR_TOL", "abc")
    assert run("compute", "--dist", "exp:mean=1", "--lambda", "1")[0] == EXIT_USAGE
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run("compute", "--config", str(cfg))[0] == EXIT_USAGE


def test_console_module_entry():
    p = subprocess.run([sys.executable, "-m", "busyvar", "compute", "--dist", "exp:mean=1", "--lambda", "1"],
                       capture_output=True, text=True)
    assert p.returncode == 0 and json.loads(p.stdout)["schema_version"] == 1
