import csv
import json
import math

import numpy as np
import pytest

from dnls_decay.cli import EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, EXIT_VERDICT, main
from dnls_decay.scenario import (RunSummary, Scenario, ScenarioError, emit_plotdata,
                                 expand_sweep, run_scenario)

MODEL = "-i*|ux|^2*(u+ux) + 3*u^2*ux"
SHIFTED = "-i*|u+ux|^2*u"


def small(**kw):
    base = dict(epsilon=0.3, xi_count=512)
    base.update(kw)
    return Scenario(**base)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_scenario_round_trip():
    s = small(nonlinearity=SHIFTED, name="x", engine="both", t_end=20.0)
    assert Scenario.from_json(s.to_json()) == s
    with pytest.raises(ScenarioError):
        Scenario.from_dict({"bogus": 1})
    with pytest.raises(ScenarioError):
        small(engine="warp")
    with pytest.raises(ScenarioError):
        small(engine="pde", n=1000)


def test_profile_horizon_defaults_to_fit_end():
    assert small().profile_log_t_end == pytest.approx(5e4 / 0.09)
    assert small(log_t_end=40.0).profile_log_t_end == 40.0


def test_classify_output(capsys):
    code, out, _ = run_cli(capsys, "classify", MODEL)
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["trichotomy"] == "DoubleRoot"
    assert rep["predicted_L2_exponent"] == 0.25
    assert rep["p_coeffs"] == [0, 0, 1, 0]
    code, out, _ = run_cli(capsys, "classify", "--", "-i*|u|^2*u")
    assert json.loads(out)["predicted_L2_exponent"] == 0.375


def test_classify_reports_condition_failure(capsys):
    code, out, _ = run_cli(capsys, "classify", "i*|u|^2*u")
    rep = json.loads(out)
    assert code == EXIT_OK and rep["condA"] is False and rep["trichotomy"] is None


def test_nu_output_with_oracle(capsys):
    code, out, _ = run_cli(capsys, "nu", MODEL, "--xi", "2.0", "--oracle")
    assert code == EXIT_OK
    val, = json.loads(out)["values"]
    assert (val["re"], val["im"]) == (8.0, -4.0)
    assert abs(val["oracle_re"] - 8) < 1e-10 and abs(val["oracle_im"] + 4) < 1e-10


def test_bad_nonlinearity_is_invalid(capsys):
    code, _, err = run_cli(capsys, "classify", "u*u*$u")
    assert code == EXIT_INVALID and "position 4" in err
    code, _, _ = run_cli(capsys, "run", "--nonlinearity", "u^3")
    assert code == EXIT_INVALID


def test_non_gauge_allowed_disables_prediction():
    s = small(nonlinearity="u^3 - i*|u|^2*u", allow_non_gauge=True, xi_count=64)
    summary = run_scenario(s)
    assert summary.predicted_exponent is None and summary.verdict is None
    assert any("non-gauge" in n for n in summary.notes)


def test_run_passes_and_writes_outputs(tmp_path, capsys):
    cfg = write_config(tmp_path, {"xi_count": 2048})
    code, out, _ = run_cli(capsys, "run", f"--nonlinearity={SHIFTED}", "--eps", "0.3",
                           "--config", cfg, "--out", str(tmp_path / "o"))
    assert code == EXIT_OK
    summary = json.loads(out)
    assert summary["verdict"]["passed"] and summary["predicted_exponent"] == 0.5
    names = {p.name for p in (tmp_path / "o").iterdir()}
    assert {"profile_series.csv", "summary.json", "timing.json", "plot_series.csv",
            "plot_reference.csv"} <= names
    assert json.loads((tmp_path / "o" / "summary.json").read_text()) == summary


def test_verdict_failure_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, {"xi_count": 512})
    code, out, _ = run_cli(capsys, "run", "--eps", "0.3", "--config", cfg)
    assert code == EXIT_VERDICT
    assert json.loads(out)["verdict"]["passed"] is False


def test_numerical_failure_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, {"xi_count": 64})
    code, _, err = run_cli(capsys, "run", "--nonlinearity", "i*|u|^2*u", "--eps", "0.3",
                           "--config", cfg)
    assert code == EXIT_NUMERICAL and "profile" in err


def test_missing_config_is_invalid(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "run", "--config", str(tmp_path / "nope.json"))
    assert code == EXIT_INVALID


def test_zero_nonlinearity_has_note_and_no_fit():
    summary = run_scenario(small(nonlinearity="0", xi_count=64))
    assert summary.fit is None and summary.verdict is None
    assert any("no L2 decay" in n for n in summary.notes)
    norms = [r[2] for r in summary.series["profile"]]
    assert np.ptp(norms) == 0


def test_outputs_are_deterministic(tmp_path):
    s = small(nonlinearity=SHIFTED)
    run_scenario(s, tmp_path / "a")
    run_scenario(s, tmp_path / "b")
    for name in ("profile_series.csv", "summary.json", "plot_series.csv", "plot_reference.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_emit_plotdata_reference_lines(tmp_path):
    summary = run_scenario(small(nonlinearity=SHIFTED))
    paths = emit_plotdata(summary, tmp_path)
    assert [p.name for p in paths] == ["plot_series.csv", "plot_reference.csv"]
    with open(paths[1]) as fh:
        rows = list(csv.DictReader(fh))
    first = rows[0]
    assert float(first["ref_0.25"]) == float(first["ref_0.5"])
    s0 = 0.09 * float(rows[0]["log_t"])
    s1 = 0.09 * float(rows[-1]["log_t"])
    ratio = float(rows[-1]["ref_0.5"]) / float(first["ref_0.5"])
    assert ratio == pytest.approx((s1 / s0) ** -0.5)


def test_emit_plotdata_needs_series(tmp_path):
    empty = RunSummary({}, [], True, None, None, None, None)
    with pytest.raises(ValueError):
        emit_plotdata(empty, tmp_path)


def test_both_engines_write_comparison(tmp_path):
    s = Scenario(nonlinearity=SHIFTED, epsilon=0.05, engine="both", xi_count=512,
                 L=100.0, n=1024, dt=0.05, t_end=12.0, compare_start=10.0)
    summary = run_scenario(s, tmp_path)
    assert summary.comparison is not None and summary.comparison["passed"]
    assert (tmp_path / "plot_pde_vs_profile.csv").exists()
    assert (tmp_path / "pde_series.csv").exists()


def test_pde_engine_note(tmp_path):
    s = Scenario(nonlinearity=SHIFTED, epsilon=0.05, engine="pde", L=100.0, n=1024,
                 dt=0.05, t_end=2.0)
    summary = run_scenario(s)
    assert summary.fit is None
    assert any("PDE engine" in n for n in summary.notes)


def test_simulate_commands(tmp_path, capsys):
    cfg = write_config(tmp_path, {"xi_count": 256, "L": 100.0, "n": 1024})
    code, _, _ = run_cli(capsys, "simulate-profile", f"--nonlinearity={SHIFTED}", "--eps", "0.3",
                         "--config", cfg, "--log-t-end", "100", "--out", str(tmp_path / "p"))
    assert code == EXIT_OK
    with open(tmp_path / "p" / "profile_series.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[-1]["log_t"]) == pytest.approx(100)
    code, _, _ = run_cli(capsys, "simulate-pde", f"--nonlinearity={SHIFTED}", "--eps", "0.05",
                         "--config", cfg, "--t-end", "1", "--snapshots", "--out",
                         str(tmp_path / "q"))
    assert code == EXIT_OK
    snaps = json.loads((tmp_path / "q" / "profile_snapshots.json").read_text())
    assert snaps[-1]["t"] == pytest.approx(1.0)
    with open(tmp_path / "q" / "pde_series.csv") as fh:
        mass = [float(r["mass"]) for r in csv.DictReader(fh)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(mass, mass[1:]))


def test_fit_decay_command(tmp_path, capsys):
    eps = 0.1
    log_t = np.unique(np.append(np.geomspace(5, 5e5, 80), 5e4)) / eps ** 2
    path = tmp_path / "series.csv"
    with open(path, "w") as fh:
        fh.write("log_t,value\n")
        for lt in log_t:
            fh.write(f"{float(lt)!r},{float((eps ** 2 * lt) ** -0.375)!r}\n")
    code, out, _ = run_cli(capsys, "fit-decay", str(path), "--eps", "0.1")
    assert code == EXIT_OK
    assert json.loads(out)["exponent"] == pytest.approx(0.375, abs=1e-9)
    code, _, _ = run_cli(capsys, "fit-decay", str(path), "--eps", "0.1", "--window-hi", "1e4")
    assert code == EXIT_INVALID


def test_verify_matsumura_command(capsys):
    code, out, _ = run_cli(capsys, "verify-matsumura", "--C0", "1", "--C1", "0", "--q", "2",
                           "--s", "2", "--Phi2", "1")
    assert code == EXIT_OK
    res = json.loads(out)
    assert res["C2"] == pytest.approx(math.log(2) + 1, abs=1e-10)
    code, _, _ = run_cli(capsys, "verify-matsumura", "--C0", "1", "--C1", "0", "--q", "1",
                         "--s", "2", "--Phi2", "1")
    assert code == EXIT_INVALID


def test_sweep_expansion_is_seeded():
    cfg = {"seed": 7, "base": {"name": "sw", "xi_count": 64},
           "vary": {"epsilon": [0.2, 0.3]}, "random": {"count": 3, "epsilon": [0.1, 0.4]}}
    a, b = expand_sweep(cfg), expand_sweep(cfg)
    assert [s.to_dict() for s in a] == [s.to_dict() for s in b]
    assert [s.name for s in a] == [f"sw-{i:03d}" for i in range(5)]
    assert all(s.seed == 7 for s in a)
    rng = np.random.default_rng(7)
    assert [s.epsilon for s in a[2:]] == [float(rng.uniform(0.1, 0.4)) for _ in range(3)]
    other = expand_sweep(dict(cfg, seed=8))
    assert [s.epsilon for s in other[2:]] != [s.epsilon for s in a[2:]]


def test_sweep_command_with_workers(tmp_path, capsys):
    cfg = write_config(tmp_path, {"base": {"name": "sw", "nonlinearity": SHIFTED,
                                           "xi_count": 512},
                                  "vary": {"epsilon": [0.3, 0.25]}})
    code, out, _ = run_cli(capsys, "sweep", "--config", cfg, "--out", str(tmp_path / "s"),
                           "--workers", "2")
    assert code == EXIT_OK
    results = json.loads(out)
    assert [r["name"] for r in results] == ["sw-000", "sw-001"]
    assert all(r["passed"] for r in results)
    assert (tmp_path / "s" / "sw-001" / "summary.json").exists()
    assert json.loads((tmp_path / "s" / "sweep_summary.json").read_text()) == results
