import json

import pytest

from meanderwalk import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


def gen_srw(tmp_path, capsys, lo=-64, hi=320):
    f = tmp_path / "env.json"
    code, out = run_cli(
        capsys, "env", "gen", "--kind", "srw", "--window", str(lo), str(hi), "-o", str(f)
    )
    assert code == 0
    return f


def test_env_gen_validate_round_trip(tmp_path, capsys):
    f = gen_srw(tmp_path, capsys)
    code, out = run_cli(capsys, "env", "validate", str(f))
    assert code == 0
    doc = json.loads(out)
    assert doc["passed"] is True
    assert doc["kappa_hat"] == 0.5


def test_env_validate_fails_on_violation(tmp_path, capsys):
    f = gen_srw(tmp_path, capsys)
    doc = json.loads(f.read_text())
    doc["rows"][5][0] = 0.5  # below the unit ellipticity floor
    f.write_text(json.dumps(doc))
    code, out = run_cli(capsys, "env", "validate", str(f))
    assert code == 1
    assert json.loads(out)["violations"]


def test_walk_survival_prints_value(tmp_path, capsys):
    f = gen_srw(tmp_path, capsys)
    code, out = run_cli(capsys, "walk", "survival", "--env", str(f), "--n", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["survival_lower"] == 0.25
    assert doc["survival_upper"] >= doc["survival_lower"]


def test_walk_simulate_and_csv(tmp_path, capsys):
    f = gen_srw(tmp_path, capsys)
    out_csv = tmp_path / "path.csv"
    code, out = run_cli(
        capsys, "walk", "simulate", "--env", str(f), "--steps", "40",
        "--seed", "3", "-o", str(out_csv),
    )
    assert code == 0
    assert out_csv.exists()
    doc = json.loads(out)
    assert abs(doc["final"]) <= 40


def test_walk_sample_meander(tmp_path, capsys):
    f = gen_srw(tmp_path, capsys)
    code, out = run_cli(
        capsys, "walk", "sample-meander", "--env", str(f), "--n", "8",
        "--count", "3", "--seed", "1",
    )
    assert code == 0
    doc = json.loads(out)
    assert len(doc["final_positions"]) == 3
    assert all(v >= 1 for v in doc["final_positions"])


def test_net_commands(tmp_path, capsys):
    f = gen_srw(tmp_path, capsys)
    code, out = run_cli(capsys, "net", "ceff", "--env", str(f), "--level", "5")
    assert code == 0
    assert json.loads(out)["c_eff"] == pytest.approx(0.25, abs=1e-12)

    code, out = run_cli(capsys, "net", "hitprob", "--env", str(f), "--level", "8")
    assert code == 0
    doc = json.loads(out)
    assert doc["p_cross"] == pytest.approx(1 / 16, abs=1e-12)
    assert doc["max_disagreement"] <= 1e-10

    code, out = run_cli(capsys, "net", "little-bound", "--env", str(f), "--level", "4")
    assert code == 0
    doc = json.loads(out)
    assert doc["little_bound"] == 8.0
    assert doc["little_bound"] >= doc["expected_exit_time"]

    code, out = run_cli(
        capsys, "net", "reversibility", "--env", str(f), "--level", "4",
        "--max-particles", "3",
    )
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_net_reversibility_random_env_serialises(tmp_path, capsys):
    # random environments produce strictly positive float violations; the
    # report must still serialise cleanly
    f = tmp_path / "rand.json"
    code, _ = run_cli(
        capsys, "env", "gen", "--kind", "iid_uniform", "--rmax", "2",
        "--window", "-24", "24", "--seed", "5", "-o", str(f),
    )
    assert code == 0
    code, out = run_cli(
        capsys, "net", "reversibility", "--env", str(f), "--level", "4",
        "--max-particles", "2",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["passed"] is True and doc["max_violation"] >= 0.0


def test_net_reduce_dump(tmp_path, capsys):
    f = gen_srw(tmp_path, capsys)
    code, out = run_cli(capsys, "net", "reduce", "--env", str(f), "--level", "4")
    assert code == 0
    doc = json.loads(out)
    assert doc["masses"] == [1.0, 2.0, 2.0, 2.0, 1.0]


def test_continuum_qdensity_csv(tmp_path, capsys):
    out_csv = tmp_path / "q.csv"
    code, _ = run_cli(
        capsys, "continuum", "qdensity", "--t", "0.5", "--points", "11", "-o", str(out_csv)
    )
    assert code == 0
    lines = out_csv.read_text().strip().splitlines()
    assert lines[0] == "y,q"
    assert len(lines) == 12


def test_verify_ratio_cli(tmp_path, capsys):
    f = gen_srw(tmp_path, capsys, lo=-400, hi=400)
    code, out = run_cli(
        capsys, "verify", "ratio", "--env", str(f), "--n", "256", "--t", "0.25", "0.5",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["passed"] is True


def test_cli_byte_determinism(tmp_path, capsys):
    f = gen_srw(tmp_path, capsys, lo=-400, hi=400)
    _, out1 = run_cli(capsys, "verify", "ratio", "--env", str(f), "--n", "128")
    _, out2 = run_cli(capsys, "verify", "ratio", "--env", str(f), "--n", "128")
    doc1 = json.loads(out1)["result"]
    doc2 = json.loads(out2)["result"]
    assert json.dumps(doc1, sort_keys=True) == json.dumps(doc2, sort_keys=True)


def test_usage_error_exit_code(capsys):
    assert cli.main(["walk", "survival"]) == 2  # missing --env
    assert cli.main(["nonsense"]) == 2


def test_missing_file_is_usage_error(capsys, tmp_path):
    code = cli.main(["walk", "survival", "--env", str(tmp_path / "nope.json"), "--n", "2"])
    assert code == 2


def test_verify_all_orchestration(tmp_path, capsys):
    f = gen_srw(tmp_path, capsys, lo=-1480, hi=1600)
    out = tmp_path / "report.json"
    code, _ = run_cli(
        capsys, "verify", "all", "--env", str(f), "--seed", "7",
        "--m", "8000", "--panel", "1", "--out", str(out),
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] is True
    for suite in ("calibration_rayleigh", "rayleigh", "marginal", "ratio",
                  "lemmas", "corollary", "tightness"):
        assert "passed" in doc[suite]
    assert doc["panel"]["passed"] is True
    assert len(doc["panel"]["members"]) == 2


def test_config_file_supplies_flags(tmp_path, capsys):
    f = gen_srw(tmp_path, capsys)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 2}))
    code, out = run_cli(
        capsys, "walk", "survival", "--env", str(f), "--config", str(cfg)
    )
    assert code == 0
    assert json.loads(out)["survival_lower"] == 0.25
    # explicit flag wins over the config value
    code, out = run_cli(
        capsys, "walk", "survival", "--env", str(f), "--config", str(cfg), "--n", "1"
    )
    assert json.loads(out)["survival_lower"] == 0.5
