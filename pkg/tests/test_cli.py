"""CLI subcommands as thin wrappers: printed numbers equal library results."""

import json
from pathlib import Path

from ergolab import (
    ConvexityModulus,
    convergence_modulus,
    group_by_name,
    lp_norm,
    max_chain,
    rotation_system,
    standard_family,
    theorem_bound,
)
from ergolab.cli import exit_code_for, main, run_experiment
from ergolab.fluctuation import FluctuationReport

REPO = Path(__file__).resolve().parents[1]
DEMO = REPO / "configs" / "demo.json"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def demo_config():
    return json.loads(DEMO.read_text())


def test_bound_eval_matches_library(capsys):
    code, out, _ = run_cli(capsys, "bound", "eval", "--p", "2", "--eps", "0.5", "--norm", "1")
    assert code == 0
    hm = ConvexityModulus.hanner(2)
    expected = theorem_bound(hm, 1.0, 0.5, 0.25 * hm(0.5))
    assert out.strip() == str(expected) == "503"


def test_bound_eval_corollary_mode(capsys):
    code, out, _ = run_cli(
        capsys, "bound", "eval", "--p", "2", "--eps", "0.5", "--norm", "1", "--lam", "2"
    )
    assert code == 0
    assert out.strip() == str(2 * 503 + 2)


def test_fluct_count_matches_library(capsys):
    code, out, _ = run_cli(capsys, "fluct", "count", "--eps", "1", "--data", "0,1,0,1")
    assert code == 0
    data = [0.0, 1.0, 0.0, 1.0]
    expected = max_chain([[abs(a - b) for b in data] for a in data], 1.0).count
    assert out.strip() == str(expected) == "3"


def test_fluct_count_at_distance(capsys):
    code, out, _ = run_cli(
        capsys, "fluct", "count", "--eps", "1", "--data", "0,1,0,1", "--lam", "2"
    )
    assert code == 0 and out.strip() == "1"


def test_folner_check_matches_library(capsys):
    code, out, _ = run_cli(
        capsys,
        "folner", "check", "--group", "Z", "--family", "standard",
        "--n", "5", "--eps", "1/10", "--window", "60",
    )
    assert code == 0
    expected = convergence_modulus(standard_family(group_by_name("Z"), 60), 5, "1/10").value
    assert out.strip() == str(expected) == "50"


def test_folner_build_and_refine(capsys, tmp_path):
    out_file = tmp_path / "fam.json"
    code, out, _ = run_cli(
        capsys, "folner", "build", "--group", "Z", "--kind", "greedy",
        "--n-max", "4", "--out", str(out_file),
    )
    assert code == 0
    assert out.splitlines()[0] == "1 1"
    assert json.loads(out_file.read_text())["provenance"] == "greedy-constructed"

    code, out, _ = run_cli(capsys, "folner", "refine", "--group", "Z", "--eps", "1/2", "--count", "5")
    assert code == 0 and out.split() == ["1", "2", "4", "8", "16"]


def test_modulus_compute(capsys, tmp_path):
    out_file = tmp_path / "mod.json"
    code, out, _ = run_cli(
        capsys, "modulus", "compute", "--group", "Z", "--ns", "1-3",
        "--eps", "1/4", "--window", "40", "--out", str(out_file),
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines == ["1 4", "2 8", "3 12"]
    doc = json.loads(out_file.read_text())
    assert doc["kind"] == "analytic" and doc["certified_up_to"] is None


def test_avg_run_matches_library(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    config = demo_config()
    config["window"] = 10
    cfg.write_text(json.dumps(config))
    code, out, _ = run_cli(capsys, "avg", "run", "--config", str(cfg))
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "n,card,norm_Anf"
    system = rotation_system(12)
    f = system.observable([1.0] + [0.0] * 11, 2)
    from ergolab import average_sequence

    fam = standard_family(group_by_name("Z"), 10)
    avgs = average_sequence(system, fam, f, 10)
    for n, line in enumerate(lines[1:], start=1):
        cells = line.split(",")
        assert cells[0] == str(n)
        assert cells[1] == str(2 * n + 1)
        assert float(cells[2]) == lp_norm(system, avgs[n - 1])  # exact repr round-trip
    assert code == 0


def test_avg_run_defect_columns(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    config = demo_config()
    config["window"] = 8
    config["defect_against"] = [1, 2]
    cfg.write_text(json.dumps(config))
    code, out, _ = run_cli(capsys, "avg", "run", "--config", str(cfg))
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "n,card,norm_Anf,defect_1,defect_2"
    # defect columns are ||A_n f - A_n A_N f||_p; zero on the diagonal index
    from ergolab import Observable, average_sequence, ergodic_average

    system = rotation_system(12)
    f = system.observable([1.0] + [0.0] * 11, 2)
    fam = standard_family(group_by_name("Z"), 8)
    a2 = ergodic_average(system, fam, 2, f)
    for line in lines[1:]:
        cells = line.split(",")
        n = int(cells[0])
        a_n_a2 = ergodic_average(system, fam, n, a2)
        a_n = ergodic_average(system, fam, n, f)
        expected = lp_norm(system, Observable(a_n.values - a_n_a2.values, 2))
        assert float(cells[4]) == expected


def test_run_demo_config_exit_zero(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "run", "--config", str(DEMO), "--out-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "averages.csv").exists()
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "modulus.json").exists()
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["all_verdicts_true"] is True
    assert report["seed"] == 42
    assert all(r["verdict"] for r in report["reports"])


def test_run_invariant_observable_counts_zero(tmp_path):
    config = demo_config()
    config["observable"] = {"type": "explicit", "values": [0.7] * 12}
    config["window"] = 20
    result = run_experiment(config, out_dir=tmp_path)
    assert result.exit_code == 0
    assert all(r.count == 0 for r in result.reports)


def test_run_is_byte_identical_across_reruns(tmp_path):
    config = demo_config()
    config["observable"] = {"type": "random", "distribution": "normal", "scale": 1.0}
    config["window"] = 25
    a, b = tmp_path / "a", tmp_path / "b"
    run_experiment(config, out_dir=a)
    run_experiment(config, out_dir=b)
    for name in ("averages.csv", "report.json", "modulus.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_env_seed_overrides_config(tmp_path, monkeypatch):
    config = demo_config()
    config["observable"] = {"type": "random", "distribution": "normal", "scale": 1.0}
    config["window"] = 10
    monkeypatch.setenv("ERGOLAB_SEED", "777")
    result = run_experiment(config, out_dir=tmp_path)
    assert result.seed == 777
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["seed"] == 777


def test_bad_eta_config_exits_one(tmp_path, capsys):
    config = demo_config()
    hm = ConvexityModulus.hanner(2)
    config["eta"] = {"type": "fixed", "value": hm(0.3)}  # >= u(eps)/2
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(config))
    code, out, err = run_cli(capsys, "run", "--config", str(cfg), "--out-dir", str(tmp_path))
    assert code == 1
    assert "eta" in err


def test_verify_corollary_cli(tmp_path, capsys):
    config = demo_config()
    config["family"] = {"type": "refined", "count": 6}
    config["lambda"] = 1
    cfg = tmp_path / "cor.json"
    cfg.write_text(json.dumps(config))
    code, out, _ = run_cli(capsys, "verify", "corollary", "--config", str(cfg))
    assert code == 0
    assert "verdict=True" in out


def test_exit_code_for_reports():
    good = FluctuationReport(epsilon=0.3, mode="plain", chain=[1], count=0, verdict=True)
    bad = FluctuationReport(epsilon=0.3, mode="plain", chain=[1, 2], count=1, verdict=False)
    assert exit_code_for([good, good]) == 0
    assert exit_code_for([good, bad]) == 2


def test_missing_config_exits_one(capsys):
    code, _, err = run_cli(capsys, "run", "--config", "/nonexistent/x.json")
    assert code == 1 and "error:" in err
