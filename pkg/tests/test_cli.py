import csv
import json
import shutil
from pathlib import Path

import pytest

from cpsconf.cli import main
from cpsconf.conformance import epsilon_star
from cpsconf.tss import TimedStateSequence, read_csv

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_csv(path, rows, header=("t", "j", "y")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return str(path)


@pytest.fixture
def golden(tmp_path):
    return write_csv(tmp_path / "g.csv", [(0, 1, 0.2), (1, 1, 0.5), (2, 1, 0.9)])


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def config(tmp_path, name, **changes):
    cfg = json.loads((CONFIGS / name).read_text())
    cfg["base_dir"] = str(CONFIGS)
    cfg.update(changes)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


# ------------------------------------------------------------ monitor / check


def test_monitor_examples(golden, tmp_path, capsys):
    code, out, _ = run(["monitor", "[]_[0,2](y < 1)", golden], capsys)
    assert (code, out.strip()) == (0, "0.1")
    code, out, _ = run(["monitor", "!([]_[0,2](y < 1))", golden], capsys)
    assert (code, out.strip()) == (1, "-0.1")
    code, _, err = run(["monitor", "[]_[0,2](y < 1)", tmp_path / "missing.csv"], capsys)
    assert code == 2 and "error" in err
    code, _, err = run(["monitor", "[]_[0,2](y <", golden], capsys)
    assert code == 2


def test_check_examples(tmp_path, capsys):
    a = write_csv(tmp_path / "a.csv", [(i / 10, 1, 0.0) for i in range(21)])
    b = write_csv(tmp_path / "b.csv", [(i / 10, 1, 0.3) for i in range(21)])
    code, out, _ = run(["check", a, a, "--tau", 0.01, "--eps", 1e-9], capsys)
    assert code == 0 and out.splitlines()[0] == "CLOSE"
    code, out, _ = run(["check", a, b, "--tau", 0.1, "--eps", 0.2], capsys)
    assert code == 1 and out.startswith("NOT CLOSE, witness i=1")
    bad = tmp_path / "bad.csv"
    bad.write_text("t,j,y\n0,1,0\nzero,1,2\n")
    code, _, err = run(["check", a, bad, "--tau", 0.1, "--eps", 0.2], capsys)
    assert code == 2 and "error" in err


# ------------------------------------------------------------ falsify


def test_falsify_identity_exit_zero(tmp_path, capsys):
    cfg = config(tmp_path, "falsify_identity.json", budget=10)
    code, out, _ = run(["falsify", cfg, "--output", tmp_path / "o"], capsys)
    assert code == 0 and out.startswith("NOT FALSIFIED after 10 tests")


def test_falsify_offset_persists_witness(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "degree_offset.json").read_text())
    cfg.update(base_dir=str(CONFIGS), budget=5, objective={"type": "conformance",
                                                            "tau": 0.01, "eps": 0.2})
    del cfg["degree"]
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run(["falsify", path, "--output", tmp_path / "o"], capsys)
    assert code == 1 and out.startswith("FALSIFIED after 1 tests")
    summary = json.loads((tmp_path / "o" / "falsify_summary.json").read_text())
    assert summary["falsified"] and summary["witness"]["theta"] == [0.0]
    assert summary["best_robustness"] == pytest.approx(-0.1)
    assert (tmp_path / "o" / "manifest.json").exists()


def test_budget_zero_is_config_error(tmp_path, capsys):
    cfg = config(tmp_path, "falsify_identity.json")
    code, _, err = run(["falsify", cfg, "--budget", 0, "--output", tmp_path / "o"], capsys)
    assert code == 2 and "budget" in err


def test_schema_errors_are_listed_with_paths(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "falsify_identity.json").read_text())
    cfg["objective"]["tau"] = "soon"
    cfg["space"]["T"] = -1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    code, _, err = run(["falsify", path], capsys)
    assert code == 2
    assert "at /objective/tau" in err and "at /space/T" in err


def test_missing_seed_is_generated_and_logged(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "falsify_identity.json").read_text())
    del cfg["seed"]
    cfg.update(base_dir=str(CONFIGS), budget=2)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    code, _, err = run(["falsify", path, "--output", tmp_path / "o"], capsys)
    assert code == 0 and "(generated)" in err
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert isinstance(manifest["seed"], int)


# ------------------------------------------------------------ degree


def test_degree_brackets_offset(tmp_path, capsys):
    cfg = config(tmp_path, "degree_offset.json")
    code, out, _ = run(["degree", cfg, "--output", tmp_path / "o"], capsys)
    assert code == 0
    s = json.loads((tmp_path / "o" / "degree_summary.json").read_text())
    base = read_csv(CONFIGS / "traces" / "sine.csv")
    impl = TimedStateSequence.real(base.times, base.values + 0.3)
    es = epsilon_star(base, impl, 0.01, 5.0, 1)
    assert es == pytest.approx(0.3)
    assert s["lower"] <= es <= s["upper"]
    assert s["iterations"] == 20
    assert s["upper"] - s["lower"] < 1e-6


def test_manifest_rerun_is_byte_identical(tmp_path, capsys):
    for name, budget in (("degree_offset.json", None), ("falsify_guard.json", 30)):
        cfg = config(tmp_path, name, **({} if budget is None else {"budget": budget}))
        first, second = tmp_path / "first", tmp_path / "second"
        main(["degree" if name.startswith("degree") else "falsify", str(cfg),
              "--output", str(first)])
        cmd = "degree" if name.startswith("degree") else "falsify"
        main([cmd, str(first / "manifest.json"), "--output", str(second)])
        capsys.readouterr()
        files = sorted(p.name for p in first.iterdir() if p.name != "timing.json")
        assert files == sorted(p.name for p in second.iterdir() if p.name != "timing.json")
        for f in files:
            a, b = (first / f).read_bytes(), (second / f).read_bytes()
            if f == "manifest.json":
                a, b = json.loads(a), json.loads(b)
                a["config"].pop("output"), b["config"].pop("output")
            assert a == b, f
        shutil.rmtree(first), shutil.rmtree(second)


# ------------------------------------------------------------ bench


def test_bench_identity_and_large_guard_offset(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "bench_guards.json").read_text())
    cfg.update(base_dir=str(CONFIGS), budget=20, runs=10)
    cfg["mutants"] = [cfg["mutants"][0],
                      {"name": "HG", "mutation": {"kind": "guard_offset",
                                                  "axis": "horizontal", "delta": 0.5}}]
    path = tmp_path / "bench.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run(["bench", path, "--output", tmp_path / "o"], capsys)
    assert code == 0
    with open(tmp_path / "o" / "bench_summary.csv") as fh:
        rows = {r["mutant"]: r for r in csv.DictReader(fh)}
    assert rows["identity"]["falsified"] == "0"
    assert int(rows["HG"]["falsified"]) == 10
    assert float(rows["HG"]["avg_tests"]) <= 2
    assert "identity" in out and "HG" in out


def test_bench_rejects_non_automaton_base(tmp_path, capsys):
    cfg = json.loads((CONFIGS / "bench_guards.json").read_text())
    cfg["base"] = {"type": "replay", "trace": "traces/sine.csv"}
    cfg["base_dir"] = str(CONFIGS)
    path = tmp_path / "bench.json"
    path.write_text(json.dumps(cfg))
    code, _, err = run(["bench", path, "--output", tmp_path / "o"], capsys)
    assert code == 2
