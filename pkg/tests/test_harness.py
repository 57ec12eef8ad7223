from __future__ import annotations

import csv
import io
import json
import math

import pytest

from qrl.core import History
from qrl.errors import ConfigError
from qrl.harness.acceptance import CRITERIA, resolve_suite, run_criterion
from qrl.harness.cli import main
from qrl.harness.config import ExperimentConfig, load_config
from qrl.harness.experiments import CSV_COLUMNS, read_csv, rows_to_csv, run_experiment, summarize, sweep


def _first_win(**kw):
    base = {"kind": "first-win-benchmark", "M": 4, "trials": 6, "seed": 3}
    base.update(kw)
    return load_config(base, apply_env=False)


def _strip_runtime(text):
    rows = list(csv.reader(io.StringIO(text)))
    i = rows[0].index("runtime_ms")
    return [r[:i] + r[i + 1:] for r in rows]


# ------------------------------------------------------------- config


@pytest.mark.parametrize("data", [
    {"kind": "nope"},
    {"kind": "theorem1", "schema": 2},
    {"kind": "theorem1", "M": 0},
    {"kind": "theorem1", "trials": True},
    {"kind": "theorem1", "M": 4, "M_max": 3},
    {"kind": "theorem1", "seed": -1},
    {"kind": "theorem1", "agent": {"kind": "dqn"}},
    {"kind": "theorem1", "env": {"file": "/no/such/maze.json"}},
    {"kind": "theorem1", "colour": "red"},
    {"M": 4},
])
def test_config_errors(data):
    with pytest.raises(ConfigError):
        load_config(data, apply_env=False)


def test_config_file_and_relative_env(tmp_path):
    from qrl.envs import line_maze

    (tmp_path / "maze.json").write_text(line_maze(3).to_json(), encoding="utf-8")
    (tmp_path / "cfg.json").write_text(json.dumps({"kind": "p-bound", "env": {"file": "maze.json"}}), encoding="utf-8")
    cfg = load_config(tmp_path / "cfg.json", apply_env=False)
    assert cfg.env["file"] == str((tmp_path / "maze.json").resolve())
    assert cfg.experiment_id == "p-bound" and cfg.m_max == 4
    (tmp_path / "bad.json").write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv("QRL_SEED", "77")
    assert load_config({"kind": "theorem1", "seed": 1}).seed == 77
    assert load_config({"kind": "theorem1", "seed": 1}, apply_env=False).seed == 1
    monkeypatch.setenv("QRL_SEED", "x")
    with pytest.raises(ConfigError):
        load_config({"kind": "theorem1"})


def test_config_roundtrip():
    cfg = _first_win(k=2)
    assert ExperimentConfig(**cfg.to_json()) == cfg


# ------------------------------------------------------------ running


def test_results_reproducible_across_runs_and_jobs(tmp_path):
    cfg = _first_win()
    run_experiment(cfg, jobs=1, out=tmp_path / "a")
    run_experiment(cfg, jobs=1, out=tmp_path / "b")
    run_experiment(cfg, jobs=2, out=tmp_path / "c")
    texts = [(tmp_path / d / "results.csv").read_text(encoding="utf-8") for d in "abc"]
    assert texts[0].splitlines()[0] == ",".join(CSV_COLUMNS)
    assert _strip_runtime(texts[0]) == _strip_runtime(texts[1]) == _strip_runtime(texts[2])


def test_rows_sorted_by_seed_and_metric():
    rows, _ = run_experiment(_first_win(), jobs=1)
    assert [r.key() for r in rows] == sorted(r.key() for r in rows)
    assert {r.seed for r in rows} == set(range(6))


def test_summary_recomputed_from_csv(tmp_path):
    cfg = _first_win()
    _, summary = run_experiment(cfg, jobs=1, out=tmp_path)
    again = summarize(cfg, read_csv(tmp_path / "results.csv"))
    stored = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
    for name, m in stored["metrics"].items():
        assert abs(again["metrics"][name]["mean"] - m["mean"]) <= 1e-12
        assert abs(again["metrics"][name]["stderr"] - m["stderr"]) <= 1e-12
    assert stored["pass"] == summary["pass"] == again["pass"]


def test_csv_values_roundtrip_exactly():
    rows, _ = run_experiment(_first_win(trials=2), jobs=1)
    buf = rows_to_csv(rows)
    path_rows = list(csv.DictReader(io.StringIO(buf)))
    assert [float(r["value"]) for r in path_rows] == [r.value for r in rows]


@pytest.mark.parametrize("kind,extra", [
    ("first-win-benchmark", {}),
    ("theorem1", {"params": {"window_games": 5}}),
    ("p-bound", {"params": {"ks": [1, 2]}}),
    ("lemma-check", {"params": {"lemmas": [1]}}),
    ("qaa-check", {"M": 3}),
    ("hijack-check", {"M": 2, "params": {"random_inputs": 2}}),
])
def test_every_kind_runs_one_trial(kind, extra):
    cfg = load_config({"kind": kind, "M": extra.pop("M", 3), "trials": 1, **extra}, apply_env=False)
    rows, summary = run_experiment(cfg, jobs=1)
    assert rows and summary["trials"] == 1
    assert all(math.isfinite(r.value) or r.metric.endswith("_value") for r in rows)


def test_histories_written(tmp_path):
    cfg = load_config({"kind": "theorem1", "M": 3, "trials": 2, "params": {"window_games": 3}}, apply_env=False)
    run_experiment(cfg, jobs=1, out=tmp_path, histories=True)
    files = sorted(p.name for p in (tmp_path / "histories").iterdir())
    assert files == ["0.jsonl", "1.jsonl"]
    h = History.from_jsonl((tmp_path / "histories" / "0.jsonl").read_text(encoding="utf-8"))
    assert h.steps > 0


def test_hijack_mutations_fail_check():
    for mutation in ("reward", "cycle"):
        cfg = load_config({"kind": "hijack-check", "M": 2, "params": {"mutation": mutation, "random_inputs": 1}},
                          apply_env=False)
        _, summary = run_experiment(cfg, jobs=1)
        assert not summary["pass"]


def test_sweep_writes_one_dir_per_value(tmp_path):
    cfg = load_config({"kind": "p-bound", "M": 4, "trials": 20}, apply_env=False)
    out = sweep(cfg, "k", [1, 2], jobs=1, out=tmp_path)
    assert [s["experiment_id"] for s in out] == ["p-bound-k=1", "p-bound-k=2"]
    assert (tmp_path / "k=2" / "results.csv").is_file()
    with pytest.raises(ConfigError):
        sweep(cfg, "nonsense", [1])


# ---------------------------------------------------------------- CLI


def test_cli_run_and_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "qaa-check", "M": 3}), encoding="utf-8")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--jobs", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["pass"] is True
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "qaa-check", "M": 0}), encoding="utf-8")
    assert main(["run", "--config", str(bad)]) == 2


def test_cli_sweep(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "p-bound", "M": 4, "trials": 10}), encoding="utf-8")
    assert main(["sweep", "--config", str(cfg), "--param", "params.ks", "--values", "[1],[2]", "--jobs", "1"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 2


def test_cli_lemma_check(capsys):
    assert main(["lemma-check", "--lemma", "1", "--scenario", "superposition"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) == {"lemma", "scenario", "metric", "value", "threshold", "pass"}
    assert out["pass"] is True
    assert main(["lemma-check", "--lemma", "2", "--scenario", "superposition"]) == 1


def test_cli_verify_subset(tmp_path, capsys):
    report = tmp_path / "r.json"
    assert main(["verify", "--suite", "grover-analytics,6", "--report", str(report)]) == 0
    err = capsys.readouterr().err
    assert err.count("[PASS]") == 2
    assert [c["id"] for c in json.loads(report.read_text())["criteria"]] == ["1", "6"]


def test_verify_unknown_criterion():
    with pytest.raises(ConfigError):
        resolve_suite("9")
    assert main(["verify", "--suite", "bogus"]) == 2


def test_criteria_registry():
    assert sorted(CRITERIA, key=int) == [str(i) for i in range(1, 9)]
    r = run_criterion("1")
    assert r.passed and r.line().startswith("[PASS] criterion 1 (grover-analytics)")
