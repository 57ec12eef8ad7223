"""Experiment kinds, seeded batch execution and results persistence."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..classical import interact, ps_lite_agent, run_games, rur_agent, rur_first_win, rur_wor_agent, rur_wor_first_win
from ..core import EMPTY_PERCEPT, RngStream
from ..envs import MazeSpec, line_maze, make_controllable, make_maze_env, random_stochastic_env, bernoulli_reward_env
from ..errors import ConfigError, QRLError
from ..quantum_agent import AQConfig, aq_construct, build_hermitian_extension, check_classical_limit, hijack_check
from .config import ExperimentConfig, load_config

CSV_COLUMNS = ("experiment_id", "seed", "metric", "value", "units", "runtime_ms")


@dataclass(frozen=True)
class ResultsRow:
    experiment_id: str
    seed: int
    metric: str
    value: float
    units: str
    runtime_ms: float

    def key(self):
        return (self.seed, self.metric)


class TrialError(QRLError):
    """A domain error raised inside one trial, tagged with the trial index."""

    def __init__(self, trial: int, error: Exception):
        super().__init__(f"trial {trial}: {type(error).__name__}: {error}")
        self.trial = trial
        self.error = error


# ---------------------------------------------------------- factories


def make_env(cfg: ExperimentConfig):
    if "file" in cfg.env:
        spec = MazeSpec.load(cfg.env["file"])
    else:
        if cfg.env.get("maze", "line") != "line":
            raise ConfigError(f"unknown maze {cfg.env.get('maze')!r}")
        spec = line_maze(cfg.M, cfg.n, cfg.m_max)
    return make_maze_env(spec)


def make_agent(spec: dict, env):
    kind = spec.get("kind", "rur")
    hp = {k: v for k, v in spec.items() if k != "kind"}
    if kind == "rur":
        return rur_agent(env, **hp)
    if kind == "rur_wor":
        return rur_wor_agent(env, **hp)
    if kind == "ps_lite":
        return ps_lite_agent(env, **hp)
    raise ConfigError(f"unknown agent kind {kind!r}")


def ceil_sqrt(x: int) -> int:
    r = math.isqrt(x)
    return r if r * r == x else r + 1


# ------------------------------------------------------------- trials


def trial_first_win(cfg: ExperimentConfig, rng: RngStream, want_history: bool):
    """Classical games to first win and A^q's Step 1 outcome on the same maze."""
    env = make_env(cfg)
    n, m = env.n, env.m_max
    N = n**m
    cap = int(cfg.params.get("max_games", 100 * N))
    g = rur_first_win(env.reward_table(), n, m, rng.child(0), cap)
    rows = [("classical_games_to_first_win", float(g if g is not None else cap), "games")]
    ctrl = make_controllable(env)
    res = aq_construct(rur_agent(env), ctrl, AQConfig(k=cfg.k, copies_rule=1), rng.child(1))
    rows += [
        ("aq_success", float(res.succeeded), "bool"),
        ("aq_oracle_games_used", float(res.oracle_games_used), "games"),
        ("aq_billed_steps", float(res.cost.interaction_steps), "steps"),
    ]
    return rows, None


def theorem1_rates(agent_spec: dict, cfg: ExperimentConfig, rng: RngStream, window_games: int,
                   want_history: bool = False):
    """Window Rates of A and A^q over the rounds [t' + M, t' + M + window_games * M).

    t' = k * ceil(sqrt(n^M)) * M rounds is the span the sporadic tester leaves
    untested; A^q spends it on oracle games and harvests percepts in the next
    M rounds.  The classical agent plays ordinary games from round 0.
    """
    env = make_env(cfg)
    n, m = env.n, env.m_max
    pre_games = cfg.k * ceil_sqrt(n**m) + 1
    # classical A
    a = make_agent(agent_spec, env)
    r0 = rng.child(0)
    st = run_games(a, env, pre_games, r0)
    win = run_games(a, env, window_games, r0, first=st.last_percept)
    rate_a = win.rewards / (2 * window_games * m)
    # A^q
    ctrl = make_controllable(make_env(cfg))
    r1 = rng.child(1)
    copies = cfg.params.get("copies")
    res = aq_construct(make_agent(agent_spec, env), ctrl, AQConfig(k=cfg.k, copies_rule=copies), r1)
    if res.cost.interaction_steps != pre_games * m and res.succeeded:
        raise AssertionError("A^q billed steps do not match the untested window")
    first = res.h_win.last_percept if res.succeeded else EMPTY_PERCEPT
    env_q = ctrl.env
    if want_history:
        hist = interact(res.agent, env_q, 2 * window_games * m, r1, first=first)
        rewards = sum(hist.rewards())
    else:
        hist = None
        rewards = run_games(res.agent, env_q, window_games, r1, first=first).rewards
    rate_aq = rewards / (2 * window_games * m)
    return rate_a, rate_aq, res.succeeded, hist


def trial_theorem1(cfg: ExperimentConfig, rng: RngStream, want_history: bool):
    agents = cfg.params.get("agents", [cfg.agent])
    window = int(cfg.params.get("window_games", 200))
    rows, hist = [], None
    for i, spec in enumerate(agents):
        if isinstance(spec, str):
            spec = {"kind": spec}
        tag = spec["kind"]
        rate_a, rate_aq, ok, h = theorem1_rates(spec, cfg, rng.child(i), window, want_history)
        hist = hist or h
        rows += [(f"rate_a_{tag}", rate_a, "rewards/entry"), (f"rate_aq_{tag}", rate_aq, "rewards/entry"),
                 (f"rate_diff_{tag}", rate_aq - rate_a, "rewards/entry"), (f"aq_success_{tag}", float(ok), "bool")]
    return rows, hist


def trial_p_bound(cfg: ExperimentConfig, rng: RngStream, want_history: bool):
    env = make_env(cfg)
    n, m = env.n, env.m_max
    table = env.reward_table()
    rows = []
    for k in cfg.params.get("ks", [cfg.k]):
        games = k * ceil_sqrt(n**m)
        won = rur_wor_first_win(table, n, m, rng.child(k), games) is not None
        rows.append((f"win_within_budget_k{k}", float(won), "bool"))
    return rows, None


def trial_lemma(cfg: ExperimentConfig, rng: RngStream, want_history: bool):
    from ..testers import lemma_check

    rows = []
    for lemma in cfg.params.get("lemmas", [1, 2, 3]):
        if lemma == 4:
            r = lemma_check(4, m=cfg.M, trials=int(cfg.params.get("lemma4_trials", 2000)), seed=cfg.seed)
            rows += [(f"lemma4_{r.scenario}_value", r.value, r.metric), (f"lemma4_{r.scenario}_pass", float(r.passed), "bool")]
            continue
        for sc in cfg.params.get("scenarios", ["classical", "internal-quantum"]):
            r = lemma_check(lemma, sc)
            rows += [(f"lemma{lemma}_{sc}_value", float(r.value), r.metric),
                     (f"lemma{lemma}_{sc}_pass", float(r.passed), "bool")]
    return rows, None


def trial_qaa(cfg: ExperimentConfig, rng: RngStream, want_history: bool):
    rows = []
    r = qaa_check(rng, t=cfg.M)
    for key in ("target_distribution_error", "fidelity_error_exact", "fidelity_error_busy"):
        rows.append((key, r[key], "abs"))
    rows.append(("optimal_iterations", float(r["optimal_iterations"]), "iterations"))
    return rows, None


def qaa_check(rng: RngStream, t: int = 3, win_probs=(0.8, 0.2), reward_fraction: float = 0.02) -> dict:
    """Exact target distribution on the one-step game and fidelity trace on a random t-step game."""
    from ..qsim.amplification import (
        action_distribution, analytic_fidelity, brute_force_action_distribution, build_init_reflector,
        build_raw_percept_oracle, build_reward_reflector, initial_state, optimal_iterations, qaa, target_state,
    )

    env1 = bernoulli_reward_env(list(win_probs))
    tar, _ = target_state(env1)
    got = action_distribution(tar, env1)
    want = brute_force_action_distribution(env1)
    dist_err = max(abs(got[a] - want[a]) for a in want)

    env = random_stochastic_env(2, 2, t, rng.child(0), reward_fraction)
    U = build_raw_percept_oracle(env)
    init = initial_state(env, U)
    tar, a = target_state(env, U)
    kopt = optimal_iterations(a)
    refl_tar = build_reward_reflector(env)
    errs = {}
    for form in ("exact", "busy"):
        refl = build_init_reflector(env, form, U)
        worst = 0.0
        for k in range(2 * kopt + 1):
            v = qaa(init, refl, refl_tar, k)
            f = abs(np.vdot(tar.amplitudes, v.amplitudes)) ** 2
            worst = max(worst, abs(f - analytic_fidelity(a, k)))
        errs[form] = worst
    return {"target_distribution_error": float(dist_err), "fidelity_error_exact": float(errs["exact"]),
            "fidelity_error_busy": float(errs["busy"]), "optimal_iterations": kopt, "a": a}


def trial_hijack(cfg: ExperimentConfig, rng: RngStream, want_history: bool):
    rows = []
    for m in cfg.params.get("Ms", [cfg.M]):
        env = make_maze_env(line_maze(m, cfg.n))
        ext = build_hermitian_extension(env)
        if m <= 6:
            check_classical_limit(ext, env)
        mutation = cfg.params.get("mutation")
        if mutation == "reward":
            ext = ext.mutated_reward(int(np.flatnonzero(env.reward_table())[0]))
        elif mutation == "cycle":
            ext = ext.mutated_cycle()
        elif mutation is not None:
            raise ConfigError(f"unknown mutation {mutation!r}")
        r = hijack_check(ext, env.reward_table(), rng.child(m), int(cfg.params.get("random_inputs", 20)))
        rows += [(f"M{m}_operator_distance", r["operator_distance"], "spectral norm"),
                 (f"M{m}_leakage", r["leakage"], "probability"),
                 (f"M{m}_min_purity", r["min_purity"], "purity"),
                 (f"M{m}_oracle_games", float(r["cost"]["oracle_games"]), "games"),
                 (f"M{m}_interaction_steps", float(r["cost"]["interaction_steps"]), "steps"),
                 (f"M{m}_pass", float(r["pass"]), "bool")] if "error" not in r else [(f"M{m}_pass", 0.0, "bool")]
    return rows, None


TRIALS = {
    "first-win-benchmark": trial_first_win,
    "theorem1": trial_theorem1,
    "p-bound": trial_p_bound,
    "lemma-check": trial_lemma,
    "qaa-check": trial_qaa,
    "hijack-check": trial_hijack,
}


# --------------------------------------------------------- evaluation


def summarize(cfg: ExperimentConfig, rows: list[ResultsRow]) -> dict:
    by_metric: dict[str, list[float]] = {}
    for r in rows:
        by_metric.setdefault(r.metric, []).append(r.value)
    metrics = {}
    for name, vals in sorted(by_metric.items()):
        v = np.asarray(vals, dtype=float)
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        metrics[name] = {"mean": float(v.mean()), "stderr": se, "n": int(v.size)}
    checks = evaluate(cfg, metrics)
    return {"experiment_id": cfg.experiment_id, "kind": cfg.kind, "trials": cfg.trials, "seed": cfg.seed,
            "metrics": metrics, "checks": checks, "pass": all(c["pass"] for c in checks)}


def evaluate(cfg: ExperimentConfig, metrics: dict) -> list[dict]:
    th = cfg.thresholds
    out = []
    if cfg.kind == "first-win-benchmark":
        N = cfg.n ** cfg.m_max
        rel = th.get("classical_rel_tol", 0.10)
        mean = metrics["classical_games_to_first_win"]["mean"]
        out.append({"name": "classical_mean_games", "value": mean, "lo": N * (1 - rel), "hi": N * (1 + rel),
                    "pass": N * (1 - rel) <= mean <= N * (1 + rel)})
        fail = 1.0 - metrics["aq_success"]["mean"]
        limit = th.get("aq_failure_max", 2.0 ** -cfg.k + 0.02)
        out.append({"name": "aq_failure_rate", "value": fail, "max": limit, "pass": fail <= limit})
    elif cfg.kind == "theorem1":
        z = th.get("sigmas", 3.0)
        for name, m in metrics.items():
            if name.startswith("rate_diff_"):
                ok = m["mean"] > z * m["stderr"]
                out.append({"name": name, "value": m["mean"], "stderr": m["stderr"], "sigmas": z, "pass": ok})
    elif cfg.kind == "p-bound":
        z = th.get("sigmas", 3.0)
        N = cfg.n ** cfg.m_max
        for name, m in metrics.items():
            k = int(name.rsplit("k", 1)[1])
            bound = k / math.sqrt(N) + 1 / N
            p = m["mean"]
            sigma = math.sqrt(p * (1 - p) / m["n"])
            out.append({"name": name, "value": p, "bound": bound, "sigma": sigma, "pass": p <= bound + z * sigma})
    elif cfg.kind == "lemma-check":
        for name, m in metrics.items():
            if name.endswith("_pass"):
                out.append({"name": name, "value": m["mean"], "pass": m["mean"] == 1.0})
    elif cfg.kind == "qaa-check":
        out.append({"name": "target_distribution_error", "value": metrics["target_distribution_error"]["mean"],
                    "max": th.get("distribution_tol", 1e-12),
                    "pass": metrics["target_distribution_error"]["mean"] <= th.get("distribution_tol", 1e-12)})
        out.append({"name": "fidelity_error_exact", "value": metrics["fidelity_error_exact"]["mean"],
                    "max": th.get("fidelity_tol", 1e-9),
                    "pass": metrics["fidelity_error_exact"]["mean"] <= th.get("fidelity_tol", 1e-9)})
    elif cfg.kind == "hijack-check":
        for name, m in metrics.items():
            if name.endswith("_pass"):
                out.append({"name": name, "value": m["mean"], "pass": m["mean"] == 1.0})
    return out


# ------------------------------------------------------------ running


def _run_trial(args):
    cfg_json, trial, want_history = args
    cfg = ExperimentConfig(**cfg_json)
    rng = RngStream(cfg.seed, trial)
    t0 = time.perf_counter()
    try:
        rows, hist = TRIALS[cfg.kind](cfg, rng, want_history)
    except QRLError as e:
        raise TrialError(trial, e) from e
    ms = (time.perf_counter() - t0) * 1000.0
    out = [ResultsRow(cfg.experiment_id, trial, name, float(v), units, round(ms, 3)) for name, v, units in rows]
    return out, (hist.to_jsonl() if hist is not None else None)


def run_experiment(cfg, jobs: int | None = None, out: str | Path | None = None,
                   histories: bool = False) -> tuple[list[ResultsRow], dict]:
    """Run ``cfg.trials`` trials on streams 0..trials-1 and persist CSV + summary.

    Row order and values do not depend on ``jobs``: rows are sorted by
    (seed, metric) before writing.
    """
    cfg = load_config(cfg, apply_env=False) if not isinstance(cfg, ExperimentConfig) else cfg
    jobs = jobs if jobs is not None else (os.cpu_count() or 1)
    tasks = [(cfg.to_json(), i, histories) for i in range(cfg.trials)]
    if jobs > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial, tasks))
    else:
        results = [_run_trial(t) for t in tasks]
    rows = sorted((r for rs, _ in results for r in rs), key=ResultsRow.key)
    summary = summarize(cfg, rows)
    out = out if out is not None else cfg.out
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(rows, out / "results.csv")
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        if histories:
            hdir = out / "histories"
            hdir.mkdir(exist_ok=True)
            for i, (_, text) in enumerate(results):
                if text is not None:
                    (hdir / f"{i}.jsonl").write_text(text, encoding="utf-8")
    return rows, summary


def write_csv(rows: list[ResultsRow], path: Path) -> None:
    path.write_text(rows_to_csv(rows), encoding="utf-8")


def rows_to_csv(rows: list[ResultsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.experiment_id, r.seed, r.metric, repr(r.value), r.units, r.runtime_ms])
    return buf.getvalue()


def read_csv(path: str | Path) -> list[ResultsRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != CSV_COLUMNS:
            raise ConfigError(f"unexpected CSV header {rd.fieldnames}")
        return [ResultsRow(r["experiment_id"], int(r["seed"]), r["metric"], float(r["value"]), r["units"],
                           float(r["runtime_ms"])) for r in rd]


def sweep(cfg: ExperimentConfig, param: str, values: list, jobs: int | None = None,
          out: str | Path | None = None) -> list[dict]:
    """Run ``cfg`` once per value of a top-level field or a ``params.<name>`` entry."""
    summaries = []
    base = cfg.to_json()
    for v in values:
        data = json.loads(json.dumps(base))
        if param.startswith("params."):
            data["params"][param.split(".", 1)[1]] = v
        elif param in data:
            data[param] = v
        else:
            raise ConfigError(f"unknown sweep parameter {param!r}")
        data["experiment_id"] = f"{cfg.experiment_id}-{param}={v}"
        sub = load_config(data, apply_env=False)
        sub_out = Path(out) / f"{param}={v}" if out is not None else None
        _, summary = run_experiment(sub, jobs, sub_out)
        summaries.append(summary)
    return summaries


__all__ = [
    "ResultsRow", "TrialError", "run_experiment", "summarize", "evaluate", "sweep", "rows_to_csv", "read_csv",
    "write_csv", "make_env", "make_agent", "theorem1_rates", "qaa_check", "TRIALS", "CSV_COLUMNS",
]
