"""The acceptance suite: eight end-to-end checks with fixed tolerances."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..classical import rur_agent, rur_first_win
from ..core import RngStream
from ..envs import line_maze, make_controllable, make_maze_env
from ..errors import ConfigError
from ..qsim.oracles import OracleSpec, build_oracle, dephasing_via_bitflip
from ..qsim.search import grover_iterations, grover_state, winner_probability
from ..quantum_agent import AQConfig, aq_construct
from .config import load_config
from .experiments import qaa_check, run_experiment

SEED = 20240


@dataclass
class CriterionResult:
    id: str
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    runtime_s: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.id} ({self.name}) in {self.runtime_s:.1f}s: {self.details.get('summary', '')}"

    def to_json(self) -> dict:
        return {"id": self.id, "name": self.name, "pass": self.passed, "runtime_s": self.runtime_s,
                "details": _jsonable(self.details)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


# ------------------------------------------------------------ criteria


def grover_analytics() -> tuple[bool, dict]:
    rows = {}
    ok = True
    for N in (4, 16, 64, 256, 1024):
        table = np.zeros(N, dtype=np.int8)
        table[(7 * N) // 11] = 1
        oracle = build_oracle(OracleSpec("phaseflip", table, N, 1))
        j = grover_iterations(N, 1)
        p = winner_probability(grover_state(oracle, j), table)
        theta = math.asin(math.sqrt(1 / N))
        want = math.sin((2 * j + 1) * theta) ** 2
        err = abs(p - want)
        ok &= err <= 1e-9
        if N == 4:
            ok &= abs(p - 1.0) <= 1e-12
        rows[N] = {"iterations": j, "probability": p, "analytic": want, "error": err}
    worst = max(r["error"] for r in rows.values())
    return ok, {"per_N": rows, "summary": f"max |p - sin^2((2j+1)theta)| = {worst:.2e}"}


def quadratic_separation(classical_seeds: int = 2000, aq_seeds: int = 500, k: int = 5, m: int = 10) -> tuple[bool, dict]:
    env = make_maze_env(line_maze(m))
    table = env.reward_table()
    N = table.size
    games = np.array([rur_first_win(table, 2, m, RngStream(SEED, i), 100 * N) or 100 * N
                      for i in range(classical_seeds)], dtype=float)
    mean = float(games.mean())
    budget = k * math.isqrt(N)
    fails = 0
    used = []
    for i in range(aq_seeds):
        ctrl = make_controllable(make_maze_env(line_maze(m)))
        res = aq_construct(rur_agent(ctrl), ctrl, AQConfig(k=k, copies_rule=1), RngStream(SEED + 1, i))
        fails += (not res.succeeded) or res.oracle_games_used > budget
        used.append(res.oracle_games_used)
    rate = fails / aq_seeds
    limit = 2.0 ** -k + 0.02
    ok = 0.9 * N <= mean <= 1.1 * N and rate <= limit
    return ok, {"classical_mean_games": mean, "classical_window": [0.9 * N, 1.1 * N], "aq_budget": budget,
                "aq_failure_rate": rate, "aq_failure_limit": limit, "aq_mean_oracle_games": float(np.mean(used)),
                "summary": f"classical mean {mean:.1f} games (target {N}), A^q failure {rate:.4f} <= {limit:.4f}"}


def theorem1(Ms=(6, 8, 10), trials: int = 500, jobs: int | None = None) -> tuple[bool, dict]:
    ok = True
    out = {}
    parts = []
    for m in Ms:
        cfg = load_config({"kind": "theorem1", "experiment_id": f"theorem1-M{m}", "M": m, "k": m, "trials": trials,
                           "seed": SEED + m, "params": {"agents": ["rur", "ps_lite"], "window_games": 200}},
                          apply_env=False)
        _, summary = run_experiment(cfg, jobs=jobs)
        ok &= summary["pass"]
        out[m] = summary["checks"]
        parts += [f"M={m} {c['name'][10:]} {c['value']:.4f}/{c['stderr']:.4f}" for c in summary["checks"]]
    return ok, {"per_M": out, "summary": "rate diff/stderr: " + ", ".join(parts)}


def p_bound(trials: int = 5000, ks=(1, 2, 5), m: int = 10) -> tuple[bool, dict]:
    cfg = load_config({"kind": "p-bound", "M": m, "trials": trials, "seed": SEED, "params": {"ks": list(ks)}},
                      apply_env=False)
    _, summary = run_experiment(cfg, jobs=1)
    parts = [f"{c['name'][-2:]}: {c['value']:.4f} <= {c['bound']:.4f}+3*{c['sigma']:.4f}" for c in summary["checks"]]
    return summary["pass"], {"checks": summary["checks"], "summary": ", ".join(parts)}


def lemma_suite(lemma4_trials: int = 2000) -> tuple[bool, dict]:
    from ..testers import lemma_check

    reports = []
    for lemma, scenarios in ((1, ["classical", "internal-quantum", "superposition"]),
                             (2, ["classical", "internal-quantum"]),
                             (3, ["classical", "internal-quantum", "superposition"])):
        for sc in scenarios:
            reports.append(lemma_check(lemma, sc))
    reports.append(lemma_check(4, m=6, trials=lemma4_trials, seed=SEED))
    ok = all(r.passed for r in reports)
    parts = [f"L{r.lemma}/{r.scenario}={'ok' if r.passed else 'FAIL'}" for r in reports]
    return ok, {"reports": [r.to_json() for r in reports],
                "summary": " ".join(parts) + f" (lemma 4 KS p = {reports[-1].value:.3f})"}


def qaa_stochastic() -> tuple[bool, dict]:
    r = qaa_check(RngStream(SEED, 6), t=3)
    ok = r["target_distribution_error"] <= 1e-12 and r["fidelity_error_exact"] <= 1e-9
    r["summary"] = (f"target distribution error {r['target_distribution_error']:.1e}, "
                    f"fidelity error {r['fidelity_error_exact']:.1e} over 0..{2 * r['optimal_iterations']} iterations")
    return ok, r


def hijack_synthesis() -> tuple[bool, dict]:
    base = {"kind": "hijack-check", "n": 2, "M": 1, "trials": 1, "seed": SEED,
            "params": {"Ms": [1, 2, 3, 4, 5], "random_inputs": 100}}
    _, good = run_experiment(load_config(base, apply_env=False), jobs=1)
    mutants = {}
    for mutation in ("reward", "cycle"):
        cfg = dict(base, experiment_id=f"hijack-mutant-{mutation}",
                   params={"Ms": [3], "random_inputs": 2, "mutation": mutation})
        _, s = run_experiment(load_config(cfg, apply_env=False), jobs=1)
        mutants[mutation] = s["pass"]
    ok = good["pass"] and not any(mutants.values())
    m = good["metrics"]
    worst = max(m[f"M{i}_operator_distance"]["mean"] for i in range(1, 6))
    purity = min(m[f"M{i}_min_purity"]["mean"] for i in range(1, 6))
    steps = [int(m[f"M{i}_interaction_steps"]["mean"]) for i in range(1, 6)]
    return ok, {"metrics": m, "mutants_detected": {k: not v for k, v in mutants.items()},
                "summary": f"max distance {worst:.1e}, min purity {purity:.12f}, steps {steps}, "
                           f"mutants detected {sorted(k for k, v in mutants.items() if not v)}"}


def oracle_contracts(random_inputs: int = 100) -> tuple[bool, dict]:
    rng = RngStream(SEED, 8)
    worst = {"phaseflip": 0.0, "bitflip": 0.0, "copy": 0.0, "dephasing": 0.0, "dephasing_routes": 0.0}
    coherence = 0.0
    for m in range(1, 5):
        N = 2**m
        tables = [make_maze_env(line_maze(m)).reward_table(),
                  (rng.child(m).uniforms(N) < 0.4).astype(np.int8)]
        for table in tables:
            f = table.astype(int)
            ph = build_oracle(OracleSpec("phaseflip", table, 2, m)).unitary.matrix()
            bf = build_oracle(OracleSpec("bitflip", table, 2, m)).unitary.matrix()
            cp = build_oracle(OracleSpec("copy", table, 2, m)).isometry.matrix()
            de = build_oracle(OracleSpec("dephasing", table, 2, m))
            for x in range(N):
                e = np.zeros(N)
                e[x] = 1
                worst["phaseflip"] = max(worst["phaseflip"], np.abs(ph @ e - (-1) ** f[x] * e).max())
                want = np.zeros(2 * N)
                want[2 * x + f[x]] = 1
                worst["copy"] = max(worst["copy"], np.abs(cp @ e - want).max())
                for y in (0, 1):
                    inp = np.zeros(2 * N)
                    inp[2 * x + y] = 1
                    out = np.zeros(2 * N)
                    out[2 * x + (y ^ f[x])] = 1
                    worst["bitflip"] = max(worst["bitflip"], np.abs(bf @ inp - out).max())
                rho = np.outer(e, e)
                want_rho = np.zeros((2, 2))
                want_rho[f[x], f[x]] = 1
                worst["dephasing"] = max(worst["dephasing"], np.abs(de.apply_density(rho) - want_rho).max())
    # random inputs on the largest instance: coherence and agreement with the bitflip route
    table = (rng.child(99).uniforms(16) < 0.5).astype(np.int8)
    de = build_oracle(OracleSpec("dephasing", table, 2, 4))
    for i in range(random_inputs):
        v = rng.child(100, i).normal(32)
        psi = v[:16] + 1j * v[16:]
        psi /= np.linalg.norm(psi)
        rho = np.outer(psi, psi.conj())
        out = de.apply_density(rho)
        coherence = max(coherence, abs(out[0, 1]), abs(out[1, 0]))
        worst["dephasing_routes"] = max(worst["dephasing_routes"], np.abs(out - dephasing_via_bitflip(table, rho)).max())
    ok = max(worst.values()) <= 1e-12 and coherence <= 1e-12
    return ok, {"max_errors": worst, "max_coherence": coherence,
                "summary": f"max basis-state error {max(worst.values()):.1e}, output coherence {coherence:.1e}"}


CRITERIA = {
    "1": ("grover-analytics", grover_analytics),
    "2": ("quadratic-separation", quadratic_separation),
    "3": ("theorem1-rate", theorem1),
    "4": ("p-bound", p_bound),
    "5": ("lemma-suite", lemma_suite),
    "6": ("qaa-stochastic", qaa_stochastic),
    "7": ("hijack-synthesis", hijack_synthesis),
    "8": ("oracle-contracts", oracle_contracts),
}
ALIASES = {name: cid for cid, (name, _) in CRITERIA.items()}


def resolve_suite(suite) -> list[str]:
    if suite in (None, "all"):
        return list(CRITERIA)
    if isinstance(suite, str):
        suite = [s for s in suite.replace(",", " ").split() if s]
    ids = []
    for s in suite:
        s = str(s)
        if s in CRITERIA:
            ids.append(s)
        elif s in ALIASES:
            ids.append(ALIASES[s])
        else:
            raise ConfigError(f"unknown acceptance criterion {s!r}; known: {sorted(CRITERIA)} / {sorted(ALIASES)}")
    return ids


def run_criterion(cid: str, **kw) -> CriterionResult:
    name, fn = CRITERIA[cid]
    t0 = time.perf_counter()
    ok, details = fn(**kw)
    return CriterionResult(cid, name, bool(ok), details, time.perf_counter() - t0)


def verify_acceptance(suite="all", echo=None) -> dict:
    """Run the selected criteria; ``echo`` receives one pass/fail line per criterion."""
    results = []
    for cid in resolve_suite(suite):
        r = run_criterion(cid)
        if echo is not None:
            echo(r.line())
        results.append(r)
    return {"pass": all(r.passed for r in results), "criteria": [r.to_json() for r in results]}


__all__ = ["CRITERIA", "CriterionResult", "verify_acceptance", "run_criterion", "resolve_suite"]
