"""The quantum-enhanced agent construction and oracle synthesis by register hijacking/scavenging."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .classical import Agent, PostselectionReport, postselect
from .core import EMPTY_PERCEPT, FiniteSpace, History, Percept, RngStream
from .envs import ControllableEnv, DeterministicEpisodicEnv, decode_sequence, winner_count
from .errors import (
    BadHyperparameter,
    ExtensionNotSelfInverse,
    LayoutMismatch,
    NoWinnerExists,
    NotTrivialPercept,
)
from .qsim.oracles import OracleSpec, build_oracle
from .qsim.search import grover_search
from .qsim.states import DEFAULT_CAP, Layout, StateVector, check_cap

HERMITIAN_TOL = 1e-10


# ------------------------------------------------------------------ A^q


def oracle_budget(k: int, n: int, m: int) -> int:
    """k * ceil(sqrt(n^m)) oracle games."""
    return k * _ceil_sqrt(n**m)


def _ceil_sqrt(x: int) -> int:
    r = math.isqrt(x)
    return r if r * r == x else r + 1


@dataclass
class AQConfig:
    k: int = 1
    copies_rule: Callable[[int, int, int], int] | int | None = None
    retry_budget: int = 10**6
    known_winners: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise BadHyperparameter("k must be >= 1")
        if isinstance(self.copies_rule, int) and self.copies_rule < 1:
            raise BadHyperparameter("copies must be >= 1")

    def copies(self, n: int, m: int) -> int:
        if self.copies_rule is None:
            c = 1 + self.k * _ceil_sqrt(n**m)
        elif isinstance(self.copies_rule, int):
            c = self.copies_rule
        else:
            c = int(self.copies_rule(self.k, n, m))
        if c < 1:
            raise BadHyperparameter("copies must be >= 1")
        return c


@dataclass(frozen=True)
class ProtocolCost:
    oracle_games: int = 0
    interaction_steps: int = 0
    hijack_ops: int = 0
    scavenge_ops: int = 0

    def to_json(self) -> dict:
        return {"oracle_games": self.oracle_games, "interaction_steps": self.interaction_steps,
                "hijack_ops": self.hijack_ops, "scavenge_ops": self.scavenge_ops}


class AQAgent(Agent):
    """Wrapper that forwards percepts to, and actions from, the (trained) inner agent."""

    def __init__(self, inner: Agent):
        self.inner = inner
        self.actions = inner.actions

    def reset(self) -> None:
        self.inner.reset()

    def act(self, percept: Percept, rng: RngStream) -> str:
        return self.inner.act(percept, rng)

    def snapshot(self):
        return self.inner.snapshot()

    def restore(self, snap) -> None:
        self.inner.restore(snap)


@dataclass
class AQResult:
    agent: Agent
    cost: ProtocolCost
    succeeded: bool
    h_win: History | None = None
    found: tuple[str, ...] | None = None
    oracle_games_used: int = 0
    postselection: PostselectionReport = field(default_factory=PostselectionReport)


def aq_construct(agent: Agent, env: ControllableEnv, cfg: AQConfig, rng: RngStream) -> AQResult:
    """Build A^q from a classical black-box agent and a controllable environment.

    Step 1: Grover search over action sequences through the oracle view, with a
    budget of k * ceil(sqrt(n^M)) oracle games (measured candidates are checked
    by one further oracle game each).  The whole budget is billed: the untested
    window has a fixed length whatever the search needs.  Step 2: one classical
    epoch replaying the winner to harvest its percepts.  Step 3: training by
    post-selection on h_win repeated ``cfg.copies`` times.  Step 4: the
    returned wrapper forwards everything to the trained agent.  If the search
    fails the untouched agent is returned and ``succeeded`` is False.
    """
    n, m = env.n, env.m_max
    N = n**m
    budget = oracle_budget(cfg.k, n, m)
    table = env.reward_table()
    winners = winner_count(env)
    if winners == 0:
        err = NoWinnerExists("the environment never rewards any action sequence")
        err.agent = agent
        raise err
    env.set_mode("oracle")
    oracle = env.oracle()

    def apply_oracle(vec, _rng):
        return oracle.unitary.apply(vec)

    used = 0
    found = None
    try:
        r = grover_search(oracle, N, winners if cfg.known_winners else None, rng, budget,
                          verify=lambda x: bool(table[x]), apply_oracle=apply_oracle)
        found, used = r.found, r.queries
    except NoWinnerExists:
        used = budget
    env.bill_oracle_games(budget)
    steps = budget * m
    if found is None:
        env.set_mode("classical")
        return AQResult(agent, ProtocolCost(budget, steps), False, oracle_games_used=used)

    env.set_mode("classical")
    env.reset()
    actions = [env.actions.labels[i] for i in decode_sequence(found, n, m)]
    percepts = [env.respond(a, rng) for a in actions]
    steps += m
    h_win = History.from_pairs(actions, percepts, EMPTY_PERCEPT)
    report = PostselectionReport()
    trained = postselect(copy.deepcopy(agent), h_win, cfg.copies(n, m), rng, cfg.retry_budget, report)
    return AQResult(AQAgent(trained), ProtocolCost(budget, steps), True, h_win, tuple(actions), used, report)


# ------------------------------------------------- Hermitian extension


@dataclass
class HermitianEnvExtension:
    """Controlled-unitary quantum extension of a deterministic epoch.

    ``step_maps[t][prefix]`` is a permutation of the slot space {ε} ∪ S' used
    on percept register P_{t+2} when the first t+1 actions have code
    ``prefix``; the honest construction swaps ε with the percept and fixes
    everything else, so it is Hermitian and acts on a two-dimensional
    subspace.  ``reward`` flips the reward qubit Λ (Pauli X) on winning
    sequences.
    """

    n: int
    m: int
    percepts: FiniteSpace
    step_maps: list
    reward: np.ndarray

    @property
    def slot_dim(self) -> int:
        return len(self.percepts) + 1

    def layout(self) -> Layout:
        slot = FiniteSpace(self.percepts.labels, contains_empty=True)
        acts = FiniteSpace(tuple(f"a{i}" for i in range(self.n)))
        regs = [(f"A{i + 1}", acts) for i in range(self.m)]
        regs += [(f"P{i + 2}", slot) for i in range(self.m)]
        regs += [("L", FiniteSpace(("0", "1")))]
        return Layout(tuple(regs))

    def check_self_inverse(self) -> None:
        for t, maps in enumerate(self.step_maps):
            for prefix, perm in enumerate(maps):
                if not np.array_equal(perm[perm], np.arange(perm.size)):
                    raise ExtensionNotSelfInverse(f"step {t + 1} map for prefix {prefix} is not self-inverse")

    def step_matrix(self, t: int, prefix: int) -> np.ndarray:
        perm = self.step_maps[t][prefix]
        u = np.zeros((perm.size, perm.size))
        u[perm, np.arange(perm.size)] = 1.0
        return u

    def full_permutations(self, cap: int = DEFAULT_CAP) -> list[np.ndarray]:
        """Index maps of U_1..U_M and of the reward flip on the whole layout."""
        n, m, d = self.n, self.m, self.slot_dim
        dim = n**m * d**m * 2
        check_cap(dim, cap)
        idx = np.arange(dim, dtype=np.int64)
        a = idx // (d**m * 2)
        p = (idx // 2) % d**m
        out = []
        for t in range(m):
            place = d ** (m - 1 - t)
            digit = (p // place) % d
            prefix = a // n ** (m - 1 - t)
            table = np.stack(self.step_maps[t])
            new = table[prefix, digit]
            out.append(idx + (new - digit) * place * 2)
        lam = idx % 2
        out.append(idx - lam + (lam ^ self.reward[a].astype(np.int64)))
        return out

    def classical_replay(self, actions: tuple[int, ...]) -> tuple[list[str], int]:
        """Run one game on a basis input with Λ = |0>, return (percept labels, reward bit)."""
        d = self.slot_dim
        slots = [0] * self.m
        code = 0
        for t, a in enumerate(actions):
            code = code * self.n + a
            slots[t] = int(self.step_maps[t][code][slots[t]])
        full = 0
        for a in actions:
            full = full * self.n + a
        labels = [self.percepts.labels[s - 1] if s else "ε" for s in slots]
        assert all(s < d for s in slots)
        return labels, int(self.reward[full])

    def mutated_reward(self, code: int) -> "HermitianEnvExtension":
        """Copy whose reward flip is mis-signed on one sequence."""
        r = self.reward.copy()
        r[code] ^= 1
        return HermitianEnvExtension(self.n, self.m, self.percepts, self.step_maps, r)

    def mutated_cycle(self, t: int = 0, prefix: int = 0) -> "HermitianEnvExtension":
        """Copy whose step map cycles three slot values, which is unitary but not self-inverse."""
        maps = [list(level) for level in self.step_maps]
        d = self.slot_dim
        perm = np.arange(d)
        perm[[0, 1, 2]] = [1, 2, 0]
        maps[t][prefix] = perm
        return HermitianEnvExtension(self.n, self.m, self.percepts, maps, self.reward)


def build_hermitian_extension(env: DeterministicEpisodicEnv) -> HermitianEnvExtension:
    n, m = env.n, env.m_max
    d = len(env.percepts) + 1
    step_maps = []
    for t in range(m):
        level = []
        for prefix in range(n ** (t + 1)):
            idx = decode_sequence(prefix, n, t + 1)
            s = env.percepts_of(idx)[-1].label
            j = 1 + env.percepts.index(s)
            perm = np.arange(d)
            perm[0], perm[j] = j, 0
            level.append(perm)
        step_maps.append(level)
    return HermitianEnvExtension(n, m, env.percepts, step_maps, np.asarray(env.reward_table(), dtype=np.int8))


def check_classical_limit(ext: HermitianEnvExtension, env: DeterministicEpisodicEnv, max_m: int = 6) -> None:
    """Exhaustive basis replay against the wrapped environment."""
    if ext.m > max_m:
        raise ValueError(f"exhaustive check limited to M <= {max_m}")
    for code in range(ext.n**ext.m):
        idx = decode_sequence(code, ext.n, ext.m)
        labels, r = ext.classical_replay(idx)
        expect = env.percepts_of(idx)
        if labels != [p.label for p in expect] or r != expect[-1].reward:
            raise LayoutMismatch(f"extension disagrees with the environment on sequence {idx}")


# ------------------------------------------------ hijack and scavenge


def _inverse(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


@dataclass
class HijackRun:
    state: StateVector
    cost: ProtocolCost
    after_first_game: np.ndarray | None = None


class HijackProtocol:
    """Simulator for the two-game protocol on a fixed extension (permutations cached)."""

    def __init__(self, ext: HermitianEnvExtension, cap: int = DEFAULT_CAP):
        ext.check_self_inverse()
        self.ext = ext
        self.layout = ext.layout()
        # gather form: (P v)[i] = v[P^-1(i)]
        self.gathers = [_inverse(p) for p in ext.full_permutations(cap)]
        self.na = ext.n**ext.m
        self.rest = ext.slot_dim**ext.m * 2

    def _game(self, vec: np.ndarray) -> np.ndarray:
        for g in self.gathers:
            vec = vec[g]
        return vec

    def run(self, actions: np.ndarray, keep_intermediate: bool = False) -> HijackRun:
        m = self.ext.m
        phi_minus = np.array([1.0, -1.0]) / math.sqrt(2)
        fid = np.zeros(self.rest // 2)
        fid[0] = 1.0
        # hijack: the reward slot of the fresh epoch holds |phi->
        vec = np.kron(np.asarray(actions, dtype=complex), np.kron(fid, phi_minus))
        hijack, scavenge, steps = 1, 0, 1
        vec = self._game(vec)
        steps += m
        mid = vec.copy() if keep_intermediate else None
        # scavenge P_2..P_{M+1} (Λ travels with the last percept register)
        scavenge += m
        steps += m
        # agent-side substitution phi- -> phi+ on the scavenged reward qubit
        vec = vec.reshape(-1, 2).copy()
        vec[:, 1] *= -1
        vec = vec.reshape(-1)
        # hijack: implant the percept registers into the next epoch's memory
        hijack += m
        steps += m
        vec = self._game(vec)
        steps += m
        # scavenge the restored fiducial percept registers
        scavenge += m
        steps += m
        cost = ProtocolCost(2, steps, hijack, scavenge)
        return HijackRun(StateVector(self.layout, vec), cost, mid)

    def fiducial_output(self) -> np.ndarray:
        phi_plus = np.array([1.0, 1.0]) / math.sqrt(2)
        fid = np.zeros(self.rest // 2)
        fid[0] = 1.0
        return np.kron(fid, phi_plus)

    def synthesized_operator(self) -> tuple[np.ndarray, float]:
        """Columns <a'| ⊗ <fiducial| protocol(|a>), and the largest norm leaking off the fiducial."""
        fid = self.fiducial_output()
        W = np.zeros((self.na, self.na), dtype=complex)
        leak = 0.0
        for a in range(self.na):
            e = np.zeros(self.na)
            e[a] = 1.0
            out = self.run(e).state.amplitudes.reshape(self.na, self.rest)
            col = out @ fid.conj()
            W[:, a] = col
            leak = max(leak, float(1.0 - np.vdot(col, col).real))
        return W, leak


def hijack_scavenge_oracularize(ext: HermitianEnvExtension, input_state: StateVector | np.ndarray,
                                rng: RngStream | None = None) -> tuple[StateVector, ProtocolCost]:
    """Phase-oracle action on ``input_state`` (over the action registers) by the two-game protocol.

    Raises ExtensionNotSelfInverse before any game when a step map is not
    self-inverse.  The returned state lives on actions ⊗ percept slots ⊗ Λ.
    """
    proto = HijackProtocol(ext)
    amps = input_state.amplitudes if isinstance(input_state, StateVector) else np.asarray(input_state)
    if amps.size != proto.na:
        raise LayoutMismatch(f"input has {amps.size} amplitudes, expected {proto.na}")
    run = proto.run(amps)
    return run.state, run.cost


def action_marginal_purity(state: StateVector, m: int) -> float:
    return state.reduced([f"A{i + 1}" for i in range(m)]).purity()


def hijack_check(ext: HermitianEnvExtension, reference: np.ndarray, rng: RngStream, random_inputs: int = 20,
                 tol: float = 1e-9, purity_tol: float = 1e-10) -> dict:
    """Compare the synthesized map with diag((-1)^reference), plus purity and cost checks.

    ``reference`` is the truth table the synthesized oracle should realize.
    A non-self-inverse extension fails the check instead of raising.
    """
    m = ext.m
    try:
        proto = HijackProtocol(ext)
    except ExtensionNotSelfInverse as e:
        return {"M": m, "pass": False, "error": str(e)}
    W, leak = proto.synthesized_operator()
    target = np.diag(1.0 - 2.0 * np.asarray(reference, dtype=float))
    dist = float(np.linalg.norm(W - target, 2))
    purities = []
    for i in range(random_inputs):
        v = rng.child(i).normal(2 * proto.na)
        amps = (v[: proto.na] + 1j * v[proto.na:])
        amps /= np.linalg.norm(amps)
        run = proto.run(amps)
        purities.append(action_marginal_purity(run.state, m))
    cost = proto.run(np.eye(proto.na)[0]).cost
    cost_ok = (cost.oracle_games, cost.interaction_steps) == (2, 5 * m + 1)
    min_purity = min(purities) if purities else 1.0
    ok = dist <= tol and leak <= tol and min_purity >= 1 - purity_tol and cost_ok
    return {"M": m, "pass": bool(ok), "operator_distance": dist, "leakage": leak,
            "min_purity": min_purity, "cost": cost.to_json(), "cost_ok": cost_ok}


# ------------------------------------------------------- single step


@dataclass
class TrivialPerceptEnv:
    """Memoryless single-step environment with one raw percept and a binary reward."""

    actions: FiniteSpace
    reward: np.ndarray
    percepts: FiniteSpace = FiniteSpace(("*",))
    m_max: int = 1


def trivial_percept_env(reward) -> TrivialPerceptEnv:
    r = np.asarray(reward, dtype=np.int8)
    return TrivialPerceptEnv(FiniteSpace(tuple(f"a{i}" for i in range(r.size))), r)


def example1_kickback(env: TrivialPerceptEnv, input_state: np.ndarray | StateVector,
                      hijack: bool = True) -> StateVector:
    """One step of the reset-then-controlled-flip environment on [A, interface Λ, prep].

    The environment resets Λ by swapping it with its prep register (holding
    |0>), then flips Λ when R(a) = 1.  With ``hijack`` the agent has replaced
    the prep content by |->, which turns the step into the phase oracle.
    Returns the state on A ⊗ Λ; the discarded prep register is in a fixed
    product state and is dropped.
    """
    if len(env.percepts) != 1 or getattr(env, "m_max", 1) != 1:
        raise NotTrivialPercept("phase kickback needs a single-step environment with one raw percept")
    n = len(env.actions)
    amps = input_state.amplitudes if isinstance(input_state, StateVector) else np.asarray(input_state, complex)
    if amps.size != n:
        raise LayoutMismatch(f"input has {amps.size} amplitudes, expected {n}")
    zero = np.array([1.0, 0.0])
    prep = np.array([1.0, -1.0]) / math.sqrt(2) if hijack else zero
    # layout [A, Λ, prep]; Λ starts in the agent-written |0>
    vec = np.kron(amps, np.kron(zero, prep)).reshape(n, 2, 2)
    vec = vec.transpose(0, 2, 1).copy()  # swap Λ <-> prep
    r = np.asarray(env.reward, dtype=bool)
    vec[r] = vec[r][:, ::-1, :]  # controlled X on Λ
    # prep now holds the old Λ content |0>; drop it
    out = vec[:, :, 0]
    layout = Layout((("A", env.actions), ("L", FiniteSpace(("0", "1")))))
    return StateVector(layout, out.reshape(-1))


def copy_oracle_matrix(reward) -> np.ndarray:
    r = np.asarray(reward, dtype=np.int8)
    return build_oracle(OracleSpec("copy", r, r.size, 1)).isometry.matrix()


__all__ = [
    "AQConfig", "ProtocolCost", "AQAgent", "AQResult", "aq_construct", "oracle_budget",
    "HermitianEnvExtension", "build_hermitian_extension", "check_classical_limit", "HijackProtocol",
    "HijackRun", "hijack_scavenge_oracularize", "hijack_check", "action_marginal_purity",
    "TrivialPerceptEnv", "trivial_percept_env", "example1_kickback", "copy_oracle_matrix",
]
