"""Task environments: labeled mazes, stochastic tables and the controllable wrapper."""

from __future__ import annotations

import hashlib
import itertools
import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import EMPTY, FiniteSpace, Percept, RngStream, action_space
from .errors import (
    BadDistribution,
    DisconnectedGraph,
    LabelInconsistentWithBFS,
    LengthMismatch,
    NotOracularizable,
)

UP = "↑"
CROSS = "×"

ENUMERATION_CAP = 1 << 20


def sequence_codes(n: int, length: int) -> np.ndarray:
    """All action index sequences in mixed-radix order, first action most significant."""
    count = n ** length
    codes = np.arange(count)
    out = np.empty((count, length), dtype=np.int64)
    for i in range(length):
        out[:, i] = (codes // n ** (length - 1 - i)) % n
    return out


def encode_sequence(indices: Sequence[int], n: int) -> int:
    code = 0
    for i in indices:
        code = code * n + int(i)
    return code


def decode_sequence(code: int, n: int, length: int) -> tuple[int, ...]:
    out = []
    for _ in range(length):
        out.append(code % n)
        code //= n
    return tuple(reversed(out))


# ---------------------------------------------------------------- mazes


@dataclass(frozen=True)
class Vertex:
    id: int
    label: str
    edges: tuple[int, ...]


@dataclass(frozen=True)
class MazeSpec:
    """Directed graph with regular out-degree ``n``; ``edges[i]`` is where action i leads."""

    n: int
    vertices: tuple[Vertex, ...]
    start: int
    finish: int
    m_max: int

    def __post_init__(self):
        vs = tuple(v if isinstance(v, Vertex) else Vertex(int(v["id"]), str(v["label"]), tuple(v["edges"]))
                   for v in self.vertices)
        object.__setattr__(self, "vertices", vs)
        self.validate()

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    def delta(self, v: int, a: int) -> int:
        return self.vertices[v].edges[a]

    def transition_table(self) -> np.ndarray:
        return np.array([v.edges for v in self.vertices], dtype=np.int64)

    def distances_to_finish(self) -> np.ndarray:
        """BFS distance from every vertex to finish along directed edges (-1 if unreachable)."""
        rev = [[] for _ in self.vertices]
        for v in self.vertices:
            for w in v.edges:
                rev[w].append(v.id)
        dist = np.full(self.num_vertices, -1, dtype=np.int64)
        dist[self.finish] = 0
        queue = deque([self.finish])
        while queue:
            w = queue.popleft()
            for v in rev[w]:
                if dist[v] < 0:
                    dist[v] = dist[w] + 1
                    queue.append(v)
        return dist

    @property
    def shortest_path_len(self) -> int:
        return int(self.distances_to_finish()[self.start])

    def arrow_label(self, v: int, dist: np.ndarray | None = None) -> str:
        if dist is None:
            dist = self.distances_to_finish()
        d = dist[v]
        return "".join(
            UP if d > 0 and dist[w] >= 0 and dist[w] == d - 1 else CROSS
            for w in self.vertices[v].edges
        )

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("out-degree must be positive")
        ids = [v.id for v in self.vertices]
        if ids != list(range(len(ids))):
            raise ValueError("vertex ids must be 0..N-1 in order")
        for v in self.vertices:
            if len(v.edges) != self.n:
                raise ValueError(f"vertex {v.id} has out-degree {len(v.edges)}, expected {self.n}")
            for w in v.edges:
                if not 0 <= w < len(ids):
                    raise ValueError(f"edge {v.id}->{w} leaves the vertex set")
        if not (0 <= self.start < len(ids) and 0 <= self.finish < len(ids)):
            raise ValueError("start/finish outside the vertex set")
        seen = {self.start}
        queue = deque([self.start])
        while queue:
            v = queue.popleft()
            for w in self.vertices[v].edges:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        if len(seen) != len(ids):
            raise DisconnectedGraph(f"vertices {sorted(set(ids) - seen)} unreachable from start")
        dist = self.distances_to_finish()
        if dist[self.start] < 0:
            raise DisconnectedGraph("finish unreachable from start")
        if dist[self.start] > self.m_max:
            raise ValueError(f"shortest path {dist[self.start]} exceeds m_max {self.m_max}")
        for v in self.vertices:
            expected = self.arrow_label(v.id, dist)
            if v.label != expected:
                raise LabelInconsistentWithBFS(
                    f"vertex {v.id} labeled {v.label!r}, BFS distances imply {expected!r}")

    def percept_label(self, v: int) -> str:
        return f"{v}:{self.vertices[v].label}"

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n,
            "vertices": [{"id": v.id, "label": v.label, "edges": list(v.edges)} for v in self.vertices],
            "start": self.start,
            "finish": self.finish,
            "m_max": self.m_max,
        }, ensure_ascii=False, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "MazeSpec":
        d = json.loads(text)
        missing = {"n", "vertices", "start", "finish", "m_max"} - set(d)
        if missing:
            raise ValueError(f"maze file missing fields {sorted(missing)}")
        return cls(int(d["n"]), tuple(d["vertices"]), int(d["start"]), int(d["finish"]), int(d["m_max"]))

    @classmethod
    def load(cls, path: str | Path) -> "MazeSpec":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _labelled(n: int, edges: list[tuple[int, ...]], start: int, finish: int, m_max: int) -> MazeSpec:
    # build once without labels to get BFS distances, then attach arrow labels
    raw = [Vertex(i, "", e) for i, e in enumerate(edges)]
    shell = object.__new__(MazeSpec)
    for name, value in (("n", n), ("vertices", tuple(raw)), ("start", start), ("finish", finish), ("m_max", m_max)):
        object.__setattr__(shell, name, value)
    dist = MazeSpec.distances_to_finish(shell)
    labelled = tuple(Vertex(i, MazeSpec.arrow_label(shell, i, dist), e) for i, e in enumerate(edges))
    return MazeSpec(n, labelled, start, finish, m_max)


def line_maze(m: int, n: int = 2, m_max: int | None = None) -> MazeSpec:
    """Corridor 0 -> 1 -> ... -> m with a unique shortest path of length m.

    At vertex v the forward door is ``(v + 1) % n``; every other door leads one
    vertex back (staying put at the start).  The finish sends every door back.
    """
    if m < 1:
        raise ValueError("path length must be >= 1")
    edges = []
    for v in range(m + 1):
        if v == m:
            edges.append(tuple([m - 1] * n))
            continue
        fwd = (v + 1) % n
        edges.append(tuple(v + 1 if a == fwd else max(v - 1, 0) for a in range(n)))
    return _labelled(n, edges, 0, m, m if m_max is None else m_max)


def winning_path(spec: MazeSpec) -> tuple[int, ...]:
    """Action indices of one shortest path (first shortening door at each vertex)."""
    dist = spec.distances_to_finish()
    v, path = spec.start, []
    while v != spec.finish:
        a = next(i for i, w in enumerate(spec.vertices[v].edges) if dist[w] == dist[v] - 1)
        path.append(a)
        v = spec.delta(v, a)
    return tuple(path)


class DeterministicEpisodicEnv:
    """Single-win fixed-time maze game.

    Each epoch lasts exactly ``m_max`` actions.  Intermediate percepts are the
    visited vertex labels; the epoch's final percept is the start vertex (the
    walker is teleported back) carrying the epoch's reward flag, which is 1 iff
    the walk visited finish.
    """

    deterministic = True
    single_win = True
    fixed_time = True

    def __init__(self, spec: MazeSpec):
        self.spec = spec
        self.m_max = spec.m_max
        self.n = spec.n
        self.actions = action_space(spec.n)
        self.percepts = FiniteSpace(tuple(spec.percept_label(v.id) for v in spec.vertices))
        self._delta = spec.transition_table()
        self._labels = [spec.percept_label(v.id) for v in spec.vertices]
        self._table: np.ndarray | None = None
        self.reset()

    def reset(self) -> None:
        self.vertex = self.spec.start
        self.visited = self.vertex == self.spec.finish
        self.t = 0

    def respond(self, action: str, rng: RngStream | None = None) -> Percept:
        a = self.actions.index(action)
        self.vertex = int(self._delta[self.vertex, a])
        self.visited = self.visited or self.vertex == self.spec.finish
        self.t += 1
        if self.t == self.m_max:
            reward = int(self.visited)
            self.reset()
            return Percept(self._labels[self.spec.start], reward)
        return Percept(self._labels[self.vertex], 0)

    def percepts_of(self, indices: Sequence[int]) -> list[Percept]:
        """Percepts a fresh epoch emits for the given action-index prefix."""
        v, seen, out = self.spec.start, self.spec.start == self.spec.finish, []
        for t, a in enumerate(indices, start=1):
            v = int(self._delta[v, a])
            seen = seen or v == self.spec.finish
            if t == self.m_max:
                out.append(Percept(self._labels[self.spec.start], int(seen)))
            else:
                out.append(Percept(self._labels[v], 0))
        return out

    def reward_table(self) -> np.ndarray:
        """R over all n^m_max sequences, indexed by ``encode_sequence``."""
        if self._table is None:
            count = self.n ** self.m_max
            if count > ENUMERATION_CAP:
                raise ValueError(f"sequence space {count} exceeds enumeration cap")
            seqs = sequence_codes(self.n, self.m_max)
            v = np.full(count, self.spec.start, dtype=np.int64)
            seen = v == self.spec.finish
            for i in range(self.m_max):
                v = self._delta[v, seqs[:, i]]
                seen |= v == self.spec.finish
            self._table = seen.astype(np.int8)
            self._table.setflags(write=False)
        return self._table


def make_maze_env(spec: MazeSpec) -> DeterministicEpisodicEnv:
    spec.validate()
    return DeterministicEpisodicEnv(spec)


def _action_indices(env, actions: Sequence) -> list[int]:
    return [a if isinstance(a, (int, np.integer)) else env.actions.index(a) for a in actions]


def reward_of(env: DeterministicEpisodicEnv, actions: Sequence) -> int:
    if len(actions) != env.m_max:
        raise LengthMismatch(f"expected {env.m_max} actions, got {len(actions)}")
    return env.percepts_of(_action_indices(env, actions))[-1].reward


def winner_count(env) -> int:
    return int(np.count_nonzero(env.reward_table()))


def truth_table_hash(table: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(table, dtype=np.uint8).tobytes()).hexdigest()


# ----------------------------------------------------------- stochastic


ROW_TOL = 1e-12


class StochasticEnv:
    """Tabular stochastic fixed-time game.

    ``tables[(action_prefix, percept_prefix)]`` maps raw percept labels to
    probabilities for the percept following the last action of the prefix.
    ``reward_predicate(actions, percepts)`` decides the flag on the epoch's
    final percept.
    """

    fixed_time = True
    single_win = True

    def __init__(self, actions: FiniteSpace, percepts: FiniteSpace, length: int,
                 tables: Mapping[tuple[tuple[str, ...], tuple[str, ...]], Mapping[str, float]],
                 reward_predicate: Callable[[tuple[str, ...], tuple[str, ...]], int]):
        self.actions = actions
        self.percepts = percepts
        self.m_max = length
        self.n = len(actions)
        self.reward_predicate = reward_predicate
        self._rows: dict = {}
        for key, row in tables.items():
            a_pre, s_pre = tuple(key[0]), tuple(key[1])
            if len(s_pre) != len(a_pre) - 1:
                raise BadDistribution(f"percept prefix {s_pre} does not follow action prefix {a_pre}")
            vec = np.zeros(len(percepts))
            for lab, p in row.items():
                if lab not in percepts:
                    raise BadDistribution(f"unknown percept {lab!r}")
                if p < 0:
                    raise BadDistribution(f"negative probability {p} for {lab!r}")
                vec[percepts.index(lab)] += p
            if abs(vec.sum() - 1.0) > ROW_TOL:
                raise BadDistribution(f"row {key} sums to {vec.sum()!r}")
            self._rows[(a_pre, s_pre)] = vec
        self.deterministic = all(np.count_nonzero(r) == 1 for r in self._rows.values())
        self.reset()

    def row(self, action_prefix: Sequence[str], percept_prefix: Sequence[str]) -> np.ndarray:
        key = (tuple(action_prefix), tuple(percept_prefix))
        try:
            return self._rows[key]
        except KeyError:
            raise BadDistribution(f"no conditional table for prefix {key}") from None

    def reset(self) -> None:
        self._a: list[str] = []
        self._s: list[str] = []

    def respond(self, action: str, rng: RngStream) -> Percept:
        if action not in self.actions:
            raise ValueError(f"action {action!r} not in action space")
        self._a.append(action)
        row = self.row(self._a, self._s)
        if np.count_nonzero(row) == 1:
            s = self.percepts.labels[int(np.flatnonzero(row)[0])]
        else:
            s = self.percepts.labels[rng.choice(row)]
        self._s.append(s)
        if len(self._a) == self.m_max:
            reward = int(self.reward_predicate(tuple(self._a), tuple(self._s)))
            self.reset()
            return Percept(s, reward)
        return Percept(s, 0)

    def sequence_probability(self, actions: Sequence[str], percepts: Sequence[str]) -> float:
        p = 1.0
        for t in range(len(actions)):
            p *= self.row(actions[: t + 1], percepts[:t])[self.percepts.index(percepts[t])]
            if p == 0.0:
                break
        return p

    def joint_table(self) -> list[tuple[tuple[str, ...], tuple[str, ...], float, int]]:
        """Every (actions, percepts, P(s|a), R) with positive probability."""
        size = len(self.actions) ** self.m_max * len(self.percepts) ** self.m_max
        if size > ENUMERATION_CAP:
            raise ValueError(f"joint table of size {size} exceeds enumeration cap")
        out = []
        for a in itertools.product(self.actions.labels, repeat=self.m_max):
            for s in itertools.product(self.percepts.labels, repeat=self.m_max):
                p = self.sequence_probability(a, s)
                if p > 0:
                    out.append((a, s, p, int(self.reward_predicate(a, s))))
        return out


def make_stochastic_env(tables, reward_predicate, actions: FiniteSpace, percepts: FiniteSpace,
                        length: int) -> StochasticEnv:
    return StochasticEnv(actions, percepts, length, tables, reward_predicate)


def bernoulli_reward_env(win_probs: Sequence[float]) -> StochasticEnv:
    """One-step game: action i yields percept "win" with probability win_probs[i]."""
    acts = action_space(len(win_probs))
    percepts = FiniteSpace(("win", "lose"))
    tables = {((a,), ()): {"win": p, "lose": 1.0 - p} for a, p in zip(acts.labels, win_probs)}
    return StochasticEnv(acts, percepts, 1, tables, lambda a, s: int(s[-1] == "win"))


def stochastic_from_deterministic(env: DeterministicEpisodicEnv) -> StochasticEnv:
    """Point-mass tables reproducing a maze epoch (raw labels, reward from the maze)."""
    tables = {}
    for t in range(1, env.m_max + 1):
        for idx in itertools.product(range(env.n), repeat=t):
            ps = env.percepts_of(idx)
            a = tuple(env.actions.labels[i] for i in idx)
            tables[(a, tuple(p.label for p in ps[:-1]))] = {ps[-1].label: 1.0}

    def reward(actions, percepts):
        return reward_of(env, actions)

    return StochasticEnv(env.actions, env.percepts, env.m_max, tables, reward)


def random_stochastic_env(n: int, num_percepts: int, length: int, rng: RngStream,
                          reward_fraction: float = 0.3) -> StochasticEnv:
    """Random tables and a random reward predicate over full (a, s) sequences."""
    acts = action_space(n)
    percepts = FiniteSpace(tuple(f"s{i}" for i in range(num_percepts)))
    tables = {}
    for t in range(1, length + 1):
        for a in itertools.product(acts.labels, repeat=t):
            for s in itertools.product(percepts.labels, repeat=t - 1):
                w = rng.uniforms(num_percepts) + 0.05
                w = w / w.sum()
                w[-1] = 1.0 - w[:-1].sum()
                tables[(a, s)] = dict(zip(percepts.labels, w))
    rewarded = set()
    for a in itertools.product(acts.labels, repeat=length):
        for s in itertools.product(percepts.labels, repeat=length):
            if rng.random() < reward_fraction:
                rewarded.add((a, s))
    return StochasticEnv(acts, percepts, length, tables, lambda a, s: int((tuple(a), tuple(s)) in rewarded))


# ---------------------------------------------------------- controllable


class ControllableEnv:
    """Environment the agent can play classically or query as a phase-flip oracle.

    Classical rounds are billed one interaction step each; every oracle call is
    billed ``m_max`` steps.
    """

    def __init__(self, env: DeterministicEpisodicEnv):
        if not getattr(env, "deterministic", False):
            raise NotOracularizable("only deterministic environments can be oracularized")
        if not (getattr(env, "fixed_time", False) and getattr(env, "single_win", False)):
            raise NotOracularizable("environment is not a single-win fixed-time game")
        check_single_win(env)
        self.env = env
        self.m_max = env.m_max
        self.n = env.n
        self.actions = env.actions
        self.percepts = env.percepts
        self.mode = "classical"
        self.billed_steps = 0
        self.oracle_calls = 0
        self._oracle = None

    # classical view
    def set_mode(self, mode: str) -> None:
        if mode not in ("classical", "oracle"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode

    def reset(self) -> None:
        self.env.reset()

    def respond(self, action: str, rng: RngStream | None = None) -> Percept:
        if self.mode != "classical":
            raise RuntimeError("respond() is only available in classical mode")
        self.billed_steps += 1
        return self.env.respond(action, rng)

    # oracle view
    def reward_table(self) -> np.ndarray:
        return self.env.reward_table()

    @property
    def num_items(self) -> int:
        return self.n ** self.m_max

    def classical_hash(self) -> str:
        return truth_table_hash(self.env.reward_table())

    def oracle(self):
        if self._oracle is None:
            from .qsim.oracles import OracleSpec, build_oracle
            self._oracle = build_oracle(OracleSpec("phaseflip", self.env.reward_table(), self.n, self.m_max))
        return self._oracle

    def oracle_hash(self) -> str:
        return truth_table_hash(self.oracle().table)

    def query(self, amplitudes: np.ndarray) -> np.ndarray:
        """One oracle game on an action-register amplitude vector."""
        if self.mode != "oracle":
            raise RuntimeError("query() is only available in oracle mode")
        self.oracle_calls += 1
        self.billed_steps += self.m_max
        return self.oracle().unitary.apply(amplitudes)

    def bill_oracle_games(self, games: int) -> None:
        self.oracle_calls += games
        self.billed_steps += games * self.m_max


def check_single_win(env, cap: int = 4096) -> None:
    """Exhaustively replay small epochs; at most one rewarded percept, the last one."""
    if env.n ** env.m_max > cap:
        return
    for idx in itertools.product(range(env.n), repeat=env.m_max):
        ps = env.percepts_of(idx)
        if sum(p.reward for p in ps) > 1 or any(p.reward for p in ps[:-1]):
            raise NotOracularizable(f"sequence {idx} is rewarded more than once or mid-epoch")


def make_controllable(env: DeterministicEpisodicEnv) -> ControllableEnv:
    return ControllableEnv(env)


# ---------------------------------------------------------- dephasing


class DephasingExtension:
    """Quantum extension that measures the interface before and after every map.

    Classically it is the wrapped environment.  As an oracle it realises
    dephase ∘ phaseflip ∘ dephase, so any superposition of action sequences
    collapses to a classical mixture.
    """

    def __init__(self, env: DeterministicEpisodicEnv):
        self.env = env
        self.m_max = env.m_max
        self.n = env.n
        self.actions = env.actions
        self.percepts = env.percepts
        self.oracle_calls = 0

    def reset(self) -> None:
        self.env.reset()

    def respond(self, action: str, rng: RngStream | None = None) -> Percept:
        return self.env.respond(action, rng)

    def reward_table(self) -> np.ndarray:
        return self.env.reward_table()

    @property
    def num_items(self) -> int:
        return self.n ** self.m_max

    def apply_density(self, rho: np.ndarray) -> np.ndarray:
        """Exact channel on an action-register density matrix."""
        self.oracle_calls += 1
        signs = 1.0 - 2.0 * self.env.reward_table()
        d = np.diag(np.diag(rho)).astype(complex)
        d = signs[:, None] * d * signs[None, :]
        return np.diag(np.diag(d))

    def apply_trajectory(self, amplitudes: np.ndarray, rng: RngStream) -> np.ndarray:
        """One sampled trajectory: collapse to a basis state, flip its sign, collapse again."""
        self.oracle_calls += 1
        probs = np.abs(amplitudes) ** 2
        x = rng.choice(probs)
        out = np.zeros_like(amplitudes, dtype=complex)
        out[x] = -1.0 if self.env.reward_table()[x] else 1.0
        return out


def dephasing_extension(env: DeterministicEpisodicEnv) -> DephasingExtension:
    return DephasingExtension(env)


__all__ = [
    "EMPTY", "MazeSpec", "Vertex", "line_maze", "winning_path", "DeterministicEpisodicEnv",
    "make_maze_env", "reward_of", "winner_count", "truth_table_hash", "StochasticEnv",
    "make_stochastic_env", "bernoulli_reward_env", "stochastic_from_deterministic",
    "random_stochastic_env", "ControllableEnv", "make_controllable", "check_single_win",
    "DephasingExtension", "dephasing_extension", "sequence_codes", "encode_sequence",
    "decode_sequence",
]
