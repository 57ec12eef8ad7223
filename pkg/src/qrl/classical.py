"""Classical agents, the turn-based interaction engine and the luck-favoring probe."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    ACTION,
    EMPTY_PERCEPT,
    PERCEPT,
    Entry,
    FiniteSpace,
    History,
    Percept,
    RngStream,
)
from .errors import (
    BadHyperparameter,
    RetryBudgetExhausted,
    SpaceMismatch,
    UnrealizableHistory,
)

DEFAULT_RETRY_BUDGET = 10**6


class Agent:
    """Black-box learning agent: ``act`` consumes randomness only from ``rng``.

    ``snapshot``/``restore`` capture the full internal configuration so a
    caller can rewind the agent (used by post-selection); the default goes
    through ``copy.deepcopy``.
    """

    actions: FiniteSpace

    def reset(self) -> None:
        raise NotImplementedError

    def act(self, percept: Percept, rng: RngStream) -> str:
        raise NotImplementedError

    def snapshot(self):
        return copy.deepcopy(self.__dict__)

    def restore(self, snap) -> None:
        self.__dict__.update(copy.deepcopy(snap))


class RURAgent(Agent):
    """Uniform random walker that replays its last ``memory`` actions once rewarded."""

    def __init__(self, actions: FiniteSpace, memory: int):
        if memory < 1:
            raise BadHyperparameter("memory must be >= 1")
        self.actions = actions
        self.memory = memory
        self._labels = actions.labels
        self._n = len(actions)
        self.reset()

    def reset(self) -> None:
        self.recent: list[str] = []
        self.replay: tuple[str, ...] | None = None
        self.pos = 0

    def act(self, percept: Percept, rng: RngStream) -> str:
        if self.replay is None and percept.reward:
            self.replay = tuple(self.recent[-self.memory:])
            self.pos = 0
        if self.replay is not None:
            a = self.replay[self.pos % len(self.replay)]
            self.pos += 1
            return a
        a = self._labels[int(rng.random() * self._n)]
        self.recent.append(a)
        if len(self.recent) > self.memory:
            del self.recent[0]
        return a

    def snapshot(self):
        return (tuple(self.recent), self.replay, self.pos)

    def restore(self, snap) -> None:
        self.recent, self.replay, self.pos = list(snap[0]), snap[1], snap[2]


def rur_agent(spaces, memory: int | None = None) -> RURAgent:
    """``spaces`` is an action FiniteSpace or an env exposing ``actions``/``m_max``."""
    if isinstance(spaces, FiniteSpace):
        if memory is None:
            raise BadHyperparameter("memory must be given with a bare action space")
        return RURAgent(spaces, memory)
    return RURAgent(spaces.actions, memory if memory is not None else spaces.m_max)


class RURWithoutReplacement(Agent):
    """Random search that never retries an unrewarded epoch-long action sequence.

    One uniform per epoch selects among the untried sequences (in code order);
    after the first reward the winning sequence is replayed forever.
    """

    def __init__(self, actions: FiniteSpace, epoch: int):
        self.actions = actions
        self.epoch = epoch
        self.n = len(actions)
        self.reset()

    def reset(self) -> None:
        self.untried = list(range(self.n ** self.epoch))
        self.current: int | None = None
        self.digits: tuple[int, ...] = ()
        self.t = 0
        self.won = False

    def _decode(self, code: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.epoch):
            out.append(code % self.n)
            code //= self.n
        return tuple(reversed(out))

    def act(self, percept: Percept, rng: RngStream) -> str:
        if self.t == 0:
            if self.current is not None and not self.won:
                if percept.reward:
                    self.won = True
                else:
                    self.untried.remove(self.current)
            if not self.won:
                pool = self.untried if self.untried else list(range(self.n ** self.epoch))
                self.current = pool[int(rng.random() * len(pool))]
                self.digits = self._decode(self.current)
        a = self.actions.labels[self.digits[self.t]]
        self.t = (self.t + 1) % self.epoch
        return a


def rur_wor_agent(spaces, epoch: int | None = None) -> RURWithoutReplacement:
    if isinstance(spaces, FiniteSpace):
        return RURWithoutReplacement(spaces, epoch)
    return RURWithoutReplacement(spaces.actions, epoch if epoch is not None else spaces.m_max)


class PSLiteAgent(Agent):
    """Tabular projective-simulation-style learner.

    Weights h(percept, action) start at 1; actions are sampled with probability
    proportional to h given the raw percept label.  At the end of each epoch
    every weight is damped towards 1 (h <- h - damping * (h - 1)) and, if the
    epoch was rewarded, each (percept, action) pair used in it gains ``glow``.
    """

    def __init__(self, actions: FiniteSpace, glow: float, damping: float, epoch: int):
        if not glow > 0:
            raise BadHyperparameter(f"glow must be > 0, got {glow}")
        if not 0 <= damping < 1:
            raise BadHyperparameter(f"damping must lie in [0, 1), got {damping}")
        if epoch < 1:
            raise BadHyperparameter("epoch must be >= 1")
        self.actions = actions
        self.glow = float(glow)
        self.damping = float(damping)
        self.epoch = epoch
        self._labels = actions.labels
        self._n = len(actions)
        self.reset()

    def reset(self) -> None:
        self.h: dict[str, list[float]] = {}
        self.trace: list[tuple[str, int]] = []

    def weights(self, label: str) -> list[float]:
        return self.h.get(label) or [1.0] * self._n

    def action_probabilities(self, label: str) -> np.ndarray:
        w = np.array(self.weights(label))
        return w / w.sum()

    def _end_epoch(self, rewarded: bool) -> None:
        if self.damping:
            keep = 1.0 - self.damping
            for row in self.h.values():
                for i in range(self._n):
                    row[i] = 1.0 + keep * (row[i] - 1.0)
        if rewarded:
            for label, a in self.trace:
                row = self.h.get(label)
                if row is None:
                    row = self.h[label] = [1.0] * self._n
                row[a] += self.glow
        self.trace = []

    def act(self, percept: Percept, rng: RngStream) -> str:
        if len(self.trace) == self.epoch:
            self._end_epoch(bool(percept.reward))
        label = percept.label
        row = self.h.get(label)
        u = rng.random()
        if row is None:
            a = int(u * self._n)
        else:
            target = u * sum(row)
            acc = 0.0
            a = self._n - 1
            for i, w in enumerate(row):
                acc += w
                if target < acc:
                    a = i
                    break
        self.trace.append((label, a))
        return self._labels[a]

    def snapshot(self):
        return ({k: list(v) for k, v in self.h.items()}, list(self.trace))

    def restore(self, snap) -> None:
        self.h = {k: list(v) for k, v in snap[0].items()}
        self.trace = list(snap[1])


def ps_lite_agent(spaces, glow: float = 1.0, damping: float = 0.01, epoch: int | None = None) -> PSLiteAgent:
    if isinstance(spaces, FiniteSpace):
        if epoch is None:
            raise BadHyperparameter("epoch must be given with a bare action space")
        return PSLiteAgent(spaces, glow, damping, epoch)
    return PSLiteAgent(spaces.actions, glow, damping, epoch if epoch is not None else spaces.m_max)


class ScriptedAgent(Agent):
    """Deterministic agent cycling through a fixed action list."""

    def __init__(self, actions: FiniteSpace, script: Sequence[str]):
        self.actions = actions
        self.script = tuple(script)
        self.reset()

    def reset(self) -> None:
        self.pos = 0

    def act(self, percept: Percept, rng: RngStream) -> str:
        a = self.script[self.pos % len(self.script)]
        self.pos += 1
        return a


# ------------------------------------------------------------ engine


def check_spaces(agent, env) -> None:
    if tuple(agent.actions.labels) != tuple(env.actions.labels):
        raise SpaceMismatch(f"agent actions {agent.actions.labels} != env actions {env.actions.labels}")
    agent_percepts = getattr(agent, "percepts", None)
    if agent_percepts is not None and set(env.percepts.labels) - set(agent_percepts.labels):
        raise SpaceMismatch("environment emits percepts the agent does not know")


def interact(agent, env, steps: int, rng: RngStream, first: Percept = EMPTY_PERCEPT,
             reset_env: bool = True) -> History:
    """Run ``steps`` agent/environment entries after the opening percept."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    check_spaces(agent, env)
    if reset_env:
        env.reset()
    entries = [Entry(PERCEPT, first.label, first.reward)]
    percept = first
    for t in range(steps):
        if t % 2 == 0:
            a = agent.act(percept, rng)
            entries.append(Entry(ACTION, a, None))
        else:
            percept = env.respond(entries[-1].label, rng)
            entries.append(Entry(PERCEPT, percept.label, percept.reward))
    return History(entries, validate=False)


@dataclass
class InteractionStats:
    games_played: int = 0
    steps: int = 0
    first_win_game: int | None = None
    rate_trace: list = field(default_factory=list)
    rewards: int = 0
    last_percept: Percept = EMPTY_PERCEPT

    def __post_init__(self):
        if self.first_win_game is not None and self.first_win_game > self.games_played:
            raise ValueError("first win cannot come after the last game")


def run_games(agent, env, num_games: int, rng: RngStream, first: Percept = EMPTY_PERCEPT,
              trace_every: int = 1) -> InteractionStats:
    """Play whole epochs; ``rate_trace`` holds (entries so far, running Rate)."""
    check_spaces(agent, env)
    env.reset()
    stats = InteractionStats()
    percept = first
    rewards = 0
    for g in range(1, num_games + 1):
        for _ in range(env.m_max):
            a = agent.act(percept, rng)
            percept = env.respond(a, rng)
        if percept.reward:
            rewards += 1
            if stats.first_win_game is None:
                stats.first_win_game = g
        stats.games_played = g
        stats.steps = 2 * g * env.m_max
        if g % trace_every == 0:
            stats.rate_trace.append((stats.steps, rewards / stats.steps))
    stats.rewards = rewards
    stats.last_percept = percept
    return stats


# -------------------------------------------------------- fast paths


def rur_first_win(table: np.ndarray, n: int, m: int, rng: RngStream, max_games: int) -> int | None:
    """First rewarded game (1-based) of a fresh RUR agent with memory m, or None.

    Reads the uniforms in the order the engine would (one per action before the
    first reward), so the result equals ``run_games(...).first_win_game``.  The
    stream is left advanced to the end of the block holding the win.
    """
    weights = n ** np.arange(m - 1, -1, -1)
    block = 256
    played = 0
    while played < max_games:
        games = min(block, max_games - played)
        u = rng.uniforms(games * m).reshape(games, m)
        codes = (np.floor(u * n).astype(np.int64) * weights).sum(axis=1)
        hits = np.flatnonzero(table[codes])
        if hits.size:
            return played + int(hits[0]) + 1
        played += games
    return None


def rur_wor_first_win(table: np.ndarray, n: int, m: int, rng: RngStream, max_games: int) -> int | None:
    """First rewarded game of a fresh without-replacement agent, or None."""
    untried = list(range(n ** m))
    for g in range(1, max_games + 1):
        pool = untried if untried else list(range(n ** m))
        code = pool[int(rng.random() * len(pool))]
        if table[code]:
            return g
        if untried:
            untried.remove(code)
    return None


# ---------------------------------------------------- post-selection


@dataclass
class PostselectionReport:
    resets: int = 0
    attempts: int = 0
    billed_steps: int = 0


def _epoch_segments(h: History) -> list[tuple[list[Percept], list[str]]]:
    """Split a history into (percepts seen before each action, actions)."""
    entries = h.entries
    if entries[-1].role != PERCEPT:
        raise UnrealizableHistory("history must end with a percept")
    pairs = []
    for i in range(1, len(entries), 2):
        pairs.append((entries[i - 1].percept, entries[i].label))
    return pairs


def postselect(agent, target: History, copies: int, rng: RngStream,
               retry_budget: int = DEFAULT_RETRY_BUDGET, report: PostselectionReport | None = None):
    """Condition ``agent`` (from reset) on producing ``target`` repeated ``copies`` times.

    Percepts of the target are fed in; whenever the agent's sampled action
    deviates, it is rewound (to reset for the first copy, to the end of the
    previous copy afterwards) and the copy is retried.  Rewinding to a copy
    boundary samples the same conditional distribution as restarting from
    scratch because the stored configuration is the agent's entire state.
    """
    if copies < 1:
        raise ValueError("copies must be >= 1")
    pairs = _epoch_segments(target)
    labels = set(agent.actions.labels)
    for _, a in pairs:
        if a not in labels:
            raise RetryBudgetExhausted(f"target action {a!r} outside the agent's action space")
    report = report if report is not None else PostselectionReport()
    agent.reset()
    tail = target.entries[-1].percept
    for c in range(copies):
        checkpoint = agent.snapshot() if c else None
        while True:
            report.attempts += 1
            ok = True
            for i, (p, a) in enumerate(pairs):
                # later copies open with the previous copy's closing percept
                percept = tail if (c and i == 0) else p
                if agent.act(percept, rng) != a:
                    ok = False
                    break
            if ok:
                break
            report.resets += 1
            if report.resets > retry_budget:
                raise RetryBudgetExhausted(f"no reproduction of the target within {retry_budget} resets")
            if c == 0:
                agent.reset()
            else:
                agent.restore(checkpoint)
    return agent


def train_by_postselection(agent, target: History, copies: int, rng: RngStream,
                           retry_budget: int = DEFAULT_RETRY_BUDGET):
    """Return a trained copy of ``agent`` conditioned on ``target``^copies (no billed steps)."""
    trained = copy.deepcopy(agent)
    return postselect(trained, target, copies, rng, retry_budget)


def replay_percepts(env_factory: Callable, h: History) -> None:
    """Feed h's actions into a fresh environment and demand the same percepts."""
    env = env_factory()
    env.reset()
    entries = h.entries
    for i in range(1, len(entries) - 1, 2):
        p = env.respond(entries[i].label, None)
        e = entries[i + 1]
        if (p.label, p.reward) != (e.label, e.reward):
            raise UnrealizableHistory(
                f"environment answers {p} at t={i + 1}, history has {(e.label, e.reward)}")


def is_history_deterministic(agent_factory, rng: RngStream, samples: int = 64) -> bool:
    first = set()
    for _ in range(samples):
        first.add(agent_factory().act(EMPTY_PERCEPT, rng))
        if len(first) > 1:
            return False
    return True


def luck_favoring_probe(agent_factory, env_factory, h_lucky: History, h_unlucky: History,
                        eval_steps: int, trials: int, rng: RngStream,
                        retry_budget: int = DEFAULT_RETRY_BUDGET) -> tuple[float, float, float]:
    """Mean Rate of A(h_lucky) and A(h_unlucky) over ``eval_steps`` fresh rounds.

    Trial i uses stream ``rng.child(i)`` for both arms (common random numbers),
    so identical histories give identical means.  Returns
    (rate_lucky, rate_unlucky, standard error of the difference).
    """
    if is_history_deterministic(agent_factory, rng.child(1 << 30)):
        raise UnrealizableHistory("deterministic agents cannot be post-selected onto arbitrary histories")
    for h in (h_lucky, h_unlucky):
        replay_percepts(env_factory, h)
    lucky = np.empty(trials)
    unlucky = np.empty(trials)
    for i in range(trials):
        for h, out in ((h_lucky, lucky), (h_unlucky, unlucky)):
            stream = rng.child(i)
            agent = postselect(agent_factory(), h, 1, stream, retry_budget)
            env = env_factory()
            out[i] = _rate_after(agent, env, h.last_percept, eval_steps, stream)
    diff = lucky - unlucky
    stderr = float(diff.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(lucky.mean()), float(unlucky.mean()), stderr


def _rate_after(agent, env, last: Percept, rounds: int, rng: RngStream) -> float:
    env.reset()
    percept = last
    rewards = 0
    for _ in range(rounds):
        percept = env.respond(agent.act(percept, rng), rng)
        rewards += percept.reward
    return rewards / (2 * rounds)


def epoch_history(env, actions: Sequence[str], first: Percept = EMPTY_PERCEPT) -> History:
    """History of one fresh epoch driven by a fixed action list."""
    env.reset()
    percepts = [env.respond(a, None) for a in actions]
    return History.from_pairs(actions, percepts, first)


__all__ = [
    "Agent", "RURAgent", "rur_agent", "RURWithoutReplacement", "rur_wor_agent", "PSLiteAgent",
    "ps_lite_agent", "ScriptedAgent", "interact", "InteractionStats", "run_games",
    "rur_first_win", "rur_wor_first_win", "postselect", "train_by_postselection",
    "PostselectionReport", "luck_favoring_probe", "replay_percepts", "epoch_history",
    "check_spaces",
]
