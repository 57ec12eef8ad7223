"""Amplitude amplification for stochastic fixed-time games.

Layout: action slots A1..At, percept slots S2..S(t+1) and their mirrors
M2..M(t+1).  Percept slots range over {ε} ∪ raw percepts with ε at index 0;
the all-ε slot configuration is the fiducial input.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..core import FiniteSpace
from .operators import FunctionOperator, Operator
from .states import DEFAULT_CAP, Layout, StateVector, check_cap


class PerceptLayout:
    """Index bookkeeping for the A ⊗ S ⊗ S-mirror space of an environment."""

    def __init__(self, env, cap: int = DEFAULT_CAP):
        self.env = env
        self.t = env.m_max
        self.n = len(env.actions)
        self.k = len(env.percepts) + 1
        self.na = self.n ** self.t
        self.ds = self.k ** self.t
        self.dim = self.na * self.ds * self.ds
        check_cap(self.dim, cap)
        slot = FiniteSpace(env.percepts.labels, contains_empty=True)
        regs = [(f"A{i + 1}", env.actions) for i in range(self.t)]
        regs += [(f"S{i + 2}", slot) for i in range(self.t)]
        regs += [(f"M{i + 2}", slot) for i in range(self.t)]
        self.layout = Layout(tuple(regs))

    def action_names(self) -> list[str]:
        return [f"A{i + 1}" for i in range(self.t)]

    def action_index(self, actions) -> int:
        idx = 0
        for a in actions:
            idx = idx * self.n + self.env.actions.index(a)
        return idx

    def percept_index(self, percepts) -> int:
        idx = 0
        for s in percepts:
            idx = idx * self.k + 1 + self.env.percepts.index(s)
        return idx

    def fiducial_block(self) -> int:
        return 0


def purified_outputs(env, pl: PerceptLayout) -> np.ndarray:
    """psi[a] = sum_s sqrt(P(s|a)) |s>|s> as a (na, ds*ds) array."""
    psi = np.zeros((pl.na, pl.ds * pl.ds), dtype=complex)
    for a in itertools.product(env.actions.labels, repeat=pl.t):
        ai = pl.action_index(a)
        for s in itertools.product(env.percepts.labels, repeat=pl.t):
            p = env.sequence_probability(a, s)
            if p > 0:
                si = pl.percept_index(s)
                psi[ai, si * pl.ds + si] = math.sqrt(p)
    return psi


def reward_signs(env, pl: PerceptLayout) -> np.ndarray:
    """(-1)^R(a,s) on |a>|s>|s> with raw s; +1 on every other basis state."""
    signs = np.ones((pl.na, pl.ds, pl.ds))
    for a in itertools.product(env.actions.labels, repeat=pl.t):
        ai = pl.action_index(a)
        for s in itertools.product(env.percepts.labels, repeat=pl.t):
            if env.reward_predicate(a, s):
                si = pl.percept_index(s)
                signs[ai, si, si] = -1.0
    return signs.reshape(-1)


class RawPerceptOracle(FunctionOperator):
    """|a>|ε..ε>|ε..ε> -> |a> sum_s sqrt(P(s|a)) |s>|s>.

    Off the fiducial input each controlled block is completed by the
    Householder reflection exchanging |ε..ε,ε..ε> and psi_a, which is unitary,
    Hermitian and fixed by the tables alone.
    """

    def __init__(self, env, cap: int = DEFAULT_CAP):
        self.pl = PerceptLayout(env, cap)
        self.psi = purified_outputs(env, self.pl)
        w = -self.psi.copy()
        w[:, 0] += 1.0
        norms = np.einsum("ij,ij->i", w.conj(), w).real
        self._w = w
        self._scale = np.where(norms > 0, 2.0 / np.where(norms > 0, norms, 1.0), 0.0)
        super().__init__(self._apply, self.pl.dim, adjoint_fn=self._apply)

    def _apply(self, vec):
        v = np.asarray(vec, dtype=complex).reshape(self.pl.na, -1)
        coef = np.einsum("ij,ij->i", self._w.conj(), v) * self._scale
        return (v - coef[:, None] * self._w).reshape(-1)

    def adjoint(self) -> Operator:
        return self


def build_raw_percept_oracle(env, cap: int = DEFAULT_CAP) -> RawPerceptOracle:
    return RawPerceptOracle(env, cap)


class RewardReflector(FunctionOperator):
    def __init__(self, env, pl: PerceptLayout):
        self.pl = pl
        self.signs = reward_signs(env, pl)
        super().__init__(lambda v: self.signs * v, pl.dim, adjoint_fn=lambda v: self.signs * v)


def build_reward_reflector(env, cap: int = DEFAULT_CAP) -> RewardReflector:
    return RewardReflector(env, PerceptLayout(env, cap))


def _uniform_action_reflection(na: int, fiducial_only: bool):
    phi = np.full(na, 1 / math.sqrt(na))

    def fn(vec):
        v = np.asarray(vec, dtype=complex).reshape(na, -1).copy()
        if fiducial_only:
            v[:, 0] -= 2.0 * phi * (phi @ v[:, 0])
        else:
            v -= 2.0 * np.outer(phi, phi @ v)
        return v.reshape(-1)

    return fn


def build_init_reflector(env, form: str = "busy", oracle: RawPerceptOracle | None = None,
                         cap: int = DEFAULT_CAP) -> Operator:
    """Reflection about psi_init assembled from the raw-percept oracle.

    form="literal": ((1 - 2|phi><phi|) ⊗ 1) U†, the composition as written;
        it acts in the fiducial frame, so it must be followed by U.
    form="busy":    U ((1 - 2|phi><phi|) ⊗ 1) U†; equals 1 - 2|psi_init><psi_init|
        on the busy subspace span{U|a>|ε..ε>}.
    form="exact":   U (1 - 2|phi,ε..ε><phi,ε..ε|) U†; the same on the busy
        subspace and a true reflection everywhere, which keeps amplitude
        amplification inside the two-dimensional rotation plane.
    """
    U = oracle if oracle is not None else RawPerceptOracle(env, cap)
    na, dim = U.pl.na, U.pl.dim
    if form == "literal":
        R = _uniform_action_reflection(na, False)
        return FunctionOperator(lambda v: R(U.apply(v)), dim)
    if form == "busy":
        R = _uniform_action_reflection(na, False)
    elif form == "exact":
        R = _uniform_action_reflection(na, True)
    else:
        raise ValueError(f"unknown reflector form {form!r}")

    def fn(v):
        return U.apply(R(U.apply(v)))

    return FunctionOperator(fn, dim, adjoint_fn=fn)


def initial_state(env, oracle: RawPerceptOracle | None = None) -> StateVector:
    U = oracle if oracle is not None else RawPerceptOracle(env)
    pl = U.pl
    v = np.zeros((pl.na, pl.ds * pl.ds), dtype=complex)
    v[:, 0] = 1 / math.sqrt(pl.na)
    return StateVector(pl.layout, U.apply(v.reshape(-1)))


def target_state(env, oracle: RawPerceptOracle | None = None) -> tuple[StateVector, float]:
    """Normalized rewarded component of psi_init and its weight a = |<psi_init|psi_tar>|^2."""
    U = oracle if oracle is not None else RawPerceptOracle(env)
    init = initial_state(env, U).amplitudes
    signs = reward_signs(env, U.pl)
    good = np.where(signs < 0, init, 0)
    a = float(np.vdot(good, good).real)
    if a == 0:
        raise ValueError("no rewarded (action, percept) sequence has positive probability")
    return StateVector(U.pl.layout, good / math.sqrt(a)), a


def qaa(initial: StateVector, refl_init: Operator, refl_tar: Operator, iterations: int) -> StateVector:
    """(refl_init ∘ refl_tar)^iterations applied to ``initial``."""
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    v = initial.amplitudes
    for _ in range(iterations):
        v = refl_init.apply(refl_tar.apply(v))
    return StateVector(initial.layout, v, normalize=False)


def analytic_fidelity(a: float, iterations: int) -> float:
    """sin^2((2k+1) theta) with sin^2 theta = a."""
    theta = math.asin(math.sqrt(a))
    return math.sin((2 * iterations + 1) * theta) ** 2


def optimal_iterations(a: float) -> int:
    theta = math.asin(math.sqrt(a))
    return int(math.floor(math.pi / (4 * theta)))


def action_distribution(state: StateVector, env) -> dict[tuple[str, ...], float]:
    pl_names = [f"A{i + 1}" for i in range(env.m_max)]
    probs = state.probabilities(pl_names)
    out = {}
    for i, a in enumerate(itertools.product(env.actions.labels, repeat=env.m_max)):
        out[a] = float(probs[i])
    return out


def brute_force_action_distribution(env) -> dict[tuple[str, ...], float]:
    """P(a) = sum_s P'(s, a | R = 1) with P'(s, a) = P(s|a), by direct enumeration."""
    weights: dict = {}
    total = 0.0
    for a, s, p, r in env.joint_table():
        if r:
            weights[a] = weights.get(a, 0.0) + p
            total += p
    return {a: weights.get(a, 0.0) / total for a in itertools.product(env.actions.labels, repeat=env.m_max)}


def busy_basis(U: RawPerceptOracle) -> np.ndarray:
    """Columns U|a>|ε..ε> spanning the busy subspace."""
    pl = U.pl
    cols = []
    for ai in range(pl.na):
        v = np.zeros((pl.na, pl.ds * pl.ds), dtype=complex)
        v[ai, 0] = 1.0
        cols.append(U.apply(v.reshape(-1)))
    return np.stack(cols, axis=1)


__all__ = [
    "PerceptLayout", "RawPerceptOracle", "build_raw_percept_oracle", "RewardReflector",
    "build_reward_reflector", "build_init_reflector", "initial_state", "target_state", "qaa",
    "analytic_fidelity", "optimal_iterations", "action_distribution",
    "brute_force_action_distribution", "busy_basis", "purified_outputs", "reward_signs",
]
