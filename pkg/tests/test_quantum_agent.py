from __future__ import annotations

import math

import numpy as np
import pytest

from qrl.classical import ps_lite_agent, run_games, rur_agent
from qrl.core import RngStream
from qrl.envs import line_maze, make_controllable, make_maze_env, winning_path
from qrl.errors import BadHyperparameter, ExtensionNotSelfInverse, LayoutMismatch, NoWinnerExists, NotTrivialPercept
from qrl.qsim.search import grover_success_probability
from qrl.qsim.states import StateVector
from qrl.quantum_agent import (
    AQConfig,
    HijackProtocol,
    TrivialPerceptEnv,
    action_marginal_purity,
    aq_construct,
    build_hermitian_extension,
    check_classical_limit,
    copy_oracle_matrix,
    example1_kickback,
    hijack_check,
    hijack_scavenge_oracularize,
    oracle_budget,
    trivial_percept_env,
)


def _maze(m):
    return make_maze_env(line_maze(m))


# --------------------------------------------------------------- A^q


def test_oracle_budget():
    assert oracle_budget(1, 2, 4) == 4
    assert oracle_budget(3, 2, 5) == 3 * 6
    assert oracle_budget(2, 3, 2) == 6


def test_copies_rule():
    assert AQConfig(k=2).copies(2, 4) == 1 + 2 * 4
    assert AQConfig(copies_rule=3).copies(2, 4) == 3
    assert AQConfig(k=3, copies_rule=lambda k, n, m: k + n + m).copies(2, 4) == 9
    with pytest.raises(BadHyperparameter):
        AQConfig(k=0)


def test_aq_construct_bills_full_budget_and_harvest():
    env = make_controllable(_maze(4))
    r = aq_construct(rur_agent(env), env, AQConfig(k=1), RngStream(0, 0))
    assert r.succeeded
    assert r.found == tuple(env.actions.labels[i] for i in winning_path(env.env.spec))
    # k ceil(sqrt N) oracle games of M steps each, then one harvesting epoch
    assert r.cost.oracle_games == 4
    assert r.cost.interaction_steps == 4 * 4 + 4 == env.billed_steps
    assert r.h_win.last_percept.reward == 1
    assert r.postselection.billed_steps == 0


def test_aq_agent_replays_winner():
    env = make_controllable(_maze(5))
    r = aq_construct(rur_agent(env), env, AQConfig(k=2), RngStream(1, 0))
    play = run_games(r.agent, env.env, 20, RngStream(1, 1), first=r.h_win.last_percept)
    assert play.rewards == 20


def test_aq_failure_rate_matches_single_grover_round():
    # N = 16, k = 1: budget 4 games is one round of 3 iterations plus a check
    p_fail = 1 - grover_success_probability(16, 1)
    trials = 400
    fails = 0
    for s in range(trials):
        env = make_controllable(_maze(4))
        agent = rur_agent(env)
        r = aq_construct(agent, env, AQConfig(k=1), RngStream(s, 0))
        if not r.succeeded:
            fails += 1
            assert r.agent is agent
            assert env.billed_steps == r.cost.interaction_steps == 16
    assert abs(fails / trials - p_fail) < 4 * math.sqrt(p_fail * (1 - p_fail) / trials)


def test_aq_no_winner_raises_with_agent():
    env = make_controllable(_maze(3))
    env.env._table = np.zeros(8, dtype=np.int8)
    agent = rur_agent(env)
    with pytest.raises(NoWinnerExists) as info:
        aq_construct(agent, env, AQConfig(), RngStream(0, 0))
    assert info.value.agent is agent


def test_aq_ps_lite_postselection_leaves_original_untouched():
    env = make_controllable(_maze(3))
    agent = ps_lite_agent(env)
    before = agent.snapshot()
    r = aq_construct(agent, env, AQConfig(k=1, copies_rule=2), RngStream(4, 0))
    assert r.succeeded and r.agent.inner is not agent
    assert agent.snapshot() == before


# --------------------------------------------------- Hermitian extension


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_extension_self_inverse_and_classical_limit(m):
    env = _maze(m)
    ext = build_hermitian_extension(env)
    ext.check_self_inverse()
    check_classical_limit(ext, env)
    for u in ext.full_permutations():
        assert np.array_equal(u[u], np.arange(u.size))


def test_classical_limit_detects_wrong_reward():
    env = _maze(3)
    ext = build_hermitian_extension(env).mutated_reward(0)
    with pytest.raises(LayoutMismatch):
        check_classical_limit(ext, env)


def test_reward_flip_on_phi_minus_gives_sign():
    ext = build_hermitian_extension(_maze(2))
    flip = ext.full_permutations()[-1]
    d = ext.slot_dim
    rest = d**2 * 2
    for code in range(4):
        vec = np.zeros(4 * rest)
        vec[code * rest] = 1 / math.sqrt(2)
        vec[code * rest + 1] = -1 / math.sqrt(2)
        out = vec[np.argsort(flip)]
        assert np.allclose(out, (-1) ** ext.reward[code] * vec)


def test_mutated_cycle_not_self_inverse():
    ext = build_hermitian_extension(_maze(2)).mutated_cycle()
    with pytest.raises(ExtensionNotSelfInverse):
        ext.check_self_inverse()
    with pytest.raises(ExtensionNotSelfInverse):
        hijack_scavenge_oracularize(ext, np.ones(4) / 2)


# ------------------------------------------------------ hijack protocol


def test_hijack_uniform_input_m3():
    env = _maze(3)
    ext = build_hermitian_extension(env)
    state, cost = hijack_scavenge_oracularize(ext, np.ones(8) / math.sqrt(8))
    proto = HijackProtocol(ext)
    amps = state.amplitudes.reshape(8, -1) @ proto.fiducial_output()
    assert np.allclose(amps, (-1.0) ** env.reward_table() / math.sqrt(8), atol=1e-12)
    assert action_marginal_purity(state, 3) == pytest.approx(1.0, abs=1e-12)
    assert (cost.oracle_games, cost.interaction_steps) == (2, 16)
    assert (cost.hijack_ops, cost.scavenge_ops) == (4, 6)


def test_first_game_alone_leaves_actions_mixed():
    ext = build_hermitian_extension(_maze(3))
    proto = HijackProtocol(ext)
    run = proto.run(np.ones(8) / math.sqrt(8), keep_intermediate=True)
    mid = StateVector(proto.layout, run.after_first_game)
    # percepts record the action prefix, so the action marginal is not pure
    assert action_marginal_purity(mid, 3) < 0.5


@pytest.mark.parametrize("m", [1, 2, 3])
def test_hijack_check_passes_honest(m):
    env = _maze(m)
    out = hijack_check(build_hermitian_extension(env), env.reward_table(), RngStream(m, 0), random_inputs=5)
    assert out["pass"], out
    assert out["cost"]["interaction_steps"] == 5 * m + 1


def test_hijack_check_fails_mutants():
    env = _maze(3)
    ext = build_hermitian_extension(env)
    table = env.reward_table()
    assert not hijack_check(ext.mutated_reward(2), table, RngStream(0, 0), random_inputs=2)["pass"]
    bad = hijack_check(ext.mutated_cycle(), table, RngStream(0, 0), random_inputs=2)
    assert not bad["pass"] and "self-inverse" in bad["error"]


def test_hijack_input_size_checked():
    with pytest.raises(LayoutMismatch):
        hijack_scavenge_oracularize(build_hermitian_extension(_maze(2)), np.ones(3))


# ------------------------------------------------------ single step


def test_kickback_with_hijack_is_phase_oracle():
    env = trivial_percept_env([0, 1])
    out = example1_kickback(env, np.ones(2) / math.sqrt(2))
    # (|a0> - |a1>)/sqrt2 ⊗ |->
    assert np.allclose(out.amplitudes, [0.5, -0.5, -0.5, 0.5], atol=1e-15)


@pytest.mark.parametrize("reward", [[0, 1], [1, 1], [0, 0, 1], [1, 0, 1, 1]])
def test_kickback_without_hijack_is_copy_oracle(reward):
    env = trivial_percept_env(reward)
    n = len(reward)
    rng = RngStream(9, 0)
    for i in range(5):
        v = rng.child(i).normal(2 * n)
        amps = v[:n] + 1j * v[n:]
        amps /= np.linalg.norm(amps)
        out = example1_kickback(env, amps, hijack=False).amplitudes
        assert np.linalg.norm(out - copy_oracle_matrix(reward) @ amps) <= 1e-12


def test_kickback_rejects_multistep_env():
    env = TrivialPerceptEnv(trivial_percept_env([0, 1]).actions, np.array([0, 1]), m_max=2)
    with pytest.raises(NotTrivialPercept):
        example1_kickback(env, np.ones(2) / math.sqrt(2))
