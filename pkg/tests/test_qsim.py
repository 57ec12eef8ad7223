from __future__ import annotations

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrl.core import RngStream
from qrl.envs import bernoulli_reward_env, line_maze, make_maze_env, random_stochastic_env
from qrl.errors import DimensionCap, NoWinnerExists, UnknownRegister, ZeroNorm
from qrl.qsim.amplification import (
    PerceptLayout,
    action_distribution,
    analytic_fidelity,
    brute_force_action_distribution,
    build_init_reflector,
    build_raw_percept_oracle,
    build_reward_reflector,
    busy_basis,
    initial_state,
    optimal_iterations,
    purified_outputs,
    qaa,
    target_state,
)
from qrl.qsim.operators import DenseOperator, DiagonalOperator, PermutationOperator, operator_distance
from qrl.qsim.oracles import OracleSpec, build_oracle, dephasing_via_bitflip, tabulate
from qrl.qsim.search import (
    grover_iterations,
    grover_search,
    grover_state,
    grover_success_probability,
    max_reward_search,
    winner_probability,
)
from qrl.qsim.states import DensityOperator, Layout, StateVector, check_cap, measure, project, qubit, sample_counts

# sin^2((2j+1) asin(1/sqrt(N))) with j = floor((pi/4)/asin(1/sqrt(N))), evaluated independently
GROVER_ONE_WINNER = {4: 1.0, 16: 0.9613189697265625, 64: 0.9965856808, 256: 0.9999470421, 1024: 0.9994612447}


def _single(N, x):
    t = np.zeros(N, dtype=np.int8)
    t[x] = 1
    return t


# ------------------------------------------------------------ states


def _bell():
    L = Layout((qubit("A"), qubit("B")))
    return StateVector(L, np.array([1, 0, 0, 1]) / math.sqrt(2))


def test_bell_reduced_state_and_negativity():
    rho = _bell().density()
    assert np.allclose(rho.partial_trace(["A"]).matrix, np.eye(2) / 2)
    assert rho.negativity(["B"]) == pytest.approx(0.5)
    prod = StateVector.basis(rho.layout, ("0", "1")).density()
    assert prod.negativity(["B"]) == pytest.approx(0.0, abs=1e-15)


def test_dephase_and_coherence():
    rho = _bell().density()
    assert rho.register_coherence("A") == pytest.approx(0.5)
    d = rho.dephase("A")
    assert d.register_coherence("A") == 0.0
    assert d.negativity(["B"]) == pytest.approx(0.0, abs=1e-15)
    assert rho.trace_distance(d) == pytest.approx(0.5)


def test_project_and_measure():
    s = _bell()
    p, post = project(s, "A", "1")
    assert p == pytest.approx(0.5)
    assert np.allclose(post.amplitudes, [0, 0, 0, 1])
    with pytest.raises(ZeroNorm):
        project(post, "A", "0")
    label, post = measure(s, "B", RngStream(0, 0))
    assert post.probabilities("A")[int(label)] == pytest.approx(1.0)


def test_unknown_register_and_cap():
    with pytest.raises(UnknownRegister):
        _bell().probabilities("Z")
    with pytest.raises(DimensionCap):
        check_cap(2**30)


def test_density_validation():
    L = Layout((qubit("A"),))
    with pytest.raises(ValueError):
        DensityOperator(L, np.array([[1, 0], [0, 1]]))
    with pytest.raises(ValueError):
        DensityOperator(L, np.array([[1.5, 0], [0, -0.5]]))


def test_state_dump_roundtrip():
    s = StateVector.random(Layout((qubit("A"), qubit("B"))), RngStream(1, 0))
    buf = io.BytesIO()
    s.dump(buf)
    buf.seek(0)
    assert np.array_equal(StateVector.load(buf).amplitudes, s.amplitudes)


def test_sample_counts_total():
    c = sample_counts(np.array([0.25, 0.75]), 1000, RngStream(0, 0))
    assert c.sum() == 1000


# --------------------------------------------------------- operators


def test_operator_composition_order():
    a = DenseOperator(np.array([[0, 1], [1, 0]], dtype=complex))
    b = DiagonalOperator(np.array([1, -1]))
    v = np.array([1.0, 0.0])
    assert np.allclose((a @ b).apply(v), a.apply(b.apply(v)))
    assert (a @ b).is_unitary()


def test_permutation_operator_matrix():
    p = PermutationOperator(np.array([2, 0, 1]))
    v = np.array([1.0, 2.0, 3.0])
    assert np.allclose(p.matrix() @ v, p.apply(v))
    assert np.allclose(p.adjoint().apply(p.apply(v)), v)


# ------------------------------------------------------------ oracles


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_oracle_defining_equations(m, seed):
    N = 2**m
    table = (RngStream(seed, 0).uniforms(N) < 0.5).astype(np.int8)
    ph = build_oracle(OracleSpec("phaseflip", table, 2, m)).unitary.matrix()
    bf = build_oracle(OracleSpec("bitflip", table, 2, m)).unitary.matrix()
    cp = build_oracle(OracleSpec("copy", table, 2, m)).isometry.matrix()
    assert np.allclose(ph, np.diag(1 - 2 * table))
    for x in range(N):
        for y in (0, 1):
            assert bf[2 * x + (y ^ table[x]), 2 * x + y] == 1
        assert cp[2 * x + table[x], x] == 1
    assert np.allclose(cp.conj().T @ cp, np.eye(N))
    assert np.allclose(bf @ bf, np.eye(2 * N))


def test_dephasing_oracle_two_routes():
    table = np.array([0, 1, 1, 0, 0, 0, 1, 0], dtype=np.int8)
    de = build_oracle(OracleSpec("dephasing", table, 2, 3))
    rng = RngStream(3, 0)
    for i in range(20):
        v = rng.child(i).normal(16)
        psi = v[:8] + 1j * v[8:]
        psi /= np.linalg.norm(psi)
        rho = np.outer(psi, psi.conj())
        out = de.apply_density(rho)
        assert np.allclose(out, dephasing_via_bitflip(table, rho), atol=1e-14)
        assert abs(out[0, 1]) == 0.0


def test_oracle_spec_validation():
    with pytest.raises(ValueError):
        OracleSpec("phaseflip", np.array([0, 1, 2, 0]), 2, 2)
    with pytest.raises(ValueError):
        OracleSpec("phaseflip", np.array([0, 1]), 2, 2)
    with pytest.raises(ValueError):
        OracleSpec("teleport", np.array([0, 1]), 2, 1)


def test_tabulate_order_first_action_most_significant():
    assert tabulate(lambda s: s == (1, 0), 2, 2).tolist() == [0, 0, 1, 0]


# ------------------------------------------------------------- Grover


@pytest.mark.parametrize("N", sorted(GROVER_ONE_WINNER))
def test_grover_single_winner_exact(N):
    table = _single(N, N // 3)
    oracle = build_oracle(OracleSpec("phaseflip", table, N, 1))
    j = grover_iterations(N, 1)
    p = winner_probability(grover_state(oracle, j), table)
    assert p == pytest.approx(GROVER_ONE_WINNER[N], abs=1e-9)
    assert p == pytest.approx(grover_success_probability(N, 1), abs=1e-12)


def test_grover_iteration_counts():
    assert [grover_iterations(N, 1) for N in (4, 16, 64, 256, 1024)] == [1, 3, 6, 12, 25]


def test_grover_sampled_success_rate():
    # the exact value is checked above; here sampling agrees within 4 sigma of 1e5 draws
    N = 16
    table = _single(N, 5)
    oracle = build_oracle(OracleSpec("phaseflip", table, N, 1))
    probs = np.abs(grover_state(oracle, 3)) ** 2
    draws = 100_000
    hits = sample_counts(probs, draws, RngStream(11, 0))[5] / draws
    p = GROVER_ONE_WINNER[16]
    assert abs(hits - p) < 4 * math.sqrt(p * (1 - p) / draws)


def test_grover_search_known_and_unknown_counts():
    N = 256
    table = _single(N, 77)
    oracle = build_oracle(OracleSpec("phaseflip", table, N, 1))
    r = grover_search(oracle, N, 1, RngStream(0, 0))
    assert r.found == 77 and r.succeeded
    unknown = [grover_search(oracle, N, None, RngStream(s, 1)).queries for s in range(50)]
    # expected queries stay O(sqrt N), far below N
    assert np.mean(unknown) < N / 2


def test_grover_search_no_winner():
    N = 64
    oracle = build_oracle(OracleSpec("phaseflip", np.zeros(N, dtype=np.int8), N, 1))
    with pytest.raises(NoWinnerExists):
        grover_search(oracle, N, None, RngStream(0, 0), max_queries=200)
    with pytest.raises(NoWinnerExists):
        grover_search(oracle, N, 0, RngStream(0, 0))


def test_max_reward_binary_search():
    rewards = np.array([0, 3, 1, 5, 2, 0, 4, 1] * 8)
    N = rewards.size

    def family(theta):
        return build_oracle(OracleSpec("phaseflip", (rewards >= theta).astype(np.int8), N, 1))

    r = max_reward_search(family, 7, RngStream(2, 0), max_queries_per_probe=400)
    assert r.value == 5
    assert rewards[r.witness] == 5
    assert r.probes <= math.ceil(math.log2(8))


# ------------------------------------------------ amplitude amplification


def test_raw_percept_oracle_on_fiducial_inputs():
    env = random_stochastic_env(2, 2, 2, RngStream(4, 0))
    U = build_raw_percept_oracle(env)
    psi = purified_outputs(env, U.pl)
    B = busy_basis(U)
    for ai in range(U.pl.na):
        assert np.allclose(B[:, ai].reshape(U.pl.na, -1)[ai], psi[ai])
    M = U.matrix()
    assert np.allclose(M, M.conj().T)
    assert np.allclose(M @ M, np.eye(U.pl.dim))


def test_bernoulli_target_distribution():
    env = bernoulli_reward_env([0.8, 0.2])
    tar, a = target_state(env)
    assert a == pytest.approx(0.5)
    got = action_distribution(tar, env)
    want = brute_force_action_distribution(env)
    assert want == pytest.approx({("a0",): 0.8, ("a1",): 0.2}, abs=1e-12)
    for k in want:
        assert abs(got[k] - want[k]) <= 1e-12


def test_reflector_forms_agree_on_busy_subspace():
    env = random_stochastic_env(2, 2, 2, RngStream(5, 0))
    U = build_raw_percept_oracle(env)
    init = initial_state(env, U).amplitudes
    ideal = np.eye(U.pl.dim) - 2 * np.outer(init, init.conj())
    B = busy_basis(U)
    busy = build_init_reflector(env, "busy", U)
    exact = build_init_reflector(env, "exact", U)
    literal = build_init_reflector(env, "literal", U)
    for col in B.T:
        assert np.allclose(busy.apply(col), ideal @ col, atol=1e-12)
        assert np.allclose(exact.apply(col), ideal @ col, atol=1e-12)
        # the composition as written needs U in front to land in the same frame
        assert np.allclose(U.apply(literal.apply(col)), ideal @ col, atol=1e-12)
    # off the busy subspace only the exact form stays an ideal reflection
    assert np.allclose(exact.matrix(), ideal, atol=1e-12)


def test_qaa_fidelity_follows_rotation():
    env = random_stochastic_env(2, 2, 3, RngStream(20240, 6).child(0), 0.02)
    U = build_raw_percept_oracle(env)
    init = initial_state(env, U)
    tar, a = target_state(env, U)
    R_tar = build_reward_reflector(env)
    R_init = build_init_reflector(env, "exact", U)
    k_opt = optimal_iterations(a)
    assert k_opt >= 3
    for k in range(2 * k_opt + 1):
        f = abs(np.vdot(tar.amplitudes, qaa(init, R_init, R_tar, k).amplitudes)) ** 2
        assert f == pytest.approx(analytic_fidelity(a, k), abs=1e-9)


def test_qaa_on_deterministic_maze_matches_grover():
    from qrl.envs import stochastic_from_deterministic

    env = stochastic_from_deterministic(make_maze_env(line_maze(3)))
    U = build_raw_percept_oracle(env)
    init = initial_state(env, U)
    tar, a = target_state(env, U)
    assert a == pytest.approx(1 / 8)
    k = optimal_iterations(a)
    out = qaa(init, build_init_reflector(env, "exact", U), build_reward_reflector(env), k)
    dist = action_distribution(out, env)
    assert dist[("a1", "a0", "a1")] == pytest.approx(grover_success_probability(8, 1), abs=1e-12)


def test_percept_layout_dimensions():
    pl = PerceptLayout(random_stochastic_env(2, 2, 2, RngStream(0, 0)))
    assert (pl.na, pl.ds, pl.dim) == (4, 9, 4 * 81)


def test_operator_distance_spectral():
    assert operator_distance(np.eye(2), -np.eye(2)) == pytest.approx(2.0)
