from __future__ import annotations

import json
import math

import numpy as np
import pytest

from qrl.core import History, Percept, RngStream
from qrl.errors import LayoutMismatch, ScenarioTooLarge, UnknownRegister
from qrl.qsim.states import Layout, StateVector, qubit
from qrl.testers import (
    BUILTIN,
    IFACE,
    TesterPolicy,
    _project,
    apply_tester,
    bookkeeping_simulation,
    classicality_check,
    classicalize,
    copy_then_trace,
    dephase,
    evolve,
    exact_record_distribution,
    interaction_is_classical,
    lemma1,
    lemma2,
    lemma3,
    lemma4,
    lemma_check,
    load_scenario,
    quantum_history,
    record_from_history,
    sample_records,
    total_variation,
)

SCENARIOS = sorted(BUILTIN)


def _random_state(seed):
    L = Layout((qubit("A"), ("C", IFACE), qubit("E")))
    return StateVector.random(L, RngStream(seed, 0)).density()


def test_policy_kinds():
    assert not TesterPolicy("none").tests(0)
    assert TesterPolicy("classical").tests(5)
    sp = TesterPolicy("sporadic", t_switch=2)
    assert [sp.tests(t) for t in range(4)] == [False, False, True, True]
    with pytest.raises(ValueError):
        TesterPolicy("sometimes")


def test_copy_then_trace_equals_dephasing():
    for seed in range(5):
        rho = _random_state(seed)
        assert np.allclose(copy_then_trace(rho).matrix, dephase(rho).matrix, atol=1e-14)


def test_apply_tester_outcome_frequencies_and_mixture():
    rho = _random_state(3)
    probs = rho.probabilities("C")
    draws = 4000
    rng = RngStream(1, 0)
    counts = np.zeros(4)
    for i in range(draws):
        post, (step, label) = apply_tester(rho, TesterPolicy(), 0, rng.child(i))
        counts[IFACE.index(label)] += 1
        assert post.probabilities("C")[IFACE.index(label)] == pytest.approx(1.0)
    assert np.all(np.abs(counts - draws * probs) < 4 * np.sqrt(draws * probs * (1 - probs)) + 1)
    # averaged over outcomes the post-states reproduce the dephased state
    mix = sum(p * _project(rho, "C", i).matrix for i, p in enumerate(probs) if p > 0)
    assert np.allclose(mix, dephase(rho).matrix, atol=1e-14)


def test_apply_tester_untested_and_unknown_register():
    rho = _random_state(0)
    post, entry = apply_tester(rho, TesterPolicy("none"), 0, RngStream(0, 0))
    assert entry is None and post is rho
    with pytest.raises(UnknownRegister):
        apply_tester(rho, TesterPolicy(), 0, RngStream(0, 0), register="X")


def test_record_from_history_sporadic():
    h = History.from_pairs(["a0", "a1"], [Percept("s0", 0), Percept("s1", 1)])
    rec = record_from_history(h, TesterPolicy("sporadic", t_switch=2))
    assert rec.untested == 2
    assert rec.labels() == ("s0/0", "a1", "s1/1")


def test_classicality_check_layout_and_witnesses():
    rho = _random_state(2)
    rep = classicality_check(rho)
    assert not rep.is_classical
    d = dephase(rho)
    # a dephased pure state can remain entangled across A|E within a label block
    assert d.register_coherence("C") == 0.0
    with pytest.raises(LayoutMismatch):
        classicality_check(rho, ("A", "C", "Z"))


@pytest.mark.parametrize("name", SCENARIOS)
def test_lemma1_iff(name):
    rep = lemma1(load_scenario(name))
    assert rep.passed
    classical, _ = interaction_is_classical(load_scenario(name))
    assert rep.details["classical"] == classical
    if classical:
        assert rep.value <= 1e-10
    else:
        assert rep.value > 0.1


def test_superposition_scenario_is_not_classical():
    classical, reports = interaction_is_classical(load_scenario("superposition"))
    assert not classical
    assert max(r.max_interface_coherence for r in reports) > 0.1


@pytest.mark.parametrize("name", ["classical", "internal-quantum"])
def test_lemma2_bookkeeping(name):
    rep = lemma2(load_scenario(name))
    assert rep.passed and rep.value <= 1e-10


def test_lemma2_premise_fails_for_superposition():
    rep = lemma2(load_scenario("superposition"))
    assert not rep.passed
    assert rep.details["reason"] == "interaction is not classical"


@pytest.mark.parametrize("name", SCENARIOS)
def test_lemma3_classicalized_history(name):
    rep = lemma3(load_scenario(name))
    assert rep.passed and rep.details["classicalized_is_classical"]


def test_classical_scenario_record_weights_by_hand():
    # start memory m0, percept s0, env e0.  Agent: P(a0) = 0.3 when (percept is s0) xor memory, else 0.75,
    # memory <- percept.  Env: P(s0) = 0.9 when action index equals e, else 0.4; e <- action index.
    dist = exact_record_distribution(load_scenario("classical"))
    assert dist[("a0", "s0", "a0", "s0")] == pytest.approx(0.3 * 0.9 * 0.3 * 0.9, abs=1e-14)
    assert dist[("a1", "s1", "a0", "s1")] == pytest.approx(0.7 * 0.6 * 0.75 * 0.6, abs=1e-14)
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-14)


def test_superposition_records_uniform():
    # Hadamard on the interface then a permutation: each of the four consistent records has weight 1/4
    dist = exact_record_distribution(load_scenario("superposition"))
    assert set(dist) == {("a0", "s0", "a0", "s0"), ("a0", "s0", "a1", "s1"),
                         ("a1", "s1", "a0", "s0"), ("a1", "s1", "a1", "s1")}
    assert all(v == pytest.approx(0.25, abs=1e-14) for v in dist.values())


def test_sampled_records_match_exact():
    sc = load_scenario("internal-quantum")
    exact = exact_record_distribution(sc)
    recs = sample_records(sc, TesterPolicy(), 3000, RngStream(8, 0))
    emp = quantum_history(recs)
    # TV of 16-outcome empirical distribution at n=3000 is typically ~0.03
    assert total_variation(emp, exact) < 0.07


def test_sporadic_policy_marginalizes_untested_steps():
    sc = load_scenario("classical")
    full = exact_record_distribution(sc)
    late = exact_record_distribution(sc, TesterPolicy("sporadic", t_switch=2))
    marg: dict = {}
    for rec, w in full.items():
        marg[rec[2:]] = marg.get(rec[2:], 0.0) + w
    assert total_variation(quantum_history(late), marg) < 1e-12


def test_bookkeeping_states_are_classical_mixtures():
    dist, states = bookkeeping_simulation(load_scenario("classical"))
    assert sum(dist.values()) == pytest.approx(1.0)
    assert all(classicality_check(s).is_classical for s in states)


def test_classicalize_is_idempotent_on_records():
    sc = classicalize(load_scenario("superposition"))
    assert interaction_is_classical(sc)[0]
    assert total_variation(exact_record_distribution(sc),
                           exact_record_distribution(classicalize(sc))) < 1e-12


def test_scenario_size_cap():
    sc = load_scenario("classical")
    with pytest.raises(ScenarioTooLarge):
        type(sc)("big", sc.layout, sc.initial, sc.maps + sc.maps[:1])


def test_explicit_scenario_from_json(tmp_path):
    # agent swaps s0 -> a0 (permutation on C), env swaps a0 -> s1 and flips E
    swap_c = np.eye(4)
    swap_c[[0, 2]] = swap_c[[2, 0]]
    agent = np.kron(np.eye(2), swap_c)
    env_p = np.zeros((8, 8))
    for c in range(4):
        for e in range(2):
            out = (1, 1 - e) if c == 2 else ((2, 1 - e) if c == 1 else (c, e))
            env_p[out[0] * 2 + out[1], c * 2 + e] = 1
    to_pairs = lambda m: [[[float(x), 0.0] for x in row] for row in m]  # noqa: E731
    spec = {"name": "swap", "maps": [{"who": "agent", "kraus": [to_pairs(agent)]},
                                     {"who": "env", "kraus": [to_pairs(env_p)]}]}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(spec), encoding="utf-8")
    sc = load_scenario(path)
    assert exact_record_distribution(sc) == {("a0", "s1"): pytest.approx(1.0)}
    assert lemma1(sc).passed and lemma2(sc).passed


def test_evolve_traces_preserved():
    for name in SCENARIOS:
        for s in evolve(load_scenario(name), TesterPolicy()):
            assert np.trace(s.matrix).real == pytest.approx(1.0, abs=1e-12)


def test_lemma4_small():
    rep = lemma4(m=4, trials=300, seed=1)
    assert rep.passed
    d = rep.details
    # guessing among N = 16 with replacement takes N candidates on average
    assert abs(d["mean_candidates_dephased"] - 16) < 4 * 16 / math.sqrt(300)
    assert d["mean_candidates_coherent"] < 2
    assert d["ks_pvalue_coherent_vs_classical"] < 1e-6


def test_lemma_check_dispatch_and_json():
    out = lemma_check(1, "superposition").to_json()
    assert out["lemma"] == 1 and out["pass"] is True
    with pytest.raises(ScenarioTooLarge):
        lemma_check(4, m=13, trials=1)
