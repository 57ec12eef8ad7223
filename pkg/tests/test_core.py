from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrl.core import (
    ACTION,
    EMPTY,
    EMPTY_PERCEPT,
    PERCEPT,
    Entry,
    FiniteSpace,
    History,
    MeritConfig,
    Percept,
    RngStream,
    action_space,
    concat_histories,
    rate_merit,
    repeat_history,
)
from qrl.errors import AlternationViolation, EmptyWindow


def _history(pairs):
    actions = [a for a, _ in pairs]
    percepts = [Percept(s, r) for _, (s, r) in pairs]
    return History.from_pairs(actions, percepts)


def test_space_index_roundtrip_and_empty_first():
    s = FiniteSpace(("x", "y"), contains_empty=True)
    assert s.labels == (EMPTY, "x", "y")
    assert [s.index(lab) for lab in s] == [0, 1, 2]
    assert s.without_empty().labels == ("x", "y")
    with pytest.raises(ValueError):
        FiniteSpace(("x", "x"))
    with pytest.raises(ValueError):
        FiniteSpace((EMPTY, "x"))


def test_history_opens_with_empty_percept():
    h = History([Entry(ACTION, "a0")])
    assert h.entries[0] == Entry(PERCEPT, EMPTY, 0)
    assert h.steps == 1


def test_alternation_enforced():
    with pytest.raises(AlternationViolation):
        History([Entry(PERCEPT, EMPTY, 0), Entry(ACTION, "a0"), Entry(ACTION, "a1")])


def test_rate_counts_rewarded_entries_over_window():
    # ε a0 s0 a1 s1* a0 s0*  -> 2 rewarded of 6 entries
    h = _history([("a0", ("s0", 0)), ("a1", ("s1", 1)), ("a0", ("s0", 1))])
    assert rate_merit(h) == pytest.approx(2 / 6)
    assert rate_merit(h, MeritConfig(window=(3, 5))) == pytest.approx(1 / 2)
    with pytest.raises(ValueError):
        rate_merit(h, MeritConfig(window=(1, 99)))


def test_rate_empty_window():
    with pytest.raises(EmptyWindow):
        rate_merit(History())


def test_concat_and_repeat():
    h = _history([("a0", ("s0", 0)), ("a1", ("s1", 1))])
    twice = repeat_history(h, 2)
    assert twice == concat_histories(h, h)
    assert len(twice) == 2 * len(h) - 1
    assert concat_histories(h, History()) == h
    open_end = History([Entry(PERCEPT, EMPTY, 0), Entry(ACTION, "a0")])
    with pytest.raises(AlternationViolation):
        concat_histories(open_end, h)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["a0", "a1"]), st.sampled_from(["s0", "s1"]), st.integers(0, 1)),
                min_size=0, max_size=20))
def test_jsonl_roundtrip(rows):
    h = _history([(a, (s, r)) for a, s, r in rows])
    assert History.from_jsonl(h.to_jsonl()) == h


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=30))
def test_rate_is_fraction_of_rewarded_entries(rewards):
    h = _history([("a0", ("s", r)) for r in rewards])
    assert rate_merit(h) == pytest.approx(sum(rewards) / (2 * len(rewards)))


def test_rng_streams_reproducible_and_independent():
    a = RngStream(7, 3).uniforms(10)
    b = RngStream(7, 3).uniforms(10)
    c = RngStream(7, 4).uniforms(10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert RngStream(7, 3).algorithm_id == "philox4x64-10"


def test_rng_scalar_and_block_reads_agree_across_buffer_boundary():
    r1, r2 = RngStream(1, 0), RngStream(1, 0)
    scalars = [r1.random() for _ in range(2500)]
    block = np.concatenate([r2.uniforms(1000), r2.uniforms(1500)])
    assert np.array_equal(np.array(scalars), block)


def test_rng_choice_frequencies():
    r = RngStream(5, 0)
    probs = np.array([0.1, 0.6, 0.3])
    counts = np.bincount([r.choice(probs) for _ in range(20000)], minlength=3)
    # 4 sigma band on each binomial count
    sigma = np.sqrt(20000 * probs * (1 - probs))
    assert np.all(np.abs(counts - 20000 * probs) < 4 * sigma)


def test_rng_child_streams_differ():
    r = RngStream(9, 0)
    assert r.child(1).random() != r.child(2).random()
    assert r.child(1).random() == RngStream(9, (0, 1)).random()


def test_action_space_and_empty_percept():
    assert action_space(3).labels == ("a0", "a1", "a2")
    assert EMPTY_PERCEPT == Percept(EMPTY, 0)
