"""Grover search over action sequences and threshold binary search for maximal reward."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import RngStream
from ..errors import NoWinnerExists
from .oracles import QuantumChannel

GROWTH = 6 / 5


def grover_iterations(num_items: int, num_winners: int) -> int:
    """floor((pi/4) / asin(sqrt(W/N)))."""
    if not 0 < num_winners <= num_items:
        raise ValueError("need 0 < W <= N")
    return int(math.floor((math.pi / 4) / math.asin(math.sqrt(num_winners / num_items))))


def grover_success_probability(num_items: int, num_winners: int, iterations: int | None = None) -> float:
    j = grover_iterations(num_items, num_winners) if iterations is None else iterations
    theta = math.asin(math.sqrt(num_winners / num_items))
    return math.sin((2 * j + 1) * theta) ** 2


def diffusion(vec: np.ndarray) -> np.ndarray:
    """2|s><s| - 1 about the uniform state."""
    return 2.0 * vec.mean() - vec


def grover_state(oracle: QuantumChannel, iterations: int) -> np.ndarray:
    """Amplitudes after ``iterations`` rounds of diffusion ∘ oracle on the uniform state."""
    N = oracle.dim_in
    vec = np.full(N, 1 / math.sqrt(N), dtype=complex)
    for _ in range(iterations):
        vec = diffusion(oracle.apply(vec))
    return vec


def winner_probability(vec: np.ndarray, table: np.ndarray) -> float:
    return float(np.sum(np.abs(vec[table.astype(bool)]) ** 2))


@dataclass
class SearchResult:
    found: int | None
    queries: int
    succeeded: bool
    attempts: int = 0


def grover_search(oracle: QuantumChannel, num_items: int, num_winners: int | None, rng: RngStream,
                  max_queries: int | None = None, verify: Callable[[int], bool] | None = None,
                  apply_oracle: Callable | None = None) -> SearchResult:
    """Search for a marked item; every oracle application and every verification is a query.

    Known W: repeat (j iterations, measure, verify) until success or the query
    budget is spent.  Unknown W: randomized iteration counts drawn below an
    exponentially growing cutoff (factor 6/5).  ``apply_oracle(vec, rng)``
    may replace the oracle's own action, e.g. by a noisy extension.
    """
    if oracle.dim_in != num_items:
        raise ValueError("oracle dimension does not match num_items")
    table = oracle.table
    if verify is None:
        def verify(x):
            return bool(table[x])
    if apply_oracle is None:
        def apply_oracle(vec, _rng):
            return oracle.apply(vec)
    if max_queries is None:
        max_queries = 64 * (int(math.isqrt(num_items)) + 1)
    queries = attempts = 0
    cutoff = 1.0
    while True:
        if num_winners is not None:
            if num_winners == 0:
                raise NoWinnerExists("no marked item exists")
            j = grover_iterations(num_items, num_winners)
        else:
            j = rng.randbelow(max(1, int(cutoff)))
            cutoff = min(cutoff * GROWTH, math.sqrt(num_items))
        if queries + j + 1 > max_queries:
            raise NoWinnerExists(f"no verified marked item within {max_queries} queries")
        vec = np.full(num_items, 1 / math.sqrt(num_items), dtype=complex)
        for _ in range(j):
            vec = diffusion(apply_oracle(vec, rng))
        probs = np.abs(vec) ** 2
        x = rng.choice(probs)
        queries += j + 1
        attempts += 1
        if verify(x):
            return SearchResult(int(x), queries, True, attempts)


@dataclass
class MaxRewardResult:
    value: int
    witness: int | None
    probes: int
    queries: int
    trace: list


def max_reward_search(threshold_family: Callable[[int], QuantumChannel], reward_bound: int, rng: RngStream,
                      max_queries_per_probe: int | None = None) -> MaxRewardResult:
    """Largest θ in [0, bound] whose threshold oracle has a verified witness.

    ``threshold_family(θ)`` marks sequences with cumulative reward ≥ θ.  Each
    probe is one unknown-count Grover search; at most ceil(log2(bound + 1))
    probes are made.  θ = 0 is trivially satisfied and reported without a
    witness when no positive threshold is reachable.
    """
    lo, hi = 0, reward_bound
    witness = None
    probes = queries = 0
    trace = []
    while lo < hi:
        mid = (lo + hi + 1) // 2
        oracle = threshold_family(mid)
        probes += 1
        try:
            r = grover_search(oracle, oracle.dim_in, None, rng, max_queries_per_probe)
            queries += r.queries
            lo, witness = mid, r.found
            trace.append((mid, True))
        except NoWinnerExists:
            hi = mid - 1
            trace.append((mid, False))
    return MaxRewardResult(lo, witness, probes, queries, trace)


__all__ = [
    "grover_iterations", "grover_success_probability", "grover_state", "winner_probability",
    "grover_search", "SearchResult", "max_reward_search", "MaxRewardResult", "diffusion",
]
