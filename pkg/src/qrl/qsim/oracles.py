"""The four oracle flavors for a boolean reward function over action sequences."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .operators import DiagonalOperator, IndexIsometry, Operator, PermutationOperator
from .states import DEFAULT_CAP, check_cap

KINDS = ("bitflip", "phaseflip", "copy", "dephasing")


def tabulate(R: Callable, n: int, m: int) -> np.ndarray:
    """Truth table of R over index sequences, first action most significant."""
    return np.array([int(bool(R(seq))) for seq in itertools.product(range(n), repeat=m)], dtype=np.int8)


@dataclass
class OracleSpec:
    kind: str
    R: np.ndarray | Callable
    n: int
    M: int
    table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"oracle kind must be one of {KINDS}, got {self.kind!r}")
        if callable(self.R):
            table = tabulate(self.R, self.n, self.M)
        else:
            table = np.asarray(self.R).astype(np.int8).reshape(-1)
        if table.size != self.n ** self.M:
            raise ValueError(f"truth table has {table.size} entries, expected {self.n ** self.M}")
        if not np.all((table == 0) | (table == 1)):
            raise ValueError("truth table must be boolean")
        self.table = table

    @property
    def num_items(self) -> int:
        return self.table.size


class QuantumChannel:
    """An oracle: a unitary, an isometry, or (for dephasing) a Kraus channel.

    ``apply_density`` works for every flavor; ``unitary`` is set for bitflip
    and phaseflip, ``isometry`` for copy.
    """

    def __init__(self, spec: OracleSpec, dim_in: int, dim_out: int, unitary: Operator | None = None,
                 isometry: Operator | None = None):
        self.spec = spec
        self.kind = spec.kind
        self.table = spec.table
        self.dim_in = dim_in
        self.dim_out = dim_out
        self.unitary = unitary
        self.isometry = isometry

    def apply(self, vec: np.ndarray) -> np.ndarray:
        op = self.unitary or self.isometry
        if op is None:
            raise TypeError("the dephasing oracle has no pure-state action; use apply_density")
        return op.apply(vec)

    def kraus(self) -> list[np.ndarray]:
        if self.kind == "dephasing":
            ops = []
            for x, fx in enumerate(self.table):
                k = np.zeros((2, self.dim_in), dtype=complex)
                k[fx, x] = 1.0
                ops.append(k)
            return ops
        return [(self.unitary or self.isometry).matrix()]

    def apply_density(self, rho: np.ndarray) -> np.ndarray:
        if self.kind == "dephasing":
            # sum_x rho_xx |f(x)><f(x)|
            diag = np.real(np.diag(rho))
            out = np.zeros((2, 2), dtype=complex)
            out[0, 0] = diag[self.table == 0].sum()
            out[1, 1] = diag[self.table == 1].sum()
            return out
        m = (self.unitary or self.isometry).matrix()
        return m @ rho @ m.conj().T


def build_oracle(spec: OracleSpec, cap: int = DEFAULT_CAP) -> QuantumChannel:
    N = spec.num_items
    f = spec.table.astype(np.int64)
    if spec.kind == "phaseflip":
        check_cap(N, cap)
        return QuantumChannel(spec, N, N, unitary=DiagonalOperator(1.0 - 2.0 * f, cap))
    if spec.kind == "bitflip":
        check_cap(2 * N, cap)
        # basis |x>|y> -> |x>|y xor f(x)>, ancilla least significant
        idx = np.arange(2 * N)
        x, y = idx // 2, idx % 2
        return QuantumChannel(spec, 2 * N, 2 * N, unitary=PermutationOperator(2 * x + (y ^ f[x]), cap))
    if spec.kind == "copy":
        check_cap(2 * N, cap)
        return QuantumChannel(spec, N, 2 * N, isometry=IndexIsometry(2 * np.arange(N) + f, 2 * N, cap=cap))
    check_cap(N, cap)
    return QuantumChannel(spec, N, 2)


def dephasing_via_bitflip(table: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Tr_I[U_f (rho ⊗ |0><0|) U_f^†] computed literally from the bitflip unitary."""
    N = table.size
    U = build_oracle(OracleSpec("bitflip", table, N, 1)).unitary.matrix()
    anc = np.zeros((2, 2), dtype=complex)
    anc[0, 0] = 1
    big = U @ np.kron(rho, anc) @ U.conj().T
    return np.einsum("xaxb->ab", big.reshape(N, 2, N, 2))


__all__ = ["OracleSpec", "QuantumChannel", "build_oracle", "tabulate", "dephasing_via_bitflip", "KINDS"]
