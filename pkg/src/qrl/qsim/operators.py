"""Structured linear maps on amplitude vectors (dense, diagonal, permutation, isometry)."""

from __future__ import annotations

import numpy as np

from .states import DEFAULT_CAP, check_cap

UNITARY_TOL = 1e-10


class Operator:
    """Linear map ``dim_in -> dim_out`` acting on 1-d amplitude vectors."""

    dim_in: int
    dim_out: int

    def apply(self, vec: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def matrix(self) -> np.ndarray:
        return np.stack([self.apply(col) for col in np.eye(self.dim_in, dtype=complex)], axis=1)

    def adjoint(self) -> "Operator":
        return DenseOperator(self.matrix().conj().T)

    def __matmul__(self, other: "Operator") -> "Operator":
        return Composed((other, self))

    def is_unitary(self, tol: float = UNITARY_TOL, probes: int = 8) -> bool:
        if self.dim_in != self.dim_out:
            return False
        return self.is_isometry(tol, probes)

    def is_isometry(self, tol: float = UNITARY_TOL, probes: int = 8) -> bool:
        if self.dim_in <= 1 << 12:
            m = self.matrix()
            return float(np.abs(m.conj().T @ m - np.eye(self.dim_in)).max()) <= tol
        rng = np.random.default_rng(0)
        for _ in range(probes):
            v = rng.normal(size=self.dim_in) + 1j * rng.normal(size=self.dim_in)
            v /= np.linalg.norm(v)
            if abs(np.linalg.norm(self.apply(v)) - 1.0) > tol:
                return False
        return True


class DenseOperator(Operator):
    def __init__(self, m: np.ndarray, cap: int = DEFAULT_CAP):
        m = np.asarray(m, dtype=complex)
        check_cap(max(m.shape), cap)
        self.m = m
        self.dim_out, self.dim_in = m.shape

    def apply(self, vec):
        return self.m @ vec

    def matrix(self):
        return self.m.copy()

    def adjoint(self):
        return DenseOperator(self.m.conj().T)


class DiagonalOperator(Operator):
    def __init__(self, diag, cap: int = DEFAULT_CAP):
        diag = np.asarray(diag, dtype=complex)
        check_cap(diag.size, cap)
        self.diag = diag
        self.dim_in = self.dim_out = diag.size

    def apply(self, vec):
        return self.diag * vec

    def matrix(self):
        return np.diag(self.diag)

    def adjoint(self):
        return DiagonalOperator(self.diag.conj())


class PermutationOperator(Operator):
    """|i> -> |perm[i]>."""

    def __init__(self, perm, cap: int = DEFAULT_CAP):
        perm = np.asarray(perm, dtype=np.int64)
        check_cap(perm.size, cap)
        if not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ValueError("not a permutation")
        self.perm = perm
        self.dim_in = self.dim_out = perm.size

    def apply(self, vec):
        out = np.empty_like(vec, dtype=complex)
        out[self.perm] = vec
        return out

    def matrix(self):
        m = np.zeros((self.dim_out, self.dim_in), dtype=complex)
        m[self.perm, np.arange(self.dim_in)] = 1
        return m

    def adjoint(self):
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.perm.size)
        return PermutationOperator(inv)


class IndexIsometry(Operator):
    """|i> -> phase[i] |target[i]> with distinct targets in a larger space."""

    def __init__(self, target, dim_out: int, phase=None, cap: int = DEFAULT_CAP):
        target = np.asarray(target, dtype=np.int64)
        check_cap(dim_out, cap)
        if np.unique(target).size != target.size:
            raise ValueError("targets must be distinct")
        self.target = target
        self.phase = np.ones(target.size, dtype=complex) if phase is None else np.asarray(phase, dtype=complex)
        self.dim_in = target.size
        self.dim_out = dim_out

    def apply(self, vec):
        out = np.zeros(self.dim_out, dtype=complex)
        out[self.target] = self.phase * vec
        return out

    def matrix(self):
        m = np.zeros((self.dim_out, self.dim_in), dtype=complex)
        m[self.target, np.arange(self.dim_in)] = self.phase
        return m


class FunctionOperator(Operator):
    def __init__(self, fn, dim_in: int, dim_out: int | None = None, adjoint_fn=None):
        self.fn = fn
        self.dim_in = dim_in
        self.dim_out = dim_in if dim_out is None else dim_out
        self.adjoint_fn = adjoint_fn

    def apply(self, vec):
        return self.fn(vec)

    def adjoint(self):
        if self.adjoint_fn is None:
            return super().adjoint()
        return FunctionOperator(self.adjoint_fn, self.dim_out, self.dim_in, self.fn)


class Composed(Operator):
    """Product of operators applied left to right (first element acts first)."""

    def __init__(self, ops):
        flat = []
        for op in ops:
            flat.extend(op.ops if isinstance(op, Composed) else [op])
        for a, b in zip(flat, flat[1:]):
            if a.dim_out != b.dim_in:
                raise ValueError("dimension mismatch in composition")
        self.ops = tuple(flat)
        self.dim_in = flat[0].dim_in
        self.dim_out = flat[-1].dim_out

    def apply(self, vec):
        for op in self.ops:
            vec = op.apply(vec)
        return vec

    def adjoint(self):
        return Composed(tuple(op.adjoint() for op in reversed(self.ops)))


def operator_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Spectral-norm distance between two matrices."""
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b), ord=2))


def reflection_about(vec: np.ndarray) -> Operator:
    """1 - 2|v><v| for a normalized v, applied in O(dim)."""
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)

    def fn(x):
        return x - 2.0 * v * np.vdot(v, x)

    return FunctionOperator(fn, v.size, adjoint_fn=fn)


__all__ = [
    "Operator", "DenseOperator", "DiagonalOperator", "PermutationOperator", "IndexIsometry",
    "FunctionOperator", "Composed", "operator_distance", "reflection_about",
]
