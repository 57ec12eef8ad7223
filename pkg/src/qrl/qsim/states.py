"""Dense pure and mixed states over labeled finite registers."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import BinaryIO, Sequence

import numpy as np

from ..core import FiniteSpace, RngStream
from ..errors import DimensionCap, LayoutMismatch, UnknownRegister, ZeroNorm

DEFAULT_CAP = 1 << 22
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-8
ZERO_NORM = 1e-14


def qubit(name: str) -> tuple[str, FiniteSpace]:
    return (name, FiniteSpace(("0", "1")))


def register(name: str, size_or_labels) -> tuple[str, FiniteSpace]:
    if isinstance(size_or_labels, FiniteSpace):
        return (name, size_or_labels)
    if isinstance(size_or_labels, int):
        return (name, FiniteSpace(tuple(str(i) for i in range(size_or_labels))))
    return (name, FiniteSpace(tuple(size_or_labels)))


@dataclass(frozen=True)
class Layout:
    """Ordered registers; basis index is mixed radix with register 0 most significant."""

    registers: tuple[tuple[str, FiniteSpace], ...]

    def __post_init__(self):
        regs = tuple((str(n), s) for n, s in self.registers)
        names = [n for n, _ in regs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate register names {names}")
        object.__setattr__(self, "registers", regs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(len(s) for _, s in self.registers)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.registers else 1

    def position(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownRegister(f"register {name!r} not in layout {self.names}") from None

    def space(self, name: str) -> FiniteSpace:
        return self.registers[self.position(name)][1]

    def index(self, labels: dict | Sequence) -> int:
        if isinstance(labels, dict):
            labels = [labels[n] for n in self.names]
        idx = 0
        for (_, space), lab in zip(self.registers, labels):
            i = lab if isinstance(lab, (int, np.integer)) else space.index(lab)
            idx = idx * len(space) + int(i)
        return idx

    def labels_of(self, index: int) -> tuple[str, ...]:
        out = []
        for _, space in reversed(self.registers):
            out.append(space.labels[index % len(space)])
            index //= len(space)
        return tuple(reversed(out))

    def sub(self, names: Sequence[str]) -> "Layout":
        return Layout(tuple(self.registers[self.position(n)] for n in names))

    def __add__(self, other: "Layout") -> "Layout":
        return Layout(self.registers + other.registers)

    def to_json(self) -> list:
        return [{"name": n, "labels": list(s.labels)} for n, s in self.registers]


def as_layout(layout) -> Layout:
    return layout if isinstance(layout, Layout) else Layout(tuple(layout))


def check_cap(dim: int, cap: int = DEFAULT_CAP) -> None:
    if dim > cap:
        raise DimensionCap(f"dimension {dim} exceeds cap {cap}")


class StateVector:
    """Normalized amplitude vector over a register layout."""

    __slots__ = ("layout", "amplitudes")

    def __init__(self, layout, amplitudes, *, normalize: bool = False, cap: int = DEFAULT_CAP):
        layout = as_layout(layout)
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.size != layout.dim:
            raise LayoutMismatch(f"{amps.size} amplitudes for layout of dimension {layout.dim}")
        check_cap(amps.size, cap)
        norm = np.linalg.norm(amps)
        if normalize:
            if norm < ZERO_NORM:
                raise ZeroNorm("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} differs from 1")
        self.layout = layout
        self.amplitudes = amps

    @classmethod
    def basis(cls, layout, labels) -> "StateVector":
        layout = as_layout(layout)
        amps = np.zeros(layout.dim, dtype=complex)
        amps[layout.index(labels)] = 1.0
        return cls(layout, amps)

    @classmethod
    def uniform(cls, layout) -> "StateVector":
        layout = as_layout(layout)
        return cls(layout, np.full(layout.dim, 1 / np.sqrt(layout.dim), dtype=complex))

    @classmethod
    def random(cls, layout, rng: RngStream) -> "StateVector":
        layout = as_layout(layout)
        z = rng.normal((layout.dim, 2))
        return cls(layout, z[:, 0] + 1j * z[:, 1], normalize=True)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(self.layout + other.layout, np.kron(self.amplitudes, other.amplitudes))

    def probabilities(self, names: Sequence[str] | str | None = None) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        if names is None:
            return p
        if isinstance(names, str):
            names = [names]
        t = p.reshape(self.layout.dims)
        keep = [self.layout.position(n) for n in names]
        drop = tuple(i for i in range(len(self.layout.dims)) if i not in keep)
        t = t.sum(axis=drop)
        # reorder to the requested register order
        order = sorted(keep)
        t = np.transpose(t, [order.index(k) for k in keep]) if len(keep) > 1 else t
        return t.reshape(-1)

    def reduced(self, names: Sequence[str]) -> "DensityOperator":
        keep = [self.layout.position(n) for n in names]
        rest = [i for i in range(len(self.layout.dims)) if i not in keep]
        t = self.amplitudes.reshape(self.layout.dims).transpose(keep + rest)
        dk = int(np.prod([self.layout.dims[i] for i in keep]))
        m = t.reshape(dk, -1)
        return DensityOperator(self.layout.sub(names), m @ m.conj().T)

    def density(self) -> "DensityOperator":
        return DensityOperator(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))

    def fidelity(self, other: "StateVector") -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)

    def dump(self, fh: BinaryIO) -> None:
        """JSON header line followed by little-endian interleaved (re, im) float64."""
        header = json.dumps({"register_layout": self.layout.to_json(), "dim": self.dim}, ensure_ascii=False)
        fh.write(header.encode("utf-8") + b"\n")
        inter = np.empty(2 * self.dim, dtype="<f8")
        inter[0::2] = self.amplitudes.real
        inter[1::2] = self.amplitudes.imag
        fh.write(inter.tobytes())

    @classmethod
    def load(cls, fh: BinaryIO) -> "StateVector":
        header = json.loads(fh.readline().decode("utf-8"))
        layout = Layout(tuple((r["name"], FiniteSpace(tuple(r["labels"]), contains_empty="ε" in r["labels"]))
                              for r in header["register_layout"]))
        raw = np.frombuffer(fh.read(16 * header["dim"]), dtype="<f8")
        return cls(layout, raw[0::2] + 1j * raw[1::2])


def _axes_for(layout: Layout, names: Sequence[str]):
    pos = [layout.position(n) for n in names]
    return pos


def project(state: StateVector, name: str, label) -> tuple[float, StateVector]:
    """(probability, normalized post-state) for outcome ``label`` on register ``name``."""
    pos = state.layout.position(name)
    space = state.layout.space(name)
    i = label if isinstance(label, (int, np.integer)) else space.index(label)
    t = state.amplitudes.reshape(state.layout.dims).copy()
    mask = np.zeros(len(space), dtype=bool)
    mask[i] = True
    idx = [slice(None)] * t.ndim
    idx[pos] = ~mask
    t[tuple(idx)] = 0
    norm = np.linalg.norm(t)
    if norm < ZERO_NORM:
        raise ZeroNorm(f"outcome {label!r} on {name!r} has zero probability")
    return float(norm**2), StateVector(state.layout, t.reshape(-1) / norm)


def measure(state: StateVector, name: str, rng: RngStream) -> tuple[str, StateVector]:
    """Born-rule measurement of one register in its label basis."""
    probs = state.probabilities(name)
    i = rng.choice(probs)
    _, post = project(state, name, int(i))
    return state.layout.space(name).labels[i], post


def sample_counts(probs: np.ndarray, draws: int, rng: RngStream) -> np.ndarray:
    """Inverse-CDF sampling of ``draws`` outcomes, returned as counts per index."""
    cdf = np.cumsum(probs)
    u = rng.uniforms(draws) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)
    return np.bincount(idx, minlength=len(probs))


class DensityOperator:
    """Density matrix over a register layout (Hermitian, unit trace, PSD)."""

    __slots__ = ("layout", "matrix")

    def __init__(self, layout, matrix, *, validate: bool = True):
        layout = as_layout(layout)
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (layout.dim, layout.dim):
            raise LayoutMismatch(f"matrix shape {m.shape} does not match layout dimension {layout.dim}")
        if validate:
            if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(m).real - 1.0) > TRACE_TOL:
                raise ValueError(f"density matrix trace {np.trace(m).real!r} differs from 1")
            if m.shape[0] <= 4096 and np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -PSD_TOL:
                raise ValueError("density matrix is not positive semidefinite")
        self.layout = layout
        self.matrix = m

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityOperator":
        return state.density()

    @classmethod
    def basis(cls, layout, labels) -> "DensityOperator":
        return StateVector.basis(layout, labels).density()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def tensor(self, other: "DensityOperator") -> "DensityOperator":
        return DensityOperator(self.layout + other.layout, np.kron(self.matrix, other.matrix), validate=False)

    def _tensor_view(self):
        d = self.layout.dims
        return self.matrix.reshape(d + d)

    def partial_trace(self, keep: Sequence[str]) -> "DensityOperator":
        dims = self.layout.dims
        k = len(dims)
        keep_pos = [self.layout.position(n) for n in keep]
        t = self._tensor_view()
        letters = "abcdefghijklmnopqrstuvwxyz"
        row = list(letters[:k])
        col = list(letters[k:2 * k])
        for i in range(k):
            if i not in keep_pos:
                col[i] = row[i]
        out = "".join(row[i] for i in keep_pos) + "".join(col[i] for i in keep_pos)
        r = np.einsum("".join(row) + "".join(col) + "->" + out, t)
        dk = int(np.prod([dims[i] for i in keep_pos]))
        return DensityOperator(self.layout.sub(keep), r.reshape(dk, dk), validate=False)

    def partial_transpose(self, names: Sequence[str]) -> np.ndarray:
        dims = self.layout.dims
        k = len(dims)
        pos = {self.layout.position(n) for n in names}
        axes = list(range(2 * k))
        for i in pos:
            axes[i], axes[k + i] = axes[k + i], axes[i]
        return self._tensor_view().transpose(axes).reshape(self.dim, self.dim)

    def negativity(self, names: Sequence[str]) -> float:
        """(||rho^{T_B}||_1 - 1) / 2 with B the listed registers."""
        ev = np.linalg.eigvalsh(self.partial_transpose(names))
        return float(max(0.0, (np.abs(ev).sum() - 1.0) / 2.0))

    def dephase(self, name: str) -> "DensityOperator":
        """Zero every coherence between different labels of register ``name``."""
        pos = self.layout.position(name)
        dims = self.layout.dims
        labels = np.indices(dims).reshape(len(dims), -1)[pos]
        mask = labels[:, None] == labels[None, :]
        return DensityOperator(self.layout, np.where(mask, self.matrix, 0), validate=False)

    def register_coherence(self, name: str) -> float:
        """Largest |rho[x, y]| over pairs differing in register ``name``."""
        pos = self.layout.position(name)
        dims = self.layout.dims
        labels = np.indices(dims).reshape(len(dims), -1)[pos]
        mask = labels[:, None] != labels[None, :]
        return float(np.abs(self.matrix[mask]).max(initial=0.0))

    def probabilities(self, names: Sequence[str] | str | None = None) -> np.ndarray:
        if names is None:
            return np.real(np.diag(self.matrix)).copy()
        if isinstance(names, str):
            names = [names]
        return np.real(np.diag(self.partial_trace(names).matrix)).copy()

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def trace_distance(self, other: "DensityOperator") -> float:
        if self.layout.dims != other.layout.dims:
            raise LayoutMismatch("layouts differ")
        ev = np.linalg.eigvalsh(self.matrix - other.matrix)
        return float(0.5 * np.abs(ev).sum())

    def apply_kraus(self, kraus: Sequence[np.ndarray], names: Sequence[str]) -> "DensityOperator":
        """Apply a channel given by Kraus operators acting on the listed registers."""
        return DensityOperator(self.layout, apply_kraus_matrix(self.layout, self.matrix, kraus, names),
                               validate=False)


def embed(layout: Layout, op: np.ndarray, names: Sequence[str]) -> np.ndarray:
    """Full-space matrix of ``op`` acting on the listed registers (identity elsewhere)."""
    dims = layout.dims
    k = len(dims)
    pos = [layout.position(n) for n in names]
    sub = [dims[i] for i in pos]
    dsub = int(np.prod(sub))
    if op.shape != (dsub, dsub):
        raise LayoutMismatch(f"operator shape {op.shape} does not match registers {names}")
    full = np.eye(layout.dim, dtype=complex).reshape(dims + dims)
    opt = op.reshape(sub + sub)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row_out = list(letters[:k])
    row_in = list(letters[:k])
    for j, i in enumerate(pos):
        row_in[i] = letters[k + j]
    col = letters[2 * k:3 * k]
    op_sub = "".join(row_out[i] for i in pos) + "".join(row_in[i] for i in pos)
    expr = f"{op_sub},{''.join(row_in)}{col}->{''.join(row_out)}{col}"
    return np.einsum(expr, opt, full).reshape(layout.dim, layout.dim)


def apply_kraus_matrix(layout: Layout, rho: np.ndarray, kraus, names) -> np.ndarray:
    out = np.zeros_like(rho)
    for k in kraus:
        big = embed(layout, np.asarray(k, dtype=complex), names)
        out += big @ rho @ big.conj().T
    return out


def apply_on(state: StateVector, op: np.ndarray, names: Sequence[str]) -> StateVector:
    """Apply a square matrix to the listed registers of a pure state."""
    layout = state.layout
    dims = layout.dims
    pos = [layout.position(n) for n in names]
    rest = [i for i in range(len(dims)) if i not in pos]
    t = state.amplitudes.reshape(dims).transpose(pos + rest)
    shape = t.shape
    dsub = int(np.prod([dims[i] for i in pos]))
    t = (np.asarray(op, dtype=complex) @ t.reshape(dsub, -1)).reshape(shape)
    inv = np.argsort(pos + rest)
    return StateVector(layout, t.transpose(inv).reshape(-1))


__all__ = [
    "Layout", "StateVector", "DensityOperator", "measure", "project", "sample_counts", "embed",
    "apply_on", "apply_kraus_matrix", "qubit", "register", "check_cap", "DEFAULT_CAP",
]
