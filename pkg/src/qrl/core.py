"""Label spaces, interaction histories, the reward-rate merit and seeded RNG streams."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import AlternationViolation, EmptyWindow

EMPTY = "ε"

PERCEPT = "percept"
ACTION = "action"


@dataclass(frozen=True)
class FiniteSpace:
    """Ordered finite label set with a label <-> index bijection.

    When ``contains_empty`` is set the empty symbol is placed at index 0.
    """

    labels: tuple[str, ...]
    contains_empty: bool = False
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if self.contains_empty:
            labels = (EMPTY,) + tuple(x for x in labels if x != EMPTY)
        elif EMPTY in labels:
            raise ValueError("empty symbol present but contains_empty is not set")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in {labels!r}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)

    def __contains__(self, label) -> bool:
        return label in self._index

    def index(self, label: str) -> int:
        return self._index[label]

    def with_empty(self) -> "FiniteSpace":
        return FiniteSpace(self.labels, contains_empty=True)

    def without_empty(self) -> "FiniteSpace":
        return FiniteSpace(tuple(x for x in self.labels if x != EMPTY))


def action_space(n: int) -> FiniteSpace:
    return FiniteSpace(tuple(f"a{i}" for i in range(n)))


class Percept(NamedTuple):
    label: str
    reward: int = 0


EMPTY_PERCEPT = Percept(EMPTY, 0)


class Entry(NamedTuple):
    role: str
    label: str
    reward: int | None = None

    @property
    def percept(self) -> Percept:
        return Percept(self.label, self.reward or 0)


class History:
    """Alternating percept/action record.

    Entry 0 is always a percept; if ``entries`` is empty or opens with an
    action, the empty percept is prepended.  ``len(h)`` counts every entry
    including the opening percept; ``h.steps`` excludes it.
    """

    __slots__ = ("entries",)

    def __init__(self, entries: Iterable[Entry] = (), *, validate: bool = True):
        entries = tuple(entries)
        if not entries or entries[0].role != PERCEPT:
            entries = (Entry(PERCEPT, EMPTY, 0),) + entries
        if validate:
            _check_alternation(entries)
        self.entries = entries

    @classmethod
    def from_pairs(cls, actions: Sequence[str], percepts: Sequence[Percept],
                   first: Percept = EMPTY_PERCEPT) -> "History":
        """Build ``(first, a1, s2, a2, s3, ...)``; ``percepts`` may be one shorter than ``actions``."""
        if not (len(percepts) == len(actions) or len(percepts) == len(actions) - 1):
            raise ValueError("percepts must match actions or be one shorter")
        out = [Entry(PERCEPT, first.label, first.reward)]
        for i, a in enumerate(actions):
            out.append(Entry(ACTION, a, None))
            if i < len(percepts):
                p = percepts[i]
                out.append(Entry(PERCEPT, p.label, p.reward))
        return cls(out, validate=False)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, History) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        body = " ".join(
            e.label + ("*" if e.reward else "") if e.role == PERCEPT else f"[{e.label}]"
            for e in self.entries[:12]
        )
        more = " ..." if len(self.entries) > 12 else ""
        return f"History({body}{more}; len={len(self)})"

    @property
    def steps(self) -> int:
        return len(self.entries) - 1

    @property
    def last_percept(self) -> Percept:
        for e in reversed(self.entries):
            if e.role == PERCEPT:
                return e.percept
        raise AssertionError("history without percept")

    def actions(self) -> list[str]:
        return [e.label for e in self.entries if e.role == ACTION]

    def percepts(self) -> list[Percept]:
        return [e.percept for e in self.entries if e.role == PERCEPT]

    def rewards(self) -> list[int]:
        return [e.reward or 0 for e in self.entries]

    def check_spaces(self, percepts: FiniteSpace, actions: FiniteSpace) -> None:
        for e in self.entries:
            if e.role == PERCEPT:
                if e.label != EMPTY and e.label not in percepts:
                    raise ValueError(f"percept {e.label!r} not in percept space")
                if e.reward not in (0, 1):
                    raise ValueError(f"reward flag must be 0/1, got {e.reward!r}")
            elif e.label not in actions:
                raise ValueError(f"action {e.label!r} not in action space")

    # JSON-lines
    def to_jsonl(self) -> str:
        lines = []
        for t, e in enumerate(self.entries):
            row = {"t": t, "role": e.role, "label": e.label}
            if e.role == PERCEPT:
                row["reward"] = int(e.reward or 0)
            lines.append(json.dumps(row, ensure_ascii=False))
        return "\n".join(lines) + "\n"

    def write_jsonl(self, fh: IO[str]) -> None:
        fh.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str | Iterable[str]) -> "History":
        if isinstance(text, str):
            text = text.splitlines()
        entries = []
        for expected_t, line in enumerate(x for x in text if x.strip()):
            row = json.loads(line)
            if row["t"] != expected_t:
                raise ValueError(f"non-contiguous step index {row['t']} (expected {expected_t})")
            if row["role"] == PERCEPT:
                entries.append(Entry(PERCEPT, row["label"], int(row["reward"])))
            elif row["role"] == ACTION:
                if "reward" in row:
                    raise ValueError("actions carry no reward field")
                entries.append(Entry(ACTION, row["label"], None))
            else:
                raise ValueError(f"unknown role {row['role']!r}")
        if entries and entries[0].role != PERCEPT:
            raise AlternationViolation("serialized history must open with a percept")
        return cls(entries)


def _check_alternation(entries: Sequence[Entry]) -> None:
    for i in range(1, len(entries)):
        if entries[i].role == entries[i - 1].role:
            raise AlternationViolation(f"two consecutive {entries[i].role} entries at t={i}")
    for e in entries:
        if e.role == PERCEPT and e.reward not in (0, 1):
            raise ValueError(f"percept reward flag must be 0 or 1, got {e.reward!r}")
        if e.role == ACTION and e.reward is not None:
            raise ValueError("action entries carry no reward")


def concat_histories(a: History, b: History) -> History:
    """String-wise concatenation; b's opening percept is dropped on join."""
    if len(b) == 1:
        return a
    if a.entries[-1].role != PERCEPT:
        raise AlternationViolation("left history ends with an action; seam would repeat roles")
    return History(a.entries + b.entries[1:], validate=False)


def repeat_history(h: History, copies: int) -> History:
    if copies < 1:
        raise ValueError("copies must be >= 1")
    if copies > 1 and h.entries[-1].role != PERCEPT:
        raise AlternationViolation("cannot repeat a history that ends with an action")
    return History(h.entries + h.entries[1:] * (copies - 1), validate=False)


@dataclass(frozen=True)
class MeritConfig:
    """Reward-rate merit over an entry window ``[start, end)``.

    Entry indices include the opening percept at 0; the default window is
    ``[1, len(h))``, i.e. every interaction step.
    """

    kind: str = "reward-rate"
    window: tuple[int, int] | None = None

    def __post_init__(self):
        if self.kind != "reward-rate":
            raise ValueError(f"unsupported merit kind {self.kind!r}")
        if self.window is not None:
            start, end = self.window
            if not 0 <= start < end:
                raise ValueError(f"window must satisfy 0 <= start < end, got {self.window}")


def rate_merit(h: History, cfg: MeritConfig = MeritConfig()) -> float:
    start, end = cfg.window if cfg.window is not None else (1, len(h))
    if end > len(h):
        raise ValueError(f"window end {end} beyond history length {len(h)}")
    if end <= start:
        raise EmptyWindow("window contains no entries")
    rewards = sum(1 for e in h.entries[start:end] if e.reward)
    return rewards / (end - start)


class RngStream:
    """Counter-based (Philox) uniform stream keyed by ``(seed, stream_id)``.

    Every draw is taken from one buffered sequence of uniforms, so block and
    scalar consumers see the same numbers in the same order.
    """

    ALGORITHM = "philox4x64-10"
    _BLOCK = 1024

    def __init__(self, seed: int, stream_id: int | tuple[int, ...] = 0):
        self.seed = int(seed) & 0xFFFF_FFFF_FFFF_FFFF
        key = stream_id if isinstance(stream_id, tuple) else (int(stream_id),)
        self.stream_id = key if len(key) > 1 else key[0]
        self._key = key
        seq = np.random.SeedSequence(self.seed, spawn_key=key)
        self._gen = np.random.Generator(np.random.Philox(seq))
        self._buf = self._gen.random(self._BLOCK)
        self._pos = 0

    @property
    def algorithm_id(self) -> str:
        return self.ALGORITHM

    def random(self) -> float:
        pos = self._pos
        if pos == self._BLOCK:
            self._buf = self._gen.random(self._BLOCK)
            pos = 0
        self._pos = pos + 1
        return float(self._buf[pos])

    def randbelow(self, n: int) -> int:
        return int(self.random() * n)

    def uniforms(self, k: int) -> np.ndarray:
        out = np.empty(k)
        filled = 0
        while filled < k:
            if self._pos == self._BLOCK:
                self._buf = self._gen.random(self._BLOCK)
                self._pos = 0
            take = min(k - filled, self._BLOCK - self._pos)
            out[filled:filled + take] = self._buf[self._pos:self._pos + take]
            self._pos += take
            filled += take
        return out

    def choice(self, probs) -> int:
        """Inverse-CDF draw of an index from (unnormalized) non-negative weights."""
        cdf = np.cumsum(probs)
        u = self.random() * cdf[-1]
        idx = int(np.searchsorted(cdf, u, side="right"))
        return min(idx, len(cdf) - 1)

    def child(self, *tag: int) -> "RngStream":
        return RngStream(self.seed, self._key + tuple(tag))

    def normal(self, size) -> np.ndarray:
        """Standard normals via Box-Muller on the uniform stream."""
        count = int(np.prod(size))
        half = (count + 1) // 2
        u = self.uniforms(2 * half)
        u1 = 1.0 - u[:half]
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2 * np.pi * u[half:]), r * np.sin(2 * np.pi * u[half:])])
        return z[:count].reshape(size)
