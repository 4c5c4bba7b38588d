"""Finite traces, bounded trace sources and trace validity.

A :class:`FiniteTrace` is a non-empty, immutable sequence.  Extending a trace
returns a new trace; the old one is unaffected.  Extensions share storage
with their parent when the parent is the newest view of that storage, so
growing a trace one element at a time is amortised O(1).

A :class:`TraceSource` stands in for a possibly-infinite trace: a prefix plus
a seeded generator that produces at most ``horizon`` further elements.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Any, Callable, Generic, Iterable, Iterator, Optional, TypeVar

T = TypeVar("T")

StepOracle = Callable[[Any, Any], bool]


class FiniteTrace(Generic[T]):
    """Non-empty immutable sequence with O(1) amortised ``extend``."""

    __slots__ = ("_items", "_n")

    def __init__(self, items: Iterable[T]):
        items = list(items)
        if not items:
            raise ValueError("a finite trace is non-empty")
        self._items = items
        self._n = len(items)

    @classmethod
    def singleton(cls, a: T) -> "FiniteTrace[T]":
        return cls([a])

    @classmethod
    def _view(cls, items: list, n: int) -> "FiniteTrace[T]":
        t = cls.__new__(cls)
        t._items = items
        t._n = n
        return t

    @property
    def first(self) -> T:
        return self._items[0]

    @property
    def last(self) -> T:
        return self._items[self._n - 1]

    def lookup(self, i: int) -> T:
        if not 0 <= i < self._n:
            raise IndexError(f"trace index {i} out of range for length {self._n}")
        return self._items[i]

    def __len__(self) -> int:
        return self._n

    def __getitem__(self, i: int) -> T:
        if i < 0:
            i += self._n
        return self.lookup(i)

    def __iter__(self) -> Iterator[T]:
        items = self._items
        for i in range(self._n):
            yield items[i]

    def extend(self, a: T) -> "FiniteTrace[T]":
        items = self._items
        if len(items) == self._n:
            items.append(a)
            return self._view(items, self._n + 1)
        # someone else already extended this storage; fork it
        fresh = items[: self._n]
        fresh.append(a)
        return self._view(fresh, self._n + 1)

    def prefix(self, n: int) -> "FiniteTrace[T]":
        """The first ``n`` elements (1 <= n <= len)."""
        if not 1 <= n <= self._n:
            raise IndexError(f"prefix length {n} out of range for length {self._n}")
        return self._view(self._items, n)

    def prefixes(self) -> Iterator["FiniteTrace[T]"]:
        for n in range(1, self._n + 1):
            yield self._view(self._items, n)

    def to_list(self) -> list:
        return self._items[: self._n]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteTrace):
            return NotImplemented
        return self._n == other._n and self.to_list() == other.to_list()

    def __hash__(self) -> int:
        return hash(tuple(self))

    def __repr__(self) -> str:
        body = ", ".join(repr(x) for x in self)
        return f"FiniteTrace([{body}])"


def first(t: FiniteTrace[T]) -> T:
    return t.first


def last(t: FiniteTrace[T]) -> T:
    return t.last


def lookup(i: int, t: FiniteTrace[T]) -> T:
    return t.lookup(i)


def length(t: FiniteTrace[T]) -> int:
    return len(t)


def extend(t: FiniteTrace[T], a: T) -> FiniteTrace[T]:
    return t.extend(a)


class SourceExhausted(Exception):
    """Raised when an element is requested past the end of a source."""


class TraceSource(Generic[T]):
    """A possibly-infinite trace, cut at ``horizon`` elements.

    ``generator`` is a zero-argument factory returning an iterator; the
    source pulls from it lazily.  See :meth:`seeded` for sources that replay
    identically from a seed.
    """

    def __init__(self, generator: Callable[[], Iterator[T]], horizon: int,
                 prefix: Optional[FiniteTrace[T]] = None):
        if horizon < 0:
            raise ValueError("horizon must be non-negative")
        self.prefix = prefix
        self.horizon = horizon
        self._factory = generator
        self._it = generator()
        self._produced = 0
        self._ended = False
        self._peeked: list = []

    @classmethod
    def from_list(cls, items: Iterable[T], horizon: Optional[int] = None) -> "TraceSource[T]":
        items = list(items)
        return cls(lambda: iter(items), len(items) if horizon is None else horizon)

    @classmethod
    def seeded(cls, step: Callable[[random.Random], T], seed: int, horizon: int) -> "TraceSource[T]":
        """Source whose i-th element is ``step(rng)`` with ``rng`` seeded by ``seed``."""
        def gen():
            rng = random.Random(seed)
            while True:
                yield step(rng)
        return cls(gen, horizon)

    @property
    def produced(self) -> int:
        return self._produced

    def _pull(self) -> bool:
        if self._peeked:
            return True
        if self._ended or self._produced + len(self._peeked) >= self.horizon:
            return False
        try:
            self._peeked.append(next(self._it))
        except StopIteration:
            self._ended = True
            return False
        return True

    def has_next(self) -> bool:
        return self._pull()

    def next(self) -> T:
        if not self._pull():
            raise SourceExhausted(f"source ended after {self._produced} elements")
        self._produced += 1
        return self._peeked.pop()

    def __iter__(self) -> Iterator[T]:
        while self.has_next():
            yield self.next()


def unroll(n: int, t: FiniteTrace[T], s: TraceSource[T]) -> FiniteTrace[T]:
    """Append up to ``n`` elements of ``s`` onto ``t`` (fewer if ``s`` runs out)."""
    for _ in range(n):
        if not s.has_next():
            break
        t = t.extend(s.next())
    return t


def drop_prefix(n: int, s: TraceSource[T]) -> TraceSource[T]:
    """Advance ``s`` past its first ``n`` elements (or to its end); returns ``s``."""
    for _ in range(n):
        if not s.has_next():
            break
        s.next()
    return s


def valid_trace(t: FiniteTrace[T], step: StepOracle) -> bool:
    """True iff every adjacent pair of ``t`` is related by ``step``."""
    prev = None
    for i, x in enumerate(t):
        if i and not step(prev, x):
            return False
        prev = x
    return True


def first_invalid_step(t: FiniteTrace[T], step: StepOracle) -> Optional[int]:
    """Index of the first element not reached by a legal step, or None."""
    prev = None
    for i, x in enumerate(t):
        if i and not step(prev, x):
            return i
        prev = x
    return None


@dataclass
class JsonlTraceWriter:
    """Append-only JSONL sink; one encoded element per line."""

    path: str
    encode: Callable[[Any], Any] = lambda x: x

    def __post_init__(self):
        self._fh = open(self.path, "w", encoding="utf-8")

    def write(self, item: Any) -> None:
        self._fh.write(json.dumps(self.encode(item), sort_keys=True, separators=(",", ":")))
        self._fh.write("\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_jsonl(path: str, t: Iterable[T], encode: Callable[[T], Any] = lambda x: x) -> None:
    with JsonlTraceWriter(path, encode) as w:
        for x in t:
            w.write(x)


def read_jsonl(path: str, decode: Callable[[Any], T] = lambda x: x) -> FiniteTrace[T]:
    with open(path, encoding="utf-8") as fh:
        return FiniteTrace(decode(json.loads(line)) for line in fh if line.strip())
