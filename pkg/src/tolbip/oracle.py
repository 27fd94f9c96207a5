"""Adjacency-query access with exact accounting.

Algorithms see a graph only through :class:`QueryOracle`.  The base oracle
counts every call; caching is opt-in through :class:`MemoizingOracle` so a
ledger reflects the discipline of the algorithm that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Protocol, runtime_checkable

from .errors import DomainError
from .graph import DenseGraph


@dataclass(frozen=True)
class QueryLedger:
    total_queries: int = 0
    distinct_pairs: int = 0
    sampled_vertices: int = 0


@runtime_checkable
class QueryOracle(Protocol):
    n: int

    def query(self, u: int, v: int) -> bool: ...

    def ledger(self) -> QueryLedger: ...

    def record_sampled_vertices(self, count: int) -> None: ...


class _Counting:
    """Shared counter state and argument checks."""

    def __init__(self, n: int):
        self.n = n
        self._total = 0
        self._seen: set[tuple[int, int]] = set()
        self._sampled = 0

    def _check(self, u: int, v: int) -> tuple[int, int]:
        if u == v:
            raise DomainError(f"self-pair query ({u}, {v}) is undefined")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise DomainError(f"query ({u}, {v}) out of range [0, {self.n})")
        key = (u, v) if u < v else (v, u)
        self._total += 1
        self._seen.add(key)
        return key

    def ledger(self) -> QueryLedger:
        return QueryLedger(self._total, len(self._seen), self._sampled)

    def record_sampled_vertices(self, count: int) -> None:
        if count < 0:
            raise DomainError("sampled vertex count must be nonnegative")
        self._sampled += count


class AdjacencyOracle(_Counting):
    """Answers queries from a backing :class:`DenseGraph`; every call counts."""

    def __init__(self, graph: DenseGraph):
        super().__init__(graph.n)
        self._rows = graph.rows

    def query(self, u: int, v: int) -> bool:
        self._check(u, v)
        return bool((self._rows[u] >> v) & 1)


class MemoizingOracle(_Counting):
    """Caches answers by unordered pair and forwards only first-seen pairs.

    Its own ledger counts every call it receives; the wrapped oracle's ledger
    counts what actually reached the graph.
    """

    def __init__(self, inner: QueryOracle):
        super().__init__(inner.n)
        self.inner = inner
        self._cache: dict[tuple[int, int], bool] = {}

    def query(self, u: int, v: int) -> bool:
        key = self._check(u, v)
        ans = self._cache.get(key)
        if ans is None:
            ans = self._cache[key] = self.inner.query(*key)
        return ans

    def record_sampled_vertices(self, count: int) -> None:
        super().record_sampled_vertices(count)
        self.inner.record_sampled_vertices(count)


class RecordingOracle(_Counting):
    """Logs ``(u, v, answer)`` for every query, in call order."""

    def __init__(self, inner: QueryOracle):
        super().__init__(inner.n)
        self.inner = inner
        self.trace: list[tuple[int, int, bool]] = []

    def query(self, u: int, v: int) -> bool:
        self._check(u, v)
        ans = self.inner.query(u, v)
        self.trace.append((u, v, ans))
        return ans

    def record_sampled_vertices(self, count: int) -> None:
        super().record_sampled_vertices(count)
        self.inner.record_sampled_vertices(count)

    def dump_trace(self, path) -> None:
        write_trace(path, self.trace)


def format_trace(trace: Iterable[tuple[int, int, bool]]) -> str:
    return "".join(f"{u} {v} {int(a)}\n" for u, v, a in trace)


def parse_trace(text: str) -> list[tuple[int, int, bool]]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3 or parts[2] not in ("0", "1"):
            raise DomainError(f"trace line {lineno}: expected 'u v answer'")
        out.append((int(parts[0]), int(parts[1]), parts[2] == "1"))
    return out


def write_trace(path, trace) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_trace(trace))


def read_trace(path) -> list[tuple[int, int, bool]]:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh.read())


def replay_mismatches(trace, graph: DenseGraph) -> list[int]:
    """Indices of trace entries whose answer disagrees with ``graph``."""
    return [i for i, (u, v, a) in enumerate(trace) if graph.has_edge(u, v) != a]
