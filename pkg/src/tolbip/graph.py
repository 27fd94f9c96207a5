"""Dense graphs with bipartitions plus exact exponential-time oracles.

Adjacency is held as one Python ``int`` bitmask per row so neighbourhood
intersections are a single ``&`` followed by ``int.bit_count``.  Bipartite
distances follow the ordered (double counting) convention: every
monochromatic edge contributes 2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import CapacityError, DomainError

BIP_CAP = 24
MAXCUT_CAP = 20


def to_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float.

    Floats go through ``repr`` so that ``0.05`` means 1/20, not the binary
    double nearest to it.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise DomainError(f"not a number: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except ValueError as exc:
            raise DomainError(f"not a rational literal: {x!r}") from exc
    raise DomainError(f"cannot convert {type(x).__name__} to a rational")


def _full(n: int) -> int:
    return (1 << n) - 1


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class DenseGraph:
    """Immutable simple undirected graph on vertices ``0..n-1``."""

    __slots__ = ("n", "_rows", "_adj")

    def __init__(self, n: int, rows: Iterable[int]):
        if n < 0:
            raise DomainError("vertex count must be nonnegative")
        rows = tuple(int(r) for r in rows)
        if len(rows) != n:
            raise DomainError(f"expected {n} rows, got {len(rows)}")
        full = _full(n)
        for v, r in enumerate(rows):
            if r & ~full:
                raise DomainError(f"row {v} references a vertex outside [0, {n})")
            if (r >> v) & 1:
                raise DomainError(f"self-loop at vertex {v}")
            for u in _bits(r):
                if not (rows[u] >> v) & 1:
                    raise DomainError(f"asymmetric adjacency between {v} and {u}")
        self.n = n
        self._rows = rows
        self._adj = None

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "DenseGraph":
        rows = [0] * n
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise DomainError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise DomainError(f"self-loop at vertex {u}")
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return cls(n, rows)

    @classmethod
    def from_matrix(cls, matrix) -> "DenseGraph":
        a = np.asarray(matrix).astype(bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError("adjacency matrix must be square")
        if not np.array_equal(a, a.T):
            raise DomainError("adjacency matrix must be symmetric")
        if a.diagonal().any():
            raise DomainError("adjacency matrix has a self-loop")
        n = a.shape[0]
        rows = []
        for v in range(n):
            # packbits little-endian gives bit u == column u
            packed = np.packbits(a[v], bitorder="little").tobytes()
            rows.append(int.from_bytes(packed, "little"))
        return cls(n, rows)

    @classmethod
    def complete(cls, n: int) -> "DenseGraph":
        full = _full(n)
        return cls(n, [full ^ (1 << v) for v in range(n)])

    @classmethod
    def empty(cls, n: int) -> "DenseGraph":
        return cls(n, [0] * n)

    @classmethod
    def complete_bipartite(cls, a: int, b: int) -> "DenseGraph":
        left, right = _full(a), _full(a + b) ^ _full(a)
        return cls(a + b, [right] * a + [left] * b)

    @classmethod
    def cycle(cls, n: int) -> "DenseGraph":
        return cls.from_edges(n, [(v, (v + 1) % n) for v in range(n)])

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self._rows[u] >> v) & 1)

    def row(self, v: int) -> int:
        """Neighbourhood of ``v`` as a bitmask."""
        return self._rows[v]

    @property
    def rows(self) -> tuple[int, ...]:
        return self._rows

    def degree(self, v: int) -> int:
        return self._rows[v].bit_count()

    def neighbors(self, v: int) -> list[int]:
        return list(_bits(self._rows[v]))

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, r in enumerate(self._rows):
            for v in _bits(r >> (u + 1)):
                yield u, u + 1 + v

    def adjacency(self) -> np.ndarray:
        """Read-only boolean adjacency matrix."""
        if self._adj is None:
            a = np.zeros((self.n, self.n), dtype=bool)
            for u, r in enumerate(self._rows):
                if r:
                    nbytes = (self.n + 7) // 8
                    raw = np.frombuffer(r.to_bytes(nbytes, "little"), dtype=np.uint8)
                    a[u] = np.unpackbits(raw, bitorder="little")[: self.n].astype(bool)
            a.setflags(write=False)
            self._adj = a
        return self._adj

    def induced(self, vertices: Iterable[int]) -> "DenseGraph":
        vs = list(vertices)
        rows = []
        for v in vs:
            r = self._rows[v]
            rows.append(sum(1 << i for i, u in enumerate(vs) if (r >> u) & 1))
        return DenseGraph(len(vs), rows)

    def disjoint_union(self, other: "DenseGraph") -> "DenseGraph":
        shift = self.n
        return DenseGraph(self.n + other.n, list(self._rows) + [r << shift for r in other._rows])

    def with_edge(self, u: int, v: int) -> "DenseGraph":
        if u == v:
            raise DomainError(f"self-loop at vertex {u}")
        rows = list(self._rows)
        rows[u] |= 1 << v
        rows[v] |= 1 << u
        return DenseGraph(self.n, rows)

    def __eq__(self, other):
        return isinstance(other, DenseGraph) and self.n == other.n and self._rows == other._rows

    def __hash__(self):
        return hash((self.n, self._rows))

    def __repr__(self):
        return f"DenseGraph(n={self.n}, m={edge_count(self)})"


class Side(str, enum.Enum):
    L = "L"
    R = "R"

    def other(self) -> "Side":
        return Side.R if self is Side.L else Side.L


@dataclass(frozen=True)
class Bipartition:
    """A map from ``domain`` to {L, R}, stored as two bitmasks.

    ``right_mask`` is always a subset of ``domain_mask``; vertices of the
    domain not in it are on side L.
    """

    domain_mask: int
    right_mask: int

    def __post_init__(self):
        if self.right_mask & ~self.domain_mask:
            raise DomainError("right side contains vertices outside the domain")

    @classmethod
    def full(cls, n: int, right: Iterable[int] | int = 0) -> "Bipartition":
        full = _full(n)
        rmask = right if isinstance(right, int) else sum(1 << v for v in set(right))
        if rmask & ~full:
            raise DomainError("right side references vertices outside the graph")
        return cls(full, rmask)

    @classmethod
    def from_sides(cls, sides: Mapping[int, Side | str]) -> "Bipartition":
        dom = right = 0
        for v, s in sides.items():
            if v < 0:
                raise DomainError(f"negative vertex {v}")
            dom |= 1 << v
            if Side(s) is Side.R:
                right |= 1 << v
        return cls(dom, right)

    @property
    def left_mask(self) -> int:
        return self.domain_mask & ~self.right_mask

    @property
    def domain(self) -> frozenset[int]:
        return frozenset(_bits(self.domain_mask))

    @property
    def left(self) -> frozenset[int]:
        return frozenset(_bits(self.left_mask))

    @property
    def right(self) -> frozenset[int]:
        return frozenset(_bits(self.right_mask))

    def side(self, v: int) -> Side:
        if not (self.domain_mask >> v) & 1:
            raise DomainError(f"vertex {v} is outside the bipartition's domain")
        return Side.R if (self.right_mask >> v) & 1 else Side.L

    __getitem__ = side

    def same_side_mask(self, v: int) -> int:
        return self.right_mask if (self.right_mask >> v) & 1 else self.left_mask

    def is_total_on(self, n: int) -> bool:
        return self.domain_mask == _full(n)

    def swap(self) -> "Bipartition":
        return Bipartition(self.domain_mask, self.left_mask)

    def restrict(self, vertices: Iterable[int] | int) -> "Bipartition":
        mask = vertices if isinstance(vertices, int) else sum(1 << v for v in set(vertices))
        return Bipartition(self.domain_mask & mask, self.right_mask & mask)

    def as_dict(self) -> dict[int, Side]:
        return {v: self.side(v) for v in _bits(self.domain_mask)}

    def __repr__(self):
        sides = ", ".join(f"{v}:{s.value}" for v, s in self.as_dict().items())
        return f"Bipartition({{{sides}}})"


def _require_total(g: DenseGraph, f: Bipartition) -> None:
    if not f.is_total_on(g.n):
        raise DomainError("bipartition must be total on V(G)")


def side_counts(g: DenseGraph, f: Bipartition, v: int) -> tuple[int, int]:
    """(|N(v) ∩ f⁻¹(L)|, |N(v) ∩ f⁻¹(R)|)."""
    r = g.row(v)
    return (r & f.left_mask).bit_count(), (r & f.right_mask).bit_count()


def bip_distance_wrt(g: DenseGraph, f: Bipartition) -> int:
    """Sum over vertices of same-side neighbour counts (each monochromatic edge twice)."""
    _require_total(g, f)
    right, left = f.right_mask, f.left_mask
    total = 0
    for v, r in enumerate(g.rows):
        total += (r & (right if (right >> v) & 1 else left)).bit_count()
    return total


def edge_count(g: DenseGraph) -> int:
    return sum(r.bit_count() for r in g.rows) // 2


# -- exhaustive enumeration ---------------------------------------------------

_LO_BITS = 16


def _scan_sides(weights: np.ndarray):
    """Walk every side assignment with vertex 0 pinned to L.

    Yields ``(base, x, p)`` chunks: ``x[c, v]`` is 1.0 when vertex ``v`` is on
    side R under code ``base + c`` (bit ``i`` of the code is vertex ``i+1``),
    and ``p[c, v]`` is the weight from ``v`` into side R.
    """
    n = weights.shape[0]
    free = max(n - 1, 0)
    lo = min(free, _LO_BITS)
    hi = free - lo
    codes = np.arange(1 << lo, dtype=np.int64)
    lo_bits = ((codes[:, None] >> np.arange(lo)) & 1).astype(weights.dtype)
    lo_p = lo_bits @ weights[1 : lo + 1] if lo else np.zeros((1, n), weights.dtype)
    x = np.zeros((1 << lo, n), dtype=weights.dtype)
    x[:, 1 : lo + 1] = lo_bits
    for h in range(1 << hi):
        hv = [1 + lo + b for b in range(hi) if (h >> b) & 1]
        xh = x.copy()
        if hv:
            xh[:, hv] = 1
            p = lo_p + weights[hv].sum(axis=0)
        else:
            p = lo_p
        yield h << lo, xh, p


def _check_cap(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise CapacityError(f"{what} brute force refused: n={n} exceeds cap {cap}")


def exact_bip_distance(g: DenseGraph, cap: int = BIP_CAP) -> tuple[int, Bipartition]:
    """Minimum of :func:`bip_distance_wrt` over all bipartitions, with a witness.

    Evaluates the same-side neighbour sum for each of the ``2^(n-1)``
    swap classes (vertex 0 pinned to L).
    """
    _check_cap(g.n, cap, "bipartite distance")
    if g.n == 0:
        return 0, Bipartition(0, 0)
    a = g.adjacency().astype(np.float32)
    deg = a.sum(axis=1)
    best, best_code = None, 0
    for base, x, p in _scan_sides(a):
        # R vertices count R neighbours; L vertices count L neighbours
        mono = (x * p).sum(axis=1) + ((1 - x) * (deg - p)).sum(axis=1)
        c = int(np.argmin(mono))
        val = int(round(float(mono[c])))
        if best is None or val < best:
            best, best_code = val, base + c
    witness = Bipartition.full(g.n, best_code << 1)
    return best, witness


def _max_weighted_cut(weights: np.ndarray) -> tuple[float, int]:
    if weights.shape[0] <= 1:
        return 0.0, 0
    best, best_code = None, 0
    for base, x, p in _scan_sides(weights):
        # each crossing edge counted once, from its L endpoint
        cut = ((1 - x) * p).sum(axis=1)
        c = int(np.argmax(cut))
        if best is None or cut[c] > best:
            best, best_code = float(cut[c]), base + c
    return best, best_code << 1


def exact_maxcut(g: DenseGraph, cap: int = MAXCUT_CAP) -> int:
    """max over S ⊆ V of the number of edges with exactly one endpoint in S."""
    _check_cap(g.n, cap, "MaxCut")
    value, _ = _max_weighted_cut(g.adjacency().astype(np.float32))
    return int(round(value))


def exact_weighted_maxcut(weights: np.ndarray, cap: int = MAXCUT_CAP) -> tuple[int, int]:
    """Max cut of a symmetric nonnegative integer weight matrix; returns (value, S mask)."""
    w = np.asarray(weights, dtype=np.float64)
    _check_cap(w.shape[0], cap, "MaxCut")
    value, mask = _max_weighted_cut(w)
    return int(round(value)), mask


# -- vertex classification ----------------------------------------------------


class VertexLabel(str, enum.Enum):
    L_HEAVY = "LHeavy"
    R_HEAVY = "RHeavy"
    BALANCED1 = "Balanced1"
    BALANCED2 = "Balanced2"


@dataclass(frozen=True)
class ClassificationParams:
    epsilon: Fraction
    k: Fraction
    n: int

    def __post_init__(self):
        object.__setattr__(self, "epsilon", to_fraction(self.epsilon))
        object.__setattr__(self, "k", to_fraction(self.k))
        if not 0 < self.epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 < self.k <= 100:
            raise DomainError(f"k must lie in (0, 100], got {self.k}")
        if self.n < 0:
            raise DomainError("n must be nonnegative")

    @property
    def margin(self) -> Fraction:
        return self.k * self.epsilon * self.n / 150

    @property
    def ratio(self) -> Fraction:
        return 1 + self.k / 200


@dataclass(frozen=True)
class VertexClass:
    labels: frozenset[VertexLabel]

    @property
    def is_heavy(self) -> bool:
        return VertexLabel.L_HEAVY in self.labels or VertexLabel.R_HEAVY in self.labels

    @property
    def is_balanced(self) -> bool:
        return VertexLabel.BALANCED1 in self.labels or VertexLabel.BALANCED2 in self.labels

    def __contains__(self, label) -> bool:
        return VertexLabel(label) in self.labels


def _heavy_towards(own: int, other: int, margin: Fraction, ratio: Fraction) -> bool:
    if own < other + margin:
        return False
    if other >= margin / ratio:
        return own >= ratio * other
    return True


def classify_counts(n_left: int, n_right: int, p: ClassificationParams) -> VertexClass:
    """Heavy/balanced labels from the two side counts of a neighbourhood."""
    m, r = p.margin, p.ratio
    a, b = n_left, n_right
    labels = set()
    if _heavy_towards(a, b, m, r):
        labels.add(VertexLabel.L_HEAVY)
    if _heavy_towards(b, a, m, r):
        labels.add(VertexLabel.R_HEAVY)
    if abs(b - a) < m:
        labels.add(VertexLabel.BALANCED1)
    if (a <= b < r * a) or (b <= a < r * b):
        labels.add(VertexLabel.BALANCED2)
    return VertexClass(frozenset(labels))


def classify_vertex(g: DenseGraph, f: Bipartition, v: int, p: ClassificationParams) -> VertexClass:
    _require_total(g, f)
    if not 0 <= v < g.n:
        raise DomainError(f"vertex {v} out of range")
    if p.n != g.n:
        raise DomainError(f"classification params built for n={p.n}, graph has n={g.n}")
    return classify_counts(*side_counts(g, f, v), p)


# -- text format --------------------------------------------------------------


def parse_graph(text: str) -> DenseGraph:
    """Parse ``n <count>`` followed by one ``u v`` line per edge."""
    n = None
    seen = set()
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise DomainError(f"line {lineno}: expected header 'n <count>'")
            n = int(parts[1])
            if n < 0:
                raise DomainError(f"line {lineno}: negative vertex count")
            continue
        if len(parts) != 2:
            raise DomainError(f"line {lineno}: expected 'u v'")
        u, v = int(parts[0]), int(parts[1])
        if not (0 <= u < n and 0 <= v < n):
            raise DomainError(f"line {lineno}: vertex out of range [0, {n})")
        if u == v:
            raise DomainError(f"line {lineno}: self-loop at {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise DomainError(f"line {lineno}: duplicate edge {key}")
        seen.add(key)
        edges.append(key)
    if n is None:
        raise DomainError("missing header 'n <count>'")
    return DenseGraph.from_edges(n, edges)


def format_graph(g: DenseGraph) -> str:
    lines = [f"n {g.n}"]
    lines.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(lines) + "\n"


def read_graph(path) -> DenseGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def write_graph(path, g: DenseGraph) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_graph(g))
