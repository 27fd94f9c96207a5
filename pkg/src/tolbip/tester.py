"""The tolerant bipartiteness tester.

The sampling phase draws ``t`` vertex sets ``X_i`` and ``λ`` vertex pairs ``Z``, then
queries every pair between ``C = ∪ X_i`` and ``V(Z)`` plus the ``λ`` pairs
themselves.  The evaluation phase works offline: for every bipartition of every ``X_i`` it
labels ``V(Z)`` by the neighbour-majority rule and accepts as soon as the
monochromatic-edge statistic ζ falls under ``(2 + k/20)·ε``.

All decisions compare integers against exact rationals.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .graph import Side, to_fraction
from .oracle import QueryLedger, QueryOracle

log = logging.getLogger(__name__)

EXTENSION_DIVISOR = 225000
_BLOCK = 4096


class TieBreak(str, enum.Enum):
    ALWAYS_L = "AlwaysL"
    ALWAYS_R = "AlwaysR"
    COIN = "Coin"


class Decision(str, enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"


@dataclass(frozen=True)
class TesterParams:
    """Tester configuration.

    ``t``, ``x_size`` and ``z_size`` override the formulas driven by
    ``c1``, ``c2``, ``c3`` when given.  A derived ``x_size`` above
    ``x_size_cap`` is clamped and the verdict flags it; an explicit
    override above the cap is an error.
    """

    __test__ = False  # keeps pytest from collecting this class

    epsilon: Fraction
    k: Fraction = Fraction(1)
    c1: Fraction = Fraction(1)
    c2: Fraction = Fraction(1)
    c3: Fraction = Fraction(1)
    t: Optional[int] = None
    x_size: Optional[int] = None
    z_size: Optional[int] = None
    x_size_cap: int = 16
    tie_break: TieBreak = TieBreak.ALWAYS_L
    seed: int = 0

    def __post_init__(self):
        for name in ("epsilon", "k", "c1", "c2", "c3"):
            object.__setattr__(self, name, to_fraction(getattr(self, name)))
        object.__setattr__(self, "tie_break", TieBreak(self.tie_break))
        if not 0 < self.epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 < self.k <= 100:
            raise DomainError(f"k must lie in (0, 100], got {self.k}")
        if min(self.c1, self.c2, self.c3) <= 0:
            raise DomainError("constants c1, c2, c3 must be positive")
        if self.x_size_cap < 1:
            raise DomainError("x_size_cap must be positive")
        if self.t is not None and self.t < 1:
            raise DomainError("t must be at least 1")
        if self.x_size is not None and not 1 <= self.x_size <= self.x_size_cap:
            raise ConfigurationError(f"x_size override {self.x_size} outside [1, {self.x_size_cap}]")
        if self.z_size is not None and self.z_size < 0:
            raise DomainError("z_size must be nonnegative")

    @property
    def _log_term(self) -> float:
        return math.log2(1 / float(self.k * self.epsilon))

    def derived_t(self) -> int:
        return max(1, math.ceil(math.log2(float(self.c1 / (self.k * self.epsilon)))))

    def derived_x_size(self) -> int:
        return max(1, math.ceil(float(self.c2 / (self.k**3 * self.epsilon)) * self._log_term))

    def derived_z_size(self) -> int:
        return max(1, math.ceil(float(self.c3 / (self.k**5 * self.epsilon**2)) * self._log_term))

    def resolved(self) -> tuple[int, int, int, bool]:
        """(t, x_size, z_size, clamped)."""
        t = self.t if self.t is not None else self.derived_t()
        clamped = False
        if self.x_size is not None:
            x = self.x_size
        else:
            x = self.derived_x_size()
            if x > self.x_size_cap:
                x, clamped = self.x_size_cap, True
        z = self.z_size if self.z_size is not None else self.derived_z_size()
        return t, x, z, clamped

    @property
    def zeta_threshold(self) -> Fraction:
        return (2 + self.k / 20) * self.epsilon

    def extension_margin(self, x_size: int) -> Fraction:
        return self.k * self.epsilon * x_size / EXTENSION_DIVISOR


@dataclass(frozen=True)
class Witness:
    i: int
    j: int
    zeta: Fraction


@dataclass(frozen=True)
class Verdict:
    decision: Decision
    witness: Optional[Witness]
    ledger: QueryLedger
    clamped: bool
    zeta_threshold: Fraction
    min_zeta: Optional[Fraction]
    t: int
    x_size: int
    z_size: int
    evaluated: int

    @property
    def accepted(self) -> bool:
        return self.decision is Decision.ACCEPT

    @property
    def zeta(self) -> Optional[Fraction]:
        """Witness ζ on Accept, smallest ζ seen on Reject."""
        return self.witness.zeta if self.witness else self.min_zeta

    def record(self) -> dict:
        return {
            "decision": self.decision.value,
            "witness_i": None if self.witness is None else self.witness.i,
            "witness_j": None if self.witness is None else self.witness.j,
            "zeta": None if self.zeta is None else str(self.zeta),
            "zeta_threshold": str(self.zeta_threshold),
            "total_queries": self.ledger.total_queries,
            "distinct_pairs": self.ledger.distinct_pairs,
            "sampled_vertices": self.ledger.sampled_vertices,
            "clamped": self.clamped,
            "t": self.t,
            "x_size": self.x_size,
            "z_size": self.z_size,
        }


@dataclass(frozen=True)
class SampledSets:
    """Everything the sampling phase learns about the graph.

    ``answers`` maps each queried unordered pair ``(min, max)`` to its bit.
    """

    x_sets: tuple[tuple[int, ...], ...]
    z_pairs: tuple[tuple[int, int], ...]
    answers: dict = field(default_factory=dict, compare=False)
    z_edge_bits: tuple[bool, ...] = ()

    @property
    def c_vertices(self) -> tuple[int, ...]:
        return tuple(sorted({v for xs in self.x_sets for v in xs}))

    @property
    def z_vertices(self) -> tuple[int, ...]:
        """V(Z) in order of first appearance."""
        return tuple(dict.fromkeys(v for pair in self.z_pairs for v in pair))


def _key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def sample_pairs(rng: np.random.Generator, n: int, count: int) -> list[tuple[int, int]]:
    """``count`` uniform pairs with replacement; equal endpoints are redrawn."""
    if count and n < 2:
        raise DomainError("pair sampling needs n >= 2")
    a = rng.integers(0, n, size=count)
    b = rng.integers(0, n, size=count)
    bad = np.flatnonzero(a == b)
    while bad.size:
        b[bad] = rng.integers(0, n, size=bad.size)
        bad = bad[a[bad] == b[bad]]
    return [(int(u), int(v)) for u, v in zip(a, b)]


def gather(o: QueryOracle, x_sets, z_pairs) -> SampledSets:
    """Run the query plan; no unordered pair is asked twice."""
    sets = SampledSets(tuple(tuple(int(v) for v in xs) for xs in x_sets), tuple(z_pairs))
    answers = sets.answers
    vz = sets.z_vertices
    for c in sets.c_vertices:
        for z in vz:
            if c == z:
                continue
            key = _key(c, z)
            if key not in answers:
                answers[key] = o.query(*key)
    bits = []
    for a, b in sets.z_pairs:
        key = _key(a, b)
        if key not in answers:
            answers[key] = o.query(*key)
        bits.append(answers[key])
    object.__setattr__(sets, "z_edge_bits", tuple(bits))
    return sets


def predicted_query_count(realized: SampledSets) -> int:
    """Closed-form size of the query plan used by :func:`gather`.

    ``|C|·|V(Z)|`` block entries, minus the ``s = |C ∩ V(Z)|`` self pairs,
    minus the ``s(s-1)/2`` pairs that appear in the block in both orders,
    plus the distinct Z pairs with no endpoint in ``C``.
    """
    c = set(realized.c_vertices)
    vz = set(realized.z_vertices)
    s = len(c & vz)
    block = len(c) * len(vz) - s - s * (s - 1) // 2
    outside = {_key(a, b) for a, b in realized.z_pairs if a not in c and b not in c}
    return block + len(outside)


def extend_label(n_left: int, n_right: int, theta, policy=TieBreak.ALWAYS_L, rng=None) -> Side:
    """Side for a vertex outside ``X_i`` given its neighbour counts in ``X_i``."""
    theta = to_fraction(theta)
    if n_right > n_left + theta:
        return Side.L
    if n_left > n_right + theta:
        return Side.R
    policy = TieBreak(policy)
    if policy is TieBreak.ALWAYS_L:
        return Side.L
    if policy is TieBreak.ALWAYS_R:
        return Side.R
    if rng is None:
        raise ConfigurationError("Coin tie-break needs an rng")
    return Side.R if rng.integers(0, 2) else Side.L


def compute_zeta(z_pairs: Sequence[tuple[int, int]], z_edge_bits: Sequence[bool], labels: Mapping[int, Side]) -> Fraction:
    """2 · (pairs that are monochromatic edges) / λ."""
    lam = len(z_pairs)
    if lam < 1:
        raise DomainError("ζ needs at least one pair")
    if len(z_edge_bits) != lam:
        raise DomainError("one edge bit per pair required")
    hits = 0
    for (a, b), e in zip(z_pairs, z_edge_bits):
        try:
            la, lb = labels[a], labels[b]
        except KeyError as exc:
            raise DomainError(f"vertex {exc.args[0]} has no label") from None
        if e and Side(la) is Side(lb):
            hits += 1
    return Fraction(2 * hits, lam)


def enumerate_bipartitions(x_size: int, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
    """Side matrix (1 = R) for codes ``start..stop``; column 0 is pinned to L.

    Bit ``b`` of code ``j`` puts ``X[b+1]`` on side R.
    """
    total = 1 << max(x_size - 1, 0)
    stop = total if stop is None else min(stop, total)
    codes = np.arange(start, stop, dtype=np.int64)
    sides = np.zeros((codes.size, x_size), dtype=np.int32)
    if x_size > 1:
        sides[:, 1:] = (codes[:, None] >> np.arange(x_size - 1)) & 1
    return sides


def _tie_fill(policy: TieBreak, shape, coin_rng) -> np.ndarray:
    if policy is TieBreak.ALWAYS_L:
        return np.zeros(shape, dtype=np.int8)
    if policy is TieBreak.ALWAYS_R:
        return np.ones(shape, dtype=np.int8)
    return coin_rng.integers(0, 2, size=shape, dtype=np.int8)


def evaluate(sets: SampledSets, p: TesterParams, x_size: int, coin_rng=None):
    """The evaluation phase, run on frozen data.

    Returns ``(witness, min_zeta, evaluated)`` where ``witness`` is the first
    ``(i, j)`` in canonical order with ζ under the threshold.
    """
    lam = len(sets.z_pairs)
    vz = sets.z_vertices
    row_of = {v: r for r, v in enumerate(vz)}
    a_idx = np.array([row_of[a] for a, _ in sets.z_pairs], dtype=np.int64)
    b_idx = np.array([row_of[b] for _, b in sets.z_pairs], dtype=np.int64)
    edge = np.array(sets.z_edge_bits, dtype=bool)
    ea, eb = a_idx[edge], b_idx[edge]

    thr = p.zeta_threshold
    # 2·cnt/λ <= num/den  <=>  2·cnt·den <= num·λ
    thr_num, thr_den = thr.numerator, thr.denominator
    theta_floor = math.floor(p.extension_margin(x_size))
    answers = sets.answers

    best = None
    evaluated = 0
    for i, xs in enumerate(sets.x_sets):
        adj = np.zeros((len(vz), len(xs)), dtype=np.int32)
        for s, xv in enumerate(xs):
            for r, z in enumerate(vz):
                if z != xv and answers[_key(z, xv)]:
                    adj[r, s] = 1
        deg = adj.sum(axis=1)
        in_x = [(row_of[xv], s) for s, xv in enumerate(xs) if xv in row_of]
        total = 1 << (len(xs) - 1)
        for start in range(0, total, _BLOCK):
            sides = enumerate_bipartitions(len(xs), start, start + _BLOCK)
            n_right = adj @ sides.T
            diff = 2 * n_right - deg[:, None]  # nR - nL
            labels = _tie_fill(p.tie_break, diff.shape, coin_rng)
            labels[diff > theta_floor] = 0
            labels[-diff > theta_floor] = 1
            for r, s in in_x:
                labels[r] = sides[:, s]
            cnt = (labels[ea] == labels[eb]).sum(axis=0) if ea.size else np.zeros(sides.shape[0], np.int64)
            evaluated += sides.shape[0]
            c_min = int(cnt.min())
            if best is None or c_min < best:
                best = c_min
            ok = np.flatnonzero(2 * cnt.astype(np.int64) * thr_den <= thr_num * lam)
            if ok.size:
                j = start + int(ok[0])
                w = Witness(i, j, Fraction(2 * int(cnt[ok[0]]), lam))
                return w, Fraction(2 * best, lam), evaluated
    return None, (None if best is None else Fraction(2 * best, lam)), evaluated


def draw_samples(n: int, t: int, x_size: int, z_size: int, rng: np.random.Generator):
    x_sets = [tuple(int(v) for v in rng.choice(n, size=x_size, replace=False)) for _ in range(t)]
    z_pairs = sample_pairs(rng, n, z_size)
    return x_sets, z_pairs


def run_tester_with_sets(o: QueryOracle, p: TesterParams) -> tuple[Verdict, SampledSets]:
    """Run the tester and also return the realized samples and answers."""
    n = o.n
    if n < 2:
        raise DomainError("tester needs n >= 2")
    t, x, z, clamped = p.resolved()
    if x > n:
        raise ConfigurationError(f"x_size {x} exceeds n={n}")
    if z < 1:
        raise ConfigurationError("z_size must be at least 1 to run the tester")
    if x > n / 10:
        log.warning("|X_i|=%d exceeds n/10=%.1f; sampling regime assumption is weak", x, n / 10)

    sample_seq, coin_seq = np.random.SeedSequence(p.seed).spawn(2)
    rng = np.random.default_rng(sample_seq)
    x_sets, z_pairs = draw_samples(n, t, x, z, rng)
    o.record_sampled_vertices(t * x)
    o.record_sampled_vertices(2 * z)

    sets = gather(o, x_sets, z_pairs)
    frozen = o.ledger()

    coin_rng = np.random.default_rng(coin_seq) if p.tie_break is TieBreak.COIN else None
    witness, min_zeta, evaluated = evaluate(sets, p, x, coin_rng)

    if o.ledger() != frozen:
        raise RuntimeError("oracle was queried after the sampling phase")
    decision = Decision.ACCEPT if witness is not None else Decision.REJECT
    verdict = Verdict(decision, witness, frozen, clamped, p.zeta_threshold, min_zeta, t, x, z, evaluated)
    return verdict, sets


def run_tester(o: QueryOracle, p: TesterParams) -> Verdict:
    return run_tester_with_sets(o, p)[0]
