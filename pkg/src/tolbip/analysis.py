"""Exact checks of the completeness-proof bookkeeping on small graphs.

Everything here is deterministic counting over bitmask rows.  The sweep at
the bottom enumerates small graphs, sample sets and fill policies and tallies
which inequalities hold.
"""

from __future__ import annotations

import enum
import functools
import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .errors import DomainError, VerificationFailure
from .graph import (
    BIP_CAP,
    Bipartition,
    ClassificationParams,
    DenseGraph,
    Side,
    VertexClass,
    VertexLabel,
    _bits,
    _full,
    bip_distance_wrt,
    classify_counts,
    exact_bip_distance,
    side_counts,
)

HEAVY_MARGIN_DIVISOR = 225000


def _mask(vertices: Iterable[int] | int) -> int:
    if isinstance(vertices, int):
        return vertices
    return sum(1 << v for v in set(vertices))


@functools.lru_cache(maxsize=4096)
def classify_all(g: DenseGraph, f: Bipartition, p: ClassificationParams) -> tuple[VertexClass, ...]:
    if not f.is_total_on(g.n):
        raise DomainError("bipartition must be total on V(G)")
    if p.n != g.n:
        raise DomainError(f"classification params built for n={p.n}, graph has n={g.n}")
    return tuple(classify_counts(*side_counts(g, f, v), p) for v in range(g.n))


def heavy_set(g: DenseGraph, f: Bipartition, p: ClassificationParams) -> frozenset[int]:
    return frozenset(v for v, c in enumerate(classify_all(g, f, p)) if c.is_heavy)


def balanced_set(g: DenseGraph, f: Bipartition, p: ClassificationParams) -> frozenset[int]:
    return frozenset(v for v, c in enumerate(classify_all(g, f, p)) if c.is_balanced)


def _same_count(g: DenseGraph, f: Bipartition, v: int) -> int:
    return (g.row(v) & f.same_side_mask(v)).bit_count()


def compute_pi(g: DenseGraph, f: Bipartition, x_set, p: ClassificationParams) -> int:
    """Same-side degree summed over balanced vertices outside ``x_set``."""
    xm = _mask(x_set)
    classes = classify_all(g, f, p)
    return sum(_same_count(g, f, v) for v in range(g.n) if classes[v].is_balanced and not (xm >> v) & 1)


def mono_between(g: DenseGraph, f: Bipartition, src: int, dst: int) -> int:
    """Ordered monochromatic edges (u, v) with u in mask ``src`` and v in mask ``dst``."""
    return sum((g.row(u) & dst & f.same_side_mask(u)).bit_count() for u in _bits(src))


@dataclass(frozen=True)
class ProofContext:
    """An optimal bipartition, a sample set and a chosen subset of heavy vertices.

    ``f_opt`` is checked against brute force on construction.
    """

    graph: DenseGraph
    f_opt: Bipartition
    x_set: frozenset[int]
    params: ClassificationParams
    h_prime: frozenset[int]
    d_opt: int = field(default=-1, compare=False)
    classes: tuple = field(default=(), compare=False, repr=False)
    _masks: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        g = self.graph
        object.__setattr__(self, "x_set", frozenset(self.x_set))
        object.__setattr__(self, "h_prime", frozenset(self.h_prime))
        if any(not 0 <= v < g.n for v in self.x_set):
            raise DomainError("x_set references vertices outside the graph")
        d_f = bip_distance_wrt(g, self.f_opt)
        if self.d_opt < 0:
            object.__setattr__(self, "d_opt", exact_bip_distance(g, cap=max(BIP_CAP, g.n))[0])
        if d_f != self.d_opt:
            raise DomainError(f"f_opt has distance {d_f}, optimum is {self.d_opt}")
        classes = classify_all(g, self.f_opt, self.params)
        object.__setattr__(self, "classes", classes)
        masks = {
            "heavy": self.mask_of(lambda c: c.is_heavy),
            "balanced": self.mask_of(lambda c: c.is_balanced),
            "b1": self.mask_of(lambda c: VertexLabel.BALANCED1 in c.labels),
            "b2": self.mask_of(lambda c: VertexLabel.BALANCED2 in c.labels),
        }
        object.__setattr__(self, "_masks", masks)
        if _mask(self.h_prime) & ~masks["heavy"]:
            heavy = set(_bits(masks["heavy"]))
            raise DomainError(f"h_prime contains non-heavy vertices {sorted(self.h_prime - heavy)}")

    @classmethod
    def build(cls, g: DenseGraph, params: ClassificationParams, x_set=(), h_prime=None, f_opt=None):
        """Brute-force ``f_opt`` when absent; ``h_prime`` defaults to the whole heavy set."""
        d = -1
        if f_opt is None:
            d, f_opt = exact_bip_distance(g, cap=max(BIP_CAP, g.n))
        if h_prime is None:
            h_prime = heavy_set(g, f_opt, params)
        return cls(g, f_opt, frozenset(x_set), params, frozenset(h_prime), d_opt=d)

    def mask_of(self, pred) -> int:
        return sum(1 << v for v, c in enumerate(self.classes) if pred(c))

    @property
    def heavy_mask(self) -> int:
        return self._masks["heavy"]

    @property
    def balanced_mask(self) -> int:
        return self._masks["balanced"]


class RestPolicy(str, enum.Enum):
    COPY_F = "CopyF"
    ADVERSARIAL_WORST = "AdversarialWorst"
    ARBITRARY = "Arbitrary"


def _forced_sides(ctx: ProofContext) -> dict[int, Side]:
    forced = {v: ctx.f_opt.side(v) for v in ctx.x_set}
    for v in ctx.h_prime - ctx.x_set:
        labels = ctx.classes[v].labels
        # heavy towards L means most neighbours sit on L, so v goes to R
        forced[v] = Side.R if VertexLabel.L_HEAVY in labels else Side.L
    return forced


def build_special_bipartition(ctx: ProofContext, rest_policy=RestPolicy.COPY_F, seed=None) -> Bipartition:
    """Agree with ``f_opt`` on X, push H′ opposite its heavy side, fill the rest by policy.

    ``AdversarialWorst`` walks free vertices in index order and puts each on
    the side holding more of its already-placed neighbours (ties to L).
    """
    policy = RestPolicy(rest_policy)
    g = ctx.graph
    sides = _forced_sides(ctx)
    free = [v for v in range(g.n) if v not in sides]
    if policy is RestPolicy.COPY_F:
        for v in free:
            sides[v] = ctx.f_opt.side(v)
    elif policy is RestPolicy.ARBITRARY:
        coins = np.random.default_rng(seed).integers(0, 2, size=len(free))
        for v, c in zip(free, coins):
            sides[v] = Side.R if c else Side.L
    else:
        left = right = 0
        for v, s in sides.items():
            if s is Side.R:
                right |= 1 << v
            else:
                left |= 1 << v
        for v in free:
            row = g.row(v)
            if (row & right).bit_count() > (row & left).bit_count():
                sides[v] = Side.R
                right |= 1 << v
            else:
                sides[v] = Side.L
                left |= 1 << v
    return Bipartition.full(g.n, [v for v, s in sides.items() if s is Side.R])


def is_special(ctx: ProofContext, spl: Bipartition) -> bool:
    if not spl.is_total_on(ctx.graph.n):
        return False
    return all(spl.side(v) is s for v, s in _forced_sides(ctx).items())


def is_derived(candidate: Bipartition, f: Bipartition, x_set, g: DenseGraph) -> bool:
    """True iff ``candidate`` is total on ``g`` and agrees with ``f`` on ``x_set``."""
    if not candidate.is_total_on(g.n):
        return False
    return all(candidate.side(v) is f.side(v) for v in x_set)


@dataclass(frozen=True)
class DecompositionReport:
    """Distance of a special bipartition split over the three source sets.

    ``d_cross`` counts ordered monochromatic edges leaving ``H′ ∪ X`` and is
    what makes ``d_spl = d_a + d_b + d_c + d_cross`` exact.  ``s1``/``s2`` are
    the degree sums over type-1 / type-2 balanced vertices outside X.
    """

    d_spl: int
    d_a: int
    d_b: int
    d_c: int
    d_cross: int
    d_opt: int
    pi: int
    t1: Fraction
    t2: Fraction
    s1: int
    s2: int

    @property
    def three_term_bound(self) -> bool:
        return self.d_spl <= self.d_a + self.d_b + self.d_c

    @property
    def identity(self) -> bool:
        return self.d_spl == self.d_a + self.d_b + self.d_c + self.d_cross

    @property
    def inner_bound(self) -> bool:
        return self.d_a <= self.d_opt - self.pi

    @property
    def balanced_bound(self) -> bool:
        return self.d_c <= self.t1 + self.t2

    @property
    def failures(self) -> list[str]:
        checks = {
            "three_term_bound": self.three_term_bound,
            "inner_bound": self.inner_bound,
            "balanced_bound": self.balanced_bound,
        }
        return [name for name, ok in checks.items() if not ok]


def check_decomposition(ctx: ProofContext, spl: Bipartition, strict: bool = True) -> DecompositionReport:
    """Compute every term for ``spl``; raise on a failed inequality when ``strict``."""
    if not is_special(ctx, spl):
        raise DomainError("spl is not a special bipartition for this context")
    g, f, p = ctx.graph, ctx.f_opt, ctx.params
    full = _full(g.n)
    xm = _mask(ctx.x_set)
    inner = _mask(ctx.h_prime) | xm
    heavy, balanced = ctx.heavy_mask, ctx.balanced_mask
    rest_heavy = heavy & ~inner
    bal_out = balanced & ~xm

    d_a = mono_between(g, spl, inner, inner)
    d_cross = mono_between(g, spl, inner, full & ~inner)
    d_b = mono_between(g, spl, rest_heavy, full)
    d_c = mono_between(g, spl, bal_out, full)

    same = [_same_count(g, f, v) for v in range(g.n)]
    b1 = ctx._masks["b1"] & ~xm
    b2 = ctx._masks["b2"] & ~xm
    pi = sum(same[v] for v in _bits(bal_out))
    t1 = 2 * sum(same[v] for v in _bits(b1)) + p.margin * g.n
    t2 = (2 + p.k / 200) * sum(same[v] for v in _bits(b2))
    s1 = sum(g.degree(v) for v in _bits(b1))
    s2 = sum(g.degree(v) for v in _bits(b2))

    report = DecompositionReport(
        d_spl=bip_distance_wrt(g, spl),
        d_a=d_a,
        d_b=d_b,
        d_c=d_c,
        d_cross=d_cross,
        d_opt=ctx.d_opt,
        pi=pi,
        t1=t1,
        t2=t2,
        s1=s1,
        s2=s2,
    )
    if strict and report.failures:
        raise VerificationFailure(f"failed: {', '.join(report.failures)}", report)
    return report


def check_optimal_placement(g: DenseGraph, p: ClassificationParams, f: Optional[Bipartition] = None) -> bool:
    """Every heavy vertex of an optimal ``f`` sits opposite its heavy side."""
    if f is None:
        f = exact_bip_distance(g, cap=max(BIP_CAP, g.n))[1]
    for v, c in enumerate(classify_all(g, f, p)):
        if VertexLabel.L_HEAVY in c.labels and f.side(v) is not Side.R:
            return False
        if VertexLabel.R_HEAVY in c.labels and f.side(v) is not Side.L:
            return False
    return True


@dataclass(frozen=True)
class HeavyMargin:
    vertex: int
    heavy_side: Side
    margin: int
    threshold: Fraction

    @property
    def meets(self) -> bool:
        return self.margin >= self.threshold


def heavy_margin_statistic(g: DenseGraph, f: Bipartition, x_set, p: ClassificationParams) -> list[HeavyMargin]:
    """In-sample lead of each heavy vertex towards its heavy side.

    ``margin`` is (neighbours in X on the heavy side) minus (neighbours in X
    on the other side); ``threshold`` is ``k²·ε·|X|/225000``.
    """
    xm = _mask(x_set)
    size = xm.bit_count()
    thr = p.k**2 * p.epsilon * size / HEAVY_MARGIN_DIVISOR
    xl, xr = f.left_mask & xm, f.right_mask & xm
    out = []
    for v, c in enumerate(classify_all(g, f, p)):
        if not c.is_heavy:
            continue
        row = g.row(v)
        a, b = (row & xl).bit_count(), (row & xr).bit_count()
        if VertexLabel.L_HEAVY in c.labels:
            out.append(HeavyMargin(v, Side.L, a - b, thr))
        else:
            out.append(HeavyMargin(v, Side.R, b - a, thr))
    return out


# -- exhaustive sweep ---------------------------------------------------------

SWEEP_GRID = ((Fraction(1, 2), Fraction(100)), (Fraction(9, 10), Fraction(100)), (Fraction(3, 10), Fraction(50)), (Fraction(1, 10), Fraction(10)))

SWEEP_CHECKS = (
    "three_term_bound",
    "inner_bound",
    "balanced_bound",
    "identity",
    "optimal_placement",
    "special_compliance",
    "copy_equals_opt",
    "classification",
)


def all_graphs(n: int) -> Iterable[DenseGraph]:
    """Every labelled simple graph on ``n`` vertices."""
    pairs = list(itertools.combinations(range(n), 2))
    for code in range(1 << len(pairs)):
        rows = [0] * n
        for b, (u, v) in enumerate(pairs):
            if (code >> b) & 1:
                rows[u] |= 1 << v
                rows[v] |= 1 << u
        yield DenseGraph(n, rows)


def random_graphs(n: int, count: int, seed) -> Iterable[DenseGraph]:
    rng = np.random.default_rng(seed)
    for _ in range(count):
        upper = np.triu(rng.random((n, n)) < rng.uniform(0.1, 0.9), k=1)
        yield DenseGraph.from_matrix(upper | upper.T)


@dataclass
class SweepSummary:
    graphs: int = 0
    contexts: int = 0
    checks: dict = field(default_factory=lambda: {name: 0 for name in SWEEP_CHECKS})
    failures: dict = field(default_factory=lambda: {name: 0 for name in SWEEP_CHECKS})
    examples: dict = field(default_factory=dict)
    seconds: float = 0.0

    def tally(self, name: str, ok: bool, example=None) -> None:
        self.checks[name] += 1
        if not ok:
            self.failures[name] += 1
            self.examples.setdefault(name, example)

    @property
    def ok(self) -> bool:
        return not any(self.failures.values())

    def table(self) -> str:
        lines = [f"{'check':<20} {'checked':>9} {'failed':>8}  status"]
        for name in SWEEP_CHECKS:
            status = "PASS" if self.failures[name] == 0 else "FAIL"
            lines.append(f"{name:<20} {self.checks[name]:>9} {self.failures[name]:>8}  {status}")
        lines.append(f"graphs={self.graphs} contexts={self.contexts} seconds={self.seconds:.1f}")
        return "\n".join(lines)


def sweep_graph(summary: SweepSummary, g: DenseGraph, params: ClassificationParams, x_max: int = 3, seed=0) -> None:
    d, f = exact_bip_distance(g, cap=max(BIP_CAP, g.n))
    classes = classify_all(g, f, params)
    for v, c in enumerate(classes):
        ok = bool(c.labels) and (c.is_heavy != c.is_balanced)
        summary.tally("classification", ok, (g, params, v))
    summary.tally("optimal_placement", check_optimal_placement(g, params, f), (g, params))
    heavy = frozenset(v for v, c in enumerate(classes) if c.is_heavy)
    summary.graphs += 1
    for size in range(min(x_max, g.n) + 1):
        for xs in itertools.combinations(range(g.n), size):
            ctx = ProofContext(g, f, frozenset(xs), params, heavy, d_opt=d)
            summary.contexts += 1
            for policy in RestPolicy:
                spl = build_special_bipartition(ctx, policy, seed=seed)
                summary.tally("special_compliance", is_special(ctx, spl), (g, xs, policy))
                if policy is RestPolicy.COPY_F:
                    summary.tally("copy_equals_opt", spl == f, (g, xs))
                rep = check_decomposition(ctx, spl, strict=False)
                example = (g, params, f, xs, policy, rep)
                summary.tally("three_term_bound", rep.three_term_bound, example)
                summary.tally("inner_bound", rep.inner_bound, example)
                summary.tally("balanced_bound", rep.balanced_bound, example)
                summary.tally("identity", rep.identity, example)


def run_sweep(max_exhaustive_n: int = 5, random_n: int = 6, random_count: int = 3901, x_max: int = 3, seed=0, grid=SWEEP_GRID) -> SweepSummary:
    """Every graph up to ``max_exhaustive_n`` vertices plus random graphs on ``random_n``.

    Parameters ``(ε, k)`` rotate through ``grid`` by graph index.
    """
    summary = SweepSummary()
    start = time.perf_counter()
    graphs = itertools.chain(
        *(all_graphs(n) for n in range(1, max_exhaustive_n + 1)),
        random_graphs(random_n, random_count, seed),
    )
    for idx, g in enumerate(graphs):
        eps, k = grid[idx % len(grid)]
        sweep_graph(summary, g, ClassificationParams(eps, k, g.n), x_max=x_max, seed=seed + idx)
    summary.seconds = time.perf_counter() - start
    return summary
