"""Sampling estimators for edge count, MaxCut and bipartite distance.

Values are exact rationals in ordered-count units where a distance is
involved.  The tolerant decider composes these into an Accept/Reject rule
with query cost independent of ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from statistics import median
from typing import Callable, Optional

import numpy as np

from .errors import CapacityError, DomainError
from .graph import MAXCUT_CAP, exact_weighted_maxcut, to_fraction
from .oracle import QueryOracle
from .tester import Decision, sample_pairs

C_EDGES = 3
C_MAXCUT = 1


@dataclass(frozen=True)
class Estimate:
    value: Fraction
    queries_used: int
    additive_target: Fraction

    def record(self) -> dict:
        return {
            "value": str(self.value),
            "value_float": float(self.value),
            "queries_used": self.queries_used,
            "additive_target": str(self.additive_target),
        }


def _eps(epsilon) -> Fraction:
    eps = to_fraction(epsilon)
    if not 0 < eps < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {eps}")
    return eps


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def edge_sample_size(epsilon, c_e=C_EDGES) -> int:
    return math.ceil(to_fraction(c_e) / _eps(epsilon) ** 2)


def estimate_edges(o: QueryOracle, epsilon, seed=0, trials: int = 1, c_e=C_EDGES) -> Estimate:
    """Scaled hit fraction over ``⌈c_e/ε²⌉`` uniform pairs; median over ``trials`` runs."""
    eps = _eps(epsilon)
    n = o.n
    if n < 2:
        raise DomainError("estimate_edges needs n >= 2")
    if trials < 1:
        raise DomainError("trials must be positive")
    s = edge_sample_size(eps, c_e)
    rng = _rng(seed)
    pairs_total = n * (n - 1) // 2
    values = []
    for _ in range(trials):
        hits = sum(o.query(a, b) for a, b in sample_pairs(rng, n, s))
        values.append(Fraction(pairs_total * hits, s))
    return Estimate(Fraction(median(values)), s * trials, eps * n * n)


def estimate_maxcut_pairs(o: QueryOracle, epsilon, seed=0, c_m=C_MAXCUT, cap: int = MAXCUT_CAP) -> Estimate:
    """Best scaled cut of the multigraph of sampled hit pairs.

    ``t = ⌈c_m·n/ε²⌉`` pairs; value is ``C(n,2)/t · max_S (sampled edges across S)``.
    """
    eps = _eps(epsilon)
    n = o.n
    if n > cap:
        raise CapacityError(f"n={n} exceeds MaxCut cap {cap}")
    if n < 2:
        raise DomainError("estimate_maxcut_pairs needs n >= 2")
    t = math.ceil(to_fraction(c_m) * n / eps**2)
    w = np.zeros((n, n), dtype=np.int64)
    for a, b in sample_pairs(_rng(seed), n, t):
        if o.query(a, b):
            w[a, b] += 1
            w[b, a] += 1
    best, _ = exact_weighted_maxcut(w, cap=cap)
    return Estimate(Fraction(n * (n - 1) // 2 * best, t), t, eps * n * n)


def induced_sample_size(epsilon) -> int:
    eps = _eps(epsilon)
    return math.ceil(float(eps**-4) * math.log2(1 / float(eps)))


def estimate_maxcut_induced(
    o: QueryOracle, epsilon, seed=0, t_override: Optional[int] = None, cap: int = MAXCUT_CAP
) -> Estimate:
    """``n²·M(G|S)/t²`` for a uniform ``t``-subset ``S``.

    ``t`` is capped at ``n``: the whole vertex set gives ``M(G)`` exactly.
    """
    eps = _eps(epsilon)
    n = o.n
    t = induced_sample_size(eps) if t_override is None else t_override
    if t < 2:
        raise DomainError("induced sample needs t >= 2")
    t = min(t, n)
    if t > cap:
        raise CapacityError(f"induced sample t={t} exceeds MaxCut cap {cap}; pass t_override")
    s = sorted(int(v) for v in _rng(seed).choice(n, size=t, replace=False))
    w = np.zeros((t, t), dtype=np.int64)
    for i in range(t):
        for j in range(i + 1, t):
            if o.query(s[i], s[j]):
                w[i, j] = w[j, i] = 1
    m, _ = exact_weighted_maxcut(w, cap=cap)
    return Estimate(Fraction(n * n * m, t * t), t * (t - 1) // 2, eps * n * n)


def estimate_bip_distance(
    o: QueryOracle,
    epsilon,
    seed=0,
    t_override: Optional[int] = None,
    cap: int = MAXCUT_CAP,
    c_e=C_EDGES,
) -> Estimate:
    """``2·(Ê − M̂)`` with both parts run at accuracy ``ε/4``."""
    eps = _eps(epsilon)
    edge_seed, cut_seed = np.random.SeedSequence(seed).spawn(2)
    e = estimate_edges(o, eps / 4, seed=edge_seed, c_e=c_e)
    m = estimate_maxcut_induced(o, eps / 4, seed=cut_seed, t_override=t_override, cap=cap)
    n = o.n
    return Estimate(2 * (e.value - m.value), e.queries_used + m.queries_used, eps * n * n)


Estimator = Callable[..., Estimate]


def tolerant_decide_baseline(
    o: QueryOracle,
    epsilon,
    k,
    seed=0,
    t_override: Optional[int] = None,
    cap: int = MAXCUT_CAP,
    estimator: Optional[Estimator] = None,
) -> tuple[Decision, Estimate]:
    """Accept iff the distance estimate at accuracy ``kε/2`` is at most ``(1 + k/2)·ε·n²``."""
    eps = _eps(epsilon)
    k = to_fraction(k)
    if not 0 < k <= 100:
        raise DomainError(f"k must lie in (0, 100], got {k}")
    est_fn = estimator or estimate_bip_distance
    acc = k * eps / 2
    if acc >= 1:
        raise DomainError("k*epsilon/2 must be below 1")
    est = est_fn(o, acc, seed=seed, t_override=t_override, cap=cap)
    n = o.n
    threshold = (1 + k / 2) * eps * n * n
    return (Decision.ACCEPT if est.value <= threshold else Decision.REJECT), est
