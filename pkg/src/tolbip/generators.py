"""Seeded instance families with certified bipartite distance.

Every certified interval is in ordered-count units (each monochromatic edge
counts twice), matching :func:`tolbip.graph.bip_distance_wrt`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import DomainError
from .graph import Bipartition, DenseGraph, to_fraction

# MaxCut(G(n,p)) <= m/2 + FAR_SLACK * n^1.5 w.h.p.; the true excess is about
# 0.38 * sqrt(p(1-p)) * n^1.5, so 0.5 leaves room at every p.
FAR_SLACK = 0.5


@dataclass(frozen=True)
class Instance:
    graph: DenseGraph
    family: str
    planted: Optional[Bipartition] = None
    certified: Optional[tuple[int, int]] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.certified is not None:
            lo, hi = self.certified
            if lo > hi:
                raise DomainError(f"certified interval [{lo}, {hi}] is empty")

    def metadata(self) -> dict:
        meta = {"family": self.family, "n": self.graph.n}
        meta.update(self.params)
        meta["planted_right"] = None if self.planted is None else sorted(self.planted.right)
        meta["certified_lo"] = None if self.certified is None else self.certified[0]
        meta["certified_hi"] = None if self.certified is None else self.certified[1]
        return meta

    def metadata_json(self) -> str:
        return json.dumps(self.metadata(), sort_keys=True, indent=2) + "\n"


def _triu_sample(rng: np.random.Generator, n: int, prob: float, allowed: np.ndarray | None = None):
    """Symmetric boolean matrix with independent upper-triangle entries."""
    draw = rng.random((n, n)) < prob
    upper = np.triu(draw, k=1)
    if allowed is not None:
        upper &= allowed
    return upper | upper.T


def _complete_distance(m: int) -> int:
    return 2 * (m * (m - 1) // 2 - (m * m) // 4)


def gen_planted_close(n: int, epsilon, density, noise_fraction, seed) -> Instance:
    """Balanced random bipartite graph plus ``r`` monochromatic noise edges.

    ``r`` is the largest integer with ``2r <= noise_fraction * epsilon * n^2``.
    The planted sides give ``d_bip <= 2r``.
    """
    eps = to_fraction(epsilon)
    dens = float(density)
    nf = to_fraction(noise_fraction)
    if n < 2:
        raise DomainError("need n >= 2")
    if not 0 < eps < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    if not 0 < dens <= 1:
        raise DomainError("density must lie in (0, 1]")
    if not 0 <= nf < 1:
        raise DomainError("noise_fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    is_right = np.zeros(n, dtype=bool)
    is_right[perm[n // 2 :]] = True
    crossing = is_right[:, None] != is_right[None, :]
    adj = _triu_sample(rng, n, dens, crossing)

    r = math.floor(nf * eps * n * n / 2)
    iu, ju = np.triu_indices(n, k=1)
    mono = ~crossing[iu, ju]
    pool_i, pool_j = iu[mono], ju[mono]
    if r > pool_i.size:
        raise DomainError(f"need {r} noise edges but only {pool_i.size} monochromatic pairs exist")
    pick = rng.choice(pool_i.size, size=r, replace=False) if r else np.empty(0, dtype=np.int64)
    adj[pool_i[pick], pool_j[pick]] = True
    adj[pool_j[pick], pool_i[pick]] = True

    planted = Bipartition.full(n, [int(v) for v in np.flatnonzero(is_right)])
    params = {"epsilon": str(eps), "density": dens, "noise_fraction": str(nf), "seed": seed, "noise_edges": r}
    return Instance(DenseGraph.from_matrix(adj), "planted_close", planted, (0, 2 * r), params)


def gen_far_dense(n: int, p, seed, slack: float = FAR_SLACK) -> Instance:
    """Erdos-Renyi G(n, p) with a concentration-based lower bound on d_bip."""
    p = float(p)
    if n < 2:
        raise DomainError("need n >= 2")
    if not 0 < p <= 1:
        raise DomainError("p must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    adj = _triu_sample(rng, n, p)
    g = DenseGraph.from_matrix(adj)
    m = int(adj.sum()) // 2
    # 2 * (m - (m/2 + slack * n^1.5))
    lo = max(0, math.ceil(m - 2 * slack * n**1.5))
    lo += lo % 2
    lo = min(lo, 2 * m)
    params = {"p": p, "seed": seed, "slack": slack}
    return Instance(g, f"gnp(p={p})", None, (lo, 2 * m), params)


def gen_union_of_cliques(n: int, clique_size: int) -> Instance:
    """Disjoint copies of K_m; distance is exact because it adds over components."""
    m = clique_size
    if m < 3:
        raise DomainError("clique_size must be at least 3")
    if n <= 0 or n % m:
        raise DomainError(f"clique_size {m} must divide n={n}")
    rows = []
    for c in range(n // m):
        block = ((1 << m) - 1) << (c * m)
        rows.extend(block ^ (1 << v) for v in range(c * m, (c + 1) * m))
    d = (n // m) * _complete_distance(m)
    return Instance(DenseGraph(n, rows), "union_of_cliques", None, (d, d), {"clique_size": m})


def gen_complete(n: int) -> Instance:
    if n < 1:
        raise DomainError("need n >= 1")
    d = _complete_distance(n)
    return Instance(DenseGraph.complete(n), "complete", None, (d, d), {})


def gen_complete_bipartite(n: int) -> Instance:
    if n < 2:
        raise DomainError("need n >= 2")
    a = n // 2
    planted = Bipartition.full(n, range(a, n))
    return Instance(DenseGraph.complete_bipartite(a, n - a), "complete_bipartite", planted, (0, 0), {})


def far_threshold(epsilon, k, n: int) -> Fraction:
    """(2 + k) * epsilon * n^2, the soundness side of the promise."""
    return (2 + to_fraction(k)) * to_fraction(epsilon) * n * n


FAMILIES = {
    "planted_close": gen_planted_close,
    "far_dense": gen_far_dense,
    "union_of_cliques": gen_union_of_cliques,
    "complete": gen_complete,
    "complete_bipartite": gen_complete_bipartite,
}

SEEDED = {"planted_close", "far_dense"}


def generate(family: str, seed, **params) -> Instance:
    """Dispatch by family name; unseeded families ignore ``seed``."""
    try:
        fn = FAMILIES[family]
    except KeyError:
        raise DomainError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}") from None
    if family in SEEDED:
        return fn(seed=seed, **params)
    return fn(**params)
