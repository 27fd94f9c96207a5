"""Seeded trial farms over generated instances.

Configuration is an INI file::

    [experiment]
    trials = 100
    master_seed = 1
    algorithm = tester          ; or baseline
    reuse_instance = false      ; one instance for all trials
    workers = 1
    repetitions = 1             ; odd r > 1 takes a majority vote
    timing = true               ; false writes runtime_ms = 0 (byte-stable files)
    output = results.csv
    format = csv                ; or record (JSON lines)

    [family]
    name = planted_close
    n = 600
    epsilon = 0.05
    density = 0.5
    noise_fraction = 0.5

    [tester]
    epsilon = 0.05
    k = 1
    t = 4
    x_size = 12
    z_size = 2000

    [baseline]
    estimator = decide          ; edges, maxcut_pairs, maxcut_induced, bip_distance, decide
    epsilon = 0.05
    k = 1
    t_override = 22
    cap = 22

Trial ``i`` uses seed ``trial_seed(master_seed, i)``; the instance is built
from that seed and the algorithm from ``trial_seed(seed, 1)``.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from statistics import median
from typing import Optional

from . import baselines
from .errors import CapacityError, ConfigurationError
from .generators import FAMILIES, generate
from .oracle import AdjacencyOracle, QueryLedger
from .tester import Decision, TesterParams, run_tester

CSV_COLUMNS = ("trial", "seed", "decision", "zeta", "total_queries", "distinct_pairs", "sampled_vertices", "runtime_ms")

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(master_seed: int, trial: int) -> int:
    """64-bit seed for ``trial``: splitmix64 of the mixed master seed xor the index."""
    return splitmix64(splitmix64(master_seed & _MASK64) ^ trial)


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    if z <= 0:
        raise ValueError("z must be positive")
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # the bounds are exactly 0 and 1 at the extremes; avoid cancellation residue
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


# -- configuration ------------------------------------------------------------

_EXPERIMENT_KEYS = {"trials", "master_seed", "algorithm", "reuse_instance", "workers", "repetitions", "timing", "output", "format"}
_FAMILY_TYPES = {
    "planted_close": {"n": int, "epsilon": str, "density": float, "noise_fraction": str},
    "far_dense": {"n": int, "p": float, "slack": float},
    "union_of_cliques": {"n": int, "clique_size": int},
    "complete": {"n": int},
    "complete_bipartite": {"n": int},
}
_TESTER_TYPES = {
    "epsilon": str, "k": str, "c1": str, "c2": str, "c3": str,
    "t": int, "x_size": int, "z_size": int, "x_size_cap": int, "tie_break": str,
}
_BASELINE_TYPES = {
    "estimator": str, "epsilon": str, "k": str, "t_override": int, "cap": int, "trials": int, "c_e": str, "c_m": str,
}
ESTIMATORS = ("edges", "maxcut_pairs", "maxcut_induced", "bip_distance", "decide")


def _line_of(text: str, section: str, key: Optional[str]) -> Optional[int]:
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
            if key is None and current == section:
                return lineno
        elif current == section and key is not None and s.split("=", 1)[0].strip() == key:
            return lineno
    return None


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    family_params: dict
    algorithm: str = "tester"
    tester: dict = field(default_factory=dict)
    baseline: dict = field(default_factory=dict)
    trials: int = 1
    master_seed: int = 0
    reuse_instance: bool = False
    workers: int = 1
    repetitions: int = 1
    timing: bool = True
    output: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")
        if self.algorithm not in ("tester", "baseline"):
            raise ConfigurationError(f"algorithm must be 'tester' or 'baseline', got {self.algorithm!r}")
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown family {self.family!r}")
        if self.repetitions < 1 or self.repetitions % 2 == 0:
            raise ConfigurationError("repetitions must be a positive odd integer")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        if self.format not in ("csv", "record"):
            raise ConfigurationError(f"format must be 'csv' or 'record', got {self.format!r}")
        if self.algorithm == "baseline" and self.baseline.get("estimator", "decide") not in ESTIMATORS:
            raise ConfigurationError(f"estimator must be one of {ESTIMATORS}")

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigurationError(f"config syntax: {exc}") from None

        def fail(section, key, msg):
            line = _line_of(text, section, key)
            where = f"line {line}: " if line else ""
            target = f"[{section}]" + (f" {key}" if key else "")
            raise ConfigurationError(f"{where}{target}: {msg}")

        for sec in cp.sections():
            if sec not in ("experiment", "family", "tester", "baseline"):
                fail(sec, None, "unknown section")
        for sec in ("experiment", "family"):
            if not cp.has_section(sec):
                raise ConfigurationError(f"missing section [{sec}]")

        def typed(section, table):
            out = {}
            for key, raw in cp.items(section):
                if key not in table:
                    fail(section, key, "unknown key")
                conv = table[key]
                try:
                    out[key] = conv(raw)
                except ValueError:
                    fail(section, key, f"expected {conv.__name__}, got {raw!r}")
            return out

        exp = cp["experiment"]
        for key in exp:
            if key not in _EXPERIMENT_KEYS:
                fail("experiment", key, "unknown key")

        def get(key, conv, default):
            if key not in exp:
                return default
            try:
                if conv is bool:
                    return exp.getboolean(key)
                return conv(exp[key])
            except ValueError:
                fail("experiment", key, f"expected {conv.__name__}, got {exp[key]!r}")

        fam = dict(cp["family"])
        name = fam.pop("name", None)
        if name is None:
            fail("family", None, "missing key 'name'")
        if name not in _FAMILY_TYPES:
            fail("family", "name", f"unknown family {name!r}")
        cp.remove_option("family", "name")
        family_params = typed("family", _FAMILY_TYPES[name])

        tester = typed("tester", _TESTER_TYPES) if cp.has_section("tester") else {}
        base = typed("baseline", _BASELINE_TYPES) if cp.has_section("baseline") else {}
        try:
            return cls(
                family=name,
                family_params=family_params,
                algorithm=get("algorithm", str, "tester"),
                tester=tester,
                baseline=base,
                trials=get("trials", int, 1),
                master_seed=get("master_seed", int, 0),
                reuse_instance=get("reuse_instance", bool, False),
                workers=get("workers", int, 1),
                repetitions=get("repetitions", int, 1),
                timing=get("timing", bool, True),
                output=get("output", str, None),
                format=get("format", str, "csv"),
            )
        except ConfigurationError as exc:
            raise ConfigurationError(f"[experiment]: {exc}") from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_ini(Path(path).read_text(encoding="utf-8"))


# -- trials -------------------------------------------------------------------


@dataclass(frozen=True)
class TrialRow:
    trial: int
    seed: int
    decision: str
    zeta: Optional[Fraction]
    total_queries: int
    distinct_pairs: int
    sampled_vertices: int
    runtime_ms: float

    @property
    def is_error(self) -> bool:
        return self.decision == "error"

    def as_strings(self) -> dict:
        d = asdict(self)
        d["zeta"] = "" if self.zeta is None else str(self.zeta)
        d["runtime_ms"] = f"{self.runtime_ms:.3f}"
        return {k: str(v) for k, v in d.items()}

    @classmethod
    def from_strings(cls, d: dict) -> "TrialRow":
        return cls(
            trial=int(d["trial"]),
            seed=int(d["seed"]),
            decision=d["decision"],
            zeta=Fraction(d["zeta"]) if d["zeta"] else None,
            total_queries=int(d["total_queries"]),
            distinct_pairs=int(d["distinct_pairs"]),
            sampled_vertices=int(d["sampled_vertices"]),
            runtime_ms=float(d["runtime_ms"]),
        )


def _instance_graph(cfg: ExperimentConfig, seed: int):
    return generate(cfg.family, seed, **cfg.family_params).graph


def _run_once(cfg: ExperimentConfig, graph, seed: int) -> tuple[str, Optional[Fraction], QueryLedger]:
    o = AdjacencyOracle(graph)
    if cfg.algorithm == "tester":
        verdict = run_tester(o, TesterParams(**cfg.tester, seed=seed))
        return verdict.decision.value, verdict.zeta, verdict.ledger
    opts = dict(cfg.baseline)
    name = opts.pop("estimator", "decide")
    if name == "decide":
        decision, est = baselines.tolerant_decide_baseline(o, seed=seed, **opts)
        return decision.value, est.value, o.ledger()
    fn = {
        "edges": baselines.estimate_edges,
        "maxcut_pairs": baselines.estimate_maxcut_pairs,
        "maxcut_induced": baselines.estimate_maxcut_induced,
        "bip_distance": baselines.estimate_bip_distance,
    }[name]
    opts.pop("k", None)
    est = fn(o, seed=seed, **opts)
    return "", est.value, o.ledger()


def run_trial(cfg: ExperimentConfig, trial: int, graph=None) -> TrialRow:
    seed = trial_seed(cfg.master_seed, trial)
    start = time.perf_counter()
    try:
        if graph is None:
            graph = _instance_graph(cfg, seed)
        algo_seed = trial_seed(seed, 1)
        if cfg.repetitions == 1:
            decision, zeta, ledger = _run_once(cfg, graph, algo_seed)
        else:
            runs = [_run_once(cfg, graph, trial_seed(algo_seed, r)) for r in range(cfg.repetitions)]
            accepts = sum(d == Decision.ACCEPT.value for d, _, _ in runs)
            decision = Decision.ACCEPT.value if 2 * accepts > cfg.repetitions else Decision.REJECT.value
            zetas = [z for _, z, _ in runs if z is not None]
            zeta = median(zetas) if zetas else None
            ledger = QueryLedger(*(sum(getattr(l, f) for _, _, l in runs) for f in ("total_queries", "distinct_pairs", "sampled_vertices")))
    except CapacityError:
        decision, zeta, ledger = "error", None, QueryLedger()
    elapsed = round((time.perf_counter() - start) * 1000, 3) if cfg.timing else 0.0
    return TrialRow(trial, seed, decision, zeta, ledger.total_queries, ledger.distinct_pairs, ledger.sampled_vertices, elapsed)


@dataclass(frozen=True)
class Aggregate:
    trials: int
    decided: int
    accepts: int
    errors: int
    accept_rate: Optional[float]
    wilson: Optional[tuple[float, float]]
    mean_queries: Fraction
    max_queries: int
    mean_runtime_ms: float

    @classmethod
    def from_rows(cls, rows: list[TrialRow]) -> "Aggregate":
        decided = [r for r in rows if r.decision in (Decision.ACCEPT.value, Decision.REJECT.value)]
        accepts = sum(r.decision == Decision.ACCEPT.value for r in decided)
        errors = sum(r.is_error for r in rows)
        rate = accepts / len(decided) if decided else None
        wil = wilson_interval(accepts, len(decided)) if decided else None
        queries = [r.total_queries for r in rows]
        return cls(
            trials=len(rows),
            decided=len(decided),
            accepts=accepts,
            errors=errors,
            accept_rate=rate,
            wilson=wil,
            mean_queries=Fraction(sum(queries), len(rows)),
            max_queries=max(queries),
            mean_runtime_ms=sum(r.runtime_ms for r in rows) / len(rows),
        )

    def record(self) -> dict:
        d = asdict(self)
        d["mean_queries"] = str(self.mean_queries)
        d["wilson"] = None if self.wilson is None else list(self.wilson)
        return d


@dataclass(frozen=True)
class ExperimentResult:
    rows: list
    aggregate: Aggregate


def _trial_worker(args):
    cfg, trial, graph = args
    return run_trial(cfg, trial, graph)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    graph = _instance_graph(cfg, trial_seed(cfg.master_seed, -1 & _MASK64)) if cfg.reuse_instance else None
    jobs = [(cfg, i, graph) for i in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_trial_worker, jobs))
    else:
        rows = [_trial_worker(j) for j in jobs]
    return ExperimentResult(rows, Aggregate.from_rows(rows))


# -- files --------------------------------------------------------------------


def format_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.as_strings())
    return buf.getvalue()


def parse_csv(text: str) -> list[TrialRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ConfigurationError(f"unexpected CSV header {reader.fieldnames}")
    return [TrialRow.from_strings(d) for d in reader]


def format_records(result: ExperimentResult) -> str:
    lines = [json.dumps({"type": "trial", **r.as_strings()}, sort_keys=True) for r in result.rows]
    lines.append(json.dumps({"type": "aggregate", **result.aggregate.record()}, sort_keys=True))
    return "\n".join(lines) + "\n"


def parse_records(text: str) -> ExperimentResult:
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        if d.pop("type") == "trial":
            rows.append(TrialRow.from_strings(d))
    return ExperimentResult(rows, Aggregate.from_rows(rows))


def write_result(result: ExperimentResult, path, fmt: str = "csv") -> None:
    text = format_csv(result.rows) if fmt == "csv" else format_records(result)
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def read_result(path, fmt: str = "csv") -> ExperimentResult:
    text = Path(path).read_text(encoding="utf-8")
    if fmt == "csv":
        rows = parse_csv(text)
        return ExperimentResult(rows, Aggregate.from_rows(rows))
    return parse_records(text)
