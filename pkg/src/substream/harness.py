"""Experiment harness: removal strategies, run protocol, and report rows.

A run builds one summary (or guess grid) per cardinality bound, resolves
removal sets per strategy and trial, executes the configured algorithms on
the surviving elements, and emits one report row per (algorithm, trial).
The foreknowledge baselines (plain greedy and the sieve) are handed the
post-removal universe directly, i.e. they are told the removals in advance.
"""

from __future__ import annotations

import csv
import random
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .dataio import (
    FeatureTable,
    load_edge_list,
    load_feature_table,
    synth_feature_table,
    synth_power_law_graph,
    synth_user_vector,
)
from .errors import ParameterError
from .grid import ThresholdGrid
from .objectives import ObjectiveOracle, build_coverage, build_movie_objective
from .query import greedy, query_summary_sieve, random_baseline, sieve_stream
from .summary import Summary, build_summary

ALL_ALGORITHMS = ("robust-greedy", "robust-sieve", "sieve", "greedy", "random")
STRATEGY_NAMES = ("random-from-s", "greedy-from-s", "popularity-weighted", "predicate")
# Strategies whose removal set is a deterministic function of the pool run a
# single trial regardless of the configured trial count.
DETERMINISTIC_STRATEGIES = ("greedy-from-s", "predicate")


@dataclass(frozen=True)
class RemovalSpec:
    strategy: str
    size: int
    seed: int | None
    removed: frozenset


def removal_random(pool: Iterable[int], count: int, seed: int) -> RemovalSpec:
    """Uniform sample without replacement from the pool."""
    ids = sorted(set(pool))
    count = max(0, min(count, len(ids)))
    rng = random.Random(seed)
    removed = frozenset(rng.sample(ids, count))
    return RemovalSpec("random-from-s", count, seed, removed)


def removal_greedy_adversarial(
    pool: Iterable[int], count: int, oracle: ObjectiveOracle
) -> RemovalSpec:
    """Iteratively remove the element whose loss hurts the pool value most."""
    remaining = sorted(set(pool))
    removed = set()
    for _ in range(min(count, len(remaining))):
        pool_value = oracle.eval(remaining)
        best_e, best_drop = None, None
        for e in remaining:
            drop = pool_value - oracle.eval([x for x in remaining if x != e])
            if best_e is None or drop > best_drop:
                best_e, best_drop = e, drop
        remaining.remove(best_e)
        removed.add(best_e)
    return RemovalSpec("greedy-from-s", len(removed), None, frozenset(removed))


def removal_weighted(
    pool: Iterable[int],
    count: int,
    weights: Mapping[int, float],
    seed: int,
) -> RemovalSpec:
    """Sequential without-replacement sampling proportional to weight.

    When only zero-weight elements remain the draw falls back to uniform so
    the requested count is still honored.
    """
    ids = sorted(set(pool))
    values = [float(weights.get(e, 0.0)) for e in ids]
    if any(v < 0 for v in values):
        raise ParameterError("weights must be non-negative")
    if ids and not any(v > 0 for v in values):
        raise ParameterError("weights must not all be zero")
    count = max(0, min(count, len(ids)))
    rng = random.Random(seed)
    removed = set()
    for _ in range(count):
        total = sum(values)
        if total > 0:
            r = rng.random() * total
            acc = 0.0
            idx = len(ids) - 1
            for i, v in enumerate(values):
                acc += v
                if r < acc:
                    idx = i
                    break
        else:
            idx = rng.randrange(len(ids))
        removed.add(ids.pop(idx))
        values.pop(idx)
    return RemovalSpec("popularity-weighted", len(removed), seed, frozenset(removed))


def removal_predicate(pool: Iterable[int], keep) -> RemovalSpec:
    """Remove every pool element failing the keep-predicate."""
    removed = frozenset(e for e in pool if not keep(e))
    return RemovalSpec("predicate", len(removed), None, removed)


# -- configuration ------------------------------------------------------------


@dataclass
class StrategySpec:
    name: str
    size: int | str | None = None  # int, "k", "2k", ... ; None for predicate
    trials: int | None = None
    keep_genre: str | None = None

    def resolved_size(self, k: int) -> int | None:
        if self.size is None:
            return None
        if isinstance(self.size, int):
            return self.size
        text = str(self.size).strip().lower()
        if text == "k":
            return k
        if text.endswith("k"):
            try:
                return int(text[:-1]) * k
            except ValueError:
                pass
        try:
            return int(text)
        except ValueError:
            raise ParameterError(f"cannot parse strategy size {self.size!r}") from None


@dataclass
class ExperimentConfig:
    objective: dict
    ks: Sequence[int]
    strategies: Sequence[StrategySpec]
    m: int | None = None
    w: int = 1
    tau_mode: str = "grid"  # "grid" | "fixed"
    tau: float | None = None
    grid_epsilon: float = 0.2
    sieve_epsilon: float = 0.2
    trials: int = 1
    base_seed: int = 0
    algorithms: Sequence[str] = ALL_ALGORITHMS

    _KEYS = {
        "objective", "ks", "strategies", "m", "w", "tau_mode", "tau",
        "grid_epsilon", "sieve_epsilon", "trials", "base_seed", "algorithms",
    }
    _STRATEGY_KEYS = {"name", "size", "trials", "keep_genre"}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentConfig":
        unknown = set(data) - cls._KEYS
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        for required in ("objective", "ks", "strategies"):
            if required not in data:
                raise ParameterError(f"config is missing {required!r}")
        strategies = []
        for entry in data["strategies"]:
            bad = set(entry) - cls._STRATEGY_KEYS
            if bad:
                raise ParameterError(f"unknown strategy keys: {sorted(bad)}")
            if entry.get("name") not in STRATEGY_NAMES:
                raise ParameterError(
                    f"unknown strategy {entry.get('name')!r}, "
                    f"expected one of {STRATEGY_NAMES}"
                )
            strategies.append(StrategySpec(**entry))
        config = cls(
            objective=dict(data["objective"]),
            ks=[int(k) for k in data["ks"]],
            strategies=strategies,
            m=data.get("m"),
            w=int(data.get("w", 1)),
            tau_mode=data.get("tau_mode", "grid"),
            tau=data.get("tau"),
            grid_epsilon=float(data.get("grid_epsilon", 0.2)),
            sieve_epsilon=float(data.get("sieve_epsilon", 0.2)),
            trials=int(data.get("trials", 1)),
            base_seed=int(data.get("base_seed", 0)),
            algorithms=tuple(data.get("algorithms", ALL_ALGORITHMS)),
        )
        if config.tau_mode not in ("grid", "fixed"):
            raise ParameterError(f"unknown tau_mode {config.tau_mode!r}")
        if config.tau_mode == "fixed" and config.tau is None:
            raise ParameterError("fixed tau_mode requires a tau value")
        for name in config.algorithms:
            if name not in ALL_ALGORITHMS:
                raise ParameterError(f"unknown algorithm {name!r}")
        return config


@dataclass
class ObjectiveContext:
    oracle: ObjectiveOracle
    universe: tuple[int, ...]
    stream: list[int]
    popularity: dict | None
    genres: dict | None
    descriptor: str


def resolve_objective(config: ExperimentConfig) -> ObjectiveContext:
    spec = config.objective
    kind = spec.get("kind")
    popularity = None
    genres = None
    if kind == "coverage":
        if "edges" in spec and spec["edges"]:
            document = load_edge_list(spec["edges"], directed=spec.get("directed", True))
            descriptor = f"coverage:{spec['edges']}"
        else:
            synth = spec.get("synthetic", {})
            document = synth_power_law_graph(
                n=int(synth.get("nodes", 500)), seed=int(synth.get("seed", 0))
            )
            descriptor = f"coverage:synthetic-n{synth.get('nodes', 500)}"
        oracle = build_coverage(document.edges, directed=document.directed)
    elif kind == "movie":
        if "features" in spec and spec["features"]:
            table = load_feature_table(spec["features"])
            descriptor = f"movie:{spec['features']}"
        else:
            synth = spec.get("synthetic", {})
            table = synth_feature_table(
                rows=int(synth.get("rows", 500)),
                dimension=int(synth.get("dimension", 30)),
                seed=int(synth.get("seed", 0)),
            )
            descriptor = f"movie:synthetic-n{synth.get('rows', 500)}"
        alpha = float(spec.get("alpha", 0.9))
        user = synth_user_vector(table, seed=int(spec.get("user_seed", 0)))
        oracle = build_movie_objective(user, table.movie_vecs(), alpha)
        popularity = dict(table.popularity) or None
        genres = dict(table.genres) or None
        descriptor += f"-alpha{alpha}"
    elif kind == "modular":
        weights = {int(k): float(v) for k, v in spec.get("weights", {}).items()}
        from .objectives import ModularObjective

        oracle = ModularObjective(weights)
        descriptor = f"modular:n{len(weights)}"
    else:
        raise ParameterError(f"unknown objective kind {kind!r}")
    universe = tuple(sorted(oracle.ground_set))
    stream = list(universe)
    random.Random(config.base_seed).shuffle(stream)
    return ObjectiveContext(
        oracle=oracle,
        universe=universe,
        stream=stream,
        popularity=popularity,
        genres=genres,
        descriptor=descriptor,
    )


# -- report -------------------------------------------------------------------

CSV_COLUMNS = (
    "algorithm", "k", "m", "w", "strategy", "trial",
    "value", "summary_size", "oracle_calls", "wall_time_s",
)


@dataclass
class RunRow:
    algorithm: str
    k: int
    m: int
    w: int
    strategy: str
    trial: int
    value: float
    summary_size: int
    oracle_calls: int
    wall_time_s: float
    chosen: frozenset = field(default=frozenset(), repr=False, compare=False)

    def csv_values(self):
        return (
            self.algorithm, self.k, self.m, self.w, self.strategy, self.trial,
            repr(self.value), self.summary_size, self.oracle_calls,
            f"{self.wall_time_s:.6f}",
        )


@dataclass
class RunReport:
    descriptor: str
    rows: list[RunRow] = field(default_factory=list)

    def sorted_rows(self) -> list[RunRow]:
        return sorted(
            self.rows, key=lambda r: (r.k, r.strategy, r.trial, r.algorithm)
        )

    def to_csv(self, path, delimiter: str = ","):
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, delimiter=delimiter)
            writer.writerow(CSV_COLUMNS)
            for row in self.sorted_rows():
                writer.writerow(row.csv_values())

    def signature(self):
        """Row tuples without wall time, for determinism comparisons."""
        return tuple(
            (r.algorithm, r.k, r.m, r.w, r.strategy, r.trial, r.value,
             r.summary_size, r.oracle_calls)
            for r in self.sorted_rows()
        )

    def values(self, algorithm: str, k: int | None = None, strategy: str | None = None):
        return [
            r.value
            for r in self.rows
            if r.algorithm == algorithm
            and (k is None or r.k == k)
            and (strategy is None or r.strategy == strategy)
        ]


def read_report(path, delimiter: str = ",") -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle, delimiter=delimiter)
        rows = []
        for record in reader:
            record["k"] = int(record["k"])
            record["value"] = float(record["value"])
            record["trial"] = int(record["trial"])
            rows.append(record)
        return rows


# -- protocol -----------------------------------------------------------------


def _derive_seed(base: int, *parts: int) -> int:
    seed = base & 0xFFFFFFFF
    for part in parts:
        seed = (seed * 1_000_003 + part * 7_919 + 0x9E37) & 0xFFFFFFFF
    return seed


@dataclass
class _BuiltSummary:
    """Per-k build artifacts shared by all strategies and trials."""

    grid: ThresholdGrid | None
    summary: Summary | None
    pool: frozenset  # removal pool for the from-summary strategies
    reference_size: int  # size a memoryless baseline is allowed to keep
    stored_distinct: int


def _build_for_k(config, ctx, k, m_eff, singletons) -> _BuiltSummary:
    if config.tau_mode == "fixed":
        summary = build_summary(ctx.stream, k, config.w, float(config.tau), ctx.oracle)
        return _BuiltSummary(
            grid=None,
            summary=summary,
            pool=summary.members(),
            reference_size=summary.size,
            stored_distinct=summary.size,
        )
    grid = ThresholdGrid(k=k, w=config.w, m=m_eff, epsilon=config.grid_epsilon)
    for e in ctx.stream:
        grid.ingest(e, ctx.oracle, singleton_value=singletons[e])
    base_result, base_exponent = grid.query_with_source(
        (), ctx.oracle, singleton_values=singletons
    )
    if base_exponent is not None:
        best_instance = grid.instances[base_exponent]
        pool = best_instance.members()
        reference_size = best_instance.size
    else:
        pool, reference_size = frozenset(), 0
    return _BuiltSummary(
        grid=grid,
        summary=None,
        pool=pool,
        reference_size=reference_size,
        stored_distinct=len(grid.stored_union()),
    )


def _resolve_removal(strategy, built, ctx, k, seed) -> RemovalSpec:
    size = strategy.resolved_size(k)
    if strategy.name == "random-from-s":
        return removal_random(built.pool, size, seed)
    if strategy.name == "greedy-from-s":
        return removal_greedy_adversarial(built.pool, size, ctx.oracle)
    if strategy.name == "popularity-weighted":
        if ctx.popularity is None:
            raise ParameterError(
                "popularity-weighted removal needs an objective with popularity data"
            )
        return removal_weighted(ctx.universe, size, ctx.popularity, seed)
    if strategy.name == "predicate":
        if ctx.genres is None:
            raise ParameterError("predicate removal needs an objective with genre tags")
        genre = strategy.keep_genre
        if not genre:
            raise ParameterError("predicate strategy needs keep_genre")
        genres = ctx.genres
        return removal_predicate(
            ctx.universe, lambda e: genre in genres.get(e, ())
        )
    raise ParameterError(f"unknown strategy {strategy.name!r}")


def _grid_sieve(built, removed, k, epsilon, ctx, singletons):
    """Sieve pass over everything the grid retained, in stream order."""
    union = built.grid.stored_union() - removed
    stream = [e for e in ctx.stream if e in union]
    return sieve_stream(
        stream, k, epsilon, ctx.oracle,
        singleton_values=singletons, algorithm="robust-sieve",
    )


def run_experiment(config: ExperimentConfig, ctx: ObjectiveContext | None = None) -> RunReport:
    """Execute the full protocol described by ``config``.

    Deterministic for a fixed config apart from the wall-time column.
    """
    if ctx is None:
        ctx = resolve_objective(config)
    oracle = ctx.oracle
    report = RunReport(descriptor=ctx.descriptor)
    singletons = {e: oracle.eval((e,)) for e in ctx.universe}

    for k_index, k in enumerate(config.ks):
        sizes = [s.resolved_size(k) for s in config.strategies]
        m_eff = config.m if config.m is not None else max(
            [size for size in sizes if size is not None] or [k]
        )
        built = _build_for_k(config, ctx, k, m_eff, singletons)

        for s_index, strategy in enumerate(config.strategies):
            if strategy.name in DETERMINISTIC_STRATEGIES:
                trials = 1
            else:
                trials = strategy.trials if strategy.trials is not None else config.trials
            removal_cache = None
            for trial in range(trials):
                seed = _derive_seed(config.base_seed, k_index, s_index, trial)
                if strategy.name in DETERMINISTIC_STRATEGIES:
                    if removal_cache is None:
                        removal_cache = _resolve_removal(strategy, built, ctx, k, seed)
                    spec = removal_cache
                else:
                    spec = _resolve_removal(strategy, built, ctx, k, seed)
                removed = spec.removed
                survivors = [e for e in ctx.stream if e not in removed]

                for algorithm in config.algorithms:
                    before = oracle.calls
                    start = time.perf_counter()
                    summary_size = built.stored_distinct
                    if algorithm == "robust-greedy":
                        if built.grid is not None:
                            result, exponent = built.grid.query_with_source(
                                removed, oracle, singleton_values=singletons
                            )
                            if exponent is not None:
                                summary_size = built.grid.instances[exponent].size
                        else:
                            result = greedy(
                                oracle, built.summary.members() - removed, k,
                                singleton_values=singletons,
                                algorithm="robust-greedy",
                            )
                            summary_size = built.summary.size
                    elif algorithm == "robust-sieve":
                        if built.grid is not None:
                            result = _grid_sieve(
                                built, removed, k, config.sieve_epsilon, ctx, singletons
                            )
                        else:
                            result = query_summary_sieve(
                                built.summary, removed, k, config.sieve_epsilon,
                                oracle, singleton_values=singletons,
                            )
                            summary_size = built.summary.size
                    elif algorithm == "sieve":
                        result = sieve_stream(
                            survivors, k, config.sieve_epsilon, oracle,
                            singleton_values=singletons,
                        )
                        summary_size = 0
                    elif algorithm == "greedy":
                        result = greedy(
                            oracle, survivors, k, singleton_values=singletons
                        )
                        summary_size = 0
                    elif algorithm == "random":
                        result = random_baseline(
                            set(ctx.universe) - removed,
                            built.reference_size,
                            k,
                            _derive_seed(seed, 4),
                            oracle,
                            singleton_values=singletons,
                        )
                        summary_size = built.reference_size
                    else:
                        raise ParameterError(f"unknown algorithm {algorithm!r}")
                    elapsed = time.perf_counter() - start
                    report.rows.append(
                        RunRow(
                            algorithm=algorithm,
                            k=k,
                            m=m_eff,
                            w=config.w,
                            strategy=strategy.name,
                            trial=trial,
                            value=result.value,
                            summary_size=summary_size,
                            oracle_calls=oracle.calls - before,
                            wall_time_s=elapsed,
                            chosen=result.chosen,
                        )
                    )
    report.rows = report.sorted_rows()
    return report
