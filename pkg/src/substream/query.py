"""Query-stage algorithms run against a finished summary or a raw stream.

All algorithms break ties by smallest element id, so identical inputs give
identical outputs.  They are read-only over summaries and never evaluate the
oracle on elements outside their candidate pool.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ParameterError
from .objectives import ObjectiveOracle
from .summary import Summary


@dataclass(frozen=True)
class QueryResult:
    algorithm: str
    chosen: frozenset
    picks: tuple  # (element, gain) in selection order, when meaningful
    value: float
    oracle_calls: int

    @property
    def size(self) -> int:
        return len(self.chosen)


def _empty_result(algorithm: str, calls: int = 0) -> QueryResult:
    return QueryResult(algorithm, frozenset(), (), 0.0, calls)


def greedy(
    oracle: ObjectiveOracle,
    candidates: Iterable[int],
    k: int,
    lazy: bool = True,
    singleton_values: Mapping[int, float] | None = None,
    algorithm: str = "greedy",
) -> QueryResult:
    """Iteratively add the candidate with the largest marginal gain.

    Stops after k picks or when the best remaining gain is <= 0.  The lazy
    variant keeps stale gains in a heap and revalidates on pop, which is
    exact because gains only shrink as the solution grows; a test pins it
    against the naive variant.  ``singleton_values`` lets callers that have
    already paid for f({e}) skip the initial pass.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    pool = sorted(set(candidates))
    if not pool:
        return _empty_result(algorithm)
    calls = 0

    def singleton(e):
        nonlocal calls
        if singleton_values is not None and e in singleton_values:
            return singleton_values[e]
        calls += 1
        return oracle.eval((e,))

    chosen: list[int] = []
    chosen_set: set[int] = set()
    picks: list[tuple[int, float]] = []
    base_value = 0.0

    if lazy:
        heap = [(-singleton(e), e, 0) for e in pool]
        heapq.heapify(heap)
        while heap and len(chosen) < k:
            neg_gain, e, basis = heapq.heappop(heap)
            if basis != len(chosen):
                calls += 1
                gain = oracle.eval(chosen_set | {e}) - base_value
                heapq.heappush(heap, (-gain, e, len(chosen)))
                continue
            gain = -neg_gain
            if gain <= 0.0:
                break
            chosen.append(e)
            chosen_set.add(e)
            picks.append((e, gain))
            calls += 1
            base_value = oracle.eval(chosen_set)
    else:
        remaining = list(pool)
        while remaining and len(chosen) < k:
            best_e, best_gain = None, 0.0
            for e in remaining:
                if chosen_set:
                    calls += 1
                    gain = oracle.eval(chosen_set | {e}) - base_value
                else:
                    gain = singleton(e)
                if best_e is None or gain > best_gain:
                    best_e, best_gain = e, gain
            if best_gain <= 0.0:
                break
            remaining.remove(best_e)
            chosen.append(best_e)
            chosen_set.add(best_e)
            picks.append((best_e, best_gain))
            calls += 1
            base_value = oracle.eval(chosen_set)

    if not chosen:
        return _empty_result(algorithm, calls)
    calls += 1
    value = oracle.eval(chosen_set)
    return QueryResult(algorithm, frozenset(chosen), tuple(picks), value, calls)


def query_summary_greedy(
    summary: Summary,
    removed: Iterable[int],
    k: int,
    oracle: ObjectiveOracle,
    lazy: bool = True,
    singleton_values: Mapping[int, float] | None = None,
) -> QueryResult:
    """Greedy over the summary contents minus the removed ids.

    Ids in ``removed`` that were never stored are ignored; nothing outside
    the summary is ever evaluated.
    """
    candidates = summary.members() - frozenset(removed)
    return greedy(
        oracle,
        candidates,
        k,
        lazy=lazy,
        singleton_values=singleton_values,
        algorithm="robust-greedy",
    )


@dataclass
class _SieveLevel:
    guess: float
    members: list[int]
    member_set: set[int]
    value: float


def sieve_stream(
    stream: Sequence[int],
    k: int,
    epsilon: float,
    oracle: ObjectiveOracle,
    singleton_values: Mapping[int, float] | None = None,
    algorithm: str = "sieve",
) -> QueryResult:
    """Single-pass threshold-grid streaming maximization.

    Tracks the running best singleton value eta and keeps one candidate set
    per guess (1+eps)^i with eta <= (1+eps)^i <= 2k*eta.  An element enters a
    non-full set when its gain is at least (guess/2 - value) / (k - size).
    Returns the best candidate set; certified value is (0.5 - eps) of the
    best k-subset of the stream.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    calls = 0
    levels: dict[int, _SieveLevel] = {}
    eta = 0.0
    base = 1.0 + epsilon

    for e in stream:
        e = int(e)
        if singleton_values is not None and e in singleton_values:
            f_e = singleton_values[e]
        else:
            f_e = oracle.eval((e,))
            calls += 1
        if f_e > eta:
            eta = f_e
            span = exponent_range(eta, 2 * k * eta, epsilon)
            if span is not None:
                lo, hi = span
                for i in list(levels):
                    if i < lo:
                        del levels[i]
                for i in range(lo, hi + 1):
                    if i not in levels:
                        levels[i] = _SieveLevel(base**i, [], set(), 0.0)
        for i in sorted(levels):
            level = levels[i]
            if len(level.members) >= k or e in level.member_set:
                continue
            need = (level.guess / 2.0 - level.value) / (k - len(level.members))
            calls += 1
            gain = oracle.eval(level.member_set | {e}) - level.value
            if gain >= need:
                level.members.append(e)
                level.member_set.add(e)
                level.value += gain

    best: _SieveLevel | None = None
    for i in sorted(levels):
        level = levels[i]
        if best is None or level.value > best.value:
            best = level
    if best is None or not best.members:
        return _empty_result(algorithm, calls)
    calls += 1
    value = oracle.eval(best.member_set)
    return QueryResult(algorithm, frozenset(best.members), (), value, calls)


def query_summary_sieve(
    summary: Summary,
    removed: Iterable[int],
    k: int,
    epsilon: float,
    oracle: ObjectiveOracle,
    singleton_values: Mapping[int, float] | None = None,
) -> QueryResult:
    """Sieve pass over the stored elements (minus removals) in the order the
    summary accepted them."""
    removed = frozenset(removed)
    stream = [e for e in summary.insertion_order if e not in removed]
    result = sieve_stream(
        stream,
        k,
        epsilon,
        oracle,
        singleton_values=singleton_values,
        algorithm="robust-sieve",
    )
    return result


def random_baseline(
    pool: Iterable[int],
    sample_size: int,
    k: int,
    seed: int,
    oracle: ObjectiveOracle,
    singleton_values: Mapping[int, float] | None = None,
) -> QueryResult:
    """Uniform sample of ``sample_size`` ids from the pool, then greedy(k).

    Mirrors a memoryless strategy allowed to keep the same number of
    elements as the summary builder.
    """
    pool = sorted(set(pool))
    if sample_size >= len(pool):
        sample = pool
    else:
        rng = random.Random(seed)
        sample = rng.sample(pool, sample_size)
    result = greedy(
        oracle,
        sample,
        k,
        singleton_values=singleton_values,
        algorithm="random",
    )
    return result


def exponent_range(lo: float, hi: float, epsilon: float) -> tuple[int, int] | None:
    """Integer exponents i with lo <= (1+eps)^i <= hi, or None when empty.

    Log-based estimates are nudged with exact power comparisons so boundary
    cases (lo or hi exactly a power) never drop or gain a grid point.
    """
    if lo <= 0 or hi <= 0 or lo > hi:
        return None
    base = 1.0 + epsilon
    i_lo = math.ceil(math.log(lo, base))
    while base**i_lo < lo:
        i_lo += 1
    while base ** (i_lo - 1) >= lo:
        i_lo -= 1
    i_hi = math.floor(math.log(hi, base))
    while base**i_hi > hi:
        i_hi -= 1
    while base ** (i_hi + 1) <= hi:
        i_hi += 1
    if i_lo > i_hi:
        return None
    return i_lo, i_hi
