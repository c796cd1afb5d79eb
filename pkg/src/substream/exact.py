"""Exhaustive ground truth on small instances.

Exact maximizers by enumeration, plus a verifier that sweeps every removal
set up to size m and checks the certified value ratio of the query stage.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import GuardExceeded, ParameterError
from .grid import ThresholdGrid
from .objectives import ObjectiveOracle
from .query import query_summary_greedy
from .summary import build_summary, guarantee_ratio, threshold_base, width_for_removals

MAX_BRUTE_UNIVERSE = 25
MAX_BRUTE_SUBSETS = 5_000_000
MAX_VERIFY_UNIVERSE = 16


def brute_force_opt(
    oracle: ObjectiveOracle,
    universe: Iterable[int],
    k: int,
) -> tuple[frozenset, float]:
    """Exact maximizer over all subsets of size <= k.

    Ties resolve to the lexicographically smallest sorted id tuple.  Refuses
    universes larger than 25 ids or enumerations past 5e6 subsets.
    """
    ids = sorted(set(universe))
    n = len(ids)
    if n > MAX_BRUTE_UNIVERSE:
        raise GuardExceeded(f"universe of {n} ids exceeds brute-force guard")
    if k < 0:
        raise ParameterError(f"k must be >= 0, got {k}")
    k = min(k, n)
    total = 0
    choose = 1
    for size in range(k + 1):
        total += choose
        choose = choose * (n - size) // (size + 1)
    if total > MAX_BRUTE_SUBSETS:
        raise GuardExceeded(f"{total} subsets exceed brute-force guard")
    best_ids: tuple = ()
    best_value = 0.0
    for size in range(1, k + 1):
        for combo in itertools.combinations(ids, size):
            value = oracle.eval(combo)
            if value > best_value or (value == best_value and combo < best_ids):
                best_ids, best_value = combo, value
    return frozenset(best_ids), best_value


@dataclass
class RobustnessReport:
    """Worst observed value ratio across an exhaustive removal sweep."""

    descriptor: str
    mode: str  # "single-tau" | "grid"
    k: int
    m: int
    w: int
    epsilon: float | None
    c_target: float
    worst_ratio: float
    worst_removed: frozenset
    cases_checked: int
    zero_opt_cases: int
    enumerated_cases: int

    @property
    def passed(self) -> bool:
        return self.worst_ratio >= self.c_target

    def to_dict(self) -> dict:
        return {
            "descriptor": self.descriptor,
            "mode": self.mode,
            "k": self.k,
            "m": self.m,
            "w": self.w,
            "epsilon": self.epsilon,
            "c_target": self.c_target,
            "worst_ratio": self.worst_ratio,
            "worst_removed": sorted(self.worst_removed),
            "cases_checked": self.cases_checked,
            "zero_opt_cases": self.zero_opt_cases,
            "enumerated_cases": self.enumerated_cases,
            "passed": self.passed,
        }


def verify_robustness(
    stream: Sequence[int],
    oracle: ObjectiveOracle,
    k: int,
    m: int,
    mode: str = "single-tau",
    epsilon: float = 0.1,
    w: int | None = None,
    descriptor: str = "",
) -> RobustnessReport:
    """Check the certified ratio against every removal set of size <= m.

    In single-tau mode the summary is rebuilt per removal set with the
    threshold base matched to that set's exact optimum; this tests the
    guarantee under its own premises and is a harness device, not a
    deployable configuration.  Grid mode builds once, optimum-free, and the
    target ratio shrinks by (1 + epsilon).
    """
    ids = sorted(oracle.ground_set)
    if len(ids) > MAX_VERIFY_UNIVERSE:
        raise GuardExceeded(
            f"universe of {len(ids)} ids exceeds verification guard"
        )
    if k < 2:
        raise ParameterError(f"verification needs k >= 2, got {k}")
    if mode not in ("single-tau", "grid"):
        raise ParameterError(f"unknown mode {mode!r}")
    if w is None:
        w = width_for_removals(k, m)

    grid = None
    if mode == "grid":
        grid = ThresholdGrid(k=k, w=w, m=m, epsilon=epsilon).build(stream, oracle)
        c_target = guarantee_ratio(k, epsilon)
    else:
        c_target = guarantee_ratio(k)

    worst_ratio = float("inf")
    worst_removed: frozenset = frozenset()
    cases_checked = 0
    zero_opt = 0
    enumerated = 0
    for size in range(m + 1):
        for removed in itertools.combinations(ids, size):
            enumerated += 1
            removed = frozenset(removed)
            _, opt_value = brute_force_opt(oracle, set(ids) - removed, k)
            if opt_value <= 0.0:
                zero_opt += 1
                continue
            if mode == "grid":
                result = grid.query(removed, oracle)
            else:
                tau = threshold_base(k, opt_value)
                summary = build_summary(stream, k, w, tau, oracle)
                result = query_summary_greedy(summary, removed, k, oracle)
            ratio = result.value / opt_value
            cases_checked += 1
            if ratio < worst_ratio:
                worst_ratio, worst_removed = ratio, removed
    return RobustnessReport(
        descriptor=descriptor,
        mode=mode,
        k=k,
        m=m,
        w=w,
        epsilon=epsilon if mode == "grid" else None,
        c_target=c_target,
        worst_ratio=worst_ratio,
        worst_removed=worst_removed,
        cases_checked=cases_checked,
        zero_opt_cases=zero_opt,
        enumerated_cases=enumerated,
    )
