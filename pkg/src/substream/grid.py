"""Parallel summary instances over a geometric grid of value guesses.

A single summary needs a threshold base derived from the best achievable
value, which is unknown while streaming.  This module runs one summary per
guess (1+eps)^i, keeps the m+1 largest singleton-value elements seen so far,
and uses that set to decide which guesses stay alive.  Each arriving element
is routed to every live instance whose guess g satisfies
f(e) <= g <= 2k*f(e).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from .errors import DocumentError, ParameterError
from .objectives import ObjectiveOracle
from .query import QueryResult, exponent_range, query_summary_greedy
from .summary import (
    DOCUMENT_VERSION,
    Summary,
    _checksum,
    _summary_body,
    _summary_from_body,
    parse_document,
    plan_structure,
    threshold_base,
)

GRID_DOCUMENT_FORMAT = "substream-grid"


def static_grid(eta: float, k: int, epsilon: float) -> list[float]:
    """All powers of (1+eps) in [eta, k*eta], ascending."""
    if eta <= 0:
        raise ParameterError(f"eta must be > 0, got {eta}")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be > 0, got {epsilon}")
    span = exponent_range(eta, k * eta, epsilon)
    if span is None:
        return []
    lo, hi = span
    return [(1.0 + epsilon) ** i for i in range(lo, hi + 1)]


@dataclass
class MemoryReport:
    instances: int
    stored_total: int  # with multiplicity across instances
    top_size: int
    per_instance: dict[int, int] = field(default_factory=dict)


class ThresholdGrid:
    """Collection of live summaries keyed by integer guess exponent."""

    def __init__(
        self,
        k: int,
        w: int,
        m: int,
        epsilon: float,
        retain_all: bool = False,
    ):
        if k < 2:
            raise ParameterError(f"grid needs k >= 2, got {k}")
        if w < 1:
            raise ParameterError(f"w must be >= 1, got {w}")
        if m < 0:
            raise ParameterError(f"m must be >= 0, got {m}")
        if epsilon <= 0:
            raise ParameterError(f"epsilon must be > 0, got {epsilon}")
        self.k = k
        self.w = w
        self.m = m
        self.epsilon = epsilon
        self.retain_all = retain_all
        self.instances: dict[int, Summary] = {}
        self.retired: list[tuple[int, Summary]] = []
        # (value, id) pairs ranked by value descending, id ascending.
        self.top: list[tuple[float, int]] = []

    # -- streaming ----------------------------------------------------------

    def _window(self, value: float) -> tuple[int, int] | None:
        return exponent_range(value, 2 * self.k * value, self.epsilon)

    def _new_instance(self, exponent: int) -> Summary:
        guess = (1.0 + self.epsilon) ** exponent
        return Summary(plan_structure(self.k, self.w, threshold_base(self.k, guess)))

    def _justified_exponents(self) -> set[int]:
        justified: set[int] = set()
        for value, _ in self.top:
            span = self._window(value)
            if span is not None:
                justified.update(range(span[0], span[1] + 1))
        return justified

    def _rank(self, value: float, e: int) -> tuple[float, int]:
        return (-value, e)

    def ingest(
        self,
        e: int,
        oracle: ObjectiveOracle,
        singleton_value: float | None = None,
    ):
        """Stream one element through the grid.

        First the top-(m+1) set is updated; entering it instantiates any
        missing instances for guesses inside the new element's window and
        discards instances no longer justified by any tracked element.  Then
        the element is routed to every live instance whose guess lies in
        [f(e), 2k*f(e)].
        """
        e = int(e)
        if singleton_value is None:
            singleton_value = oracle.eval((e,))
        f_e = singleton_value

        if all(e != known for _, known in self.top):
            entered = False
            if len(self.top) < self.m + 1:
                self.top.append((f_e, e))
                entered = True
            else:
                worst_idx = max(
                    range(len(self.top)),
                    key=lambda i: self._rank(self.top[i][0], self.top[i][1]),
                )
                worst = self.top[worst_idx]
                if self._rank(f_e, e) < self._rank(worst[0], worst[1]):
                    self.top[worst_idx] = (f_e, e)
                    entered = True
            if entered:
                span = self._window(f_e)
                if span is not None:
                    for i in range(span[0], span[1] + 1):
                        if i not in self.instances:
                            self.instances[i] = self._new_instance(i)
                justified = self._justified_exponents()
                for i in sorted(self.instances):
                    if i not in justified:
                        dropped = self.instances.pop(i)
                        if self.retain_all:
                            self.retired.append((i, dropped))

        span = self._window(f_e)
        if span is None:
            return
        lo, hi = span
        for i in sorted(self.instances):
            if lo <= i <= hi:
                self.instances[i].ingest(e, oracle, singleton_value=f_e)

    def build(self, stream: Iterable[int], oracle: ObjectiveOracle):
        for e in stream:
            self.ingest(e, oracle)
        return self

    # -- querying -----------------------------------------------------------

    def query_with_source(
        self,
        removed: Iterable[int],
        oracle: ObjectiveOracle,
        lazy: bool = True,
        singleton_values=None,
    ) -> tuple[QueryResult, int | None]:
        """Best greedy result across live instances plus its guess exponent.

        Ties go to the smallest guess.  With no live instances the result is
        empty with value 0.
        """
        removed = frozenset(removed)
        best: QueryResult | None = None
        best_exponent: int | None = None
        calls = 0
        for i in sorted(self.instances):
            result = query_summary_greedy(
                self.instances[i],
                removed,
                self.k,
                oracle,
                lazy=lazy,
                singleton_values=singleton_values,
            )
            calls += result.oracle_calls
            if best is None or result.value > best.value:
                best, best_exponent = result, i
        if best is None:
            return QueryResult("robust-greedy", frozenset(), (), 0.0, 0), None
        best = QueryResult("robust-greedy", best.chosen, best.picks, best.value, calls)
        return best, best_exponent

    def query(
        self,
        removed: Iterable[int],
        oracle: ObjectiveOracle,
        lazy: bool = True,
        singleton_values=None,
    ) -> QueryResult:
        return self.query_with_source(
            removed, oracle, lazy=lazy, singleton_values=singleton_values
        )[0]

    # -- accounting ---------------------------------------------------------

    def stored_union(self) -> frozenset:
        members: set[int] = set()
        for instance in self.instances.values():
            members.update(instance.locations)
        return frozenset(members)

    def memory_report(self) -> MemoryReport:
        per_instance = {i: self.instances[i].size for i in sorted(self.instances)}
        return MemoryReport(
            instances=len(self.instances),
            stored_total=sum(per_instance.values()),
            top_size=len(self.top),
            per_instance=per_instance,
        )


# -- serialization ----------------------------------------------------------


def grid_to_document(grid: ThresholdGrid) -> str:
    body = {
        "format": GRID_DOCUMENT_FORMAT,
        "version": DOCUMENT_VERSION,
        "k": grid.k,
        "w": grid.w,
        "m": grid.m,
        "epsilon": grid.epsilon,
        "top": [[e, value] for value, e in sorted(grid.top, key=lambda t: (-t[0], t[1]))],
        "instances": [
            {"exponent": i, "summary": _summary_body(grid.instances[i])}
            for i in sorted(grid.instances)
        ],
    }
    payload = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return f"{payload}\nsha256:{_checksum(payload)}\n"


def grid_from_document(text: str, oracle: ObjectiveOracle | None = None) -> ThresholdGrid:
    body = parse_document(text, GRID_DOCUMENT_FORMAT)
    try:
        grid = ThresholdGrid(
            k=int(body["k"]),
            w=int(body["w"]),
            m=int(body["m"]),
            epsilon=float(body["epsilon"]),
        )
        grid.top = [(float(value), int(e)) for e, value in body["top"]]
        for entry in body["instances"]:
            grid.instances[int(entry["exponent"])] = _summary_from_body(
                entry["summary"], oracle
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"malformed grid document: {exc}") from exc
    return grid
