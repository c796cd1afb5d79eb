"""Set-function oracles: normalized monotone submodular objectives.

Every objective exposes ``eval`` over a collection of element ids and counts
how many times it was called.  Oracles are immutable after construction and
hold no incremental evaluation state; callers that need cached values keep
them on their side.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ParameterError, UnknownElementError

# Above this ground-set size the movie objective stops precomputing the full
# pairwise similarity matrix (quadratic memory) and falls back to on-demand
# products.
_SIM_PRECOMPUTE_LIMIT = 4500


class CallTally:
    """Per-thread hit counter.

    Each thread increments its own cell, so concurrent evaluations never
    contend on a shared lock; the lock is only taken once per thread to
    register the cell.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._cells = []
        self._local = threading.local()

    def add(self):
        cell = getattr(self._local, "cell", None)
        if cell is None:
            cell = [0]
            with self._lock:
                self._cells.append(cell)
            self._local.cell = cell
        cell[0] += 1

    def total(self) -> int:
        with self._lock:
            return sum(cell[0] for cell in self._cells)


class ObjectiveOracle:
    """Base class for normalized monotone submodular set functions."""

    def __init__(self, ground_set: Iterable[int]):
        self._ground = frozenset(int(e) for e in ground_set)
        if any(e < 0 for e in self._ground):
            raise ParameterError("element ids must be non-negative")
        self._tally = CallTally()

    @property
    def ground_set(self) -> frozenset:
        return self._ground

    @property
    def ground_size(self) -> int:
        return len(self._ground)

    @property
    def calls(self) -> int:
        """Number of ``eval`` invocations so far (merged across threads)."""
        return self._tally.total()

    def eval(self, elements: Iterable[int]) -> float:
        self._tally.add()
        return self._value(elements)

    def gain(self, e: int, base: Iterable[int]) -> float:
        """Marginal gain f(base + e) - f(base).  Two evaluations."""
        base = set(base)
        return self.eval(base | {e}) - self.eval(base)

    def _value(self, elements: Iterable[int]) -> float:
        raise NotImplementedError


def marginal_gain(oracle: ObjectiveOracle, e: int, base: Iterable[int]) -> float:
    """f(base + e) - f(base); zero whenever ``e`` already lies in ``base``."""
    if e not in oracle.ground_set:
        raise UnknownElementError(e)
    return oracle.gain(e, base)


class ModularObjective(ObjectiveOracle):
    """f(Z) = sum of fixed non-negative per-element weights.

    Trivially monotone and submodular; used as a fixture and for sanity
    checks where exact hand arithmetic is possible.
    """

    def __init__(self, weights: Mapping[int, float]):
        super().__init__(weights.keys())
        if any(v < 0 for v in weights.values()):
            raise ParameterError("modular weights must be non-negative")
        self._weights = {int(k): float(v) for k, v in weights.items()}

    def _value(self, elements):
        # Sorted iteration keeps float sums reproducible across set orders.
        try:
            return sum(self._weights[e] for e in sorted(elements))
        except KeyError as exc:
            raise UnknownElementError(exc.args[0]) from None


class CoverageObjective(ObjectiveOracle):
    """Dominated-node count f(Z) = |N(Z) u Z| on a directed graph.

    N(Z) is the union of out-neighborhoods.  Internally each node carries a
    bitmask of itself plus its out-neighbors, so an evaluation is a bitwise
    OR followed by a popcount.
    """

    def __init__(self, adjacency: Mapping[int, Iterable[int]], directed: bool = True):
        nodes = set(int(n) for n in adjacency)
        for targets in adjacency.values():
            nodes.update(int(t) for t in targets)
        super().__init__(nodes)
        self.directed = directed
        index = {node: i for i, node in enumerate(sorted(nodes))}
        masks = {node: 1 << index[node] for node in nodes}
        for source, targets in adjacency.items():
            for target in targets:
                masks[int(source)] |= 1 << index[int(target)]
                if not directed:
                    masks[int(target)] |= 1 << index[int(source)]
        self._masks = masks

    def _value(self, elements):
        covered = 0
        try:
            for e in elements:
                covered |= self._masks[e]
        except KeyError as exc:
            raise UnknownElementError(exc.args[0]) from None
        return float(covered.bit_count())


def build_coverage(
    edges: Iterable[tuple[int, int]],
    directed: bool = True,
    isolated_nodes: Iterable[int] = (),
) -> CoverageObjective:
    """Coverage oracle over all node ids appearing in ``edges``.

    Nodes without any incident edge only enter the ground set when listed in
    ``isolated_nodes``.
    """
    adjacency: dict[int, set[int]] = {int(n): set() for n in isolated_nodes}
    for source, target in edges:
        adjacency.setdefault(int(source), set()).add(int(target))
        adjacency.setdefault(int(target), set())
    return CoverageObjective(adjacency, directed=directed)


class MovieObjective(ObjectiveOracle):
    """Personalized recommendation objective over item feature vectors.

    f(Z) = (1-alpha) * sum_{z in Z} s(u, z)
         + alpha * sum_{m in ground set} max_{z in Z} s(m, z)

    with s(a, b) the inner product of the feature vectors clamped below at
    zero, and the max over an empty Z defined as 0.  Clamping keeps the
    function monotone submodular even when feature vectors carry negative
    coordinates.
    """

    def __init__(
        self,
        user_vec: Sequence[float],
        movie_vecs: Mapping[int, Sequence[float]],
        alpha: float,
        precompute: bool | None = None,
    ):
        super().__init__(movie_vecs.keys())
        if not 0.0 <= alpha <= 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
        user = np.asarray(user_vec, dtype=float)
        if user.ndim != 1:
            raise ParameterError("user vector must be one-dimensional")
        ids = sorted(int(i) for i in movie_vecs)
        rows = []
        for movie_id in ids:
            vec = np.asarray(movie_vecs[movie_id], dtype=float)
            if vec.shape != user.shape:
                raise ParameterError(
                    f"feature dimension mismatch for id {movie_id}: "
                    f"{vec.shape} vs {user.shape}"
                )
            rows.append(vec)
        self.alpha = float(alpha)
        self._ids = ids
        self._index = {movie_id: i for i, movie_id in enumerate(ids)}
        self._features = np.vstack(rows) if rows else np.zeros((0, user.size))
        self._user_sims = np.clip(self._features @ user, 0.0, None)
        if precompute is None:
            precompute = len(ids) <= _SIM_PRECOMPUTE_LIMIT
        # Column-major layout: evaluations gather columns, and a contiguous
        # column gather is an order of magnitude faster than a strided one.
        self._sims = (
            np.asfortranarray(np.clip(self._features @ self._features.T, 0.0, None))
            if precompute and rows
            else None
        )

    def _indices(self, elements) -> np.ndarray:
        try:
            idx = [self._index[e] for e in elements]
        except KeyError as exc:
            raise UnknownElementError(exc.args[0]) from None
        idx.sort()
        return np.asarray(idx, dtype=np.intp)

    def _value(self, elements):
        idx = self._indices(elements)
        if idx.size == 0:
            return 0.0
        modular = float(self._user_sims[idx].sum())
        if self.alpha == 0.0:
            return modular
        if self._sims is not None:
            columns = self._sims[:, idx]
        else:
            columns = np.clip(self._features @ self._features[idx].T, 0.0, None)
        facility = float(columns.max(axis=1).sum())
        return (1.0 - self.alpha) * modular + self.alpha * facility


def build_movie_objective(
    user_vec: Sequence[float],
    movie_vecs: Mapping[int, Sequence[float]],
    alpha: float,
    precompute: bool | None = None,
) -> MovieObjective:
    return MovieObjective(user_vec, movie_vecs, alpha, precompute=precompute)


@dataclass
class PropertyReport:
    """Outcome of randomized structure checks on an oracle."""

    trials: int
    monotonicity_violations: int = 0
    diminishing_violations: int = 0
    removal_bound_violations: int = 0
    examples: list = field(default_factory=list)

    @property
    def total_violations(self) -> int:
        return (
            self.monotonicity_violations
            + self.diminishing_violations
            + self.removal_bound_violations
        )

    @property
    def clean(self) -> bool:
        return self.total_violations == 0


def property_check(
    oracle: ObjectiveOracle,
    universe: Iterable[int] | None = None,
    trials: int = 1000,
    seed: int = 0,
    tolerance: float = 1e-9,
) -> PropertyReport:
    """Sample-based check of monotonicity, diminishing returns and the
    removal bound f(A|B) - f(A|(B-R)) <= f(A|R) - f(A).

    Shipped objectives must come back clean; a deliberately supermodular
    function will not.  ``tolerance`` is relative to the magnitude of the
    values involved so floating-point noise does not count as a violation.
    """
    import random as _random

    rng = _random.Random(seed)
    ids = sorted(universe) if universe is not None else sorted(oracle.ground_set)
    n = len(ids)
    if n == 0:
        return PropertyReport(trials=trials)
    report = PropertyReport(trials=trials)

    def subset_from_mask(mask):
        return {ids[i] for i in range(n) if mask >> i & 1}

    def slack(*values):
        return tolerance * max(1.0, *(abs(v) for v in values))

    for _ in range(trials):
        y_mask = rng.getrandbits(n)
        x_mask = y_mask & rng.getrandbits(n)  # X subset of Y
        X, Y = subset_from_mask(x_mask), subset_from_mask(y_mask)
        f_x, f_y = oracle.eval(X), oracle.eval(Y)
        if f_x > f_y + slack(f_x, f_y):
            report.monotonicity_violations += 1
            if len(report.examples) < 5:
                report.examples.append(("monotonicity", X, Y))
        outside = [e for e in ids if e not in Y]
        if outside:
            e = rng.choice(outside)
            gain_x = oracle.eval(X | {e}) - f_x
            gain_y = oracle.eval(Y | {e}) - f_y
            if gain_x < gain_y - slack(gain_x, gain_y, f_y):
                report.diminishing_violations += 1
                if len(report.examples) < 5:
                    report.examples.append(("diminishing", X, Y, e))
        A = subset_from_mask(rng.getrandbits(n))
        B = subset_from_mask(rng.getrandbits(n))
        R = subset_from_mask(rng.getrandbits(n))
        lhs = oracle.eval(A | B) - oracle.eval(A | (B - R))
        rhs = oracle.eval(A | R) - oracle.eval(A)
        if lhs > rhs + slack(lhs, rhs):
            report.removal_bound_violations += 1
            if len(report.examples) < 5:
                report.examples.append(("removal-bound", A, B, R))
    return report
