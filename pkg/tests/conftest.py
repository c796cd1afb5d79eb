import random

import pytest

from substream.objectives import (
    CoverageObjective,
    ModularObjective,
    ObjectiveOracle,
    build_coverage,
)


class MixtureObjective(ObjectiveOracle):
    """Non-negative weights plus dominated-node count: modular + coverage."""

    def __init__(self, weights, adjacency):
        self._modular = ModularObjective(weights)
        self._coverage = CoverageObjective(adjacency)
        super().__init__(self._modular.ground_set | self._coverage.ground_set)
        if self._modular.ground_set != self._coverage.ground_set:
            raise ValueError("mixture parts must share a ground set")

    def _value(self, elements):
        elements = set(elements)
        return self._modular._value(elements) + self._coverage._value(elements)


class SupermodularFixture(ObjectiveOracle):
    """f(Z) = |Z|^2: monotone but not submodular."""

    def __init__(self, universe):
        super().__init__(universe)

    def _value(self, elements):
        unknown = set(elements) - self.ground_set
        if unknown:
            raise KeyError(unknown.pop())
        return float(len(set(elements)) ** 2)


class SpyOracle(ObjectiveOracle):
    """Wrapper recording every evaluated set."""

    def __init__(self, inner):
        super().__init__(inner.ground_set)
        self.inner = inner
        self.seen = []

    def _value(self, elements):
        elements = set(elements)
        self.seen.append(frozenset(elements))
        return self.inner._value(elements)


def random_digraph_edges(rng, n, density=0.25):
    edges = []
    for v in range(n):
        for t in range(n):
            if v != t and rng.random() < density:
                edges.append((v, t))
    return edges


def random_coverage_oracle(rng, n, density=0.25):
    return build_coverage(
        random_digraph_edges(rng, n, density), isolated_nodes=range(n)
    )


def random_mixture_oracle(rng, n, density=0.2):
    weights = {v: rng.uniform(0.0, 3.0) for v in range(n)}
    adjacency = {v: set() for v in range(n)}
    for v, t in random_digraph_edges(rng, n, density):
        adjacency[v].add(t)
    return MixtureObjective(weights, adjacency)


def shuffled_stream(rng, oracle):
    ids = sorted(oracle.ground_set)
    rng.shuffle(ids)
    return ids


@pytest.fixture
def star_oracle():
    return build_coverage([(0, t) for t in range(1, 6)])


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
