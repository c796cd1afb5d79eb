"""Dataset loading, artifact persistence, and synthetic instance generators.

Formats:
  * edge list  -- whitespace-separated id pairs, '#' comments, blank lines
  * feature table -- delimited text with header columns
                     id, genres, popularity, f0..f(d-1); genres split on '|'
  * removal list -- one id per line
  * summary / grid documents -- checksummed JSON defined next to the builder
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError
from .grid import ThresholdGrid, grid_from_document, grid_to_document
from .objectives import ObjectiveOracle
from .summary import Summary, summary_from_document, summary_to_document


@dataclass(frozen=True)
class EdgeListDocument:
    directed: bool
    edges: tuple[tuple[int, int], ...]

    @property
    def universe(self) -> frozenset:
        nodes = set()
        for source, target in self.edges:
            nodes.add(source)
            nodes.add(target)
        return frozenset(nodes)


def parse_edge_lines(lines: Iterable[str], directed: bool = True) -> EdgeListDocument:
    edges = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected two ids, got {len(parts)} fields", line=lineno)
        try:
            source, target = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer id in {line!r}", line=lineno) from None
        if source < 0 or target < 0:
            raise ParseError("node ids must be non-negative", line=lineno)
        edges.append((source, target))
    return EdgeListDocument(directed=directed, edges=tuple(edges))


def load_edge_list(path, directed: bool = True) -> EdgeListDocument:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_edge_lines(handle, directed=directed)


def save_edge_list(document: EdgeListDocument, path):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("# source target\n")
        for source, target in document.edges:
            handle.write(f"{source} {target}\n")


@dataclass(frozen=True)
class FeatureTable:
    dimension: int
    ids: tuple[int, ...]
    features: np.ndarray  # row per id, dimension columns
    genres: dict
    popularity: dict

    def movie_vecs(self) -> dict:
        return {e: self.features[i] for i, e in enumerate(self.ids)}


def load_feature_table(path, delimiter: str = ",") -> FeatureTable:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        rows = list(reader)
    if not rows:
        raise ParseError("empty feature table")
    header = [name.strip() for name in rows[0]]
    feature_names = [name for name in header if name.startswith("f")]
    expected = [f"f{i}" for i in range(len(feature_names))]
    if "id" not in header or feature_names != expected or not feature_names:
        raise ParseError(
            f"header must name columns id[, genres][, popularity], f0..f(d-1); got {header}"
        )
    column = {name: idx for idx, name in enumerate(header)}
    dimension = len(feature_names)
    ids, vectors = [], []
    genres, popularity = {}, {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, got {len(row)}", line=lineno
            )
        try:
            movie_id = int(row[column["id"]])
            vector = [float(row[column[name]]) for name in feature_names]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        ids.append(movie_id)
        vectors.append(vector)
        if "genres" in column:
            cell = row[column["genres"]].strip()
            genres[movie_id] = tuple(tag for tag in cell.split("|") if tag)
        if "popularity" in column:
            try:
                count = float(row[column["popularity"]])
            except ValueError:
                raise ParseError(
                    f"non-numeric popularity {row[column['popularity']]!r}",
                    line=lineno,
                ) from None
            if count < 0:
                raise ParseError("popularity must be >= 0", line=lineno)
            popularity[movie_id] = count
    if len(set(ids)) != len(ids):
        raise ParseError("duplicate ids in feature table")
    return FeatureTable(
        dimension=dimension,
        ids=tuple(ids),
        features=np.asarray(vectors, dtype=float),
        genres=genres,
        popularity=popularity,
    )


def save_feature_table(table: FeatureTable, path, delimiter: str = ","):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter=delimiter)
        header = ["id"]
        if table.genres:
            header.append("genres")
        if table.popularity:
            header.append("popularity")
        header.extend(f"f{i}" for i in range(table.dimension))
        writer.writerow(header)
        for i, movie_id in enumerate(table.ids):
            row = [movie_id]
            if table.genres:
                row.append("|".join(table.genres.get(movie_id, ())))
            if table.popularity:
                row.append(table.popularity.get(movie_id, 0))
            row.extend(repr(float(x)) for x in table.features[i])
            writer.writerow(row)


def load_removal_list(path) -> frozenset:
    removed = set()
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                removed.add(int(line))
            except ValueError:
                raise ParseError(f"non-integer id {line!r}", line=lineno) from None
    return frozenset(removed)


def save_removal_list(removed: Iterable[int], path):
    with open(path, "w", encoding="utf-8") as handle:
        for e in sorted(removed):
            handle.write(f"{e}\n")


def save_summary(summary: Summary, path):
    Path(path).write_text(summary_to_document(summary), encoding="utf-8")


def load_summary(path, oracle: ObjectiveOracle | None = None) -> Summary:
    return summary_from_document(Path(path).read_text(encoding="utf-8"), oracle)


def save_grid(grid: ThresholdGrid, path):
    Path(path).write_text(grid_to_document(grid), encoding="utf-8")


def load_grid(path, oracle: ObjectiveOracle | None = None) -> ThresholdGrid:
    return grid_from_document(Path(path).read_text(encoding="utf-8"), oracle)


# -- synthetic instances ------------------------------------------------------


def synth_power_law_graph(
    n: int,
    seed: int,
    exponent: float = 2.1,
    max_out_fraction: float = 0.1,
) -> EdgeListDocument:
    """Directed graph whose out-degrees follow a truncated power law.

    Every node appears (possibly with out-degree zero targets elsewhere), so
    the universe is exactly range(n).
    """
    rng = random.Random(seed)
    max_out = max(2, int(n * max_out_fraction))
    edges = []
    nodes = list(range(n))
    for v in nodes:
        u = rng.random()
        degree = int(u ** (-1.0 / (exponent - 1.0)))
        degree = max(1, min(degree, max_out, n - 1))
        targets = rng.sample(nodes, degree + 1)
        picked = [t for t in targets if t != v][:degree]
        edges.extend((v, t) for t in picked)
    return EdgeListDocument(directed=True, edges=tuple(edges))


def _proportional_counts(total: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder rounding of total * fraction per entry."""
    raw = [total * f for f in fractions]
    counts = [int(x) for x in raw]
    shortfall = total - sum(counts)
    remainders = sorted(
        range(len(raw)), key=lambda i: (raw[i] - counts[i]), reverse=True
    )
    for i in remainders[:shortfall]:
        counts[i] += 1
    return counts


def synth_feature_table(
    rows: int,
    dimension: int,
    seed: int,
    genre_fractions: Sequence[tuple[str, float]] = (
        ("Drama", 0.41),
        ("Comedy", 0.25),
        ("Action", 0.20),
        ("Horror", 0.14),
    ),
    popularity_exponent: float = 1.8,
) -> FeatureTable:
    """Feature table with exact genre proportions and heavy-tailed popularity.

    Feature coordinates are drawn around a positive mean so pairwise inner
    products are mostly (not exclusively) positive, resembling score models
    fit to rating data.
    """
    fractions = [f for _, f in genre_fractions]
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ParseError(f"genre fractions must sum to 1, got {sum(fractions)}")
    rng = np.random.default_rng(seed)
    features = rng.normal(loc=0.3, scale=0.35, size=(rows, dimension))
    counts = _proportional_counts(rows, fractions)
    labels = []
    for (name, _), count in zip(genre_fractions, counts):
        labels.extend([name] * count)
    order = rng.permutation(rows)
    genres = {int(order[i]): (labels[i],) for i in range(rows)}
    popularity = {
        e: int(x)
        for e, x in enumerate(
            np.minimum(rng.pareto(popularity_exponent, size=rows) * 40 + 1, 5000)
        )
    }
    return FeatureTable(
        dimension=dimension,
        ids=tuple(range(rows)),
        features=features,
        genres=genres,
        popularity=popularity,
    )


def synth_user_vector(table: FeatureTable, seed: int, sample: int = 20) -> np.ndarray:
    """A user profile: the mean of a few sampled item vectors plus jitter."""
    rng = np.random.default_rng(seed)
    count = min(sample, len(table.ids))
    picks = rng.choice(len(table.ids), size=count, replace=False)
    base = table.features[picks].mean(axis=0)
    return base + rng.normal(scale=0.05, size=table.dimension)
