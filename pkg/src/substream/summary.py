"""One-pass summary builder with partitioned, exponentially decreasing
thresholds.

The summary is arranged into ceil(log2 k) + 1 partitions.  Partition i holds
w * ceil(k / 2^i) buckets of capacity min(2^i, k), and admits an element into
a bucket only when the marginal gain clears tau / min(2^i, k).  A streamed
element goes into the first non-full bucket (partitions ascending, buckets
ascending) whose threshold its gain clears, or is dropped.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import DocumentError, ParameterError
from .objectives import ObjectiveOracle

DOCUMENT_FORMAT = "substream-summary"
DOCUMENT_VERSION = 1


def ceil_log2(k: int) -> int:
    """Exact integer ceil(log2 k) for k >= 1."""
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    return (k - 1).bit_length()


def width_for_removals(k: int, m: int) -> int:
    """Memory multiplier w sufficient for robustness against m removals.

    ceil(4 * ceil(log2 k) * m / k), clamped below at 1 since the builder
    needs at least one bucket per partition.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if m < 0:
        raise ParameterError(f"m must be >= 0, got {m}")
    return max(1, -(-4 * ceil_log2(k) * m // k))


def threshold_base(k: int, opt_value: float) -> float:
    """Threshold base tau matched to an estimate of the best achievable value.

    tau = opt / (2 + (1 - e^-1) / (1 - e^-1/3) * (1 - 1 / ceil(log2 k))).
    Undefined at k < 2 where ceil(log2 k) = 0.
    """
    if k < 2:
        raise ParameterError(f"threshold base needs k >= 2, got {k}")
    if opt_value < 0:
        raise ParameterError(f"opt_value must be >= 0, got {opt_value}")
    ratio = (1.0 - math.exp(-1.0)) / (1.0 - math.exp(-1.0 / 3.0))
    return opt_value / (2.0 + ratio * (1.0 - 1.0 / ceil_log2(k)))


def guarantee_ratio(k: int, epsilon: float = 0.0) -> float:
    """Worst-case value ratio certified for a query after any m removals."""
    if k < 2:
        raise ParameterError(f"guarantee ratio needs k >= 2, got {k}")
    return 0.149 * (1.0 - 1.0 / ceil_log2(k)) / (1.0 + epsilon)


@dataclass(frozen=True)
class PartitionSpec:
    index: int
    bucket_count: int
    capacity: int
    threshold: float


@dataclass(frozen=True)
class StructurePlan:
    k: int
    w: int
    tau: float
    partitions: tuple[PartitionSpec, ...]

    @property
    def max_total_capacity(self) -> int:
        return sum(p.bucket_count * p.capacity for p in self.partitions)

    @property
    def capacity_bound(self) -> int:
        """Closed-form bound (ceil(log2 k) + 5) * w * k on the total capacity."""
        return (ceil_log2(self.k) + 5) * self.w * self.k


def plan_structure(k: int, w: int, tau: float) -> StructurePlan:
    """Partition layout for the given parameters.

    k = 1 is accepted operationally (a single partition of w unit buckets),
    but no query ratio is certified there: guarantee_ratio and
    threshold_base both require k >= 2.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if w < 1:
        raise ParameterError(f"w must be >= 1, got {w}")
    if tau < 0:
        raise ParameterError(f"tau must be >= 0, got {tau}")
    partitions = []
    for i in range(ceil_log2(k) + 1):
        capacity = min(2**i, k)
        partitions.append(
            PartitionSpec(
                index=i,
                bucket_count=w * (-(-k // 2**i)),
                capacity=capacity,
                threshold=tau / capacity,
            )
        )
    return StructurePlan(k=k, w=w, tau=float(tau), partitions=tuple(partitions))


def pruned_scan_floor(plan: StructurePlan, singleton_value: float) -> int | None:
    """Smallest partition index whose threshold the singleton value clears.

    Because a marginal gain never exceeds the singleton value, partitions
    below the floor can be skipped without changing any placement decision.
    Returns None when no partition qualifies (reject without scanning).
    """
    for spec in plan.partitions:
        if spec.threshold <= singleton_value:
            return spec.index
    return None


@dataclass
class Bucket:
    partition: int
    index: int
    capacity: int
    threshold: float
    members: list[int] = field(default_factory=list)
    member_set: set[int] = field(default_factory=set)
    value: float = 0.0

    @property
    def full(self) -> bool:
        return len(self.members) >= self.capacity

    def add(self, e: int, gain: float):
        self.members.append(e)
        self.member_set.add(e)
        self.value += gain


@dataclass(frozen=True)
class PlacementDecision:
    """Outcome of streaming one element into a summary."""

    partition: int | None
    bucket: int | None
    reason: str  # "stored" | "duplicate" | "below-thresholds" | "no-bucket"
    oracle_evals: int

    @property
    def placed(self) -> bool:
        return self.reason == "stored"


@dataclass
class BuildStats:
    elements_seen: int = 0
    elements_stored: int = 0
    oracle_calls: int = 0


class Summary:
    """Mutable bucket structure being filled by a single stream pass.

    Single-writer while under construction; read-only queries on a finished
    summary are safe to run concurrently.
    """

    def __init__(self, plan: StructurePlan):
        self.plan = plan
        self.buckets: list[list[Bucket]] = [
            [
                Bucket(
                    partition=spec.index,
                    index=j,
                    capacity=spec.capacity,
                    threshold=spec.threshold,
                )
                for j in range(spec.bucket_count)
            ]
            for spec in plan.partitions
        ]
        self.locations: dict[int, tuple[int, int]] = {}
        self.insertion_order: list[int] = []
        self.stats = BuildStats()
        # Buckets become full permanently, so each partition keeps a cursor
        # past its fully-filled prefix; scans behind it would all be skipped.
        self._first_open = [0] * len(plan.partitions)

    @property
    def size(self) -> int:
        return len(self.locations)

    def members(self) -> frozenset:
        return frozenset(self.locations)

    def iter_buckets(self):
        for row in self.buckets:
            yield from row

    def ingest(
        self,
        e: int,
        oracle: ObjectiveOracle,
        singleton_value: float | None = None,
        use_scan_floor: bool = True,
        debug_check: bool = False,
    ) -> PlacementDecision:
        """Place one stream element, or reject it, per the threshold rule.

        ``singleton_value`` may carry a precomputed f({e}) so callers that
        fan one element out to many summaries pay for it once.  Elements
        already stored are rejected without touching the oracle.
        """
        self.stats.elements_seen += 1
        e = int(e)
        if e in self.locations:
            return PlacementDecision(None, None, "duplicate", 0)
        evals = 0
        if singleton_value is None:
            singleton_value = oracle.eval((e,))
            evals += 1
        if use_scan_floor:
            floor = pruned_scan_floor(self.plan, singleton_value)
            if floor is None:
                self.stats.oracle_calls += evals
                return PlacementDecision(None, None, "below-thresholds", evals)
        else:
            floor = 0
        for spec in self.plan.partitions[floor:]:
            row = self.buckets[spec.index]
            start = self._first_open[spec.index]
            while start < len(row) and row[start].full:
                start += 1
            self._first_open[spec.index] = start
            for bucket in row[start:]:
                if bucket.full:
                    continue
                if bucket.members:
                    gain = oracle.eval(bucket.member_set | {e}) - bucket.value
                    evals += 1
                else:
                    gain = singleton_value
                if gain >= spec.threshold:
                    bucket.add(e, gain)
                    self.locations[e] = (spec.index, bucket.index)
                    self.insertion_order.append(e)
                    self.stats.elements_stored += 1
                    if debug_check:
                        fresh = oracle.eval(bucket.member_set)
                        evals += 1
                        if not math.isclose(fresh, bucket.value, rel_tol=1e-9, abs_tol=1e-9):
                            raise AssertionError(
                                f"cached bucket value drifted: {bucket.value} vs {fresh}"
                            )
                    self.stats.oracle_calls += evals
                    return PlacementDecision(spec.index, bucket.index, "stored", evals)
        self.stats.oracle_calls += evals
        return PlacementDecision(None, None, "no-bucket", evals)


def build_summary(
    stream: Iterable[int],
    k: int,
    w: int,
    tau: float,
    oracle: ObjectiveOracle,
    use_scan_floor: bool = True,
    debug_check: bool = False,
) -> Summary:
    """Run the single pass over ``stream`` and return the filled summary."""
    summary = Summary(plan_structure(k, w, tau))
    for e in stream:
        summary.ingest(
            e, oracle, use_scan_floor=use_scan_floor, debug_check=debug_check
        )
    return summary


# -- serialization -----------------------------------------------------------


def _summary_body(summary: Summary) -> dict:
    return {
        "k": summary.plan.k,
        "w": summary.plan.w,
        "tau": summary.plan.tau,
        "stream_order": list(summary.insertion_order),
        "buckets": [
            {
                "partition": bucket.partition,
                "bucket": bucket.index,
                "value": bucket.value,
                "members": list(bucket.members),
            }
            for bucket in summary.iter_buckets()
            if bucket.members
        ],
    }


def _summary_from_body(body: dict, oracle: ObjectiveOracle | None = None) -> Summary:
    try:
        plan = plan_structure(int(body["k"]), int(body["w"]), float(body["tau"]))
        summary = Summary(plan)
        for entry in body["buckets"]:
            i, j = int(entry["partition"]), int(entry["bucket"])
            bucket = summary.buckets[i][j]
            for e in entry["members"]:
                e = int(e)
                if e in summary.locations:
                    raise DocumentError(f"element {e} stored twice")
                bucket.members.append(e)
                bucket.member_set.add(e)
                summary.locations[e] = (i, j)
            if len(bucket.members) > bucket.capacity:
                raise DocumentError(
                    f"bucket ({i},{j}) holds {len(bucket.members)} elements, "
                    f"capacity {bucket.capacity}"
                )
            bucket.value = float(entry["value"])
        order = [int(e) for e in body["stream_order"]]
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise DocumentError(f"malformed summary document: {exc}") from exc
    if sorted(order) != sorted(summary.locations):
        raise DocumentError("stream order does not match bucket membership")
    summary.insertion_order = order
    summary.stats.elements_stored = len(order)
    if oracle is not None:
        for bucket in summary.iter_buckets():
            if not bucket.members:
                continue
            fresh = oracle.eval(bucket.member_set)
            if not math.isclose(fresh, bucket.value, rel_tol=1e-9, abs_tol=1e-9):
                raise DocumentError(
                    f"bucket ({bucket.partition},{bucket.index}) cached value "
                    f"{bucket.value} disagrees with oracle value {fresh}"
                )
    return summary


def _checksum(payload: str) -> str:
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def summary_to_document(summary: Summary) -> str:
    """Self-describing, checksummed text form of a finished summary."""
    body = {
        "format": DOCUMENT_FORMAT,
        "version": DOCUMENT_VERSION,
        **_summary_body(summary),
    }
    payload = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return f"{payload}\nsha256:{_checksum(payload)}\n"


def parse_document(text: str, expected_format: str) -> dict:
    """Split payload from checksum line, verify both, return the body."""
    lines = text.strip().split("\n")
    if len(lines) != 2 or not lines[1].startswith("sha256:"):
        raise DocumentError("expected a payload line followed by a sha256 line")
    payload, digest = lines[0], lines[1][len("sha256:"):]
    if _checksum(payload) != digest:
        raise DocumentError("checksum mismatch: document truncated or edited")
    try:
        body = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"payload is not valid JSON: {exc}") from exc
    if body.get("format") != expected_format:
        raise DocumentError(
            f"unexpected document format {body.get('format')!r}, "
            f"wanted {expected_format!r}"
        )
    if body.get("version") != DOCUMENT_VERSION:
        raise DocumentError(f"unsupported document version {body.get('version')!r}")
    return body


def summary_from_document(text: str, oracle: ObjectiveOracle | None = None) -> Summary:
    """Rebuild a summary; with an oracle, revalidate cached bucket values."""
    return _summary_from_body(parse_document(text, DOCUMENT_FORMAT), oracle)
