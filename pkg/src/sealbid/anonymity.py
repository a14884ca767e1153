"""How well bidding transfers hide among ordinary traffic.

An outside observer who wants to find one-time addresses can only filter the
transfer graph: an unrevealed one-time address

1. sends nothing during the bidding window (nobody can sign for it), and
2. receives its first-ever transfer inside the bidding window.

Every address passing both tests is a candidate. Bucketing candidates by
balance shows how many look like a bid of a given size, and the largest
candidate balance bounds what the highest hidden bid could be.
"""

from __future__ import annotations

import csv
import io
import json
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import cached_property
from math import ceil
from typing import Iterable, Sequence

from .errors import InvalidRatio, InvalidWindow, UnsortedTrace
from .ledger import ETHER, Address, TraceRecord, TxKind


@dataclass(frozen=True)
class Window:
    """Inclusive block range of a bidding phase."""

    start_block: int
    end_block: int
    start_time: int | None = None
    end_time: int | None = None

    def __post_init__(self):
        if self.start_block > self.end_block:
            raise InvalidWindow(f"window start {self.start_block} after end {self.end_block}")

    def __contains__(self, block: int) -> bool:
        return self.start_block <= block <= self.end_block


def _check_sorted(trace: Sequence[TraceRecord]) -> None:
    for prev, cur in zip(trace, trace[1:]):
        if cur.block < prev.block:
            raise UnsortedTrace(f"block {cur.block} follows block {prev.block}")


def candidate_addresses(trace: Sequence[TraceRecord], window: Window) -> dict[Address, int]:
    """Addresses that pass both filters, mapped to their in-window credits in wei.

    "First-ever" is relative to ``trace``, so the trace should carry history
    from before the window. Only plain transfers form the graph.
    """
    _check_sorted(trace)
    first_receipt: dict[Address, int] = {}
    credits: dict[Address, int] = defaultdict(int)
    senders: set[Address] = set()
    for tx in trace:
        if tx.kind is not TxKind.TRANSFER:
            continue
        first_receipt.setdefault(tx.to, tx.block)
        if tx.block in window:
            senders.add(tx.sender)
            credits[tx.to] += tx.value
    return {
        addr: credits[addr]
        for addr, block in first_receipt.items()
        if block in window and addr not in senders
    }


def max_balance_bound(trace: Sequence[TraceRecord], window: Window) -> int:
    """Largest candidate balance; 0 when nobody qualifies."""
    return max(candidate_addresses(trace, window).values(), default=0)


# -- bucketing -----------------------------------------------------------------


def _eth(value) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(str(value))


def format_eth(value: Fraction | None) -> str:
    if value is None:
        return "inf"
    with localcontext() as ctx:
        ctx.prec = 40
        text = format((Decimal(value.numerator) / Decimal(value.denominator)).normalize(), "f")
    return text


@dataclass(frozen=True)
class BucketSpec:
    """Contiguous half-open ETH ranges ``[edges[i], edges[i+1])``.

    With ``open_top`` the last edge starts an unbounded range.
    """

    edges: tuple[Fraction, ...]
    open_top: bool = False

    def __post_init__(self):
        edges = tuple(_eth(e) for e in self.edges)
        if len(edges) < (1 if self.open_top else 2):
            raise ValueError("bucket spec needs at least one range")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError("bucket edges must be strictly increasing")
        if edges[0] < 0:
            raise ValueError("bucket edges must be non-negative")
        object.__setattr__(self, "edges", edges)

    @property
    def ranges(self) -> list[tuple[Fraction, Fraction | None]]:
        out = list(zip(self.edges, self.edges[1:]))
        if self.open_top:
            out.append((self.edges[-1], None))
        return out

    @cached_property
    def wei_edges(self) -> tuple[int, ...]:
        # x >= edge  <=>  x >= ceil(edge) for integer wei
        return tuple(ceil(e * ETHER) for e in self.edges)


DEFAULT_BUCKETS = BucketSpec(
    tuple(Fraction(x) for x in ("0", "0.1", "0.5", "1", "10", "50", "100", "1000")),
    open_top=True,
)


def geometric_buckets(lo, hi, ratio) -> BucketSpec:
    """Ranges ``[lo, lo*r), [lo*r, lo*r**2), ...`` until an edge reaches ``hi``."""
    lo, hi, ratio = _eth(lo), _eth(hi), _eth(ratio)
    if ratio <= 1:
        raise InvalidRatio(f"ratio must exceed 1, got {format_eth(ratio)}")
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    edges = [lo]
    while edges[-1] < hi:
        edges.append(edges[-1] * ratio)
    return BucketSpec(tuple(edges))


@dataclass(frozen=True)
class Bucket:
    lo: Fraction
    hi: Fraction | None
    count: int


def bucket_index(balance_wei: int, spec: BucketSpec) -> int | None:
    edges = spec.wei_edges
    i = bisect_right(edges, balance_wei) - 1
    if i < 0 or (i == len(edges) - 1 and not spec.open_top):
        return None
    return i


def bucket_by_balance(candidates: dict[Address, int] | Iterable[int], spec: BucketSpec = DEFAULT_BUCKETS) -> list[Bucket]:
    """Count candidates per range. Balances outside every range are dropped."""
    balances = candidates.values() if isinstance(candidates, dict) else candidates
    counts = [0] * len(spec.ranges)
    for bal in balances:
        i = bucket_index(bal, spec)
        if i is not None:
            counts[i] += 1
    return [Bucket(lo, hi, n) for (lo, hi), n in zip(spec.ranges, counts)]


def anonymity_set_size(candidates: dict[Address, int], balance_wei: int, spec: BucketSpec = DEFAULT_BUCKETS) -> int:
    """How many candidates share the bucket of ``balance_wei``."""
    i = bucket_index(balance_wei, spec)
    if i is None:
        return 0
    return sum(1 for bal in candidates.values() if bucket_index(bal, spec) == i)


def histogram_csv(histogram: Sequence[Bucket]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("range_lo_eth", "range_hi_eth", "count"))
    for b in histogram:
        writer.writerow((format_eth(b.lo), format_eth(b.hi), b.count))
    return buf.getvalue()


def summary(trace: Sequence[TraceRecord], window: Window, spec: BucketSpec = DEFAULT_BUCKETS) -> dict:
    candidates = candidate_addresses(trace, window)
    histogram = bucket_by_balance(candidates, spec)
    return {
        "window": {"start_block": window.start_block, "end_block": window.end_block},
        "transfers": sum(1 for tx in trace if tx.kind is TxKind.TRANSFER),
        "candidates": len(candidates),
        "max_balance_bound_wei": str(max(candidates.values(), default=0)),
        "histogram": [
            {"range_lo_eth": format_eth(b.lo), "range_hi_eth": format_eth(b.hi), "count": b.count}
            for b in histogram
        ],
    }


def summary_json(trace: Sequence[TraceRecord], window: Window, spec: BucketSpec = DEFAULT_BUCKETS) -> str:
    return json.dumps(summary(trace, window, spec), indent=2, sort_keys=True) + "\n"
