import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import addr, eth
from oracles import naive_candidates, naive_histogram, synthetic_trace
from sealbid.anonymity import (
    DEFAULT_BUCKETS,
    BucketSpec,
    Window,
    anonymity_set_size,
    bucket_by_balance,
    candidate_addresses,
    geometric_buckets,
    histogram_csv,
    max_balance_bound,
    summary,
)
from sealbid.errors import InvalidRatio, InvalidWindow, UnsortedTrace
from sealbid.ledger import Transaction, TxKind

A, B, C, D = addr(0xA), addr(0xB), addr(0xC), addr(0xD)
W = Window(10, 20)


def tx(block, sender, to, value, kind=TxKind.TRANSFER):
    return Transaction(block, 1000 + 13 * block, sender, to, value, kind)


class TestCandidates:
    def test_empty(self):
        assert candidate_addresses([], W) == {}

    def test_fresh_receiver(self):
        assert candidate_addresses([tx(12, A, B, eth("0.3"))], W) == {B: eth("0.3")}

    def test_received_before_window(self):
        trace = [tx(5, A, B, 1), tx(12, A, B, eth("0.3"))]
        assert candidate_addresses(trace, W) == {}

    def test_received_after_window_only(self):
        assert candidate_addresses([tx(25, A, B, 1)], W) == {}

    def test_sender_in_window_excluded(self):
        trace = [tx(11, A, B, 5), tx(15, B, C, 1)]
        assert candidate_addresses(trace, W) == {C: 1}

    def test_sending_after_window_is_fine(self):
        trace = [tx(11, A, B, 5), tx(21, B, C, 1)]
        assert candidate_addresses(trace, W) == {B: 5}

    def test_credits_summed_inside_window_only(self):
        trace = [tx(10, A, B, 2), tx(20, C, B, 3), tx(21, D, B, 100)]
        assert candidate_addresses(trace, W) == {B: 5}

    def test_contract_traffic_ignored(self):
        trace = [tx(5, A, B, 1, TxKind.CONTRACT_CALL), tx(12, A, B, 4), tx(13, B, C, 0, TxKind.DEPLOY)]
        assert candidate_addresses(trace, W) == {B: 4}

    def test_unsorted(self):
        with pytest.raises(UnsortedTrace):
            candidate_addresses([tx(12, A, B, 1), tx(11, A, C, 1)], W)

    def test_bad_window(self):
        with pytest.raises(InvalidWindow):
            Window(5, 4)


class TestBound:
    def test_max(self):
        trace = [tx(11, A, B, eth("0.3")), tx(12, A, C, eth("0.5"))]
        assert max_balance_bound(trace, W) == eth("0.5")

    def test_empty(self):
        assert max_balance_bound([], W) == 0


class TestBuckets:
    def test_default_example(self):
        hist = bucket_by_balance([eth("0.3"), eth("0.4"), eth(7)], DEFAULT_BUCKETS)
        counts = {(b.lo, b.hi): b.count for b in hist}
        assert counts[(Fraction("0.1"), Fraction("0.5"))] == 2
        assert counts[(Fraction(1), Fraction(10))] == 1
        assert sum(counts.values()) == 3

    def test_half_open_boundary(self):
        hist = bucket_by_balance([eth("0.5")], DEFAULT_BUCKETS)
        assert [(b.lo, b.hi) for b in hist if b.count] == [(Fraction("0.5"), Fraction(1))]

    def test_boundary_one_wei_below(self):
        hist = bucket_by_balance([eth("0.5") - 1], DEFAULT_BUCKETS)
        assert [(b.lo, b.hi) for b in hist if b.count] == [(Fraction("0.1"), Fraction("0.5"))]

    def test_default_ranges(self):
        assert [str(lo) for lo, _ in DEFAULT_BUCKETS.ranges] == ["0", "1/10", "1/2", "1", "10", "50", "100", "1000"]
        assert DEFAULT_BUCKETS.ranges[-1][1] is None

    def test_open_top(self):
        hist = bucket_by_balance([eth(10**6)], DEFAULT_BUCKETS)
        assert hist[-1].count == 1

    def test_closed_spec_drops_out_of_range(self):
        spec = BucketSpec((Fraction(1), Fraction(2)))
        assert [b.count for b in bucket_by_balance([eth("0.5"), eth("1.5"), eth(2)], spec)] == [1]

    def test_bad_edges(self):
        with pytest.raises(ValueError):
            BucketSpec((Fraction(1), Fraction(1)))

    def test_set_size(self):
        cands = {A: eth("0.3"), B: eth("0.4"), C: eth(7)}
        assert anonymity_set_size(cands, eth("0.2"), DEFAULT_BUCKETS) == 2
        assert anonymity_set_size(cands, eth(2), DEFAULT_BUCKETS) == 1

    def test_csv(self):
        text = histogram_csv(bucket_by_balance([eth("0.3")], DEFAULT_BUCKETS))
        lines = text.splitlines()
        assert lines[0] == "range_lo_eth,range_hi_eth,count"
        assert lines[2] == "0.1,0.5,1"
        assert lines[-1] == "1000,inf,0"


class TestGeometric:
    def test_first_edges(self):
        spec = geometric_buckets("0.1", "1", "1.25")
        assert spec.edges[:3] == (Fraction("0.1"), Fraction("0.125"), Fraction("0.15625"))
        assert spec.edges[-2] < 1 <= spec.edges[-1]

    def test_ratio_one(self):
        with pytest.raises(InvalidRatio):
            geometric_buckets("0.1", "1", "1")

    def test_single_bucket(self):
        spec = geometric_buckets("1", "1.25", "1.25")
        assert spec.ranges == [(Fraction(1), Fraction("1.25"))]

    def test_exact_wei_edges(self):
        spec = geometric_buckets("0.1", "1", "1.25")
        assert spec.wei_edges[:3] == (10**17, 125 * 10**15, 15625 * 10**13)


# -- oracle equivalence ----------------------------------------------------------


@pytest.mark.parametrize("seed", range(10))
def test_matches_naive_filter(seed):
    rng = random.Random(seed)
    trace = synthetic_trace(rng, 2000)
    lo = rng.randint(0, 900)
    window = Window(lo, lo + rng.randint(0, 300))
    got = candidate_addresses(trace, window)
    assert got == naive_candidates(trace, window.start_block, window.end_block)
    assert max_balance_bound(trace, window) == max(got.values(), default=0)


@pytest.mark.parametrize("seed", range(5))
def test_histogram_matches_recount(seed):
    rng = random.Random(100 + seed)
    trace = synthetic_trace(rng, 1000, universe=1000)
    window = Window(200, 800)
    cands = candidate_addresses(trace, window)
    for spec in (DEFAULT_BUCKETS, geometric_buckets("0.1", "100", "1.25")):
        hist = bucket_by_balance(cands, spec)
        assert [b.count for b in hist] == naive_histogram(cands.values(), spec.ranges)


def test_zero_out_degree():
    rng = random.Random(7)
    trace = synthetic_trace(rng, 5000)
    window = Window(300, 600)
    cands = candidate_addresses(trace, window)
    assert cands
    for t in trace:
        if t.block in window:
            assert t.sender not in cands


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 500), st.integers(0, 200), st.integers(0, 200), st.integers(0, 200))
def test_nested_window_monotonicity(seed, start, inner, left, right):
    trace = synthetic_trace(random.Random(seed), 400, max_block=1000)
    narrow = Window(start, start + inner)
    wide = Window(max(0, start - left), start + inner + right)
    sent_in_wide = {t.sender for t in trace if t.block in wide}
    c_narrow, c_wide = candidate_addresses(trace, narrow), candidate_addresses(trace, wide)
    for a, bal in c_narrow.items():
        if a not in sent_in_wide:
            assert a in c_wide and c_wide[a] >= bal


def test_summary_shape():
    s = summary([tx(11, A, B, eth("0.3"))], W)
    assert s["candidates"] == 1
    assert s["max_balance_bound_wei"] == str(eth("0.3"))
    assert len(s["histogram"]) == len(DEFAULT_BUCKETS.ranges)
