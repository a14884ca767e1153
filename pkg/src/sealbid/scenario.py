"""End-to-end auction runs driven by a JSON scenario and a single seed.

A scenario funds a seller, the bidders and a pool of decoy accounts, plays
some pre-auction history, then runs one sealed-bid auction while decoy
transfers continue in the background. The report covers the outcome, fees,
the anonymity analysis of the bidding window and a conservation check.

All randomness comes from ``random.Random(seed)``, so equal scenarios give
byte-identical reports.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Callable, Sequence

from . import anonymity
from .auction import AuctionContract, Salt
from .crypto import BidMessage, Commitment, Decommitment, OracleKeypair, commit
from .deco import (
    BalanceSource,
    Oracle,
    OracleCredential,
    ReferenceBackend,
    prove_bid,
    query_balance,
    three_party_handshake,
)
from .errors import ConfigError
from .fees import MarketParams, default_schedule, fee_usd
from .ledger import ETHER, Address, Ledger, write_trace_csv

REPORT_VERSION = 1


def _wei(value: Any, path: str, *, positive: bool = False) -> int:
    try:
        eth = Decimal(str(value))
    except InvalidOperation:
        raise ConfigError(path, f"not a number: {value!r}") from None
    wei = eth * ETHER
    if wei != wei.to_integral_value():
        raise ConfigError(path, "more precision than 1 wei")
    wei = int(wei)
    if wei < 0 or (positive and wei == 0):
        raise ConfigError(path, "must be positive" if positive else "must be non-negative")
    return wei


def _int(value: Any, path: str, *, minimum: int = 0) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(path, f"must be at least {minimum}")
    return value


@dataclass(frozen=True)
class BidderSpec:
    funding: int
    price: int
    reveal: bool = True
    top_up: int = 0


@dataclass(frozen=True)
class DecoySpec:
    count: int = 200
    min_value: int = ETHER // 100
    max_value: int = 5 * ETHER
    history: int = 200
    fresh_ratio: float = 0.5


@dataclass(frozen=True)
class AuctionTiming:
    history_blocks: int = 50
    bidding_blocks: int = 100
    revealing_blocks: int = 50
    block_time: int = 13
    item_token: str | None = None


@dataclass(frozen=True)
class Scenario:
    seed: int
    bidders: tuple[BidderSpec, ...]
    market: MarketParams = field(default_factory=MarketParams)
    auction: AuctionTiming = field(default_factory=AuctionTiming)
    decoys: DecoySpec = field(default_factory=DecoySpec)

    @classmethod
    def from_dict(cls, data: dict) -> Scenario:
        if not isinstance(data, dict):
            raise ConfigError("$", "scenario must be a JSON object")
        seed = _int(data.get("seed", 0), "seed")

        market = data.get("market", {})
        try:
            market = MarketParams(
                Decimal(str(market.get("gas_price_gwei", 45))),
                Decimal(str(market.get("eth_usd", 3200))),
            )
        except (InvalidOperation, ValueError) as exc:
            raise ConfigError("market", str(exc)) from None

        a = data.get("auction", {})
        timing = AuctionTiming(
            history_blocks=_int(a.get("history_blocks", 50), "auction.history_blocks", minimum=1),
            bidding_blocks=_int(a.get("bidding_blocks", 100), "auction.bidding_blocks", minimum=2),
            revealing_blocks=_int(a.get("revealing_blocks", 50), "auction.revealing_blocks", minimum=1),
            block_time=_int(a.get("block_time", 13), "auction.block_time", minimum=1),
            item_token=a.get("item_token"),
        )

        raw_bidders = data.get("bidders")
        if not isinstance(raw_bidders, list) or not raw_bidders:
            raise ConfigError("bidders", "at least one bidder is required")
        bidders = []
        for i, b in enumerate(raw_bidders):
            path = f"bidders[{i}]"
            if not isinstance(b, dict):
                raise ConfigError(path, "expected an object")
            price = _wei(b.get("price_eth"), f"{path}.price_eth", positive=True)
            top_up = _wei(b.get("top_up_eth", 0), f"{path}.top_up_eth")
            funding = _wei(b.get("funding_eth", b.get("price_eth")), f"{path}.funding_eth")
            if funding < price + top_up:
                raise ConfigError(f"{path}.funding_eth", "funding must cover price plus top-up")
            reveal = b.get("reveal", True)
            if not isinstance(reveal, bool):
                raise ConfigError(f"{path}.reveal", "expected true or false")
            bidders.append(BidderSpec(funding, price, reveal, top_up))

        d = data.get("decoys", {})
        decoys = DecoySpec(
            count=_int(d.get("count", 200), "decoys.count"),
            min_value=_wei(d.get("min_eth", "0.01"), "decoys.min_eth"),
            max_value=_wei(d.get("max_eth", "5"), "decoys.max_eth"),
            history=_int(d.get("history", 200), "decoys.history"),
            fresh_ratio=float(d.get("fresh_ratio", 0.5)),
        )
        if decoys.max_value < decoys.min_value:
            raise ConfigError("decoys.max_eth", "must not be below min_eth")
        if not 0 <= decoys.fresh_ratio <= 1:
            raise ConfigError("decoys.fresh_ratio", "must lie in [0, 1]")
        return cls(seed, tuple(bidders), market, timing, decoys)

    @classmethod
    def load(cls, path) -> Scenario:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("$", f"invalid JSON: {exc}") from None
        return cls.from_dict(data)


@dataclass
class BidderRun:
    spec: BidderSpec
    reveal_address: Address
    funding_address: Address
    onetime_address: Address
    salt: Salt
    com_p: Commitment
    dec: Decommitment
    bid_id: int = 0
    credential: OracleCredential | None = None
    revealed: bool = False
    refund: int = 0


@dataclass
class Simulation:
    """Live objects of a finished run, for inspection beyond the report."""

    scenario: Scenario
    ledger: Ledger
    contract: AuctionContract
    oracle: Oracle
    auction_id: int
    seller: Address
    bidders: list[BidderRun]
    result: Any
    report: dict

    def report_json(self) -> str:
        return json.dumps(self.report, indent=2, sort_keys=True) + "\n"


class _DecoyTraffic:
    """Background transfers among a pool of key-holding accounts."""

    def __init__(self, ledger: Ledger, rng: random.Random, spec: DecoySpec, pool_size: int):
        self.ledger, self.rng, self.spec = ledger, rng, spec
        self.pool = [Address.random(rng) for _ in range(pool_size)]
        per_account = max(spec.max_value, 1) * (spec.count + spec.history + 1)
        for addr in self.pool:
            ledger.fund_genesis(addr, per_account)

    def transfer(self) -> None:
        rng = self.rng
        funded = [a for a in self.pool if self.ledger.balance(a) >= self.spec.max_value]
        sender = funded[rng.randrange(len(funded))] if funded else self.pool[0]
        value = rng.randint(self.spec.min_value, self.spec.max_value)
        value = min(value, self.ledger.balance(sender))
        if rng.random() < self.spec.fresh_ratio:
            to = Address.random(rng)
            # roughly half of the fresh recipients become active senders later
            if rng.random() < 0.5:
                self.ledger.open_account(to)
                self.pool.append(to)
        else:
            to = self.pool[rng.randrange(len(self.pool))]
        self.ledger.transfer(sender, to, value)


def simulate(
    scenario: Scenario,
    reveal_order: Sequence[int] | None = None,
    before_finalize: Callable[[Ledger, AuctionContract, int, list[BidderRun]], None] | None = None,
) -> Simulation:
    """Run ``scenario`` end to end.

    ``reveal_order`` permutes which revealing bidder goes first; by default
    the order is drawn from the seed. ``before_finalize`` is called on the
    last block of the revealing phase, after every honest reveal.
    """
    rng = random.Random(scenario.seed)
    timing = scenario.auction
    ledger = Ledger(block_time=timing.block_time)

    oracle_keys = OracleKeypair.generate(rng)
    contract = AuctionContract(ledger, Address.random(rng), oracle_keys.vk)
    backend = ReferenceBackend(rng)
    oracle = Oracle(oracle_keys, contract.commitment_of, backend)
    source = BalanceSource(ledger.balance)

    seller = Address.random(rng)
    ledger.fund_genesis(seller, 0)
    bidder_addrs = []
    for spec in scenario.bidders:
        reveal_addr, funding_addr = Address.random(rng), Address.random(rng)
        ledger.fund_genesis(reveal_addr, 0)
        ledger.fund_genesis(funding_addr, spec.funding)
        bidder_addrs.append((reveal_addr, funding_addr))
    decoys = _DecoyTraffic(ledger, rng, scenario.decoys, pool_size=max(4, scenario.decoys.count // 10))
    genesis_bidders = sum(s.funding for s in scenario.bidders)

    # pre-auction history, so "first receipt" has something to compare against
    history = timing.history_blocks
    for block in sorted(rng.randint(1, history) for _ in range(scenario.decoys.history)):
        ledger.advance_to(block)
        decoys.transfer()
    ledger.advance_to(history + 1)
    bid0 = history + 2
    bidding = (bid0, bid0 + timing.bidding_blocks - 1)
    revealing = (bidding[1] + 1, bidding[1] + timing.revealing_blocks)
    auction_id = contract.start_auction(seller, bidding, revealing, timing.item_token)

    # bidding phase: (block, order, action, payload)
    events = [(rng.randint(*bidding), 1, "decoy", None) for _ in range(scenario.decoys.count)]
    runs: list[BidderRun] = []
    for i, (spec, (reveal_addr, funding_addr)) in enumerate(zip(scenario.bidders, bidder_addrs)):
        theta, salt = contract.make_onetime_address(reveal_addr, auction_id, rng)
        com_p, dec = commit(BidMessage(theta, spec.price), rng)
        runs.append(BidderRun(spec, reveal_addr, funding_addr, theta, salt, com_p, dec))
        events.append((rng.randint(bidding[0], bidding[1] - 1), 0, "bid", i))
    events.sort(key=lambda e: (e[0], e[1], -1 if e[3] is None else e[3]))

    for block, _, action, i in events:
        ledger.advance_to(block)
        if action == "decoy":
            decoys.transfer()
            continue
        run = runs[i]
        ledger.transfer(run.funding_address, run.onetime_address, run.spec.price)
        run.bid_id = contract.submit_commitment(run.reveal_address, auction_id, run.com_p)
        session = three_party_handshake(source, rng)
        balance, _tag = query_balance(session, run.onetime_address)
        proof = prove_bid(session, run.com_p, run.onetime_address, balance, run.dec, backend)
        run.credential = oracle.verify_and_attest(session, auction_id, run.bid_id, run.com_p, proof)
        contract.submit_credential(run.reveal_address, auction_id, run.bid_id, run.credential)
        if run.spec.top_up:
            ledger.transfer(run.funding_address, run.onetime_address, run.spec.top_up)

    # revealing phase
    revealers = [i for i, r in enumerate(runs) if r.spec.reveal]
    if reveal_order is None:
        order = revealers[:]
        rng.shuffle(order)
    else:
        order = [i for i in reveal_order if runs[i].spec.reveal]
        if sorted(order) != revealers:
            raise ValueError("reveal_order must be a permutation of the bidders")
    slots = sorted(rng.randint(*revealing) for _ in order)
    for block, i in zip(slots, order):
        ledger.advance_to(block)
        run = runs[i]
        outcome = contract.reveal(
            run.reveal_address, auction_id, run.bid_id, run.spec.price, run.salt, run.dec
        )
        run.revealed = True
        run.refund += outcome.refund
        if outcome.displaced_bid_id is not None:
            displaced = next(r for r in runs if r.bid_id == outcome.displaced_bid_id)
            displaced.refund += outcome.displaced_refund

    if before_finalize is not None:
        ledger.advance_to(revealing[1])
        before_finalize(ledger, contract, auction_id, runs)
    ledger.advance_to(revealing[1] + 1)
    result = contract.finalize(seller, auction_id)

    report = _report(scenario, ledger, contract, auction_id, seller, runs, result, bidding, revealing, genesis_bidders)
    return Simulation(scenario, ledger, contract, oracle, auction_id, seller, runs, result, report)


def _bidder_gas(run: BidderRun) -> int:
    schedule = default_schedule()
    ops = ["send_funds", "commit_bid", "prove_bid"]
    if run.spec.top_up:
        ops.append("send_funds")
    if run.revealed:
        ops.append("reveal_bid")
    return sum(schedule[op] for op in ops)


def _report(scenario, ledger, contract, auction_id, seller, runs, result, bidding, revealing, genesis_bidders) -> dict:
    params = scenario.market
    schedule = default_schedule()
    window = anonymity.Window(*bidding)
    trace = ledger.export_trace(0, ledger.block)
    candidates = anonymity.candidate_addresses(trace, window)

    bidders = []
    locked_total = 0
    for i, run in enumerate(runs):
        locked = 0 if run.revealed else ledger.balance(run.onetime_address)
        locked_total += locked
        gas = _bidder_gas(run)
        bidders.append(
            {
                "index": i,
                "bid_id": run.bid_id,
                "reveal_address": run.reveal_address.hex,
                "funding_address": run.funding_address.hex,
                "onetime_address": run.onetime_address.hex,
                "commitment": run.com_p.hex,
                "price_wei": str(run.spec.price),
                "revealed": run.revealed,
                "refund_wei": str(run.refund),
                "locked_wei": str(locked),
                "gas": gas,
                "fee_usd": str(fee_usd(gas, params)),
                "is_candidate": run.onetime_address in candidates,
                "anonymity_set_size": anonymity.anonymity_set_size(candidates, run.spec.price),
            }
        )

    winner = None
    if not result.no_bids:
        idx = next(i for i, r in enumerate(runs) if r.bid_id == result.winner_bid_id)
        winner = {"bidder": idx, "bid_id": result.winner_bid_id, "price_wei": str(result.price)}

    bidder_final = sum(ledger.balance(r.reveal_address) + ledger.balance(r.funding_address) for r in runs)
    seller_gas = schedule["start_auction"] + schedule["finalize_auction"]
    analysis = anonymity.summary(trace, window)
    return {
        "version": REPORT_VERSION,
        "seed": scenario.seed,
        "market": {"gas_price_gwei": str(params.gas_price_gwei), "eth_usd": str(params.eth_usd)},
        "auction": {
            "auction_id": auction_id,
            "contract_address": contract.address.hex,
            "seller": seller.hex,
            "bidding_window": list(bidding),
            "revealing_window": list(revealing),
            "item_token": result.item_token,
        },
        "winner": winner,
        "seller_payout_wei": str(result.seller_payout),
        "locked_funds_wei": str(locked_total),
        "bidders": bidders,
        "fees": {
            "bidders_total_gas": sum(b["gas"] for b in bidders),
            "bidders_total_usd": str(sum(Decimal(b["fee_usd"]) for b in bidders)),
            "seller_gas": seller_gas,
            "seller_usd": str(fee_usd(seller_gas, params)),
        },
        "anonymity": analysis,
        "conservation": {
            "genesis_wei": str(ledger.genesis_total),
            "final_balances_wei": str(ledger.total_balance()),
            "bidder_funding_wei": str(genesis_bidders),
            "bidder_final_wei": str(bidder_final),
            "ok": ledger.total_balance() == ledger.genesis_total
            and genesis_bidders == bidder_final + result.seller_payout + locked_total
            and contract.escrow_total() == ledger.balance(contract.address),
        },
    }


def run_scenario(scenario: Scenario, reveal_order: Sequence[int] | None = None) -> dict:
    return simulate(scenario, reveal_order).report


def export_run(sim: Simulation, out_dir) -> None:
    """Write ``report.json`` and ``trace.csv`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(sim.report_json())
    write_trace_csv(sim.ledger.trace, out / "trace.csv")
