"""Command-line entry point.

Exit status is 0 on success, 1 on a domain error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import anonymity
from .auction import FUND_BINDING_CODE_HASH, Salt
from .errors import SealbidError
from .fees import FeeSchedule, MarketParams, format_cost_tables
from .ledger import Address, derive_onetime_address, read_trace_csv
from .scenario import Scenario, export_run, simulate


def _decimal(text: str) -> Decimal:
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _address(text: str) -> Address:
    try:
        return Address.from_hex(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _bytes32(text: str) -> bytes:
    body = text[2:] if text[:2].lower() == "0x" else text
    try:
        raw = bytes.fromhex(body)
    except ValueError:
        raw = b""
    if len(raw) != 32:
        raise argparse.ArgumentTypeError(f"expected 32 bytes of hex, got {text!r}")
    return raw


def _market_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gas-price", type=_decimal, help="gas price in gwei (default 45)")
    p.add_argument("--eth-usd", type=_decimal, help="USD per ETH (default 3200)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sealbid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an auction scenario end to end")
    run.add_argument("--config", required=True, type=Path, help="scenario JSON file")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--out", type=Path, help="write report.json and trace.csv here")
    _market_flags(run)

    fees = sub.add_parser("fees", help="print the gas and USD cost tables")
    fees.add_argument("--schedule", type=Path, help="gas schedule JSON {operation: gas}")
    _market_flags(fees)

    analyze = sub.add_parser("analyze", help="candidate one-time addresses in a trace window")
    analyze.add_argument("--trace", required=True, type=Path, help="trace CSV, optionally gzipped")
    analyze.add_argument("--from", dest="start", required=True, type=int, help="first block of the window")
    analyze.add_argument("--to", dest="end", required=True, type=int, help="last block of the window")
    analyze.add_argument("--geometric", action="store_true", help="use geometric buckets instead of the default ranges")
    analyze.add_argument("--lo", type=_decimal, default=Decimal("0.1"), help="geometric: lowest edge in ETH")
    analyze.add_argument("--hi", type=_decimal, default=Decimal("10"), help="geometric: upper limit in ETH")
    analyze.add_argument("--ratio", type=_decimal, default=Decimal("1.25"), help="geometric: edge ratio")
    analyze.add_argument("--out", type=Path, help="write histogram.csv and summary.json here")

    derive = sub.add_parser("derive-address", help="precompute a one-time address")
    derive.add_argument("--deployer", required=True, type=_address, help="auction contract address")
    derive.add_argument("--bytecode-hash", type=_bytes32, default=FUND_BINDING_CODE_HASH)
    derive.add_argument("--salt32", type=_bytes32, help="raw 32-byte salt")
    derive.add_argument("--auction-id", type=int, help="salt part: auction id")
    derive.add_argument("--bidder", type=_address, help="salt part: bidder reveal address")
    derive.add_argument("--random", type=_bytes32, help="salt part: 32 random bytes")
    return parser


def _market(args, base: MarketParams | None = None) -> MarketParams:
    base = base or MarketParams()
    return MarketParams(
        args.gas_price if args.gas_price is not None else base.gas_price_gwei,
        args.eth_usd if args.eth_usd is not None else base.eth_usd,
    )


def cmd_run(args) -> int:
    scenario = Scenario.load(args.config)
    changes = {"market": _market(args, scenario.market)}
    if args.seed is not None:
        changes["seed"] = args.seed
    sim = simulate(dataclasses.replace(scenario, **changes))
    if args.out:
        export_run(sim, args.out)
    sys.stdout.write(sim.report_json())
    return 0 if sim.report["conservation"]["ok"] else 1


def cmd_fees(args) -> int:
    schedule = FeeSchedule.load(args.schedule) if args.schedule else None
    sys.stdout.write(format_cost_tables(_market(args), schedule))
    return 0


def cmd_analyze(args) -> int:
    trace = read_trace_csv(args.trace)
    window = anonymity.Window(args.start, args.end)
    if trace and trace[0].block >= window.start_block:
        print(
            "warning: trace has no history before the window; "
            "every address looks like a first-time receiver",
            file=sys.stderr,
        )
    spec = (
        anonymity.geometric_buckets(args.lo, args.hi, args.ratio)
        if args.geometric
        else anonymity.DEFAULT_BUCKETS
    )
    candidates = anonymity.candidate_addresses(trace, window)
    hist_csv = anonymity.histogram_csv(anonymity.bucket_by_balance(candidates, spec))
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "histogram.csv").write_text(hist_csv)
        (args.out / "summary.json").write_text(anonymity.summary_json(trace, window, spec))
    sys.stdout.write(hist_csv)
    return 0


def cmd_derive(args, parser) -> int:
    if args.salt32 is not None:
        salt32 = args.salt32
    elif None not in (args.auction_id, args.bidder, args.random):
        salt32 = Salt(args.auction_id, args.bidder, args.random).salt32
    else:
        parser.error("derive-address needs --salt32 or all of --auction-id, --bidder, --random")
    print(derive_onetime_address(args.deployer, salt32, args.bytecode_hash).hex)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "fees":
            return cmd_fees(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        return cmd_derive(args, parser)
    except (SealbidError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
