"""Gas and USD fee accounting for the protocol and its two baselines.

Gas figures are data, not measurements: the simulator runs no EVM. The
bundled schedule holds the per-operation gas of each on-chain step.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from functools import lru_cache
from importlib import resources
from types import MappingProxyType
from typing import Mapping

from .errors import UnknownVariant

CENT = Decimal("0.01")
GWEI = Decimal("1e-9")

VARIANTS = ("proposed", "simple_deposit", "open_bid")
ROLES = ("bidder", "seller")

OPERATIONS: dict[str, dict[str, tuple[str, ...]]] = {
    "proposed": {
        "bidder": ("send_funds", "commit_bid", "prove_bid", "reveal_bid"),
        "seller": ("start_auction", "finalize_auction"),
    },
    "simple_deposit": {
        "bidder": ("deposit_commit_bid", "deposit_reveal_bid"),
        "seller": ("start_auction", "finalize_auction"),
    },
    "open_bid": {
        "bidder": ("open_bidding",),
        "seller": ("start_auction", "finalize_auction"),
    },
}

LABELS = {
    "send_funds": "Sending funds",
    "commit_bid": "Committing bid",
    "prove_bid": "Proving bid",
    "reveal_bid": "Revealing bid",
    "start_auction": "Starting auction",
    "finalize_auction": "Finalizing auction",
    "deposit_commit_bid": "Committing bid",
    "deposit_reveal_bid": "Revealing bid",
    "open_bidding": "Bidding",
}

# (title, operation tags) for each published cost table
COST_TABLES = (
    ("Bidder operations (proposed protocol)", OPERATIONS["proposed"]["bidder"]),
    ("Seller operations (proposed protocol)", OPERATIONS["proposed"]["seller"]),
    ("Bidder operations (simple deposit)", OPERATIONS["simple_deposit"]["bidder"]),
    ("Bidder operations (open bid)", OPERATIONS["open_bid"]["bidder"]),
)


@dataclass(frozen=True)
class MarketParams:
    gas_price_gwei: Decimal = Decimal(45)
    eth_usd: Decimal = Decimal(3200)

    def __post_init__(self):
        object.__setattr__(self, "gas_price_gwei", Decimal(str(self.gas_price_gwei)))
        object.__setattr__(self, "eth_usd", Decimal(str(self.eth_usd)))
        if self.gas_price_gwei <= 0 or self.eth_usd <= 0:
            raise ValueError("gas price and ETH price must be positive")


@dataclass(frozen=True)
class FeeSchedule:
    gas: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for tag, units in self.gas.items():
            if not isinstance(units, int) or isinstance(units, bool) or units <= 0:
                raise ValueError(f"gas for {tag!r} must be a positive integer, got {units!r}")
        object.__setattr__(self, "gas", MappingProxyType(dict(self.gas)))

    def __getitem__(self, tag: str) -> int:
        return self.gas[tag]

    @classmethod
    def load(cls, path: str | os.PathLike | None = None) -> FeeSchedule:
        """Read a ``{operation_tag: gas}`` JSON file; ``None`` loads the bundled default."""
        if path is None:
            text = resources.files("sealbid").joinpath("data/gas_schedule.json").read_text()
        else:
            with open(path) as fh:
                text = fh.read()
        return cls(dict(json.loads(text)))


@lru_cache(maxsize=1)
def default_schedule() -> FeeSchedule:
    return FeeSchedule.load()


def fee_usd(gas: int, params: MarketParams) -> Decimal:
    """``gas * gas_price * 1e-9 * eth_usd``, rounded half-up to cents."""
    exact = Decimal(gas) * params.gas_price_gwei * GWEI * params.eth_usd
    return exact.quantize(CENT, rounding=ROUND_HALF_UP)


def role_cost(
    variant: str,
    role: str,
    params: MarketParams,
    schedule: FeeSchedule | None = None,
) -> tuple[int, Decimal]:
    """Total gas of one role's operations in ``variant`` and its USD fee.

    The fee is computed from the summed gas, not by adding rounded cells.
    """
    if variant not in OPERATIONS:
        raise UnknownVariant(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if role not in ROLES:
        raise UnknownVariant(f"unknown role {role!r}; expected one of {ROLES}")
    schedule = schedule or default_schedule()
    gas = sum(schedule[tag] for tag in OPERATIONS[variant][role])
    return gas, fee_usd(gas, params)


def overhead(
    variant_a: str,
    variant_b: str,
    params: MarketParams,
    role: str = "bidder",
    schedule: FeeSchedule | None = None,
) -> tuple[int, Decimal]:
    gas_a, usd_a = role_cost(variant_a, role, params, schedule)
    gas_b, usd_b = role_cost(variant_b, role, params, schedule)
    return gas_a - gas_b, usd_a - usd_b


@dataclass(frozen=True)
class FeeRow:
    tag: str
    label: str
    gas: int
    usd: Decimal


def cost_tables(params: MarketParams, schedule: FeeSchedule | None = None) -> list[tuple[str, list[FeeRow]]]:
    schedule = schedule or default_schedule()
    return [
        (title, [FeeRow(tag, LABELS[tag], schedule[tag], fee_usd(schedule[tag], params)) for tag in tags])
        for title, tags in COST_TABLES
    ]


def format_cost_tables(params: MarketParams, schedule: FeeSchedule | None = None) -> str:
    schedule = schedule or default_schedule()
    lines = [f"gas price {params.gas_price_gwei} gwei, 1 ETH = {params.eth_usd} USD", ""]
    for title, rows in cost_tables(params, schedule):
        lines.append(title)
        lines.append(f"  {'Operation':<26}{'Used gas':>10}{'Fee (USD)':>12}")
        for row in rows:
            lines.append(f"  {row.label:<26}{row.gas:>10,}{row.usd:>12}")
        lines.append("")
    lines.append("Totals")
    for variant in VARIANTS:
        for role in ROLES:
            gas, usd = role_cost(variant, role, params, schedule)
            lines.append(f"  {variant + ' / ' + role:<26}{gas:>10,}{usd:>12}")
    gas, usd = overhead("proposed", "simple_deposit", params, schedule=schedule)
    lines.append("")
    lines.append(f"Bidder overhead vs simple deposit: {gas:,} gas, {usd} USD")
    return "\n".join(lines) + "\n"
