"""Sealed-bid auctions with fund binding, simulated on a deterministic ledger."""

from .auction import AuctionContract, OpenBidAuction, Salt, SimpleDepositAuction
from .crypto import BidMessage, Commitment, Decommitment, OracleKeypair, com_open, commit
from .ledger import ETHER, Address, Ledger, derive_onetime_address, keccak256
from .scenario import Scenario, run_scenario, simulate

__all__ = [
    "ETHER",
    "Address",
    "AuctionContract",
    "BidMessage",
    "Commitment",
    "Decommitment",
    "Ledger",
    "OpenBidAuction",
    "OracleKeypair",
    "Salt",
    "Scenario",
    "SimpleDepositAuction",
    "com_open",
    "commit",
    "derive_onetime_address",
    "keccak256",
    "run_scenario",
    "simulate",
]

__version__ = "0.1.0"
