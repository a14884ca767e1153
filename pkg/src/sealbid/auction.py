"""Auction contract state machines.

:class:`AuctionContract` runs the fund-binding sealed-bid protocol. Bidders
park funds at a one-time address (the CREATE2 address of a fund-binding
contract that does not exist yet), commit to ``(address, price)``, obtain an
oracle credential for the commitment and finally reveal the salt. The
contract then deploys the fund-binding contract, drains it and keeps only the
current highest bid in escrow.

:class:`SimpleDepositAuction` and :class:`OpenBidAuction` are the baselines
used for the fee comparison.

Phases are derived from the ledger clock. Window bounds are inclusive, so the
last bidding block still accepts bids.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .crypto import BidMessage, Commitment, Decommitment, com_open
from .deco import OracleCredential, verify_credential
from .errors import (
    AlreadyRevealed,
    BadSignature,
    BalanceBelowPrice,
    BidTooLow,
    InsufficientDeposit,
    InvalidWindows,
    NotAttested,
    NotSeller,
    OpenFailed,
    UnknownAuction,
    UnknownBidId,
    WrongPhase,
)
from .ledger import Address, Ledger, derive_onetime_address, keccak256, reduce_salt

# Stand-in init code; only its hash matters for address derivation.
FUND_BINDING_INIT_CODE = b"sealbid/fund-binding/v1: withdraw(to, amount) onlyOwner"
FUND_BINDING_CODE_HASH = keccak256(FUND_BINDING_INIT_CODE)
AUCTION_CODE_HASH = keccak256(b"sealbid/auction/v1")


class Phase(str, enum.Enum):
    PENDING = "pending"          # before bidding, or between the two windows
    BIDDING = "bidding"
    REVEALING = "revealing"
    CLOSED = "closed"            # revealing over, not finalized yet
    FINALIZED = "finalized"


@dataclass(frozen=True)
class AuctionConfig:
    auction_id: int
    seller: Address
    bidding_window: tuple[int, int]
    revealing_window: tuple[int, int]
    contract_address: Address
    fundbinding_bytecode_hash: bytes = FUND_BINDING_CODE_HASH
    item_token: str | None = None


def check_windows(bidding: tuple[int, int], revealing: tuple[int, int]) -> None:
    (b0, b1), (r0, r1) = bidding, revealing
    if b1 < b0 or r1 < r0:
        raise InvalidWindows(f"window end precedes start: bidding={bidding} revealing={revealing}")
    if r0 <= b1:
        raise InvalidWindows("revealing window must start after the bidding window ends")


@dataclass(frozen=True)
class Salt:
    auction_id: int
    bidder_reveal_address: Address
    random: bytes

    def __post_init__(self):
        if len(self.random) != 32:
            raise ValueError("salt randomness must be 32 bytes")

    def serialize(self) -> bytes:
        return self.auction_id.to_bytes(8, "big") + self.bidder_reveal_address.raw + self.random

    @property
    def salt32(self) -> bytes:
        return reduce_salt(self.serialize())


def onetime_address(contract: Address, salt: Salt, bytecode_hash: bytes = FUND_BINDING_CODE_HASH) -> Address:
    return derive_onetime_address(contract, salt.salt32, bytecode_hash)


@dataclass
class Reveal:
    price: int
    onetime_address: Address
    withdrawn: int
    refund_to: Address


@dataclass
class BidRecord:
    bid_id: int
    com_p: Commitment
    submitter: Address
    attested: bool = False
    credential: OracleCredential | None = None
    revealed: Reveal | None = None
    # simple-deposit baseline only
    deposit: int = 0


@dataclass
class AuctionState:
    config: AuctionConfig
    bids: dict[int, BidRecord] = field(default_factory=dict)
    highest: tuple[int, int] | None = None
    escrow: int = 0
    finalized: bool = False


@dataclass(frozen=True)
class RevealOutcome:
    bid_id: int
    price: int
    withdrawn: int
    refund: int
    became_highest: bool
    displaced_bid_id: int | None = None
    displaced_refund: int = 0


@dataclass(frozen=True)
class AuctionResult:
    auction_id: int
    winner_bid_id: int | None
    price: int
    seller_payout: int
    winner_address: Address | None = None
    item_token: str | None = None

    @property
    def no_bids(self) -> bool:
        return self.winner_bid_id is None


class _AuctionBook:
    """Auction bookkeeping shared by the protocol and the baselines."""

    code_hash = AUCTION_CODE_HASH
    fundbinding_bytecode_hash = FUND_BINDING_CODE_HASH

    def __init__(self, ledger: Ledger, address: Address):
        self.ledger = ledger
        self.address = address
        ledger.register_factory(address, self.code_hash)
        self._auctions: dict[int, AuctionState] = {}
        self._next_id = 1

    def start_auction(
        self,
        seller: Address,
        bidding_window: tuple[int, int],
        revealing_window: tuple[int, int],
        item_token: str | None = None,
    ) -> int:
        check_windows(bidding_window, revealing_window)
        if self.ledger.block >= bidding_window[0]:
            raise InvalidWindows(
                f"bidding must start after the current block {self.ledger.block}"
            )
        auction_id = self._next_id
        self._next_id += 1
        self._auctions[auction_id] = AuctionState(
            AuctionConfig(
                auction_id=auction_id,
                seller=seller,
                bidding_window=tuple(bidding_window),
                revealing_window=tuple(revealing_window),
                contract_address=self.address,
                fundbinding_bytecode_hash=self.fundbinding_bytecode_hash,
                item_token=item_token,
            )
        )
        return auction_id

    def state(self, auction_id: int) -> AuctionState:
        try:
            return self._auctions[auction_id]
        except KeyError:
            raise UnknownAuction(f"no auction {auction_id}") from None

    def config(self, auction_id: int) -> AuctionConfig:
        return self.state(auction_id).config

    def phase(self, auction_id: int) -> Phase:
        st = self.state(auction_id)
        if st.finalized:
            return Phase.FINALIZED
        block = self.ledger.block
        (b0, b1), (r0, r1) = st.config.bidding_window, st.config.revealing_window
        if b0 <= block <= b1:
            return Phase.BIDDING
        if r0 <= block <= r1:
            return Phase.REVEALING
        if block > r1:
            return Phase.CLOSED
        return Phase.PENDING

    def _require(self, auction_id: int, phase: Phase) -> AuctionState:
        st = self.state(auction_id)
        current = self.phase(auction_id)
        if current is not phase:
            raise WrongPhase(f"auction {auction_id} is {current.value}, needs {phase.value}")
        return st

    def _bid(self, st: AuctionState, bid_id: int) -> BidRecord:
        try:
            return st.bids[bid_id]
        except KeyError:
            raise UnknownBidId(f"auction {st.config.auction_id} has no bid {bid_id}") from None

    def _pay(self, to: Address, amount: int) -> None:
        if amount:
            self.ledger.contract_withdraw(self.address, to, amount, caller=self.address)

    def _settle(self, st: AuctionState, bid: BidRecord, price: int, funds: int, refund_to: Address):
        """Apply the single-escrow rule to ``funds`` now held for ``bid``.

        Strictly higher bids displace the current highest, so ties go to the
        earlier reveal.
        """
        displaced, displaced_refund = None, 0
        if st.highest is None or price > st.highest[1]:
            if st.highest is not None:
                displaced = st.highest[0]
                displaced_refund = st.escrow
                self._pay(self._refund_address(st.bids[displaced]), displaced_refund)
            st.highest = (bid.bid_id, price)
            st.escrow = price
            refund = funds - price
            became_highest = True
        else:
            refund = funds
            became_highest = False
        self._pay(refund_to, refund)
        return became_highest, refund, displaced, displaced_refund

    def _refund_address(self, bid: BidRecord) -> Address:
        return bid.revealed.refund_to if bid.revealed else bid.submitter

    def finalize(self, seller: Address, auction_id: int) -> AuctionResult:
        st = self._require(auction_id, Phase.CLOSED)
        if seller != st.config.seller:
            raise NotSeller(f"{seller} is not the seller of auction {auction_id}")
        st.finalized = True
        if st.highest is None:
            return AuctionResult(auction_id, None, 0, 0, item_token=st.config.item_token)
        bid_id, price = st.highest
        self._pay(st.config.seller, st.escrow)
        payout, st.escrow = st.escrow, 0
        return AuctionResult(
            auction_id,
            bid_id,
            price,
            payout,
            winner_address=self._refund_address(st.bids[bid_id]),
            item_token=st.config.item_token,
        )

    def escrow_total(self) -> int:
        return sum(st.escrow for st in self._auctions.values())


class AuctionContract(_AuctionBook):
    """The fund-binding sealed-bid auction.

    Only the oracle whose verification key is ``oracle_vk`` can attest bids.
    """

    def __init__(
        self,
        ledger: Ledger,
        address: Address,
        oracle_vk,
        fundbinding_bytecode_hash: bytes = FUND_BINDING_CODE_HASH,
    ):
        super().__init__(ledger, address)
        self.oracle_vk = oracle_vk
        self.fundbinding_bytecode_hash = fundbinding_bytecode_hash

    def make_onetime_address(self, bidder: Address, auction_id: int, rng) -> tuple[Address, Salt]:
        """Draw a salt for ``bidder`` and precompute the matching one-time address.

        Runs on the bidder's side; nothing is recorded on the ledger.
        """
        salt = Salt(auction_id, bidder, rng.randbytes(32))
        return self.onetime_address(salt), salt

    def onetime_address(self, salt: Salt) -> Address:
        return onetime_address(self.address, salt, self.fundbinding_bytecode_hash)

    def commitment_of(self, auction_id: int, bid_id: int) -> Commitment:
        return self._bid(self.state(auction_id), bid_id).com_p

    def submit_commitment(self, bidder: Address, auction_id: int, com_p: Commitment) -> int:
        st = self._require(auction_id, Phase.BIDDING)
        bid_id = len(st.bids) + 1
        st.bids[bid_id] = BidRecord(bid_id, com_p, bidder)
        return bid_id

    def submit_credential(
        self, bidder: Address, auction_id: int, bid_id: int, credential: OracleCredential
    ) -> None:
        st = self._require(auction_id, Phase.BIDDING)
        bid = self._bid(st, bid_id)
        # the signature is checked against the stored bid, not the credential's own ids
        bound = OracleCredential(auction_id, bid_id, credential.signature)
        if not verify_credential(self.oracle_vk, bound, bid.com_p):
            raise BadSignature(f"credential does not cover bid {bid_id} of auction {auction_id}")
        bid.attested = True
        bid.credential = credential

    def reveal(
        self,
        bidder: Address,
        auction_id: int,
        bid_id: int,
        price: int,
        salt: Salt,
        dec: Decommitment,
    ) -> RevealOutcome:
        """Deploy the fund-binding contract, drain it, open the commitment, settle.

        The committed ``price`` is the effective bid even when the one-time
        address holds more; the excess goes back to the salt's reveal address.

        On :class:`OpenFailed` or :class:`BalanceBelowPrice` the deployment
        and the withdrawal have already happened and the withdrawn funds are
        refunded before the error is raised.
        """
        st = self._require(auction_id, Phase.REVEALING)
        bid = self._bid(st, bid_id)
        if not bid.attested:
            raise NotAttested(f"bid {bid_id} has no verified credential")
        if bid.revealed is not None:
            raise AlreadyRevealed(f"bid {bid_id} was already revealed")

        theta = self.ledger.deploy_at(
            self.address, salt.salt32, self.fundbinding_bytecode_hash, owner=self.address
        )
        withdrawn = self.ledger.balance(theta)
        if withdrawn:
            self.ledger.contract_withdraw(theta, self.address, withdrawn, caller=self.address)

        refund_to = salt.bidder_reveal_address
        if not com_open(bid.com_p, dec, BidMessage(theta, price)):
            self._pay(refund_to, withdrawn)
            raise OpenFailed(f"decommitment does not open bid {bid_id}", refund=withdrawn)
        if withdrawn < price:
            self._pay(refund_to, withdrawn)
            raise BalanceBelowPrice(
                f"one-time address held {withdrawn} wei, committed {price}", refund=withdrawn
            )

        bid.revealed = Reveal(price, theta, withdrawn, refund_to)
        became_highest, refund, displaced, displaced_refund = self._settle(
            st, bid, price, withdrawn, refund_to
        )
        return RevealOutcome(bid_id, price, withdrawn, refund, became_highest, displaced, displaced_refund)


class SimpleDepositAuction(_AuctionBook):
    """Baseline: commit to the price and escrow a visible deposit at the contract."""

    def baseline_simple_deposit(
        self, bidder: Address, auction_id: int, com_p: Commitment, deposit: int
    ) -> int:
        st = self._require(auction_id, Phase.BIDDING)
        self.ledger.transfer(bidder, self.address, deposit)
        bid_id = len(st.bids) + 1
        st.bids[bid_id] = BidRecord(bid_id, com_p, bidder, attested=True, deposit=deposit)
        return bid_id

    def reveal(
        self, bidder: Address, auction_id: int, bid_id: int, price: int, dec: Decommitment
    ) -> RevealOutcome:
        """Open a deposit bid; the commitment covers ``BidMessage(submitter, price)``."""
        st = self._require(auction_id, Phase.REVEALING)
        bid = self._bid(st, bid_id)
        if bid.revealed is not None:
            raise AlreadyRevealed(f"bid {bid_id} was already revealed")
        if not com_open(bid.com_p, dec, BidMessage(bid.submitter, price)):
            raise OpenFailed(f"decommitment does not open bid {bid_id}")
        if bid.deposit < price:
            raise InsufficientDeposit(f"deposit {bid.deposit} wei is below committed {price}")
        bid.revealed = Reveal(price, bid.submitter, bid.deposit, bid.submitter)
        became_highest, refund, displaced, displaced_refund = self._settle(
            st, bid, price, bid.deposit, bid.submitter
        )
        return RevealOutcome(bid_id, price, bid.deposit, refund, became_highest, displaced, displaced_refund)


class OpenBidAuction(_AuctionBook):
    """Baseline: bids are plain payments; each must beat the current highest."""

    def baseline_open_bid(self, bidder: Address, auction_id: int, price: int) -> int:
        st = self._require(auction_id, Phase.BIDDING)
        if st.highest is not None and price <= st.highest[1]:
            raise BidTooLow(f"bid {price} does not beat {st.highest[1]}")
        self.ledger.transfer(bidder, self.address, price)
        bid_id = len(st.bids) + 1
        bid = BidRecord(bid_id, Commitment(bytes(32)), bidder, attested=True, deposit=price)
        bid.revealed = Reveal(price, bidder, price, bidder)
        st.bids[bid_id] = bid
        self._settle(st, bid, price, price, bidder)
        return bid_id

    def phase(self, auction_id: int) -> Phase:
        # nothing to reveal: bidding closes straight into settlement
        current = super().phase(auction_id)
        if current in (Phase.PENDING, Phase.REVEALING) and self.ledger.block > self.config(auction_id).bidding_window[1]:
            return Phase.CLOSED
        return current
