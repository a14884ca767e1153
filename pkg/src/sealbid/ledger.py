"""Account-based ledger with CREATE2-style address derivation.

The ledger keeps balances in wei, a block clock and an append-only trace of
transactions. Fees are not burned here; see :mod:`sealbid.fees`.

Externally owned accounts (EOAs) are the only accounts that can originate a
plain transfer. An address that merely received funds (for example a
counterfactual contract address nobody holds a key for) cannot send them on.
"""

from __future__ import annotations

import csv
import enum
import gzip
import io
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable

from Crypto.Hash import keccak

from .errors import (
    AddressOccupied,
    ClockError,
    InsufficientBalance,
    InvalidWindow,
    NoSigningKey,
    NotAContract,
    SetupClosed,
    UnauthorizedCaller,
    UnauthorizedDeployer,
)

MAX_WEI = 2**256 - 1
ETHER = 10**18
DEFAULT_BLOCK_TIME = 13
# 2021-08-15 00:00:00 UTC
DEFAULT_GENESIS_TIMESTAMP = 1_628_985_600

TRACE_CSV_HEADER = ("block", "timestamp", "from", "to", "value_wei", "kind")


def keccak256(data: bytes) -> bytes:
    return keccak.new(digest_bits=256, data=data).digest()


@dataclass(frozen=True, order=True)
class Address:
    """A 20-byte account identifier, ordered by its raw bytes."""

    raw: bytes

    def __post_init__(self):
        if not isinstance(self.raw, (bytes, bytearray)) or len(self.raw) != 20:
            raise ValueError(f"address must be 20 bytes, got {self.raw!r}")
        object.__setattr__(self, "raw", bytes(self.raw))

    @classmethod
    def from_hex(cls, text: str) -> Address:
        body = text[2:] if text[:2].lower() == "0x" else text
        if len(body) != 40:
            raise ValueError(f"address hex must have 40 digits: {text!r}")
        return cls(bytes.fromhex(body))

    @classmethod
    def random(cls, rng) -> Address:
        return cls(rng.randbytes(20))

    @classmethod
    def zero(cls) -> Address:
        return cls(bytes(20))

    @property
    def hex(self) -> str:
        return "0x" + self.raw.hex()

    def padded(self) -> bytes:
        """The address left-padded with zeros to a 32-byte word."""
        return bytes(12) + self.raw

    def __str__(self) -> str:
        return self.hex

    def __repr__(self) -> str:
        return f"Address({self.hex})"


def derive_onetime_address(deployer: Address, salt32: bytes, bytecode_hash: bytes) -> Address:
    """Address a contract will occupy when ``deployer`` creates it with CREATE2.

    ``keccak256(0xff ++ deployer ++ salt32 ++ bytecode_hash)[12:]``
    """
    if len(salt32) != 32:
        raise ValueError(f"salt must be 32 bytes, got {len(salt32)}")
    if len(bytecode_hash) != 32:
        raise ValueError(f"bytecode hash must be 32 bytes, got {len(bytecode_hash)}")
    return Address(keccak256(b"\xff" + deployer.raw + salt32 + bytecode_hash)[12:])


def reduce_salt(salt: bytes) -> bytes:
    """Map a variable-length salt onto the 32 bytes CREATE2 expects."""
    return keccak256(salt)


@dataclass
class Account:
    balance: int = 0
    nonce: int = 0
    code: bytes | None = None
    owner: Address | None = None
    externally_owned: bool = False


class TxKind(str, enum.Enum):
    TRANSFER = "transfer"
    DEPLOY = "deploy"
    CONTRACT_CALL = "contract-call"


@dataclass(frozen=True)
class Transaction:
    block: int
    timestamp: int
    sender: Address
    to: Address
    value: int
    kind: TxKind = TxKind.TRANSFER

    def to_row(self) -> tuple[str, ...]:
        return (
            str(self.block),
            str(self.timestamp),
            self.sender.hex,
            self.to.hex,
            str(self.value),
            self.kind.value,
        )

    @classmethod
    def from_row(cls, row: dict[str, str]) -> Transaction:
        return cls(
            block=int(row["block"]),
            timestamp=int(row["timestamp"]),
            sender=Address.from_hex(row["from"]),
            to=Address.from_hex(row["to"]),
            value=int(row["value_wei"]),
            kind=TxKind(row["kind"]),
        )


# One ledger transfer as consumed by the anonymity analyzer.
TraceRecord = Transaction


def _check_wei(value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool):
        raise TypeError(f"wei amounts are integers, got {type(value).__name__}")
    if value < 0 or value > MAX_WEI:
        raise ValueError(f"wei amount out of range: {value}")


class Ledger:
    """Single owner of all balances, the block clock and the trace.

    Every mutating method validates first and mutates afterwards, so an
    operation that raises leaves the state untouched.
    """

    def __init__(
        self,
        *,
        block_time: int = DEFAULT_BLOCK_TIME,
        genesis_block: int = 0,
        genesis_timestamp: int = DEFAULT_GENESIS_TIMESTAMP,
    ):
        if block_time <= 0:
            raise ValueError("block_time must be positive")
        self.block_time = block_time
        self.block = genesis_block
        self.timestamp = genesis_timestamp
        self._accounts: dict[Address, Account] = {}
        self._trace: list[Transaction] = []
        self._factories: set[Address] = set()
        self._setup_open = True
        self.genesis_total = 0

    # -- setup ------------------------------------------------------------

    @property
    def in_setup(self) -> bool:
        return self._setup_open

    def close_setup(self) -> None:
        self._setup_open = False

    def fund_genesis(self, addr: Address, amount: int) -> None:
        """Credit ``addr`` out of band; the address becomes an EOA."""
        _check_wei(amount)
        if not self._setup_open:
            raise SetupClosed("genesis funding is only possible during setup")
        acct = self._accounts.setdefault(addr, Account())
        if acct.balance + amount > MAX_WEI:
            raise ValueError("balance would exceed 256 bits")
        acct.balance += amount
        acct.externally_owned = True
        self.genesis_total += amount

    def open_account(self, addr: Address) -> None:
        """Mark ``addr`` as key-holding so it may originate transfers."""
        acct = self._accounts.setdefault(addr, Account())
        if acct.code is not None:
            raise AddressOccupied(f"{addr} holds contract code")
        acct.externally_owned = True

    def register_factory(self, addr: Address, code_hash: bytes) -> None:
        """Install a contract allowed to deploy fund-binding contracts.

        The factory owns itself, so only calls made on its own behalf can move
        its balance.
        """
        acct = self._accounts.setdefault(addr, Account())
        if acct.code is not None:
            raise AddressOccupied(f"{addr} already holds code")
        acct.code = code_hash
        acct.owner = addr
        self._factories.add(addr)

    # -- clock -------------------------------------------------------------

    def advance_block(self, n: int = 1, seconds: int | None = None) -> None:
        if n < 0:
            raise ClockError("blocks cannot go backwards")
        if seconds is None:
            seconds = n * self.block_time
        if seconds < 0:
            raise ClockError("time cannot go backwards")
        self._setup_open = False
        self.block += n
        self.timestamp += seconds

    def advance_to(self, block: int) -> None:
        if block < self.block:
            raise ClockError(f"cannot move clock back from {self.block} to {block}")
        self.advance_block(block - self.block)

    # -- queries -----------------------------------------------------------

    def balance(self, addr: Address) -> int:
        acct = self._accounts.get(addr)
        return acct.balance if acct else 0

    def account(self, addr: Address) -> Account:
        acct = self._accounts.get(addr)
        return replace(acct) if acct else Account()

    def has_code(self, addr: Address) -> bool:
        acct = self._accounts.get(addr)
        return acct is not None and acct.code is not None

    def addresses(self) -> list[Address]:
        return sorted(self._accounts)

    def total_balance(self) -> int:
        return sum(a.balance for a in self._accounts.values())

    @property
    def trace(self) -> tuple[Transaction, ...]:
        return tuple(self._trace)

    def snapshot(self) -> tuple:
        """Hashable, order-independent view of the whole state."""
        accounts = tuple(
            (a, acct.balance, acct.nonce, acct.code, acct.owner, acct.externally_owned)
            for a, acct in sorted(self._accounts.items())
        )
        return (
            self.block,
            self.timestamp,
            self._setup_open,
            self.genesis_total,
            accounts,
            tuple(self._trace),
            tuple(sorted(self._factories)),
        )

    # -- operations --------------------------------------------------------

    def _append(self, sender: Address, to: Address, value: int, kind: TxKind) -> Transaction:
        tx = Transaction(self.block, self.timestamp, sender, to, value, kind)
        self._trace.append(tx)
        return tx

    def _move(self, sender: Address, to: Address, value: int) -> None:
        self._accounts[sender].balance -= value
        self._accounts.setdefault(to, Account()).balance += value

    def transfer(self, sender: Address, to: Address, value: int) -> Transaction:
        _check_wei(value)
        acct = self._accounts.get(sender)
        if acct is None or not acct.externally_owned:
            raise NoSigningKey(f"{sender} is not an externally owned account")
        if acct.balance < value:
            raise InsufficientBalance(f"{sender} holds {acct.balance} wei, needs {value}")
        self._setup_open = False
        self._move(sender, to, value)
        acct.nonce += 1
        return self._append(sender, to, value, TxKind.TRANSFER)

    def deploy_at(
        self, deployer: Address, salt32: bytes, bytecode_hash: bytes, owner: Address
    ) -> Address:
        """Deploy a fund-binding contract at its CREATE2 address.

        Any balance already sitting at the address is kept.
        """
        if deployer not in self._factories:
            raise UnauthorizedDeployer(f"{deployer} may not deploy fund-binding contracts")
        addr = derive_onetime_address(deployer, salt32, bytecode_hash)
        target = self._accounts.get(addr)
        if target is not None and target.code is not None:
            raise AddressOccupied(f"{addr} already holds code")
        self._setup_open = False
        target = self._accounts.setdefault(addr, Account())
        target.code = bytecode_hash
        target.owner = owner
        # the key for a CREATE2 address cannot exist
        target.externally_owned = False
        self._accounts[deployer].nonce += 1
        self._append(deployer, addr, 0, TxKind.DEPLOY)
        return addr

    def contract_withdraw(
        self, contract: Address, to: Address, amount: int, caller: Address
    ) -> Transaction:
        _check_wei(amount)
        acct = self._accounts.get(contract)
        if acct is None or acct.code is None:
            raise NotAContract(f"{contract} has no code")
        if caller != acct.owner:
            raise UnauthorizedCaller(f"{caller} does not own {contract}")
        if acct.balance < amount:
            raise InsufficientBalance(f"{contract} holds {acct.balance} wei, needs {amount}")
        self._setup_open = False
        self._move(contract, to, amount)
        self._accounts.setdefault(caller, Account()).nonce += 1
        return self._append(contract, to, amount, TxKind.CONTRACT_CALL)

    def export_trace(self, from_block: int, to_block: int) -> list[TraceRecord]:
        """Plain transfers with ``from_block <= block <= to_block``, in trace order."""
        if from_block > to_block:
            raise InvalidWindow(f"from_block {from_block} > to_block {to_block}")
        return [
            tx
            for tx in self._trace
            if tx.kind is TxKind.TRANSFER and from_block <= tx.block <= to_block
        ]


# -- CSV trace format -------------------------------------------------------


def write_trace_csv(records: Iterable[Transaction], dest: str | os.PathLike | IO[str]) -> None:
    if isinstance(dest, (str, os.PathLike)):
        path = Path(dest)
        opener = gzip.open if path.suffix == ".gz" else open
        with opener(path, "wt", newline="") as fh:
            write_trace_csv(records, fh)
        return
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(TRACE_CSV_HEADER)
    for tx in records:
        writer.writerow(tx.to_row())


def read_trace_csv(src: str | os.PathLike | IO[str]) -> list[Transaction]:
    """Load a trace; gzip input is detected by its magic bytes."""
    if isinstance(src, (str, os.PathLike)):
        raw = Path(src).read_bytes()
        if raw[:2] == b"\x1f\x8b":
            raw = gzip.decompress(raw)
        return read_trace_csv(io.StringIO(raw.decode("utf-8")))
    reader = csv.DictReader(src)
    if tuple(reader.fieldnames or ()) != TRACE_CSV_HEADER:
        raise ValueError(f"unexpected trace header {reader.fieldnames}")
    return [Transaction.from_row(row) for row in reader]
