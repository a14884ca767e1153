"""Exception hierarchy shared by every simulator module."""


class SealbidError(Exception):
    """Base class for domain errors raised by the simulator."""


# ledger
class SetupClosed(SealbidError):
    pass


class InsufficientBalance(SealbidError):
    pass


class NoSigningKey(SealbidError):
    """The sender is not an externally owned account, so nobody can originate a transfer from it."""


class AddressOccupied(SealbidError):
    pass


class UnauthorizedDeployer(SealbidError):
    pass


class NotAContract(SealbidError):
    pass


class UnauthorizedCaller(SealbidError):
    pass


class InvalidWindow(SealbidError):
    pass


class ClockError(SealbidError):
    pass


# deco_attestation
class MacCheckFailed(SealbidError):
    pass


class ProofRejected(SealbidError):
    pass


class UnknownBidId(SealbidError):
    pass


class HandshakeRequired(SealbidError):
    pass


# auction
class InvalidWindows(SealbidError):
    pass


class WrongPhase(SealbidError):
    pass


class UnknownAuction(SealbidError):
    pass


class BadSignature(SealbidError):
    pass


class NotAttested(SealbidError):
    pass


class AlreadyRevealed(SealbidError):
    pass


class OpenFailed(SealbidError):
    """Decommitment did not open the stored commitment.

    Raised after the fund-binding contract was deployed and its balance was
    refunded to the revealing address; ``refund`` carries the amount in wei.
    """

    def __init__(self, message: str, refund: int = 0):
        super().__init__(message)
        self.refund = refund


class BalanceBelowPrice(SealbidError):
    def __init__(self, message: str, refund: int = 0):
        super().__init__(message)
        self.refund = refund


class InsufficientDeposit(SealbidError):
    pass


class BidTooLow(SealbidError):
    pass


class NotSeller(SealbidError):
    pass


# fee_model
class UnknownVariant(SealbidError):
    pass


# anonymity
class UnsortedTrace(SealbidError):
    pass


class InvalidRatio(SealbidError):
    pass


# cli
class ConfigError(SealbidError):
    """Scenario config is invalid; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
