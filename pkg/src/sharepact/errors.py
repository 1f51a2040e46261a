"""Exception hierarchy shared by every sharepact module."""

from __future__ import annotations


class SharePactError(Exception):
    """Base class for all protocol errors."""


# -- ledger ---------------------------------------------------------------

class LedgerError(SharePactError):
    pass


class UnknownAddress(LedgerError):
    pass


class InsufficientBalance(LedgerError):
    pass


class WeiOverflow(LedgerError):
    pass


class OutOfGas(LedgerError):
    pass


class BlockGasLimitExceeded(LedgerError):
    pass


class UnknownContract(LedgerError):
    pass


class AlreadyDestroyed(LedgerError):
    pass


class RefundMismatch(LedgerError):
    pass


class InvalidPolicy(LedgerError):
    pass


class ChainInvalid(LedgerError):
    """Raised when a hash-chained log fails verification.

    ``index`` is the position of the first bad record (0-based line number
    for exported files).
    """

    def __init__(self, index: int, reason: str) -> None:
        super().__init__(f"record {index}: {reason}")
        self.index = index
        self.reason = reason


# -- crypto pipeline ------------------------------------------------------

class PipelineError(SharePactError):
    """A failure while opening an envelope; ``step`` is the failing step."""

    step = 0


class SignatureInvalid(PipelineError):
    step = 1


class LinkDecryptFailure(PipelineError):
    step = 2


class AuthFailure(PipelineError):
    step = 3


class DigestMismatch(PipelineError):
    step = 4


class BundleFormatError(PipelineError):
    pass


# -- cloud ----------------------------------------------------------------

class CloudError(SharePactError):
    pass


class NameTaken(CloudError):
    pass


class UnknownProvider(CloudError):
    pass


class UnknownHandle(CloudError):
    pass


class NotOwner(CloudError):
    pass


class UnknownLink(CloudError):
    pass


class LinkExpired(CloudError):
    pass


# -- negotiation ----------------------------------------------------------

class NegotiationError(SharePactError):
    pass


class InvalidTerms(NegotiationError):
    pass


class BadSignature(NegotiationError):
    pass


class RoundLimitExceeded(NegotiationError):
    pass


class SelfAccept(NegotiationError):
    pass


class OutOfTurn(NegotiationError):
    pass


# -- data share contract --------------------------------------------------

class ContractError(SharePactError):
    pass


class UnsealedTerms(ContractError):
    pass


class InsufficientDeposit(ContractError):
    pass


class WrongState(ContractError):
    pass


class NotProvider(ContractError):
    pass


class NotRequester(ContractError):
    pass


class NotParty(ContractError):
    pass


class WrongAmount(ContractError):
    pass


class LinkNotConsumed(ContractError):
    pass


class MissingSignature(ContractError):
    pass


class VoteInProgress(ContractError):
    pass


class AlreadyClosed(ContractError):
    pass


class NotYetExpired(ContractError):
    pass


# -- congress -------------------------------------------------------------

class CongressError(SharePactError):
    pass


class EmptyPanel(CongressError):
    pass


class ConflictedArbiter(CongressError):
    pass


class CompensationExceedsEscrow(CongressError):
    pass


class NotArbiter(CongressError):
    pass


class AlreadyVoted(CongressError):
    pass


class VotingClosed(CongressError):
    pass


class WrongPhase(CongressError):
    pass


class DeadlineNotReached(CongressError):
    pass


class AlreadyExecuted(CongressError):
    pass


# -- scenarios / experiments ----------------------------------------------

class ScenarioError(SharePactError):
    pass


class ParseError(ScenarioError):
    def __init__(self, message: str, locus: str = "") -> None:
        super().__init__(f"{locus}: {message}" if locus else message)
        self.locus = locus


class StepError(ScenarioError):
    pass


class AssertionFailed(ScenarioError):
    pass


class InvalidRange(ScenarioError):
    pass
