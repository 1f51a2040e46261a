"""Contract factory and the data-share escrow contract.

Escrow is tracked per component. The requester side holds the payment (until
delivery), its breach deposit and the gas allowance; the provider side holds
its breach deposit. The contract's ledger balance always equals the sum.

Call gas is paid by whoever calls. The only gas the contract pays itself, out
of the gas allowance, is the closing refund dispatch; a missing remainder is
waived rather than charged to anyone.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Protocol

from . import cryptopipe as cp
from .cloudnode import LinkState
from .congress import CongressFactory, VoteContract
from .errors import (
    AlreadyClosed,
    BadSignature,
    InsufficientDeposit,
    LinkNotConsumed,
    MissingSignature,
    NotParty,
    NotProvider,
    NotRequester,
    NotYetExpired,
    UnsealedTerms,
    VoteInProgress,
    WrongAmount,
    WrongState,
)
from .ledger import Address, Ledger
from .negotiation import AgreementTerms, SealedTerms

CONTRACT_FACTORY_GAS = 3047711
DATASHARE_BASE_GAS = 1549929
DATASHARE_GAS_AT_10 = 1745750
DESTROY_DOMAIN = b"sharepact/destroy/v1"


def datashare_deploy_gas(voter_count: int) -> int:
    """Linear between 1549929 gas (1 voter) and 1745750 gas (10 voters), rounded half up."""
    if voter_count < 1:
        raise ValueError("voter_count must be at least 1")
    span = DATASHARE_GAS_AT_10 - DATASHARE_BASE_GAS
    return DATASHARE_BASE_GAS + (2 * (voter_count - 1) * span + 9) // 18


class ContractState(str, enum.Enum):
    DEPLOYED = "Deployed"
    PROVIDER_BOUND = "ProviderBound"
    LINK_DELIVERED = "LinkDelivered"
    RETRIEVED = "Retrieved"
    CLOSED = "Closed"


class CloseReason(str, enum.Enum):
    EXPIRED = "Expired"
    MUTUAL_DESTROY = "MutualDestroy"
    PENALTY_EXECUTED = "PenaltyExecuted"


S = ContractState
TRANSITIONS: dict[ContractState, frozenset[ContractState]] = {
    S.DEPLOYED: frozenset({S.PROVIDER_BOUND, S.CLOSED}),
    S.PROVIDER_BOUND: frozenset({S.LINK_DELIVERED, S.CLOSED}),
    S.LINK_DELIVERED: frozenset({S.RETRIEVED, S.CLOSED}),
    S.RETRIEVED: frozenset({S.CLOSED}),
    S.CLOSED: frozenset(),
}


class LinkOracle(Protocol):
    def bundle_link_state(self, bundle_digest: bytes | str) -> LinkState: ...

    def link_for_bundle(self, bundle_digest: bytes | str): ...

    def revoke(self, link_id: str) -> None: ...


@dataclass
class Escrow:
    payment: int = 0
    requester_deposit: int = 0
    gas_money: int = 0
    provider_deposit: int = 0

    @property
    def requester(self) -> int:
        return self.payment + self.requester_deposit + self.gas_money

    @property
    def provider(self) -> int:
        return self.provider_deposit

    @property
    def total(self) -> int:
        return self.requester + self.provider


@dataclass(frozen=True)
class DepositBreakdown:
    payment: int
    deposit_money: int
    gas_money: int
    total: int

    @classmethod
    def of(cls, terms: AgreementTerms) -> "DepositBreakdown":
        return cls(terms.payment, terms.requester_deposit, terms.gas_money, terms.deposit_total)


@dataclass
class BreachRecord:
    accuser: Address
    description: str
    vote: Address
    compensation: int
    decision: str | None = None
    paid: int = 0


@dataclass
class DataShareContract:
    address: Address
    sealed: SealedTerms
    factory: "ContractFactory"
    created_at: int
    expires_at: int
    state: ContractState = ContractState.DEPLOYED
    close_reason: CloseReason | None = None
    escrow: Escrow = field(default_factory=Escrow)
    active_vote: Address | None = None
    breach_history: list[BreachRecord] = field(default_factory=list)
    bundle_digest: bytes | None = None
    transitions: list[tuple[ContractState, ContractState]] = field(default_factory=list)

    @property
    def terms(self) -> AgreementTerms:
        return self.sealed.terms

    @property
    def requester(self) -> Address:
        return self.terms.requester_address

    @property
    def provider(self) -> Address:
        return self.terms.provider_address

    @property
    def ledger(self) -> Ledger:
        return self.factory.ledger

    @property
    def closed(self) -> bool:
        return self.state is ContractState.CLOSED

    # -- helpers --------------------------------------------------------

    def _move(self, new: ContractState) -> None:
        if new not in TRANSITIONS[self.state]:
            raise AssertionError(f"undeclared transition {self.state.value} -> {new.value}")
        self.transitions.append((self.state, new))
        self.state = new

    def _require_open(self) -> None:
        if self.closed:
            raise AlreadyClosed(str(self.address))

    def _require_state(self, state: ContractState) -> None:
        self._require_open()
        if self.state is not state:
            raise WrongState(f"contract is {self.state.value}, needs {state.value}")

    def _emit(self, kind: str, **payload) -> None:
        self.ledger.append_event(self.address, kind, {"contract": self.address, **payload})

    def destroy_message(self) -> bytes:
        return DESTROY_DOMAIN + self.address.raw

    # -- protocol steps -------------------------------------------------

    def provider_deposit(self, provider: Address, amount: int) -> None:
        self._require_state(ContractState.DEPLOYED)
        if provider != self.provider:
            raise NotProvider(str(provider))
        if amount != self.terms.provider_deposit:
            raise WrongAmount(f"deposit must be {self.terms.provider_deposit}, got {amount}")
        with self.ledger.atomic():
            self.ledger.call(provider, self.address, "provider_deposit", value=amount)
            self.escrow.provider_deposit += amount
            self._emit("PROVIDER_DEPOSIT", provider=provider, amount=amount)
            self._move(ContractState.PROVIDER_BOUND)

    def deliver_link(self, provider: Address, bundle: cp.EnvelopeBundle) -> None:
        """Log the delivered envelope's digest and release the payment at once."""
        self._require_state(ContractState.PROVIDER_BOUND)
        if provider != self.provider:
            raise NotProvider(str(provider))
        digest = bundle.digest()
        with self.ledger.atomic():
            self.ledger.call(provider, self.address, "deliver_link")
            payment = self.escrow.payment
            self.ledger.payout(self.address, provider, payment, "payment")
            self.escrow.payment = 0
            self.bundle_digest = digest
            self._emit("LINK_DELIVERED", bundle=digest, payment=payment)
            self._move(ContractState.LINK_DELIVERED)

    def confirm_retrieval(self, requester: Address) -> None:
        self._require_state(ContractState.LINK_DELIVERED)
        if requester != self.requester:
            raise NotRequester(str(requester))
        cloud = self.factory.cloud
        if cloud is None or self.bundle_digest is None:
            raise LinkNotConsumed("no cloud to confirm the link with")
        if cloud.bundle_link_state(self.bundle_digest) is not LinkState.CONSUMED:
            raise LinkNotConsumed("the delivered link has not been retrieved")
        with self.ledger.atomic():
            self.ledger.call(requester, self.address, "confirm_retrieval")
            self._emit("RETRIEVAL_CONFIRMED", requester=requester)
            self._move(ContractState.RETRIEVED)

    def mutual_destroy(self, requester_sig: bytes | None, provider_sig: bytes | None) -> None:
        self._require_open()
        if self.active_vote is not None:
            raise VoteInProgress(str(self.active_vote))
        message = self.destroy_message()
        for who, sig in ((self.requester, requester_sig), (self.provider, provider_sig)):
            if not sig or not self.sealed.public_key_of(who).verify(sig, message):
                raise MissingSignature(f"no valid destroy signature from {who}")
        self._close(CloseReason.MUTUAL_DESTROY)

    def expire(self) -> None:
        self._require_open()
        if self.ledger.now < self.expires_at:
            raise NotYetExpired(f"expires at {self.expires_at}, now {self.ledger.now}")
        if self.active_vote is not None:
            raise VoteInProgress(str(self.active_vote))
        self._close(CloseReason.EXPIRED)

    def raise_breach(self, accuser: Address, description: str, compensation: int | None = None) -> VoteContract:
        self._require_open()
        if accuser not in (self.requester, self.provider):
            raise NotParty(str(accuser))
        if self.active_vote is not None:
            raise VoteInProgress(str(self.active_vote))
        compensation = self.terms.default_compensation if compensation is None else compensation
        with self.ledger.atomic():
            vote = self.factory.congress.spawn_vote(
                self, accuser, self.terms.voter_list, self.terms.voting_time, compensation, description
            )
            self.active_vote = vote.address
            self.breach_history.append(BreachRecord(accuser, description, vote.address, compensation))
            self._emit("BREACH_RAISED", accuser=accuser, vote=vote.address, compensation=compensation,
                       description=description)
        return vote

    # -- hooks used by congress -----------------------------------------

    def apply_penalty(self, victim: Address, breacher: Address, compensation: int) -> int:
        """Pay the victim its own deposit, then the breacher's, up to ``compensation``."""
        self._require_open()
        cap = min(compensation, self.ledger.balance(self.address))
        own_field = "requester_deposit" if victim == self.requester else "provider_deposit"
        their_field = "provider_deposit" if own_field == "requester_deposit" else "requester_deposit"
        from_own = min(getattr(self.escrow, own_field), cap)
        from_breacher = min(getattr(self.escrow, their_field), cap - from_own)
        with self.ledger.atomic():
            self.ledger.payout(self.address, victim, from_own + from_breacher, "penalty")
            setattr(self.escrow, own_field, getattr(self.escrow, own_field) - from_own)
            setattr(self.escrow, their_field, getattr(self.escrow, their_field) - from_breacher)
            self._emit("PENALTY", victim=victim, breacher=breacher, victim_deposit=from_own,
                       breacher_deposit=from_breacher)
        return from_own + from_breacher

    def vote_finished(self, vote: VoteContract) -> None:
        for rec in self.breach_history:
            if rec.vote == vote.address:
                rec.decision = vote.decision.outcome.value if vote.decision else None
        if self.active_vote == vote.address:
            self.active_vote = None

    def close_after_penalty(self) -> None:
        self._require_open()
        self._close(CloseReason.PENALTY_EXECUTED)

    def _close(self, reason: CloseReason) -> None:
        with self.ledger.atomic():
            receipt = self.ledger.charge_gas(
                self.address, self.ledger.policy.flat_call_gas, "refund dispatch", cap=self.escrow.gas_money
            )
            self.escrow.gas_money -= receipt.fee
            refunds = [(self.requester, self.escrow.requester), (self.provider, self.escrow.provider)]
            self._emit("CLOSED", reason=reason, refunds=[[a, v] for a, v in refunds])
            self.ledger.self_destruct(self.address, refunds)
            self.escrow = Escrow()
            self.close_reason = reason
            self._move(ContractState.CLOSED)
            self.factory.revoke_link(self)

    def snapshot(self) -> dict:
        return {
            "address": self.address.hex,
            "state": self.state.value,
            "close_reason": self.close_reason.value if self.close_reason else None,
            "escrow": {
                "payment": self.escrow.payment,
                "requester_deposit": self.escrow.requester_deposit,
                "gas_money": self.escrow.gas_money,
                "provider_deposit": self.escrow.provider_deposit,
                "requester": self.escrow.requester,
                "provider": self.escrow.provider,
            },
            "created_at": self.created_at,
            "expires_at": self.expires_at,
            "active_vote": self.active_vote.hex if self.active_vote else None,
            "breach_history": [
                {
                    "accuser": b.accuser.hex,
                    "description": b.description,
                    "vote": b.vote.hex,
                    "compensation": b.compensation,
                    "decision": b.decision,
                }
                for b in self.breach_history
            ],
        }


class ContractFactory:
    """Instantiates data-share contracts from sealed terms."""

    def __init__(
        self,
        ledger: Ledger,
        congress: CongressFactory | None = None,
        cloud: LinkOracle | None = None,
        address: Address | None = None,
    ) -> None:
        self.ledger = ledger
        self.congress = congress or CongressFactory(ledger)
        self.cloud = cloud
        self.address = address
        self.contracts: dict[Address, DataShareContract] = {}

    def create(self, sealed: SealedTerms, requester_payment: int) -> DataShareContract:
        if not isinstance(sealed, SealedTerms):
            raise UnsealedTerms("contracts are created from sealed terms only")
        try:
            sealed.verify()
        except BadSignature as exc:
            raise UnsealedTerms(str(exc)) from None
        terms = sealed.terms.validate()
        breakdown = DepositBreakdown.of(terms)
        if requester_payment != breakdown.total:
            raise InsufficientDeposit(
                f"requester must send payment + deposit + gas money = {breakdown.total}, sent {requester_payment}"
            )
        requester = terms.requester_address
        gas = datashare_deploy_gas(len(terms.voter_list))
        with self.ledger.atomic():
            addr = self.ledger.deploy_contract(requester, "DataShareContract", gas)
            now = self.ledger.now
            contract = DataShareContract(addr, sealed, self, now, now + terms.contract_lifetime)
            self.ledger.call(requester, addr, "fund", value=requester_payment)
            contract.escrow = Escrow(breakdown.payment, breakdown.deposit_money, breakdown.gas_money, 0)
            self.ledger.watch_expiry(addr, contract.expires_at)
            self.ledger.append_event(
                addr,
                "NOTIFY_PROVIDER",
                {"contract": addr, "provider": terms.provider_address, "requester": requester,
                 "terms_digest": sealed.terms_digest, "escrow": requester_payment},
            )
            self.contracts[addr] = contract
        return contract

    def get(self, address: Address) -> DataShareContract:
        return self.contracts[address]

    def revoke_link(self, contract: DataShareContract) -> None:
        if self.cloud is None or contract.bundle_digest is None:
            return
        link = self.cloud.link_for_bundle(contract.bundle_digest)
        if link.state is LinkState.FRESH:
            self.cloud.revoke(link.link_id)
