"""Breach adjudication: vote contracts spawned per accusation.

A breach is confirmed when at least ``quorum`` ballots were cast and the Yes
count strictly exceeds ``margin`` times the number cast. Ties and missed
quorums leave the accused unpunished.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable

from .errors import (
    AlreadyExecuted,
    AlreadyVoted,
    CompensationExceedsEscrow,
    ConflictedArbiter,
    DeadlineNotReached,
    EmptyPanel,
    NotArbiter,
    VotingClosed,
    WrongPhase,
)
from .ledger import Address, Ledger
from .negotiation import as_fraction

if TYPE_CHECKING:
    from .datashare import DataShareContract

CONGRESS_FACTORY_GAS = 2913993
CONGRESS_BASE_GAS = 2181014
CONGRESS_GAS_PER_VOTER = 295  # (2183669 - 2181014) / 9, exact


def congress_deploy_gas(voter_count: int) -> int:
    if voter_count < 1:
        raise ValueError("voter_count must be at least 1")
    return CONGRESS_BASE_GAS + (voter_count - 1) * CONGRESS_GAS_PER_VOTER


class Ballot(str, enum.Enum):
    YES = "Yes"
    NO = "No"


class Phase(str, enum.Enum):
    OPEN = "Open"
    TALLIED = "Tallied"


class Outcome(str, enum.Enum):
    BREACH_CONFIRMED = "BreachConfirmed"
    NO_BREACH = "NoBreach"


@dataclass(frozen=True)
class Decision:
    outcome: Outcome
    violator: Address | None
    yes_count: int
    no_count: int
    cast_count: int

    @property
    def confirmed(self) -> bool:
        return self.outcome is Outcome.BREACH_CONFIRMED

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "violator": self.violator.hex if self.violator else None,
            "yes_count": self.yes_count,
            "no_count": self.no_count,
            "cast_count": self.cast_count,
        }


def breach_confirmed(yes: int, cast: int, quorum: int, margin: Fraction) -> bool:
    return cast >= quorum and yes * margin.denominator > margin.numerator * cast


def count_ballots(ballots: Iterable[Ballot]) -> tuple[int, int]:
    yes = no = 0
    for b in ballots:
        if b is Ballot.YES:
            yes += 1
        else:
            no += 1
    return yes, no


@dataclass
class VoteContract:
    address: Address
    parent: Address
    accuser: Address
    violator: Address
    arbiters: tuple[Address, ...]
    deadline: int
    compensation: int
    description: str
    created_at: int
    ballots: dict[Address, Ballot] = field(default_factory=dict)
    phase: Phase = Phase.OPEN
    decision: Decision | None = None
    executed: bool = False

    def to_json(self) -> dict:
        return {
            "address": self.address.hex,
            "parent": self.parent.hex,
            "accuser": self.accuser.hex,
            "violator": self.violator.hex,
            "arbiters": [a.hex for a in self.arbiters],
            "deadline": self.deadline,
            "compensation": self.compensation,
            "description": self.description,
            "ballots": {a.hex: b.value for a, b in self.ballots.items()},
            "phase": self.phase.value,
            "decision": self.decision.to_json() if self.decision else None,
            "executed": self.executed,
        }


class CongressFactory:
    """Spawns, runs and settles vote contracts on one ledger."""

    def __init__(self, ledger: Ledger, address: Address | None = None) -> None:
        self.ledger = ledger
        self.address = address
        self.votes: dict[Address, VoteContract] = {}

    def spawn_vote(
        self,
        parent: DataShareContract,
        accuser: Address,
        arbiters: Iterable[Address],
        voting_time: int,
        compensation: int,
        description: str,
    ) -> VoteContract:
        arbiters = tuple(arbiters)
        if not arbiters:
            raise EmptyPanel("no arbiters")
        if len(set(arbiters)) != len(arbiters):
            raise ConflictedArbiter("arbiter listed twice")
        parties = {parent.requester, parent.provider}
        if parties & set(arbiters):
            raise ConflictedArbiter("a party to the agreement cannot arbitrate it")
        if voting_time <= 0:
            raise ValueError("voting_time must be positive")
        escrow = self.ledger.balance(parent.address)
        if compensation > escrow:
            raise CompensationExceedsEscrow(f"compensation {compensation} above escrow {escrow}")
        with self.ledger.atomic():
            addr = self.ledger.deploy_contract(accuser, "VoteContract", congress_deploy_gas(len(arbiters)))
            vote = VoteContract(
                addr,
                parent.address,
                accuser,
                parent.terms.counterparty(accuser),
                arbiters,
                self.ledger.now + voting_time,
                compensation,
                description,
                self.ledger.now,
            )
            for arbiter in arbiters:
                self.ledger.append_event(
                    addr,
                    "VOTE_REQUEST",
                    {"contract": parent.address, "vote": addr, "arbiter": arbiter, "deadline": vote.deadline,
                     "description": description},
                )
            self.votes[addr] = vote
        return vote

    def get(self, address: Address) -> VoteContract:
        return self.votes[address]

    def cast_vote(self, vote: VoteContract, arbiter: Address, ballot: Ballot | str) -> None:
        ballot = Ballot(ballot)
        if arbiter not in vote.arbiters:
            raise NotArbiter(str(arbiter))
        if arbiter in vote.ballots:
            raise AlreadyVoted(str(arbiter))
        if vote.phase is not Phase.OPEN:
            raise WrongPhase("vote already tallied")
        if self.ledger.now >= vote.deadline:
            raise VotingClosed(f"deadline {vote.deadline} passed")
        with self.ledger.atomic():
            self.ledger.call(arbiter, vote.address, "cast_vote")
            self.ledger.append_event(vote.address, "BALLOT", {"vote": vote.address, "arbiter": arbiter, "ballot": ballot})
            vote.ballots[arbiter] = ballot

    def tally(self, vote: VoteContract, quorum: int, margin: Fraction | float | str) -> Decision:
        margin = as_fraction(margin)
        if vote.phase is not Phase.OPEN:
            raise WrongPhase("vote already tallied")
        if self.ledger.now < vote.deadline:
            raise DeadlineNotReached(f"deadline is {vote.deadline}, now {self.ledger.now}")
        yes, no = count_ballots(vote.ballots.values())
        confirmed = breach_confirmed(yes, yes + no, quorum, margin)
        decision = Decision(
            Outcome.BREACH_CONFIRMED if confirmed else Outcome.NO_BREACH,
            vote.violator if confirmed else None,
            yes,
            no,
            yes + no,
        )
        with self.ledger.atomic():
            self.ledger.append_event(
                vote.address,
                "DECISION",
                {"vote": vote.address, "contract": vote.parent, "quorum": quorum, "margin": margin, **decision.to_json()},
            )
            vote.phase = Phase.TALLIED
            vote.decision = decision
        return decision

    def execute_decision(self, vote: VoteContract, parent: DataShareContract, close_parent: bool = False) -> int:
        """Apply the decision to the parent and destroy the vote contract.

        Returns the wei paid to the victim (0 for NoBreach). With
        ``close_parent`` a confirmed breach also closes the parent contract,
        refunding whatever escrow is left.
        """
        if vote.executed:
            raise AlreadyExecuted(str(vote.address))
        if vote.phase is not Phase.TALLIED or vote.decision is None:
            raise WrongPhase("vote not tallied yet")
        if parent.address != vote.parent:
            raise ValueError("vote belongs to another contract")
        with self.ledger.atomic():
            paid = 0
            if vote.decision.confirmed:
                paid = parent.apply_penalty(vote.accuser, vote.violator, vote.compensation)
            self.ledger.self_destruct(vote.address, [])
            vote.executed = True
            parent.vote_finished(vote)
            if close_parent and vote.decision.confirmed:
                parent.close_after_penalty()
        return paid
