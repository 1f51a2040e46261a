"""Simulated fair data sharing between requesters and providers.

Parties negotiate signed terms, a factory deploys an escrow contract on a
simulated ledger, the provider hands over a one-time cloud link inside an
encrypted envelope, and disputes go to a panel of arbiters.
"""

from .cloudnode import CloudNode, LinkState
from .congress import Ballot, CongressFactory, Outcome, breach_confirmed
from .datashare import CloseReason, ContractFactory, ContractState, DataShareContract
from .ledger import Address, GasPolicy, Ledger, Role
from .negotiation import AgreementTerms, Negotiation, Party, SealedTerms
from .scenario import run_scenario

__all__ = [
    "Address",
    "AgreementTerms",
    "Ballot",
    "CloseReason",
    "CloudNode",
    "CongressFactory",
    "ContractFactory",
    "ContractState",
    "DataShareContract",
    "GasPolicy",
    "Ledger",
    "LinkState",
    "Negotiation",
    "Outcome",
    "Party",
    "Role",
    "SealedTerms",
    "breach_confirmed",
    "run_scenario",
]
__version__ = "0.1.0"
