"""Shared builders for tests: a small world with two parties and a panel."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from sharepact.cloudnode import CloudNode
from sharepact.congress import CongressFactory
from sharepact.datashare import ContractFactory, DataShareContract
from sharepact.ledger import Ledger
from sharepact.negotiation import AgreementTerms, Party, SealedTerms, accept, propose

CALL = 30000
DATA = b"station,hour,count\nA,08,412\nA,09,388\n"


@dataclass
class World:
    ledger: Ledger
    alice: Party
    bob: Party
    arbiters: list[Party]
    cloud: CloudNode
    factory: ContractFactory
    rng: random.Random
    handles: dict = field(default_factory=dict)

    @property
    def congress(self) -> CongressFactory:
        return self.factory.congress

    def terms(self, **changes) -> AgreementTerms:
        base = dict(
            requester_name="alice",
            requester_address=self.alice.address,
            provider_name="city-transport",
            provider_address=self.bob.address,
            payment=100_000,
            requester_deposit=50_000,
            provider_deposit=50_000,
            gas_money=240_000,
            breach_condition="no onward disclosure",
            voter_list=tuple(a.address for a in self.arbiters),
            quorum=2,
            voting_time=3600,
            voting_margin="1/2",
            contract_lifetime=86400,
            default_compensation=100_000,
        )
        base.update(changes)
        return AgreementTerms(**base)

    def seal(self, **changes) -> SealedTerms:
        return accept(self.bob, propose(self.alice, self.terms(**changes)))

    def create(self, **changes) -> DataShareContract:
        sealed = self.seal(**changes)
        return self.factory.create(sealed, sealed.terms.deposit_total)

    def deliver(self, contract: DataShareContract, data: bytes = DATA):
        handle = self.cloud.store_data(self.bob.address, data)
        link, bundle = self.cloud.prepare_link(self.bob.address, handle.handle_id, self.alice.public, self.bob.keys)
        contract.deliver_link(self.bob.address, bundle)
        return link, bundle

    def fetch(self, bundle) -> bytes:
        from sharepact.cryptopipe import open_pipeline

        return open_pipeline(bundle, self.alice.keys, self.bob.public, self.cloud.fetch)

    def destroy_sigs(self, contract: DataShareContract) -> tuple[bytes, bytes]:
        msg = contract.destroy_message()
        return self.alice.sign(msg), self.bob.sign(msg)


def make_world(seed: int = 1, panel: int = 3, balance: int = 10_000_000) -> World:
    rng = random.Random(seed)
    ledger = Ledger()
    alice = Party.create(ledger, "alice", "requester", balance, rng)
    bob = Party.create(ledger, "bob", "provider", balance, rng)
    arbiters = [Party.create(ledger, f"arb{i}", "arbiter", 1_000_000, rng) for i in range(panel)]
    cloud = CloudNode(ledger, rng=rng)
    cloud.register_provider("city-transport", bob.address)
    factory = ContractFactory(ledger, CongressFactory(ledger), cloud)
    return World(ledger, alice, bob, arbiters, cloud, factory, rng)


def conserved(ledger: Ledger) -> bool:
    return ledger.total_balance() == ledger.minted
