from __future__ import annotations

import dataclasses
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from sharepact.errors import BadSignature, InvalidTerms, OutOfTurn, RoundLimitExceeded, SelfAccept
from sharepact.negotiation import (
    MAX_ROUND,
    AgreementTerms,
    ContractPacket,
    Negotiation,
    accept,
    counter,
    default_gas_money,
    propose,
    replay,
)


def test_propose_signs_round_zero(world):
    packet = propose(world.alice, world.terms())
    assert packet.round == 0
    packet.verify()


@pytest.mark.parametrize(
    "change",
    [
        {"quorum": 4},
        {"quorum": 0},
        {"voter_list": ()},
        {"voting_margin": 0},
        {"voting_margin": Fraction(3, 2)},
        {"voting_time": 0},
        {"contract_lifetime": 3600},
        {"default_compensation": 100_001},
        {"payment": -1},
    ],
)
def test_invalid_terms(world, change):
    with pytest.raises(InvalidTerms):
        propose(world.alice, world.terms(**change))


def test_arbiter_conflicts(world):
    with pytest.raises(InvalidTerms):
        propose(world.alice, world.terms(voter_list=(world.alice.address, world.arbiters[0].address), quorum=1))
    dup = world.arbiters[0].address
    with pytest.raises(InvalidTerms):
        propose(world.alice, world.terms(voter_list=(dup, dup), quorum=1))


def test_counter_and_accept(world):
    p0 = propose(world.alice, world.terms(payment=100))
    p1 = counter(world.bob, p0, dataclasses.replace(p0.terms, payment=80))
    assert p1.round == 1 and p1.terms.payment == 80
    sealed = accept(world.alice, p1)
    assert sealed.terms.payment == 80
    assert {e.address for e in sealed.endorsements} == {world.alice.address, world.bob.address}
    sealed.verify()


def test_counter_on_forged_packet(world):
    p0 = propose(world.alice, world.terms())
    forged = dataclasses.replace(p0, signature=bytes(64))
    with pytest.raises(BadSignature):
        counter(world.bob, forged, p0.terms)


def test_parties_cannot_change(world):
    p0 = propose(world.alice, world.terms())
    with pytest.raises(InvalidTerms):
        counter(world.bob, p0, dataclasses.replace(p0.terms, requester_address=world.arbiters[0].address,
                                                   voter_list=tuple(a.address for a in world.arbiters[1:]),
                                                   quorum=1))


def test_round_cap(world):
    session = Negotiation()
    session.propose(world.alice, world.terms())
    parties = [world.bob, world.alice]
    for i in range(MAX_ROUND):
        session.counter(parties[i % 2], payment=1000 + i)
    with pytest.raises(RoundLimitExceeded):
        session.counter(parties[MAX_ROUND % 2], payment=1)
    assert session.transcript[-1].round == MAX_ROUND


def test_self_accept_and_turns(world):
    p0 = propose(world.bob, world.terms())
    with pytest.raises(SelfAccept):
        accept(world.bob, p0)
    with pytest.raises(OutOfTurn):
        counter(world.bob, p0, p0.terms)
    with pytest.raises(OutOfTurn):
        accept(world.arbiters[0], p0)


def test_tampered_packet_rejected(world):
    p0 = propose(world.bob, world.terms())
    tampered = dataclasses.replace(p0, terms=dataclasses.replace(p0.terms, payment=1))
    with pytest.raises(BadSignature):
        accept(world.alice, tampered)


def test_json_forms_round_trip(world):
    p0 = propose(world.alice, world.terms())
    again = ContractPacket.from_json(p0.to_json())
    assert again == p0
    again.verify()
    assert AgreementTerms.from_json(p0.terms.to_json()) == p0.terms


def test_digest_is_field_sensitive(world):
    t = world.terms()
    assert t.digest() == world.terms().digest()
    assert t.digest() != world.terms(breach_condition="other").digest()
    assert t.digest() != world.terms(voting_margin=Fraction(2, 3)).digest()


def test_replay(world):
    session = Negotiation()
    session.propose(world.alice, world.terms())
    session.counter(world.bob, payment=5)
    sealed = session.accept(world.alice)
    assert replay(session.transcript, sealed) == sealed
    broken = list(session.transcript)
    broken[1] = dataclasses.replace(broken[1], signature=bytes(64))
    with pytest.raises(BadSignature):
        replay(broken, sealed)


def test_default_gas_money():
    assert default_gas_money() == 30000 * 8


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(0, 10**9), min_size=1, max_size=6))
def test_sealed_terms_always_doubly_signed(payments):
    from support import make_world

    w = make_world(seed=len(payments))
    session = Negotiation()
    session.propose(w.alice, w.terms(payment=payments[0]))
    turn = [w.bob, w.alice]
    for i, p in enumerate(payments[1:]):
        session.counter(turn[i % 2], payment=p)
    sealed = session.accept(turn[(len(payments) - 1) % 2])
    sealed.verify()
    assert sealed.terms.payment == payments[-1]
    assert len({e.address for e in sealed.endorsements}) == 2
