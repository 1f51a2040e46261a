"""Off-chain negotiation of agreement terms by signed contract packets.

Terms are hashed from a fixed binary encoding, fields in declaration order::

    b"sharepact/terms/v1"
    str      -> u32 byte length || utf-8
    address  -> 20 raw bytes
    wei      -> u256
    count / seconds -> u64
    voter_list -> u32 count || 20 bytes per voter
    voting_margin -> u64 numerator || u64 denominator (lowest terms)

All integers are big-endian. Packet and acceptance signatures are Ed25519
over ``b"sharepact/terms-sig/v1" || terms_digest``.
"""

from __future__ import annotations

import hashlib
import random
import struct
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Any, Iterable, Mapping

from . import cryptopipe as cp
from .errors import BadSignature, InvalidTerms, OutOfTurn, RoundLimitExceeded, SelfAccept
from .ledger import Address, GasPolicy, Ledger, Role

MAX_ROUND = 64
TERMS_DOMAIN = b"sharepact/terms/v1"
SIG_DOMAIN = b"sharepact/terms-sig/v1"


def default_gas_money(policy: GasPolicy | None = None) -> int:
    policy = policy or GasPolicy()
    return policy.flat_call_gas * 8 * policy.gas_price


def as_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass
class Party:
    """A principal with keys and a ledger account derived from its public key."""

    name: str
    keys: cp.KeyPair
    address: Address

    @classmethod
    def create(
        cls, ledger: Ledger, name: str, role: Role | str, balance: int = 0, rng: random.Random | None = None
    ) -> "Party":
        keys = cp.KeyPair.generate(rng)
        address = ledger.create_account(balance, role, public_key=keys.public.to_bytes())
        return cls(name, keys, address)

    @property
    def public(self) -> cp.PublicKey:
        return self.keys.public

    def sign(self, message: bytes) -> bytes:
        return self.keys.sign(message)


@dataclass(frozen=True)
class AgreementTerms:
    requester_name: str
    requester_address: Address
    provider_name: str
    provider_address: Address
    payment: int
    requester_deposit: int
    provider_deposit: int
    gas_money: int
    breach_condition: str
    voter_list: tuple[Address, ...]
    quorum: int
    voting_time: int
    voting_margin: Fraction
    contract_lifetime: int
    default_compensation: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "voter_list", tuple(self.voter_list))
        object.__setattr__(self, "voting_margin", as_fraction(self.voting_margin))

    def validate(self) -> "AgreementTerms":
        voters = self.voter_list
        if not voters:
            raise InvalidTerms("voter_list is empty")
        if len(set(voters)) != len(voters):
            raise InvalidTerms("voter_list has duplicates")
        if self.requester_address == self.provider_address:
            raise InvalidTerms("requester and provider are the same address")
        for party in (self.requester_address, self.provider_address):
            if party in voters:
                raise InvalidTerms(f"arbiter {party} is a party to the agreement")
        if not 1 <= self.quorum <= len(voters):
            raise InvalidTerms(f"quorum {self.quorum} outside 1..{len(voters)}")
        if not 0 < self.voting_margin <= 1:
            raise InvalidTerms("voting_margin must be in (0, 1]")
        if self.voting_time <= 0:
            raise InvalidTerms("voting_time must be positive")
        if self.contract_lifetime <= self.voting_time:
            raise InvalidTerms("contract_lifetime must exceed voting_time")
        for name in ("payment", "requester_deposit", "provider_deposit", "gas_money", "default_compensation"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0 or value >= 2**256:
                raise InvalidTerms(f"{name} must be a wei amount")
        if self.default_compensation > self.requester_deposit + self.provider_deposit:
            raise InvalidTerms("default_compensation exceeds the sum of both deposits")
        return self

    @property
    def deposit_total(self) -> int:
        """Total the requester must send: payment + deposit + gas money."""
        return self.payment + self.requester_deposit + self.gas_money

    def counterparty(self, address: Address) -> Address:
        if address == self.requester_address:
            return self.provider_address
        if address == self.provider_address:
            return self.requester_address
        raise InvalidTerms(f"{address} is not a party")

    def encode(self) -> bytes:
        out = [TERMS_DOMAIN]
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, str):
                raw = value.encode("utf-8")
                out.append(struct.pack(">I", len(raw)) + raw)
            elif isinstance(value, Address):
                out.append(value.raw)
            elif isinstance(value, tuple):
                out.append(struct.pack(">I", len(value)) + b"".join(a.raw for a in value))
            elif isinstance(value, Fraction):
                out.append(struct.pack(">QQ", value.numerator, value.denominator))
            elif f.name in _WEI_FIELDS:
                out.append(value.to_bytes(32, "big"))
            else:
                out.append(struct.pack(">Q", value))
        return b"".join(out)

    def digest(self) -> bytes:
        return hashlib.sha256(self.encode()).digest()

    def to_json(self) -> dict:
        out: dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Address):
                value = value.hex
            elif isinstance(value, tuple):
                value = [a.hex for a in value]
            elif isinstance(value, Fraction):
                value = f"{value.numerator}/{value.denominator}"
            out[f.name] = value
        return out

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "AgreementTerms":
        names = {f.name for f in fields(cls)}
        if set(data) != names:
            raise InvalidTerms(f"terms fields mismatch: missing {sorted(names - set(data))}, extra {sorted(set(data) - names)}")
        kw = dict(data)
        for name in ("requester_address", "provider_address"):
            kw[name] = Address.from_hex(kw[name])
        kw["voter_list"] = tuple(Address.from_hex(a) for a in kw["voter_list"])
        return cls(**kw)


_WEI_FIELDS = {"payment", "requester_deposit", "provider_deposit", "gas_money", "default_compensation"}


def _sig_message(digest: bytes) -> bytes:
    return SIG_DOMAIN + digest


@dataclass(frozen=True)
class ContractPacket:
    round: int
    sender: Address
    sender_pub: cp.PublicKey
    terms: AgreementTerms
    terms_digest: bytes
    signature: bytes

    def verify(self) -> "ContractPacket":
        if self.terms.digest() != self.terms_digest:
            raise BadSignature("terms_digest does not match terms")
        if Address.from_public_key(self.sender_pub.to_bytes()) != self.sender:
            raise BadSignature("sender key does not belong to sender address")
        if not self.sender_pub.verify(self.signature, _sig_message(self.terms_digest)):
            raise BadSignature("packet signature invalid")
        return self

    def to_json(self) -> dict:
        return {
            "round": self.round,
            "sender": self.sender.hex,
            "sender_pub": self.sender_pub.to_bytes().hex(),
            "terms": self.terms.to_json(),
            "terms_digest": self.terms_digest.hex(),
            "signature": self.signature.hex(),
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "ContractPacket":
        return cls(
            data["round"],
            Address.from_hex(data["sender"]),
            cp.PublicKey.from_bytes(bytes.fromhex(data["sender_pub"])),
            AgreementTerms.from_json(data["terms"]),
            bytes.fromhex(data["terms_digest"]),
            bytes.fromhex(data["signature"]),
        )


@dataclass(frozen=True)
class Endorsement:
    address: Address
    public: cp.PublicKey
    signature: bytes


@dataclass(frozen=True)
class SealedTerms:
    """Terms endorsed by both parties over one digest; the only factory input."""

    terms: AgreementTerms
    terms_digest: bytes
    endorsements: tuple[Endorsement, Endorsement]

    def verify(self) -> "SealedTerms":
        if self.terms.digest() != self.terms_digest:
            raise BadSignature("terms_digest does not match terms")
        signers = set()
        for e in self.endorsements:
            if Address.from_public_key(e.public.to_bytes()) != e.address:
                raise BadSignature("endorsement key does not belong to its address")
            if not e.public.verify(e.signature, _sig_message(self.terms_digest)):
                raise BadSignature(f"endorsement by {e.address} invalid")
            signers.add(e.address)
        if signers != {self.terms.requester_address, self.terms.provider_address}:
            raise BadSignature("terms must be endorsed by exactly the requester and the provider")
        return self

    def public_key_of(self, address: Address) -> cp.PublicKey:
        for e in self.endorsements:
            if e.address == address:
                return e.public
        raise KeyError(str(address))

    def to_json(self) -> dict:
        return {
            "terms": self.terms.to_json(),
            "terms_digest": self.terms_digest.hex(),
            "endorsements": [
                {"address": e.address.hex, "public": e.public.to_bytes().hex(), "signature": e.signature.hex()}
                for e in self.endorsements
            ],
        }


def _sign_packet(round_: int, sender: Party, terms: AgreementTerms) -> ContractPacket:
    digest = terms.digest()
    return ContractPacket(round_, sender.address, sender.public, terms, digest, sender.sign(_sig_message(digest)))


def propose(sender: Party, terms: AgreementTerms) -> ContractPacket:
    terms.validate()
    terms.counterparty(sender.address)
    return _sign_packet(0, sender, terms)


def counter(responder: Party, previous: ContractPacket, modified_terms: AgreementTerms) -> ContractPacket:
    previous.verify()
    if responder.address == previous.sender:
        raise OutOfTurn("a party cannot answer its own packet")
    modified_terms.validate()
    if (modified_terms.requester_address, modified_terms.provider_address) != (
        previous.terms.requester_address,
        previous.terms.provider_address,
    ):
        raise InvalidTerms("the parties of an agreement cannot be renegotiated")
    if previous.terms.counterparty(previous.sender) != responder.address:
        raise OutOfTurn(f"{responder.address} is not the counterparty")
    if previous.round + 1 > MAX_ROUND:
        raise RoundLimitExceeded(f"negotiation capped at {MAX_ROUND} rounds")
    return _sign_packet(previous.round + 1, responder, modified_terms)


def accept(acceptor: Party, packet: ContractPacket) -> SealedTerms:
    packet.verify()
    if acceptor.address == packet.sender:
        raise SelfAccept("cannot accept one's own packet")
    if packet.terms.counterparty(packet.sender) != acceptor.address:
        raise OutOfTurn(f"{acceptor.address} is not the counterparty")
    packet.terms.validate()
    mine = Endorsement(acceptor.address, acceptor.public, acceptor.sign(_sig_message(packet.terms_digest)))
    theirs = Endorsement(packet.sender, packet.sender_pub, packet.signature)
    return SealedTerms(packet.terms, packet.terms_digest, (theirs, mine)).verify()


@dataclass
class Negotiation:
    """Strictly alternating session that records its transcript."""

    transcript: list[ContractPacket] = field(default_factory=list)
    sealed: SealedTerms | None = None

    def propose(self, sender: Party, terms: AgreementTerms) -> ContractPacket:
        if self.transcript:
            raise OutOfTurn("negotiation already started")
        packet = propose(sender, terms)
        self.transcript.append(packet)
        return packet

    def counter(self, responder: Party, **changes: Any) -> ContractPacket:
        last = self._last()
        packet = counter(responder, last, replace(last.terms, **changes))
        self.transcript.append(packet)
        return packet

    def accept(self, acceptor: Party) -> SealedTerms:
        self.sealed = accept(acceptor, self._last())
        return self.sealed

    def _last(self) -> ContractPacket:
        if self.sealed is not None:
            raise OutOfTurn("negotiation already concluded")
        if not self.transcript:
            raise OutOfTurn("no packet on the table")
        return self.transcript[-1]


def replay(transcript: Iterable[ContractPacket], final: SealedTerms | None = None) -> SealedTerms | None:
    """Re-verify a recorded negotiation.

    Checks every packet's signature, round numbering and alternation, and, if
    ``final`` is given, that it seals the last packet's terms.
    """
    prev: ContractPacket | None = None
    for i, packet in enumerate(transcript):
        packet.verify()
        if packet.round != i or packet.round > MAX_ROUND:
            raise BadSignature(f"packet {i} has round {packet.round}")
        if prev is not None and packet.sender != prev.terms.counterparty(prev.sender):
            raise OutOfTurn(f"packet {i} breaks alternation")
        prev = packet
    if final is not None:
        final.verify()
        if prev is None or final.terms_digest != prev.terms_digest:
            raise BadSignature("sealed terms do not match the last packet")
    return final
