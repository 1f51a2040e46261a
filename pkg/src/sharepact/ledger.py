"""Deterministic in-memory ledger.

Accounts hold integer wei balances, contracts are accounts with a registry
entry, gas is a declared cost paid to a miner account, and every state change
is recorded in an append-only SHA-256 hash chain.

Exported logs are JSON Lines, one record per line::

    {"seq":0,"logical_time":0,"emitter":"0x..","kind":"GENESIS","payload":{..},
     "prev_hash":"00..00","this_hash":".."}

Keys appear in exactly that order, with no whitespace, and ``payload`` keys
sorted. A record hash is SHA-256 over the canonical JSON array
``[seq, logical_time, emitter, kind, payload, prev_hash]``.
"""

from __future__ import annotations

import enum
import hashlib
import json
import threading
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

from .errors import (
    AlreadyDestroyed,
    BlockGasLimitExceeded,
    ChainInvalid,
    InsufficientBalance,
    InvalidPolicy,
    OutOfGas,
    RefundMismatch,
    UnknownAddress,
    UnknownContract,
    WeiOverflow,
)

MAX_WEI = 2**256 - 1
ZERO_HASH = "0" * 64
RECORD_FIELDS = ("seq", "logical_time", "emitter", "kind", "payload", "prev_hash", "this_hash")


@dataclass(frozen=True, order=True)
class Address:
    raw: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.raw, bytes) or len(self.raw) != 20:
            raise ValueError("address must be exactly 20 bytes")

    @property
    def hex(self) -> str:
        return "0x" + self.raw.hex()

    def __str__(self) -> str:
        return self.hex

    def __repr__(self) -> str:
        return f"Address({self.hex})"

    @classmethod
    def from_hex(cls, text: str) -> "Address":
        if not text.startswith("0x") or len(text) != 42:
            raise ValueError(f"not a 0x-prefixed 40-digit address: {text!r}")
        return cls(bytes.fromhex(text[2:]))

    @classmethod
    def from_public_key(cls, public_key: bytes) -> "Address":
        return cls(hashlib.sha256(public_key).digest()[-20:])


class Role(str, enum.Enum):
    PROVIDER = "provider"
    REQUESTER = "requester"
    ARBITER = "arbiter"
    CLOUD = "cloud"
    MINER = "miner"
    CONTRACT = "contract"


@dataclass(frozen=True)
class GasPolicy:
    """Gas costs, in gas units, and the wei price of one unit.

    Config files are JSON objects using the field names as keys; missing keys
    take the defaults below.
    """

    block_gas_limit: int = 4712388
    flat_call_gas: int = 30000
    transfer_gas: int = 21000
    gas_price: int = 1

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise InvalidPolicy(f"{name} must be a non-negative integer")
        if self.block_gas_limit <= 0:
            raise InvalidPolicy("block_gas_limit must be positive")
        for name in ("flat_call_gas", "transfer_gas"):
            if getattr(self, name) >= self.block_gas_limit:
                raise InvalidPolicy(f"{name} must be below block_gas_limit")

    def fee(self, gas: int) -> int:
        return gas * self.gas_price

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "GasPolicy":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidPolicy(f"unknown gas policy keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "GasPolicy":
        with open(path, encoding="utf-8") as fh:
            return cls.from_mapping(json.load(fh))


def plain(value: Any) -> Any:
    """Convert a payload value into the JSON subset used for hashing."""
    if isinstance(value, Address):
        return value.hex
    if isinstance(value, enum.Enum):
        return plain(value.value)
    if isinstance(value, (bytes, bytearray)):
        return bytes(value).hex()
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, Mapping):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    # floats are excluded: their text form is not stable across languages
    raise TypeError(f"value of type {type(value).__name__} cannot be logged")


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False)


def record_hash(seq: int, logical_time: int, emitter: str, kind: str, payload: Any, prev_hash: str) -> str:
    body = canonical_json([seq, logical_time, emitter, kind, payload, prev_hash])
    return hashlib.sha256(body.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class EventRecord:
    seq: int
    logical_time: int
    emitter: str
    kind: str
    payload: dict
    prev_hash: str
    this_hash: str

    def expected_hash(self) -> str:
        return record_hash(self.seq, self.logical_time, self.emitter, self.kind, self.payload, self.prev_hash)

    def to_json_line(self) -> str:
        parts = [f"{json.dumps(name)}:{canonical_json(getattr(self, name))}" for name in RECORD_FIELDS]
        return "{" + ",".join(parts) + "}"

    @classmethod
    def from_json_line(cls, line: str) -> "EventRecord":
        data = json.loads(line)
        if not isinstance(data, dict) or tuple(data) != RECORD_FIELDS:
            raise ValueError("fields missing or out of order")
        return cls(**data)


def _check_link(i: int, rec: EventRecord, prev: EventRecord | None) -> None:
    if rec.seq != i:
        raise ChainInvalid(i, f"seq {rec.seq} out of order")
    if rec.prev_hash != (prev.this_hash if prev else ZERO_HASH):
        raise ChainInvalid(i, "prev_hash does not link to previous record")
    if prev is not None and rec.logical_time < prev.logical_time:
        raise ChainInvalid(i, "logical_time went backwards")
    if rec.this_hash != rec.expected_hash():
        raise ChainInvalid(i, "this_hash does not match record contents")


def verify_records(records: Sequence[EventRecord]) -> int:
    """Check a record sequence; raise ChainInvalid at the first bad one."""
    prev = None
    for i, rec in enumerate(records):
        _check_link(i, rec, prev)
        prev = rec
    return len(records)


def verify_jsonl(lines: Iterable[str | bytes]) -> int:
    """Verify an exported log line by line.

    Each line must parse and be byte-identical to the canonical rendering of
    the record it encodes, so any single-byte change is caught at its line.
    """
    prev = None
    count = 0
    for i, line in enumerate(lines):
        if isinstance(line, bytes):
            try:
                line = line.decode("ascii")
            except UnicodeDecodeError:
                raise ChainInvalid(i, "non-ascii bytes") from None
        try:
            rec = EventRecord.from_json_line(line)
        except (ValueError, TypeError) as exc:
            raise ChainInvalid(i, f"unparseable record ({exc})") from None
        if rec.to_json_line() != line:
            raise ChainInvalid(i, "record is not in canonical form")
        _check_link(i, rec, prev)
        prev = rec
        count += 1
    if not count:
        raise ChainInvalid(0, "empty log")
    return count


def verify_log_file(path: str | Path) -> int:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.endswith(b"\n"):
        raise ChainInvalid(data.count(b"\n"), "missing final newline")
    return verify_jsonl(data[:-1].split(b"\n"))


@dataclass
class Account:
    address: Address
    balance: int
    role: Role


@dataclass
class ContractRecord:
    address: Address
    kind: str
    owner: Address
    deployed_at: int
    gas_used: int
    live: bool = True


@dataclass(frozen=True)
class Receipt:
    gas_used: int = 0
    fee: int = 0
    events: tuple[int, ...] = ()


class _Snapshot:
    __slots__ = ("balances", "live", "n_events", "counters", "expiry")


class Ledger:
    """Single-writer simulated chain.

    All mutations happen under one re-entrant lock; failed operations are
    rolled back so balances and the log are untouched.
    """

    def __init__(self, policy: GasPolicy | None = None) -> None:
        self.policy = policy or GasPolicy()
        self.now = 0
        self.minted = 0
        self._accounts: dict[Address, Account] = {}
        self._contracts: dict[Address, ContractRecord] = {}
        self._events: list[EventRecord] = []
        self._nonce = 0
        self._expiry: dict[Address, int] = {}
        self._lock = threading.RLock()
        self._depth = 0
        self.miner = self._new_address(b"miner")
        self._accounts[self.miner] = Account(self.miner, 0, Role.MINER)
        self._append(self.miner, "GENESIS", {"miner": self.miner, "policy": asdict(self.policy)})

    # -- identity -------------------------------------------------------

    def _new_address(self, domain: bytes) -> Address:
        while True:
            self._nonce += 1
            digest = hashlib.sha256(b"sharepact/" + domain + self._nonce.to_bytes(8, "big")).digest()
            addr = Address(digest[-20:])
            if addr not in self._accounts:
                return addr

    def create_account(
        self, initial_balance: int = 0, role: Role | str = Role.REQUESTER, public_key: bytes | None = None
    ) -> Address:
        """Register a new account.

        With ``public_key`` the address is derived from the key, which lets a
        signature be tied to an address without a key directory.
        """
        role = Role(role)
        _check_wei(initial_balance)
        with self.atomic():
            if public_key is not None:
                addr = Address.from_public_key(public_key)
                if addr in self._accounts:
                    raise ValueError(f"address {addr} already registered")
            else:
                addr = self._new_address(b"account")
            self._accounts[addr] = Account(addr, initial_balance, role)
            self.minted += initial_balance
            self._append(addr, "CREATION", {"address": addr, "balance": initial_balance, "role": role})
        return addr

    def exists(self, addr: Address) -> bool:
        return addr in self._accounts

    def balance(self, addr: Address) -> int:
        return self._account(addr).balance

    def role(self, addr: Address) -> Role:
        return self._account(addr).role

    def accounts(self) -> list[Account]:
        return list(self._accounts.values())

    def total_balance(self) -> int:
        return sum(a.balance for a in self._accounts.values())

    def _account(self, addr: Address) -> Account:
        try:
            return self._accounts[addr]
        except KeyError:
            raise UnknownAddress(str(addr)) from None

    # -- atomicity ------------------------------------------------------

    @contextmanager
    def atomic(self) -> Iterator[None]:
        """Run a block as one transaction; roll back on any exception.

        OutOfGas is the exception: its gas charge stands, as on a real chain.
        """
        with self._lock:
            snap = self._snapshot()
            self._depth += 1
            try:
                yield
            except OutOfGas:
                raise
            except BaseException:
                self._restore(snap)
                raise
            finally:
                self._depth -= 1

    def _snapshot(self) -> _Snapshot:
        snap = _Snapshot()
        snap.balances = {a: acc.balance for a, acc in self._accounts.items()}
        snap.live = {a: c.live for a, c in self._contracts.items()}
        snap.n_events = len(self._events)
        snap.counters = (self.minted, self._nonce)
        snap.expiry = dict(self._expiry)
        return snap

    def _restore(self, snap: _Snapshot) -> None:
        for addr in [a for a in self._accounts if a not in snap.balances]:
            del self._accounts[addr]
            self._contracts.pop(addr, None)
        for addr, bal in snap.balances.items():
            self._accounts[addr].balance = bal
        for addr, live in snap.live.items():
            self._contracts[addr].live = live
        del self._events[snap.n_events:]
        self.minted, self._nonce = snap.counters
        self._expiry = snap.expiry

    # -- value movement -------------------------------------------------

    def _debit(self, addr: Address, amount: int) -> None:
        acc = self._account(addr)
        if amount > acc.balance:
            raise InsufficientBalance(f"{addr} holds {acc.balance} wei, needs {amount}")
        acc.balance -= amount

    def _credit(self, addr: Address, amount: int) -> None:
        acc = self._account(addr)
        if acc.balance + amount > MAX_WEI:
            raise WeiOverflow(f"credit to {addr} overflows")
        acc.balance += amount

    def _require_target(self, addr: Address) -> None:
        self._account(addr)
        rec = self._contracts.get(addr)
        if rec is not None and not rec.live:
            raise AlreadyDestroyed(str(addr))

    def transfer(self, src: Address, dst: Address, amount: int) -> Receipt:
        _check_wei(amount)
        gas = self.policy.transfer_gas
        fee = self.policy.fee(gas)
        with self.atomic():
            self._require_target(src)
            self._require_target(dst)
            if self.balance(src) < amount + fee:
                raise InsufficientBalance(f"{src} cannot cover {amount} + gas {fee}")
            self._debit(src, amount + fee)
            self._credit(dst, amount)
            self._credit(self.miner, fee)
            rec = self._append(src, "TRANSFER", {"from": src, "to": dst, "amount": amount, "gas": gas, "fee": fee})
        return Receipt(gas, fee, (rec.seq,))

    def call(
        self, caller: Address, contract: Address, method: str, value: int = 0, gas: int | None = None
    ) -> Receipt:
        """Charge ``caller`` for a contract call, optionally sending value."""
        _check_wei(value)
        gas = self.policy.flat_call_gas if gas is None else gas
        fee = self.policy.fee(gas)
        with self.atomic():
            self._account(caller)
            self.require_live(contract)
            if self.balance(caller) < value + fee:
                raise InsufficientBalance(f"{caller} cannot cover {value} + gas {fee}")
            self._debit(caller, value + fee)
            self._credit(contract, value)
            self._credit(self.miner, fee)
            rec = self._append(
                caller,
                "CALL",
                {"caller": caller, "contract": contract, "method": method, "value": value, "gas": gas, "fee": fee},
            )
        return Receipt(gas, fee, (rec.seq,))

    def charge_gas(self, payer: Address, gas: int, reason: str, cap: int | None = None) -> Receipt:
        """Charge ``gas`` to ``payer``; with ``cap`` the fee is limited to that many wei."""
        fee = self.policy.fee(gas)
        if cap is not None:
            fee = min(fee, cap)
        with self.atomic():
            self._debit(payer, fee)
            self._credit(self.miner, fee)
            rec = self._append(payer, "GAS", {"payer": payer, "gas": gas, "fee": fee, "reason": reason})
        return Receipt(gas, fee, (rec.seq,))

    def payout(self, contract: Address, dst: Address, amount: int, reason: str) -> Receipt:
        """Move value out of a live contract without charging gas."""
        _check_wei(amount)
        with self.atomic():
            self.require_live(contract)
            self._require_target(dst)
            self._debit(contract, amount)
            self._credit(dst, amount)
            rec = self._append(contract, "PAYOUT", {"contract": contract, "to": dst, "amount": amount, "reason": reason})
        return Receipt(0, 0, (rec.seq,))

    # -- contracts ------------------------------------------------------

    def deploy_contract(self, owner: Address, kind: str, declared_gas: int, gas_limit: int | None = None) -> Address:
        gas_limit = declared_gas if gas_limit is None else gas_limit
        with self._lock:
            self._account(owner)
            if gas_limit > self.policy.block_gas_limit:
                raise BlockGasLimitExceeded(
                    f"gas limit {gas_limit} above block gas limit {self.policy.block_gas_limit}"
                )
            if self.balance(owner) < self.policy.fee(gas_limit):
                raise InsufficientBalance(f"{owner} cannot fund gas limit {gas_limit}")
            if declared_gas > gas_limit:
                with self.atomic():
                    fee = self.policy.fee(gas_limit)
                    self._debit(owner, fee)
                    self._credit(self.miner, fee)
                    self._append(owner, "OUT_OF_GAS", {"owner": owner, "kind": kind, "gas": gas_limit, "fee": fee})
                raise OutOfGas(f"{kind} needs {declared_gas} gas, limit was {gas_limit}")
            with self.atomic():
                addr = self._new_address(b"contract" + owner.raw)
                fee = self.policy.fee(declared_gas)
                self._debit(owner, fee)
                self._credit(self.miner, fee)
                self._accounts[addr] = Account(addr, 0, Role.CONTRACT)
                self._contracts[addr] = ContractRecord(addr, kind, owner, self.now, declared_gas)
                self._append(owner, "DEPLOY", {"owner": owner, "contract": addr, "kind": kind, "gas": declared_gas, "fee": fee})
        return addr

    def contract(self, addr: Address) -> ContractRecord:
        try:
            return self._contracts[addr]
        except KeyError:
            raise UnknownContract(str(addr)) from None

    def contracts(self) -> list[ContractRecord]:
        return list(self._contracts.values())

    def require_live(self, addr: Address) -> ContractRecord:
        rec = self.contract(addr)
        if not rec.live:
            raise AlreadyDestroyed(str(addr))
        return rec

    def self_destruct(self, contract: Address, refunds: Sequence[tuple[Address, int]]) -> Receipt:
        with self.atomic():
            self.require_live(contract)
            escrow = self.balance(contract)
            total = 0
            for dst, amount in refunds:
                _check_wei(amount)
                self._account(dst)
                total += amount
            if total != escrow:
                raise RefundMismatch(f"refunds total {total}, escrow holds {escrow}")
            for dst, amount in refunds:
                self._debit(contract, amount)
                self._credit(dst, amount)
            self._contracts[contract].live = False
            self._expiry.pop(contract, None)
            rec = self._append(
                contract, "DESTRUCT", {"contract": contract, "refunds": [[dst, amount] for dst, amount in refunds]}
            )
        return Receipt(0, 0, (rec.seq,))

    # -- time -----------------------------------------------------------

    def advance_time(self, delta: int) -> int:
        if not isinstance(delta, int) or delta < 0:
            raise ValueError("delta must be a non-negative integer")
        with self._lock:
            self.now += delta
        return self.now

    def watch_expiry(self, contract: Address, expires_at: int) -> None:
        with self._lock:
            self._expiry[contract] = expires_at

    def due_for_expiry(self) -> list[Address]:
        """Live contracts whose expiry time has been reached."""
        return [a for a, t in sorted(self._expiry.items(), key=lambda kv: (kv[1], kv[0])) if t <= self.now]

    # -- event log ------------------------------------------------------

    def _append(self, emitter: Address, kind: str, payload: Mapping[str, Any]) -> EventRecord:
        body = plain(dict(payload))
        prev = self._events[-1].this_hash if self._events else ZERO_HASH
        seq = len(self._events)
        rec = EventRecord(seq, self.now, emitter.hex, kind, body, prev, record_hash(seq, self.now, emitter.hex, kind, body, prev))
        self._events.append(rec)
        return rec

    def append_event(self, emitter: Address, kind: str, payload: Mapping[str, Any]) -> EventRecord:
        with self.atomic():
            self._account(emitter)
            return self._append(emitter, kind, payload)

    @property
    def events(self) -> tuple[EventRecord, ...]:
        return tuple(self._events)

    @property
    def head(self) -> str:
        return self._events[-1].this_hash

    def query_log(
        self,
        *,
        emitter: Address | None = None,
        kind: str | Iterable[str] | None = None,
        contract: Address | None = None,
        since: int | None = None,
        until: int | None = None,
    ) -> list[EventRecord]:
        kinds = {kind} if isinstance(kind, str) else set(kind) if kind is not None else None
        out = []
        for rec in self._events:
            if emitter is not None and rec.emitter != emitter.hex:
                continue
            if kinds is not None and rec.kind not in kinds:
                continue
            if contract is not None and contract.hex not in (rec.emitter, rec.payload.get("contract")):
                continue
            if since is not None and rec.logical_time < since:
                continue
            if until is not None and rec.logical_time > until:
                continue
            out.append(rec)
        return out

    def verify_chain(self) -> int:
        return verify_records(self._events)

    def export_jsonl(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            for rec in self._events:
                fh.write(rec.to_json_line() + "\n")
        return path


def _check_wei(amount: int) -> None:
    if not isinstance(amount, int) or isinstance(amount, bool):
        raise TypeError("wei amounts are integers")
    if amount < 0:
        raise ValueError("wei amounts are non-negative")
    if amount > MAX_WEI:
        raise WeiOverflow(f"{amount} exceeds 2**256 - 1")
