"""The cloud party: provider directory, ciphertext store and one-time links.

On-disk layout of :meth:`CloudNode.save`::

    registry.json        [{"name", "address", "registered_at"}, ...]
    handles.json         [{"handle_id", "owner", "ks", "created_at"}, ...]
    links.json           [{"link_id", "handle_id", "requester_pub", "state",
                           "issued_at", "bundle_ref"}, ...]
    bundles/<handle_id>.bin   envelope container holding data_ct and stored_digest

Binary values are lowercase hex. Link ids never reach the ledger; events carry
``link_ref = sha256(link_id)`` instead.
"""

from __future__ import annotations

import enum
import hashlib
import json
import random
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from . import cryptopipe as cp
from .errors import LinkExpired, NameTaken, NotOwner, UnknownHandle, UnknownLink, UnknownProvider
from .ledger import Address, Ledger, Role

LINK_ID_LEN = 16


class LinkState(str, enum.Enum):
    FRESH = "Fresh"
    CONSUMED = "Consumed"
    REVOKED = "Revoked"


@dataclass(frozen=True)
class ProviderRecord:
    provider_name: str
    provider_address: Address
    registered_at: int


@dataclass(frozen=True)
class DataHandle:
    handle_id: str
    owner: Address
    data_ct: bytes
    stored_digest: bytes
    ks: cp.SymmetricKey
    created_at: int


@dataclass
class OneTimeLink:
    link_id: str
    handle_id: str
    requester_pub: cp.PublicKey
    state: LinkState
    issued_at: int
    bundle_ref: str = ""

    @property
    def link_ref(self) -> str:
        return link_ref(self.link_id)


def link_ref(link_id: str | bytes) -> str:
    raw = bytes.fromhex(link_id) if isinstance(link_id, str) else link_id
    return hashlib.sha256(raw).hexdigest()


class CloudNode:
    def __init__(self, ledger: Ledger, address: Address | None = None, rng: random.Random | None = None) -> None:
        self.ledger = ledger
        self.address = address if address is not None else ledger.create_account(0, Role.CLOUD)
        self.rng = rng
        self._providers: dict[str, ProviderRecord] = {}
        self._handles: dict[str, DataHandle] = {}
        self._links: dict[str, OneTimeLink] = {}
        self._by_bundle: dict[str, str] = {}
        self._lock = threading.Lock()

    # -- advertising ----------------------------------------------------

    def register_provider(self, name: str, address: Address) -> ProviderRecord:
        with self._lock:
            if name in self._providers:
                raise NameTaken(name)
            self.ledger.balance(address)  # must be a known account
            rec = ProviderRecord(name, address, self.ledger.now)
            self.ledger.append_event(self.address, "REGISTER", {"name": name, "provider": address})
            self._providers[name] = rec
        return rec

    def lookup_provider(self, name: str) -> Address:
        try:
            return self._providers[name].provider_address
        except KeyError:
            raise UnknownProvider(name) from None

    def is_provider(self, address: Address) -> bool:
        return any(r.provider_address == address for r in self._providers.values())

    # -- storage --------------------------------------------------------

    def store_data(self, owner: Address, data: bytes) -> DataHandle:
        """Seal ``data`` under a fresh key. The plaintext is not kept.

        The returned handle carries the key, which is how the owner learns it.
        """
        with self._lock:
            if not self.is_provider(owner):
                raise UnknownProvider(str(owner))
            ks = cp.SymmetricKey.generate(self.rng)
            data_ct, stored_digest = cp.seal_for_cloud(data, ks, self.rng)
            handle_id = _token(self.rng, self._handles)
            handle = DataHandle(handle_id, owner, data_ct, stored_digest, ks, self.ledger.now)
            self.ledger.append_event(self.address, "STORE", {"handle": handle_id, "owner": owner})
            self._handles[handle_id] = handle
        return handle

    def handle(self, handle_id: str) -> DataHandle:
        try:
            return self._handles[handle_id]
        except KeyError:
            raise UnknownHandle(handle_id) from None

    # -- links ----------------------------------------------------------

    def prepare_link(
        self, owner: Address, handle_id: str, requester_pub: cp.PublicKey, provider_keys: cp.KeyPair
    ) -> tuple[OneTimeLink, cp.EnvelopeBundle]:
        """Issue a fresh link and the envelope the provider forwards to the requester.

        The envelope carries the wrapped key and encrypted link; the ciphertext
        itself is served by :meth:`fetch`.
        """
        with self._lock:
            handle = self.handle(handle_id)
            if handle.owner != owner:
                raise NotOwner(f"{owner} does not own handle {handle_id}")
            link_id = _token(self.rng, self._links)
            bundle = cp.EnvelopeBundle(
                cp.wrap_key_for_requester(handle.ks, provider_keys, requester_pub, self.rng),
                cp.encrypt_link(bytes.fromhex(link_id), requester_pub, self.rng),
            )
            link = OneTimeLink(link_id, handle_id, requester_pub, LinkState.FRESH, self.ledger.now, bundle.digest().hex())
            self.ledger.append_event(
                self.address, "LINK_PREPARED", {"handle": handle_id, "link_ref": link.link_ref, "bundle": link.bundle_ref}
            )
            self._links[link_id] = link
            self._by_bundle[link.bundle_ref] = link_id
        return link, bundle

    def fetch(self, link_id: str | bytes) -> tuple[bytes, bytes]:
        """Serve the ciphertext once; the link is consumed atomically."""
        key = link_id.hex() if isinstance(link_id, bytes) else link_id
        with self._lock:
            link = self._links.get(key)
            if link is None:
                raise UnknownLink(key)
            if link.state is not LinkState.FRESH:
                raise LinkExpired(f"link is {link.state.value}")
            handle = self._handles[link.handle_id]
            self.ledger.append_event(self.address, "RETRIEVED", {"link_ref": link.link_ref, "handle": link.handle_id})
            link.state = LinkState.CONSUMED
            return handle.data_ct, handle.stored_digest

    def revoke(self, link_id: str) -> None:
        with self._lock:
            link = self._links.get(link_id)
            if link is None:
                raise UnknownLink(link_id)
            if link.state is not LinkState.FRESH:
                raise LinkExpired(f"link is {link.state.value}")
            self.ledger.append_event(self.address, "LINK_REVOKED", {"link_ref": link.link_ref})
            link.state = LinkState.REVOKED

    def link_state(self, link_id: str) -> LinkState:
        try:
            return self._links[link_id].state
        except KeyError:
            raise UnknownLink(link_id) from None

    def link_for_bundle(self, bundle_digest: bytes | str) -> OneTimeLink:
        ref = bundle_digest.hex() if isinstance(bundle_digest, bytes) else bundle_digest
        try:
            return self._links[self._by_bundle[ref]]
        except KeyError:
            raise UnknownLink(f"no link for bundle {ref}") from None

    def bundle_link_state(self, bundle_digest: bytes | str) -> LinkState:
        return self.link_for_bundle(bundle_digest).state

    def links(self) -> list[OneTimeLink]:
        return list(self._links.values())

    # -- audit ----------------------------------------------------------

    def consumed_refs_from_log(self) -> set[str]:
        return {rec.payload["link_ref"] for rec in self.ledger.query_log(emitter=self.address, kind="RETRIEVED")}

    def audit_store(self, secrets: Iterable[bytes]) -> list[str]:
        """Search every stored byte for the given plaintexts and their digests.

        Returns a description per finding; an empty list means the store
        holds ciphertext only.
        """
        blobs = [(hid, h.data_ct + h.stored_digest) for hid, h in self._handles.items()]
        findings = []
        for secret in secrets:
            needles = {"digest": cp.hash_data(secret)}
            if secret:
                needles["data"] = secret
            for hid, blob in blobs:
                for label, needle in needles.items():
                    if needle in blob:
                        findings.append(f"handle {hid} contains plaintext {label}")
        return findings

    # -- persistence ----------------------------------------------------

    def save(self, directory: str | Path) -> Path:
        root = Path(directory)
        (root / "bundles").mkdir(parents=True, exist_ok=True)
        registry = [
            {"name": r.provider_name, "address": r.provider_address.hex, "registered_at": r.registered_at}
            for r in self._providers.values()
        ]
        handles = []
        for h in self._handles.values():
            handles.append({"handle_id": h.handle_id, "owner": h.owner.hex, "ks": h.ks.key.hex(), "created_at": h.created_at})
            (root / "bundles" / f"{h.handle_id}.bin").write_bytes(
                cp.EnvelopeBundle(b"", b"", h.data_ct, h.stored_digest).to_bytes()
            )
        links = [
            {
                "link_id": l.link_id,
                "handle_id": l.handle_id,
                "requester_pub": l.requester_pub.to_bytes().hex(),
                "state": l.state.value,
                "issued_at": l.issued_at,
                "bundle_ref": l.bundle_ref,
            }
            for l in self._links.values()
        ]
        for name, content in (("registry.json", registry), ("handles.json", handles), ("links.json", links)):
            (root / name).write_text(json.dumps(content, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return root

    @classmethod
    def load(
        cls, directory: str | Path, ledger: Ledger, address: Address, rng: random.Random | None = None
    ) -> "CloudNode":
        root = Path(directory)
        node = cls(ledger, address, rng)
        for r in json.loads((root / "registry.json").read_text(encoding="utf-8")):
            node._providers[r["name"]] = ProviderRecord(r["name"], Address.from_hex(r["address"]), r["registered_at"])
        for h in json.loads((root / "handles.json").read_text(encoding="utf-8")):
            stored = cp.EnvelopeBundle.from_bytes((root / "bundles" / f"{h['handle_id']}.bin").read_bytes())
            node._handles[h["handle_id"]] = DataHandle(
                h["handle_id"],
                Address.from_hex(h["owner"]),
                stored.data_ct,
                stored.stored_digest,
                cp.SymmetricKey(bytes.fromhex(h["ks"])),
                h["created_at"],
            )
        for l in json.loads((root / "links.json").read_text(encoding="utf-8")):
            link = OneTimeLink(
                l["link_id"],
                l["handle_id"],
                cp.PublicKey.from_bytes(bytes.fromhex(l["requester_pub"])),
                LinkState(l["state"]),
                l["issued_at"],
                l["bundle_ref"],
            )
            node._links[link.link_id] = link
            if link.bundle_ref:
                node._by_bundle[link.bundle_ref] = link.link_id
        return node

    def state_dict(self) -> dict:
        """Comparable view of the full store, used to check reloads."""
        return {
            "providers": sorted((r.provider_name, r.provider_address.hex, r.registered_at) for r in self._providers.values()),
            "handles": sorted(
                (h.handle_id, h.owner.hex, h.data_ct.hex(), h.stored_digest.hex(), h.ks.key.hex(), h.created_at)
                for h in self._handles.values()
            ),
            "links": sorted(
                (l.link_id, l.handle_id, l.requester_pub.to_bytes().hex(), l.state.value, l.issued_at, l.bundle_ref)
                for l in self._links.values()
            ),
        }


def _token(rng: random.Random | None, taken: dict) -> str:
    while True:
        token = cp.randbytes(rng, LINK_ID_LEN).hex()
        if token not in taken:
            return token
