"""Layered envelope for one-time data delivery.

Algorithms: SHA-256 for data digests, AES-256-GCM with explicit 12-byte
nonces for symmetric sealing, X25519 + HKDF-SHA256 + AES-256-GCM for
public-key encryption, Ed25519 for signatures.

Wire formats (all integers big-endian)::

    sealed     = nonce(12) || aes_gcm_ciphertext
    public_ct  = ephemeral_x25519_pub(32) || nonce(12) || aes_gcm_ciphertext
    wrapped_key = public_ct(ks) || ed25519_signature(64)

The wrapped-key signature is by the provider over
``b"sharepact/wrap/v1" || public_ct(ks)``, so the requester can check it with
the provider's public key alone before touching its own private key.

Bundle container::

    magic b"SPEB" | version 0x01 |
    u32 len | wrapped_key | u32 len | enc_link | u32 len | data_ct | u32 len | stored_digest

Opening a bundle runs three steps in order: verify the key wrap against the
provider key (SignatureInvalid), decrypt the link with the requester key
(LinkDecryptFailure), decrypt the data with the unwrapped key (AuthFailure).
The plaintext hash is then compared with the stored digest (DigestMismatch).
"""

from __future__ import annotations

import hashlib
import random
import struct
from dataclasses import dataclass
from typing import Callable

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .errors import AuthFailure, BundleFormatError, DigestMismatch, LinkDecryptFailure, SignatureInvalid

MAGIC = b"SPEB"
VERSION = 1
NONCE_LEN = 12
KEY_LEN = 32
SIG_LEN = 64
WRAP_CONTEXT = b"sharepact/wrap/v1"
ECIES_INFO = b"sharepact/ecies/v1"

_RAW = (Encoding.Raw, PublicFormat.Raw)
_system_rng = random.SystemRandom()


def randbytes(rng: random.Random | None, n: int) -> bytes:
    return (rng or _system_rng).randbytes(n)


def hash_data(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


@dataclass(frozen=True)
class PublicKey:
    """Public half of a party's keys: X25519 for encryption, Ed25519 for signing."""

    enc: bytes
    sig: bytes

    def to_bytes(self) -> bytes:
        return self.enc + self.sig

    @classmethod
    def from_bytes(cls, raw: bytes) -> "PublicKey":
        if len(raw) != 64:
            raise ValueError("public key is 64 bytes")
        return cls(raw[:32], raw[32:])

    def verify(self, signature: bytes, message: bytes) -> bool:
        try:
            Ed25519PublicKey.from_public_bytes(self.sig).verify(signature, message)
        except (InvalidSignature, ValueError):
            return False
        return True


class KeyPair:
    def __init__(self, enc_secret: bytes, sig_secret: bytes) -> None:
        self._enc = X25519PrivateKey.from_private_bytes(enc_secret)
        self._sig = Ed25519PrivateKey.from_private_bytes(sig_secret)
        self.public = PublicKey(self._enc.public_key().public_bytes(*_RAW), self._sig.public_key().public_bytes(*_RAW))

    @classmethod
    def generate(cls, rng: random.Random | None = None) -> "KeyPair":
        return cls(randbytes(rng, 32), randbytes(rng, 32))

    def sign(self, message: bytes) -> bytes:
        return self._sig.sign(message)

    def exchange(self, peer_enc: bytes) -> bytes:
        return self._enc.exchange(X25519PublicKey.from_public_bytes(peer_enc))


@dataclass(frozen=True)
class SymmetricKey:
    key: bytes

    def __post_init__(self) -> None:
        if len(self.key) != KEY_LEN:
            raise ValueError("symmetric keys are 32 bytes")

    @classmethod
    def generate(cls, rng: random.Random | None = None) -> "SymmetricKey":
        return cls(randbytes(rng, KEY_LEN))


def ae_encrypt(ks: SymmetricKey, plaintext: bytes, rng: random.Random | None = None) -> bytes:
    nonce = randbytes(rng, NONCE_LEN)
    return nonce + AESGCM(ks.key).encrypt(nonce, plaintext, None)


def ae_decrypt(ks: SymmetricKey, sealed: bytes) -> bytes:
    """Raises AuthFailure on a wrong key or any modified byte."""
    if len(sealed) < NONCE_LEN + 16:
        raise AuthFailure("ciphertext too short")
    try:
        return AESGCM(ks.key).decrypt(sealed[:NONCE_LEN], sealed[NONCE_LEN:], None)
    except InvalidTag:
        raise AuthFailure("authentication tag mismatch") from None


def _ecies_key(shared: bytes, eph_pub: bytes, recipient_enc: bytes) -> bytes:
    hkdf = HKDF(algorithm=hashes.SHA256(), length=KEY_LEN, salt=eph_pub + recipient_enc, info=ECIES_INFO)
    return hkdf.derive(shared)


def public_encrypt(recipient: PublicKey, plaintext: bytes, rng: random.Random | None = None) -> bytes:
    eph = X25519PrivateKey.from_private_bytes(randbytes(rng, 32))
    eph_pub = eph.public_key().public_bytes(*_RAW)
    key = _ecies_key(eph.exchange(X25519PublicKey.from_public_bytes(recipient.enc)), eph_pub, recipient.enc)
    nonce = randbytes(rng, NONCE_LEN)
    return eph_pub + nonce + AESGCM(key).encrypt(nonce, plaintext, None)


def public_decrypt(keys: KeyPair, ct: bytes) -> bytes:
    """Raises ValueError on any failure; callers map it to their pipeline step."""
    if len(ct) < 32 + NONCE_LEN + 16:
        raise ValueError("ciphertext too short")
    eph_pub, nonce, body = ct[:32], ct[32:32 + NONCE_LEN], ct[32 + NONCE_LEN:]
    try:
        shared = keys.exchange(eph_pub)
        key = _ecies_key(shared, eph_pub, keys.public.enc)
        return AESGCM(key).decrypt(nonce, body, None)
    except (InvalidTag, ValueError) as exc:
        raise ValueError(f"public-key decryption failed: {exc}") from None


# -- pipeline operations --------------------------------------------------

def seal_for_cloud(data: bytes, ks: SymmetricKey, rng: random.Random | None = None) -> tuple[bytes, bytes]:
    """Encrypt the data and its digest under the cloud-held key."""
    data_ct = ae_encrypt(ks, data, rng)
    stored_digest = ae_encrypt(ks, hash_data(data), rng)
    if data_ct[:NONCE_LEN] == stored_digest[:NONCE_LEN]:
        raise RuntimeError("nonce reuse under one key")
    return data_ct, stored_digest


def wrap_key_for_requester(
    ks: SymmetricKey, provider: KeyPair, requester_pub: PublicKey, rng: random.Random | None = None
) -> bytes:
    key_ct = public_encrypt(requester_pub, ks.key, rng)
    return key_ct + provider.sign(WRAP_CONTEXT + key_ct)


def verify_wrapped_key(wrapped: bytes, provider_pub: PublicKey) -> bytes:
    """Step 1: check the provider's signature; return the still-encrypted key."""
    if len(wrapped) <= SIG_LEN:
        raise SignatureInvalid("wrapped key too short")
    key_ct, sig = wrapped[:-SIG_LEN], wrapped[-SIG_LEN:]
    if not provider_pub.verify(sig, WRAP_CONTEXT + key_ct):
        raise SignatureInvalid("wrapped key not signed by the expected provider")
    return key_ct


def unwrap_key(wrapped: bytes, provider_pub: PublicKey, requester: KeyPair) -> SymmetricKey:
    key_ct = verify_wrapped_key(wrapped, provider_pub)
    try:
        return SymmetricKey(public_decrypt(requester, key_ct))
    except ValueError:
        raise SignatureInvalid("wrapped key does not open for this requester") from None


def encrypt_link(link_id: bytes, requester_pub: PublicKey, rng: random.Random | None = None) -> bytes:
    return public_encrypt(requester_pub, link_id, rng)


def decrypt_link(enc_link: bytes, requester: KeyPair) -> bytes:
    try:
        return public_decrypt(requester, enc_link)
    except ValueError:
        raise LinkDecryptFailure("link does not decrypt under this requester key") from None


@dataclass(frozen=True)
class EnvelopeBundle:
    wrapped_key: bytes
    enc_link: bytes
    data_ct: bytes = b""
    stored_digest: bytes = b""

    @property
    def has_payload(self) -> bool:
        return bool(self.data_ct) and bool(self.stored_digest)

    def with_payload(self, data_ct: bytes, stored_digest: bytes) -> "EnvelopeBundle":
        return EnvelopeBundle(self.wrapped_key, self.enc_link, data_ct, stored_digest)

    def sections(self) -> tuple[bytes, bytes, bytes, bytes]:
        return (self.wrapped_key, self.enc_link, self.data_ct, self.stored_digest)

    def to_bytes(self) -> bytes:
        out = [MAGIC, bytes([VERSION])]
        for section in self.sections():
            out.append(struct.pack(">I", len(section)))
            out.append(section)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "EnvelopeBundle":
        if raw[:4] != MAGIC:
            raise BundleFormatError("bad magic")
        if raw[4:5] != bytes([VERSION]):
            raise BundleFormatError("unsupported version")
        pos = 5
        sections = []
        for _ in range(4):
            if pos + 4 > len(raw):
                raise BundleFormatError("truncated length prefix")
            (n,) = struct.unpack_from(">I", raw, pos)
            pos += 4
            if pos + n > len(raw):
                raise BundleFormatError("truncated section")
            sections.append(raw[pos:pos + n])
            pos += n
        if pos != len(raw):
            raise BundleFormatError("trailing bytes")
        return cls(*sections)

    def digest(self) -> bytes:
        return hash_data(self.to_bytes())


def build_bundle(
    data: bytes,
    link_id: bytes,
    ks: SymmetricKey,
    provider: KeyPair,
    requester_pub: PublicKey,
    rng: random.Random | None = None,
) -> EnvelopeBundle:
    data_ct, stored_digest = seal_for_cloud(data, ks, rng)
    return EnvelopeBundle(
        wrap_key_for_requester(ks, provider, requester_pub, rng),
        encrypt_link(link_id, requester_pub, rng),
        data_ct,
        stored_digest,
    )


def open_pipeline(
    bundle: EnvelopeBundle,
    requester: KeyPair,
    provider_pub: PublicKey,
    fetch: Callable[[bytes], tuple[bytes, bytes]] | None = None,
) -> bytes:
    """Run the requester's three decryption steps and the integrity check.

    When the bundle carries no ciphertext yet, ``fetch`` is called with the
    decrypted link id (the "click") and must return ``(data_ct, stored_digest)``.
    """
    key_ct = verify_wrapped_key(bundle.wrapped_key, provider_pub)
    link_id = decrypt_link(bundle.enc_link, requester)
    try:
        ks = SymmetricKey(public_decrypt(requester, key_ct))
    except ValueError:
        raise SignatureInvalid("wrapped key does not open for this requester") from None
    data_ct, stored_digest = bundle.data_ct, bundle.stored_digest
    if not bundle.has_payload:
        if fetch is None:
            raise AuthFailure("bundle has no ciphertext and no fetch was given")
        data_ct, stored_digest = fetch(link_id)
    data = ae_decrypt(ks, data_ct)
    expected = ae_decrypt(ks, stored_digest)
    if hash_data(data) != expected:
        raise DigestMismatch("data does not match the stored digest")
    return data
