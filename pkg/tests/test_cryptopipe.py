from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from sharepact import cryptopipe as cp
from sharepact.errors import AuthFailure, BundleFormatError, DigestMismatch, LinkDecryptFailure, SignatureInvalid


@pytest.fixture
def keys():
    rng = random.Random(5)
    return rng, cp.KeyPair.generate(rng), cp.KeyPair.generate(rng), cp.SymmetricKey.generate(rng)


def test_hash_vectors():
    assert cp.hash_data(b"").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert cp.hash_data(b"abc") == cp.hash_data(b"abc")
    assert cp.hash_data(b"abc") != cp.hash_data(b"abd")


def test_seal_round_trip_and_rejections(keys):
    rng, _, _, ks = keys
    data_ct, digest_ct = cp.seal_for_cloud(b"payload", ks, rng)
    assert cp.ae_decrypt(ks, data_ct) == b"payload"
    assert cp.ae_decrypt(ks, digest_ct) == cp.hash_data(b"payload")
    with pytest.raises(AuthFailure):
        cp.ae_decrypt(cp.SymmetricKey.generate(rng), data_ct)
    flipped = bytearray(data_ct)
    flipped[-1] ^= 1
    with pytest.raises(AuthFailure):
        cp.ae_decrypt(ks, bytes(flipped))


def test_wrap_unwrap(keys):
    rng, provider, requester, ks = keys
    wrapped = cp.wrap_key_for_requester(ks, provider, requester.public, rng)
    assert cp.unwrap_key(wrapped, provider.public, requester) == ks
    with pytest.raises(SignatureInvalid):
        cp.unwrap_key(wrapped, cp.KeyPair.generate(rng).public, requester)
    tampered = bytearray(wrapped)
    tampered[10] ^= 0x40
    with pytest.raises(SignatureInvalid):
        cp.unwrap_key(bytes(tampered), provider.public, requester)


def test_public_key_serialization(keys):
    _, provider, _, _ = keys
    raw = provider.public.to_bytes()
    assert len(raw) == 64
    assert cp.PublicKey.from_bytes(raw) == provider.public


def _bundle(keys, data=b"rows"):
    rng, provider, requester, ks = keys
    return cp.build_bundle(data, b"\x11" * 16, ks, provider, requester.public, rng)


def test_open_pipeline_round_trip(keys):
    _, provider, requester, _ = keys
    assert cp.open_pipeline(_bundle(keys), requester, provider.public) == b"rows"


def test_substituted_ciphertext_is_digest_mismatch(keys):
    rng, provider, requester, ks = keys
    bundle = _bundle(keys)
    forged = bundle.with_payload(cp.ae_encrypt(ks, b"other rows", rng), bundle.stored_digest)
    with pytest.raises(DigestMismatch):
        cp.open_pipeline(forged, requester, provider.public)


def test_wrong_requester_is_link_failure(keys):
    rng, provider, _, _ = keys
    with pytest.raises(LinkDecryptFailure):
        cp.open_pipeline(_bundle(keys), cp.KeyPair.generate(rng), provider.public)


def test_wrong_provider_is_signature_failure(keys):
    rng, _, requester, _ = keys
    with pytest.raises(SignatureInvalid):
        cp.open_pipeline(_bundle(keys), requester, cp.KeyPair.generate(rng).public)


def test_fetch_is_called_only_without_payload(keys):
    rng, provider, requester, ks = keys
    full = _bundle(keys)
    calls = []

    def fetch(link_id):
        calls.append(link_id)
        return full.data_ct, full.stored_digest

    bare = cp.EnvelopeBundle(full.wrapped_key, full.enc_link)
    assert cp.open_pipeline(bare, requester, provider.public, fetch) == b"rows"
    assert calls == [b"\x11" * 16]
    with pytest.raises(AuthFailure):
        cp.open_pipeline(bare, requester, provider.public)


def test_container_format(keys):
    bundle = _bundle(keys)
    raw = bundle.to_bytes()
    assert raw[:4] == b"SPEB" and raw[4] == 1
    assert int.from_bytes(raw[5:9], "big") == len(bundle.wrapped_key)
    assert cp.EnvelopeBundle.from_bytes(raw) == bundle
    for bad in (b"XXXX" + raw[4:], raw[:4] + b"\x02" + raw[5:], raw[:-1], raw + b"\x00"):
        with pytest.raises(BundleFormatError):
            cp.EnvelopeBundle.from_bytes(bad)


def test_seeded_keys_are_deterministic():
    a = cp.KeyPair.generate(random.Random(9)).public
    b = cp.KeyPair.generate(random.Random(9)).public
    assert a == b


@settings(max_examples=40, deadline=None)
@given(st.binary(max_size=4096), st.integers(0, 2**32))
def test_round_trip_property(data, seed):
    rng = random.Random(seed)
    provider, requester = cp.KeyPair.generate(rng), cp.KeyPair.generate(rng)
    ks = cp.SymmetricKey.generate(rng)
    bundle = cp.build_bundle(data, rng.randbytes(16), ks, provider, requester.public, rng)
    assert cp.open_pipeline(cp.EnvelopeBundle.from_bytes(bundle.to_bytes()), requester, provider.public) == data
