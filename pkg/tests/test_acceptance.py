"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``AC<n> PASS|FAIL`` line; the lines are also repeated
in the pytest terminal summary. Run directly with ``python3
tests/test_acceptance.py`` for just those lines.
"""

from __future__ import annotations

import contextlib
import itertools
import random
import threading
import time
from fractions import Fraction

import pytest

from sharepact import cryptopipe as cp
from sharepact.cloudnode import LinkState
from sharepact.congress import Ballot, CongressFactory, Outcome, VoteContract, congress_deploy_gas
from sharepact.datashare import TRANSITIONS, ContractFactory
from sharepact.errors import (
    AuthFailure,
    BlockGasLimitExceeded,
    ChainInvalid,
    LinkDecryptFailure,
    LinkExpired,
    OutOfGas,
    SharePactError,
    SignatureInvalid,
    UnknownLink,
)
from sharepact.experiments import LatencyModel, gas_sweep
from sharepact.ledger import Ledger, verify_jsonl, verify_log_file
from sharepact.negotiation import accept, propose
from sharepact.scenario import bundled_scenarios, load_scenario, run_scenario
from support import make_world

RESULTS: dict[int, str] = {}


@contextlib.contextmanager
def criterion(n: int, title: str):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        line = f"AC{n} FAIL {title}: {type(exc).__name__}: {exc}"
        RESULTS[n] = line
        print(line)
        raise
    line = f"AC{n} PASS {title} ({time.perf_counter() - start:.2f}s)"
    RESULTS[n] = line
    print(line)


# -- 1 -----------------------------------------------------------------------

def test_ac1_gas_model_fidelity():
    with criterion(1, "gas sweep endpoints, monotone constant slope, < 1 s"):
        start = time.perf_counter()
        ds = [r.gas for r in gas_sweep("datashare", (1, 10), 5)]
        cg = [r.gas for r in gas_sweep("congress", (1, 10), 5)]
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, elapsed
        assert ds[0] == 1549929 and abs(ds[-1] - 1745750) <= 1
        assert cg[0] == 2181014 and cg[-1] == 2183669
        for col in (ds, cg):
            steps = [b - a for a, b in zip(col, col[1:])]
            assert all(s > 0 for s in steps)
            assert max(steps) - min(steps) <= 1
        assert len({b - a for a, b in zip(cg, cg[1:])}) == 1


# -- 2 -----------------------------------------------------------------------

def test_ac2_factory_split():
    with criterion(2, "combined factory refused, split factories deploy"):
        for limit in (4712389, 5_000_000, 5961704, 10_000_000):
            ledger = Ledger()
            owner = ledger.create_account(20_000_000, "provider")
            with pytest.raises(BlockGasLimitExceeded):
                ledger.deploy_contract(owner, "CombinedFactory", 5961704, limit)
            assert ledger.balance(owner) == 20_000_000
        ledger = Ledger()
        owner = ledger.create_account(20_000_000, "provider")
        with pytest.raises(OutOfGas):
            ledger.deploy_contract(owner, "CombinedFactory", 5961704, 4712388)
        ledger.deploy_contract(owner, "ContractFactory", 3047711, 3047711)
        ledger.deploy_contract(owner, "CongressFactory", 2913993, 2913993)
        run = run_scenario("factory_split")
        assert run.ok, run.checks


# -- 3 -----------------------------------------------------------------------

def test_ac3_latency_envelope():
    with criterion(3, "1000 seeded latency samples per kind inside the envelope"):
        model = LatencyModel()
        for kind, (lo, hi) in (("datashare", (20, 50)), ("congress", (25, 40))):
            samples = model.samples(kind, 1000, seed=2024)
            assert len(samples) == 1000
            assert all(lo <= s <= hi for s in samples)
            assert samples == model.samples(kind, 1000, seed=2024)


# -- 4 -----------------------------------------------------------------------

def test_ac4_happy_path_settlement():
    with criterion(4, "happy path settles to the committed balance sheet"):
        run = run_scenario("happy_path")
        assert run.ok, [c for c in run.checks if not c["ok"]]
        rep = run.report["balances"]
        contract = run.contracts["c1"]
        payment = contract.terms.payment
        # gas the contract paid out of the requester's gas money
        contract_gas = sum(r.payload["fee"] for r in run.ledger.query_log(kind="GAS")
                           if r.payload["payer"] == contract.address.hex)
        assert rep["bob"]["delta"] == payment - rep["bob"]["gas_spent"]
        assert rep["alice"]["delta"] == -(payment + rep["alice"]["gas_spent"] + contract_gas)
        refunds = dict(run.ledger.query_log(kind="CLOSED")[0].payload["refunds"])
        terms = contract.terms
        assert refunds[terms.provider_address.hex] == terms.provider_deposit
        assert refunds[terms.requester_address.hex] == terms.requester_deposit + terms.gas_money - contract_gas
        assert run.report["total_initial"] == run.report["total_final"]
        assert run.ledger.total_balance() == run.ledger.minted


# -- 5 -----------------------------------------------------------------------

def _prefix(name: str, op: str):
    """Runs of ``name`` stopping just before and just after its first ``op`` step."""
    doc, base = load_scenario(name)
    i = next(k for k, s in enumerate(doc["steps"]) if s["op"] == op)
    before = run_scenario(dict(doc, steps=doc["steps"][:i]), base_dir=base)
    after = run_scenario(dict(doc, steps=doc["steps"][:i + 1]), base_dir=base)
    assert before.halted is None and after.halted is None
    return before, after


def _bal(run, name):
    return run.ledger.balance(run.address_of(name))


def _spent(run, name):
    return run.report["balances"][name]["gas_spent"]


def test_ac5_penalty_semantics():
    with criterion(5, "confirmed breach pays both deposits; false accusation costs only vote gas"):
        full = run_scenario("breach_tampered")
        assert full.ok
        terms = full.contracts["c1"].terms
        before, after = _prefix("breach_tampered", "execute")
        gain = _bal(after, "alice") - _bal(before, "alice")
        own_gas = _spent(after, "alice") - _spent(before, "alice")
        assert gain == terms.requester_deposit + terms.provider_deposit - own_gas
        assert full.votes["v1"].decision.outcome is Outcome.BREACH_CONFIRMED
        refunds = dict(full.ledger.query_log(kind="CLOSED")[0].payload["refunds"])
        assert refunds[terms.provider_address.hex] == 0

        false = run_scenario("false_accusation")
        assert false.ok
        doc, base = load_scenario("false_accusation")
        steps = doc["steps"]
        i = next(k for k, s in enumerate(steps) if s["op"] == "raise_breach")
        j = next(k for k, s in enumerate(steps) if s["op"] == "execute")
        pre = run_scenario(dict(doc, steps=steps[:i]), base_dir=base)
        post = run_scenario(dict(doc, steps=steps[:j + 1]), base_dir=base)
        assert post.votes["v1"].decision.outcome is Outcome.NO_BREACH
        c_pre, c_post = pre.contracts["c1"], post.contracts["c1"]
        assert _bal(pre, "c1") == _bal(post, "c1")
        assert c_pre.escrow == c_post.escrow
        assert _bal(pre, "bob") == _bal(post, "bob")
        assert _bal(pre, "alice") - _bal(post, "alice") == congress_deploy_gas(len(terms.voter_list))


# -- 6 -----------------------------------------------------------------------

def _oracle(ballots: tuple[str, ...], quorum: int, margin_pct: int) -> bool:
    yes = no = 0
    for b in ballots:
        if b == "Y":
            yes += 1
        elif b == "N":
            no += 1
    cast = yes + no
    if cast < quorum:
        return False
    return yes * 100 > margin_pct * cast


def test_ac6_tally_oracle():
    with criterion(6, "exhaustive tally vs counting oracle, panels 1-5"):
        start = time.perf_counter()
        ledger = Ledger()
        congress = CongressFactory(ledger)
        host = ledger.create_account(0, "contract")
        accuser, accused = ledger.create_account(0, "requester"), ledger.create_account(0, "provider")
        arbiters = [ledger.create_account(0, "arbiter") for _ in range(5)]
        mismatches = checked = 0
        for n in range(1, 6):
            panel = tuple(arbiters[:n])
            for combo in itertools.product("YN-", repeat=n):
                ballots = {a: ("Yes" if b == "Y" else "No") for a, b in zip(panel, combo) if b != "-"}
                for quorum in range(1, n + 1):
                    for pct in (25, 50, 75):
                        vote = VoteContract(host, host, accuser, accused, panel, ledger.now, 0, "", ledger.now)
                        vote.ballots = {a: Ballot(b) for a, b in ballots.items()}
                        got = congress.tally(vote, quorum, Fraction(pct, 100)).confirmed
                        mismatches += got != _oracle(combo, quorum, pct)
                        checked += 1
        assert checked == 3 * sum(3**n * n for n in range(1, 6))
        assert mismatches == 0
        assert time.perf_counter() - start < 10


# -- 7 -----------------------------------------------------------------------

def test_ac7_one_time_link():
    with criterion(7, "100 concurrent interleavings, exactly one fetch wins"):
        world = make_world(seed=7)
        handle = world.cloud.store_data(world.bob.address, b"rows")
        rng = random.Random(77)
        for _ in range(100):
            link, _ = world.cloud.prepare_link(world.bob.address, handle.handle_id, world.alice.public,
                                               world.bob.keys)
            n = rng.randint(2, 8)
            ids = [link.link_id if rng.random() < 0.8 else rng.randbytes(16).hex() for _ in range(n)]
            ids[rng.randrange(n)] = link.link_id
            delays = [rng.random() * 0.002 for _ in range(n)]
            barrier = threading.Barrier(n)
            outcomes: list[str] = [""] * n

            def worker(k: int) -> None:
                barrier.wait()
                time.sleep(delays[k])
                try:
                    world.cloud.fetch(ids[k])
                    outcomes[k] = "ok"
                except (LinkExpired, UnknownLink) as exc:
                    outcomes[k] = type(exc).__name__

            threads = [threading.Thread(target=worker, args=(k,)) for k in range(n)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            assert outcomes.count("ok") == 1, outcomes
            assert set(outcomes) <= {"ok", "LinkExpired", "UnknownLink"}
            assert world.cloud.link_state(link.link_id) is LinkState.CONSUMED


# -- 8 -----------------------------------------------------------------------

STAGE_ERRORS = {
    "wrapped_key": SignatureInvalid,   # step 1: provider signature
    "enc_link": LinkDecryptFailure,    # step 2: link decryption
    "data_ct": AuthFailure,            # step 3: data decryption
    "stored_digest": AuthFailure,      # step 3: digest decryption under the same key
}


def test_ac8_crypto_pipeline():
    with criterion(8, "1000 payload round trips, per-stage corruption detection"):
        rng = random.Random(8)
        provider, requester = cp.KeyPair.generate(rng), cp.KeyPair.generate(rng)
        detected = {k: 0 for k in STAGE_ERRORS}
        for i in range(1000):
            size = rng.choice([0, 1, rng.randrange(65536 + 1)])
            data = rng.randbytes(size)
            ks = cp.SymmetricKey.generate(rng)
            bundle = cp.build_bundle(data, rng.randbytes(16), ks, provider, requester.public, rng)
            wire = cp.EnvelopeBundle.from_bytes(bundle.to_bytes())
            assert cp.open_pipeline(wire, requester, provider.public) == data
            for section, err in STAGE_ERRORS.items():
                blob = bytearray(getattr(bundle, section))
                blob[rng.randrange(len(blob))] ^= 1 << rng.randrange(8)
                fields = {f: getattr(bundle, f) for f in STAGE_ERRORS}
                fields[section] = bytes(blob)
                with pytest.raises(err):
                    cp.open_pipeline(cp.EnvelopeBundle(**fields), requester, provider.public)
                detected[section] += 1
        assert detected == {k: 1000 for k in STAGE_ERRORS}


# -- 9 -----------------------------------------------------------------------

def test_ac9_audit_trail(tmp_path):
    with criterion(9, "verify-log accepts exports, catches every single flipped byte"):
        rng = random.Random(9)
        for name in sorted(bundled_scenarios()):
            run = run_scenario(name)
            path = run.ledger.export_jsonl(tmp_path / f"{name}.jsonl")
            raw = path.read_bytes()
            lines = raw[:-1].split(b"\n")
            assert verify_jsonl(lines) == len(run.ledger.events)
            starts = [0]
            for line in lines:
                starts.append(starts[-1] + len(line) + 1)
            # every byte of the happy-path log, a random sample elsewhere
            positions = range(len(raw)) if name == "happy_path" else rng.sample(range(len(raw)), 300)
            bad_path = tmp_path / "flipped.jsonl"
            for pos in positions:
                bad = bytearray(raw)
                bad[pos] ^= 1 << rng.randrange(8)
                bad_path.write_bytes(bytes(bad))
                record = max(k for k, s in enumerate(starts[:-1]) if s <= pos)
                with pytest.raises(ChainInvalid) as exc:
                    verify_log_file(bad_path)
                assert exc.value.index == record, (name, pos)


# -- 10 ----------------------------------------------------------------------

class StubCloud:
    """Link oracle whose retrieval state is chosen by the test."""

    def __init__(self) -> None:
        self.state = LinkState.FRESH

    def bundle_link_state(self, bundle_digest):
        return self.state

    def link_for_bundle(self, bundle_digest):
        return self

    @property
    def link_id(self):
        return "stub"

    def revoke(self, link_id):
        self.state = LinkState.REVOKED


def test_ac10_state_machine_safety():
    with criterion(10, "10000 random call sequences keep the state machine safe"):
        base = make_world(seed=10)
        sealed = accept(base.bob, propose(base.alice, base.terms()))
        alice, bob, arbiters = base.alice, base.bob, base.arbiters
        keys = [(p.public.to_bytes(), role) for p, role in
                [(alice, "requester"), (bob, "provider")] + [(a, "arbiter") for a in arbiters]]
        bundle = cp.EnvelopeBundle(b"k", b"l")
        declared = {(a, b) for a, targets in TRANSITIONS.items() for b in targets}
        rng = random.Random(1010)
        stats = {"ok": 0, "err": 0}
        for _ in range(10_000):
            ledger = Ledger()
            for pub, role in keys:
                ledger.create_account(5_000_000, role, public_key=pub)
            cloud = StubCloud()
            factory = ContractFactory(ledger, CongressFactory(ledger), cloud)
            c = factory.create(sealed, sealed.terms.deposit_total)
            votes = []
            for _ in range(rng.randint(1, 14)):
                op = rng.randrange(11)
                try:
                    if op == 0:
                        c.provider_deposit(rng.choice([bob, alice]).address,
                                           rng.choice([50_000, 50_000, 49_999]))
                    elif op == 1:
                        c.deliver_link(rng.choice([bob, bob, alice]).address, bundle)
                    elif op == 2:
                        cloud.state = rng.choice([LinkState.FRESH, LinkState.CONSUMED])
                        c.confirm_retrieval(rng.choice([alice, alice, bob]).address)
                    elif op == 3:
                        msg = c.destroy_message()
                        c.mutual_destroy(alice.sign(msg), bob.sign(msg) if rng.random() < 0.8 else None)
                    elif op == 4:
                        c.expire()
                    elif op == 5:
                        votes.append(c.raise_breach(rng.choice([alice, bob, arbiters[0]]).address, "x",
                                                    rng.choice([None, 0, 10**6])))
                    elif op == 6 and votes:
                        factory.congress.cast_vote(votes[-1], rng.choice(arbiters).address,
                                                   rng.choice(["Yes", "No"]))
                    elif op == 7:
                        ledger.advance_time(rng.choice([60, 3600, 86400]))
                    elif op == 8 and votes:
                        factory.congress.tally(votes[-1], c.terms.quorum, c.terms.voting_margin)
                    elif op == 9 and votes:
                        factory.congress.execute_decision(votes[-1], c, close_parent=rng.random() < 0.5)
                    elif op == 10:
                        cloud.state = LinkState.CONSUMED
                    stats["ok"] += 1
                except SharePactError:
                    stats["err"] += 1
                e = c.escrow
                assert min(e.payment, e.requester_deposit, e.gas_money, e.provider_deposit) >= 0
                assert e.total == ledger.balance(c.address)
                assert ledger.total_balance() == ledger.minted
            assert set(c.transitions) <= declared
        assert stats["ok"] and stats["err"]


def pytest_terminal_lines() -> list[str]:
    return [RESULTS[k] for k in sorted(RESULTS)]


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
