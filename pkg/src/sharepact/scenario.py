"""Declarative scenario runner.

A scenario is one JSON document (format in ``docs/scenario_format.md``):
accounts, data payloads and an ordered list of steps. Every random draw
(keys, nonces, link ids, latency samples) comes from the scenario seed, so a
(scenario, seed) pair always yields the same report bytes.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping

from . import cryptopipe as cp
from .cloudnode import CloudNode
from .congress import CongressFactory, VoteContract
from .datashare import ContractFactory, DataShareContract
from .errors import ParseError, SharePactError
from .experiments import LatencyModel
from .ledger import Address, GasPolicy, Ledger, Role, verify_records
from .negotiation import AgreementTerms, Negotiation, Party, SealedTerms, as_fraction, default_gas_money

COMMON = {"op", "expect_error", "note"}
STEPS: dict[str, tuple[set[str], set[str]]] = {
    "deploy": ({"owner", "kind", "declared_gas"}, {"gas_limit", "as"}),
    "transfer": ({"from", "to", "amount"}, set()),
    "register": ({"provider", "name"}, set()),
    "store": ({"provider", "data", "as"}, set()),
    "negotiate": ({"as", "terms", "exchange"}, set()),
    "create_contract": ({"terms", "as"}, {"send"}),
    "provider_deposit": ({"contract"}, {"amount", "by"}),
    "deliver": ({"contract", "handle"}, {"by", "substitute"}),
    "fetch": ({"contract"}, {"by", "as"}),
    "confirm": ({"contract"}, {"by"}),
    "advance_time": ({"seconds"}, set()),
    "raise_breach": ({"contract", "by", "description", "as"}, {"compensation"}),
    "cast_vote": ({"vote", "ballots"}, set()),
    "tally": ({"vote"}, set()),
    "execute": ({"vote"}, {"close_parent"}),
    "mutual_destroy": ({"contract"}, {"signers"}),
    "expire": ({"contract"}, set()),
    "report_violation": ({"by", "contract", "description"}, set()),
    "assert": (
        set(),
        {"balances", "balance_delta", "contracts", "links", "decisions", "fetches", "conservation",
         "chain_valid", "events", "gas_spent"},
    ),
}
TERM_KEYS = {
    "requester", "provider", "provider_name", "payment", "requester_deposit", "provider_deposit", "gas_money",
    "breach_condition", "voters", "quorum", "voting_time", "voting_margin", "contract_lifetime",
    "default_compensation",
}
RESERVED = {"miner", "cloud"}
LATENCY_KIND = {
    "DataShareContract": "datashare",
    "ContractFactory": "datashare",
    "VoteContract": "congress",
    "CongressFactory": "congress",
}


def bundled_scenarios() -> dict[str, Path]:
    root = resources.files("sharepact") / "scenarios"
    return {Path(p.name).stem: Path(str(p)) for p in root.iterdir() if p.name.endswith(".json")}


def resolve_scenario(name_or_path: str | Path) -> Path:
    path = Path(name_or_path)
    if path.exists():
        return path
    bundled = bundled_scenarios()
    if str(name_or_path) in bundled:
        return bundled[str(name_or_path)]
    raise ParseError(f"no scenario file or bundled scenario named {str(name_or_path)!r}")


def load_scenario(path: str | Path) -> tuple[dict, Path]:
    path = resolve_scenario(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{path.name}:{exc.lineno}:{exc.colno}") from None
    validate(doc)
    return doc, path.parent


def validate(doc: Any) -> None:
    """Structural check; every step may only name entities introduced earlier."""
    if not isinstance(doc, dict):
        raise ParseError("scenario must be a JSON object")
    for key in ("seed", "accounts", "steps"):
        if key not in doc:
            raise ParseError(f"missing {key!r}")
    if not isinstance(doc["seed"], int) or not 0 <= doc["seed"] < 2**64:
        raise ParseError("seed must be a 64-bit unsigned integer", "seed")
    accounts = doc["accounts"]
    if not isinstance(accounts, dict):
        raise ParseError("accounts must be an object", "accounts")
    for name, spec in accounts.items():
        if name in RESERVED:
            raise ParseError(f"{name!r} is reserved", f"accounts.{name}")
        try:
            Role(spec.get("role"))
        except (ValueError, AttributeError):
            raise ParseError("bad or missing role", f"accounts.{name}") from None
        if not isinstance(spec.get("balance", 0), int) or spec.get("balance", 0) < 0:
            raise ParseError("balance must be a non-negative integer", f"accounts.{name}")
    data = doc.get("data", {})
    for name, spec in data.items():
        if not isinstance(spec, dict) or len(spec) != 1 or next(iter(spec)) not in ("text", "hex", "file", "random"):
            raise ParseError("data entry needs exactly one of text/hex/file/random", f"data.{name}")
    known = {"account": set(accounts) | RESERVED, "data": set(data)}
    for kind in ("handle", "terms", "contract", "vote", "fetch", "deployment"):
        known[kind] = set()

    def need(kind: str, value: Any, locus: str) -> None:
        if value not in known[kind]:
            raise ParseError(f"unknown {kind} {value!r}", locus)

    if not isinstance(doc["steps"], list):
        raise ParseError("steps must be a list", "steps")
    for i, step in enumerate(doc["steps"]):
        locus = f"steps[{i}]"
        if not isinstance(step, dict) or step.get("op") not in STEPS:
            raise ParseError(f"unknown op {step.get('op') if isinstance(step, dict) else step!r}", locus)
        op = step["op"]
        locus = f"steps[{i}] ({op})"
        required, optional = STEPS[op]
        missing = required - set(step)
        extra = set(step) - required - optional - COMMON
        if missing or extra:
            raise ParseError(f"missing {sorted(missing)} / unexpected {sorted(extra)}", locus)
        for key in ("by", "provider", "owner", "from", "to"):
            if key in step:
                need("account", step[key], locus)
        if "contract" in step:
            need("contract", step["contract"], locus)
        if op in ("tally", "execute", "cast_vote"):
            need("vote", step["vote"], locus)
        if op == "cast_vote":
            for arb in step["ballots"]:
                need("account", arb, locus)
        if op == "store":
            need("data", step["data"], locus)
        if op == "deliver":
            need("handle", step["handle"], locus)
            if "substitute" in step:
                need("data", step["substitute"], locus)
        if op == "create_contract":
            need("terms", step["terms"], locus)
        if op == "negotiate":
            terms = step["terms"]
            bad = set(terms) - TERM_KEYS
            if bad:
                raise ParseError(f"unknown term keys {sorted(bad)}", locus)
            for name in [terms.get("requester"), *terms.get("voters", [])]:
                need("account", name, locus)
            if "provider" in terms:
                need("account", terms["provider"], locus)
            elif "provider_name" not in terms:
                raise ParseError("terms need provider or provider_name", locus)
            for j, move in enumerate(step["exchange"]):
                if move.get("action") not in ("propose", "counter", "accept"):
                    raise ParseError(f"exchange[{j}] has bad action", locus)
                need("account", move.get("by"), f"{locus} exchange[{j}]")
        introduced = {
            "deploy": "deployment", "store": "handle", "negotiate": "terms", "create_contract": "contract",
            "raise_breach": "vote", "fetch": "fetch",
        }
        if op in introduced and "as" in step:
            known[introduced[op]].add(step["as"])


@dataclass
class Delivery:
    link_id: str
    bundle: cp.EnvelopeBundle
    handle_id: str
    substitute: bytes | None = None


@dataclass
class ScenarioRun:
    name: str
    seed: int
    ledger: Ledger
    cloud: CloudNode
    factory: ContractFactory
    parties: dict[str, Party]
    initial: dict[str, int]
    data: dict[str, bytes] = field(default_factory=dict)
    handles: dict[str, str] = field(default_factory=dict)
    terms: dict[str, SealedTerms] = field(default_factory=dict)
    contracts: dict[str, DataShareContract] = field(default_factory=dict)
    votes: dict[str, VoteContract] = field(default_factory=dict)
    deliveries: dict[str, Delivery] = field(default_factory=dict)
    fetches: dict[str, str] = field(default_factory=dict)
    deployments: dict[str, Address] = field(default_factory=dict)
    steps: list[dict] = field(default_factory=list)
    checks: list[dict] = field(default_factory=list)
    halted: str | None = None
    report: dict = field(default_factory=dict)

    @property
    def assertions_ok(self) -> bool:
        return all(c["ok"] for c in self.checks)

    @property
    def ok(self) -> bool:
        return self.halted is None and self.assertions_ok

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def address_of(self, name: str) -> Address:
        if name == "miner":
            return self.ledger.miner
        if name == "cloud":
            return self.cloud.address
        if name in self.parties:
            return self.parties[name].address
        if name in self.contracts:
            return self.contracts[name].address
        if name in self.deployments:
            return self.deployments[name]
        raise KeyError(name)

    def names(self) -> dict[str, Address]:
        out = {"miner": self.ledger.miner, "cloud": self.cloud.address}
        out.update({n: p.address for n, p in self.parties.items()})
        return out

    def report_bytes(self) -> bytes:
        return (json.dumps(self.report, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _load_data(spec: Mapping[str, Any], base: Path, rng: random.Random) -> bytes:
    (kind, value), = spec.items()
    if kind == "text":
        return value.encode("utf-8")
    if kind == "hex":
        return bytes.fromhex(value)
    if kind == "random":
        return rng.randbytes(int(value))
    return (base / value).read_bytes()


def run_scenario(
    source: str | Path | Mapping[str, Any], seed: int | None = None, base_dir: str | Path | None = None
) -> ScenarioRun:
    if isinstance(source, Mapping):
        doc = dict(source)
        validate(doc)
        base = Path(base_dir or ".")
    else:
        doc, base = load_scenario(source)
    seed = doc["seed"] if seed is None else seed
    name = doc.get("name", "scenario")

    def rng(purpose: str) -> random.Random:
        return random.Random(f"{seed}:{purpose}")

    try:
        policy = GasPolicy.from_mapping(doc.get("gas_policy", {}))
    except SharePactError as exc:
        raise ParseError(str(exc), "gas_policy") from None
    ledger = Ledger(policy)
    key_rng = rng("keys")
    parties = {
        pname: Party.create(ledger, pname, spec["role"], spec.get("balance", 0), key_rng)
        for pname, spec in doc["accounts"].items()
    }
    cloud = CloudNode(ledger, rng=rng("cloud"))
    factory = ContractFactory(ledger, CongressFactory(ledger), cloud)
    run = ScenarioRun(name, seed, ledger, cloud, factory, parties, {})
    run.initial = {n: ledger.balance(a) for n, a in run.names().items()}
    data_rng = rng("data")
    try:
        run.data = {dname: _load_data(spec, base, data_rng) for dname, spec in doc.get("data", {}).items()}
    except OSError as exc:
        raise ParseError(str(exc), "data") from None
    exec_rng = rng("exec")

    for i, step in enumerate(doc["steps"]):
        op = step["op"]
        entry = {"index": i, "op": op}
        expected = step.get("expect_error")
        try:
            if op == "assert":
                _check(run, i, step)
            else:
                HANDLERS[op](run, step, exec_rng)
        except SharePactError as exc:
            err = type(exc).__name__
            if expected and expected in {c.__name__ for c in type(exc).__mro__}:
                entry["outcome"] = f"expected {err}"
                if op == "fetch" and "as" in step:
                    run.fetches[step["as"]] = err
            else:
                entry["outcome"] = f"error {err}: {exc}"
                run.steps.append(entry)
                run.halted = f"step {i} ({op}) raised {err}: {exc}"
                break
        else:
            if expected:
                entry["outcome"] = f"missing expected {expected}"
                run.checks.append({"step": i, "check": f"expect_error {expected}", "ok": False,
                                   "expected": expected, "actual": "no error"})
            else:
                entry["outcome"] = "ok"
        run.steps.append(entry)

    run.report = build_report(run)
    return run


# -- step handlers ----------------------------------------------------------

def _party(run: ScenarioRun, name: str) -> Party:
    return run.parties[name]


def _resolve_terms(run: ScenarioRun, spec: Mapping[str, Any]) -> AgreementTerms:
    requester = _party(run, spec["requester"])
    if "provider" in spec:
        provider = _party(run, spec["provider"])
        provider_address, provider_name = provider.address, spec.get("provider_name", provider.name)
    else:
        provider_name = spec["provider_name"]
        provider_address = run.cloud.lookup_provider(provider_name)
    return AgreementTerms(
        requester_name=requester.name,
        requester_address=requester.address,
        provider_name=provider_name,
        provider_address=provider_address,
        payment=spec.get("payment", 0),
        requester_deposit=spec.get("requester_deposit", 0),
        provider_deposit=spec.get("provider_deposit", 0),
        gas_money=spec.get("gas_money", default_gas_money(run.ledger.policy)),
        breach_condition=spec.get("breach_condition", ""),
        voter_list=tuple(_party(run, v).address for v in spec.get("voters", [])),
        quorum=spec.get("quorum", 1),
        voting_time=spec.get("voting_time", 3600),
        voting_margin=as_fraction(spec.get("voting_margin", "1/2")),
        contract_lifetime=spec.get("contract_lifetime", 86400),
        default_compensation=spec.get("default_compensation", 0),
    )


def _deploy(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    addr = run.ledger.deploy_contract(
        run.address_of(step["owner"]), step["kind"], step["declared_gas"], step.get("gas_limit")
    )
    if "as" in step:
        run.deployments[step["as"]] = addr


def _transfer(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    run.ledger.transfer(run.address_of(step["from"]), run.address_of(step["to"]), step["amount"])


def _register(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    run.cloud.register_provider(step["name"], _party(run, step["provider"]).address)


def _store(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    handle = run.cloud.store_data(_party(run, step["provider"]).address, run.data[step["data"]])
    run.handles[step["as"]] = handle.handle_id


def _negotiate(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    session = Negotiation()
    base = _resolve_terms(run, step["terms"])
    for move in step["exchange"]:
        who = _party(run, move["by"])
        if move["action"] == "propose":
            session.propose(who, base)
        elif move["action"] == "counter":
            changes = dict(move.get("changes", {}))
            if "voting_margin" in changes:
                changes["voting_margin"] = as_fraction(changes["voting_margin"])
            session.counter(who, **changes)
        else:
            run.terms[step["as"]] = session.accept(who)


def _create(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    sealed = run.terms[step["terms"]]
    send = step.get("send", sealed.terms.deposit_total)
    run.contracts[step["as"]] = run.factory.create(sealed, send)


def _provider_deposit(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    c = run.contracts[step["contract"]]
    who = run.address_of(step["by"]) if "by" in step else c.provider
    c.provider_deposit(who, step.get("amount", c.terms.provider_deposit))


def _provider_party(run: ScenarioRun, c: DataShareContract, step: dict) -> Party:
    if "by" in step:
        return _party(run, step["by"])
    return next(p for p in run.parties.values() if p.address == c.provider)


def _deliver(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    c = run.contracts[step["contract"]]
    provider = _provider_party(run, c, step)
    handle_id = run.handles[step["handle"]]
    requester_pub = c.sealed.public_key_of(c.requester)
    link, bundle = run.cloud.prepare_link(provider.address, handle_id, requester_pub, provider.keys)
    c.deliver_link(provider.address, bundle)
    substitute = run.data[step["substitute"]] if "substitute" in step else None
    run.deliveries[step["contract"]] = Delivery(link.link_id, bundle, handle_id, substitute)


def _fetch(run: ScenarioRun, step: dict, rng: random.Random) -> None:
    c = run.contracts[step["contract"]]
    requester = _party(run, step["by"]) if "by" in step else next(
        p for p in run.parties.values() if p.address == c.requester
    )
    delivery = run.deliveries[step["contract"]]
    ks = run.cloud.handle(delivery.handle_id).ks

    def click(link_id: bytes) -> tuple[bytes, bytes]:
        data_ct, stored_digest = run.cloud.fetch(link_id)
        if delivery.substitute is not None:
            # the provider swapped the ciphertext for other data under the same key
            data_ct = cp.ae_encrypt(ks, delivery.substitute, rng)
        return data_ct, stored_digest

    cp.open_pipeline(delivery.bundle, requester.keys, c.sealed.public_key_of(c.provider), click)
    if "as" in step:
        run.fetches[step["as"]] = "ok"


def _confirm(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    c = run.contracts[step["contract"]]
    c.confirm_retrieval(run.address_of(step["by"]) if "by" in step else c.requester)


def _advance(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    run.ledger.advance_time(step["seconds"])


def _raise_breach(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    c = run.contracts[step["contract"]]
    vote = c.raise_breach(run.address_of(step["by"]), step["description"], step.get("compensation"))
    run.votes[step["as"]] = vote


def _cast(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    vote = run.votes[step["vote"]]
    for arbiter, ballot in step["ballots"].items():
        run.factory.congress.cast_vote(vote, run.address_of(arbiter), ballot)


def _parent(run: ScenarioRun, vote: VoteContract) -> DataShareContract:
    return run.factory.get(vote.parent)


def _tally(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    vote = run.votes[step["vote"]]
    terms = _parent(run, vote).terms
    run.factory.congress.tally(vote, terms.quorum, terms.voting_margin)


def _execute(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    vote = run.votes[step["vote"]]
    run.factory.congress.execute_decision(vote, _parent(run, vote), bool(step.get("close_parent", False)))


def _mutual_destroy(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    c = run.contracts[step["contract"]]
    signers = step.get("signers")
    sigs = {}
    for role, addr in (("requester", c.requester), ("provider", c.provider)):
        party = next(p for p in run.parties.values() if p.address == addr)
        if signers is None or party.name in signers:
            sigs[role] = party.sign(c.destroy_message())
    c.mutual_destroy(sigs.get("requester"), sigs.get("provider"))


def _expire(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    run.contracts[step["contract"]].expire()


def _violation(run: ScenarioRun, step: dict, _rng: random.Random) -> None:
    c = run.contracts[step["contract"]]
    run.ledger.append_event(
        run.address_of(step["by"]), "POLICY_VIOLATION", {"contract": c.address, "description": step["description"]}
    )


HANDLERS: dict[str, Callable[[ScenarioRun, dict, random.Random], None]] = {
    "deploy": _deploy,
    "transfer": _transfer,
    "register": _register,
    "store": _store,
    "negotiate": _negotiate,
    "create_contract": _create,
    "provider_deposit": _provider_deposit,
    "deliver": _deliver,
    "fetch": _fetch,
    "confirm": _confirm,
    "advance_time": _advance,
    "raise_breach": _raise_breach,
    "cast_vote": _cast,
    "tally": _tally,
    "execute": _execute,
    "mutual_destroy": _mutual_destroy,
    "expire": _expire,
    "report_violation": _violation,
}


# -- assertions and reporting -----------------------------------------------

def gas_by_account(ledger: Ledger) -> dict[str, int]:
    """Wei each address spent on gas, read back from the event log."""
    payer_key = {"TRANSFER": "from", "CALL": "caller", "GAS": "payer", "DEPLOY": "owner", "OUT_OF_GAS": "owner"}
    spent: dict[str, int] = {}
    for rec in ledger.events:
        key = payer_key.get(rec.kind)
        if key:
            spent[rec.payload[key]] = spent.get(rec.payload[key], 0) + rec.payload["fee"]
    return spent


def gas_by_contract(ledger: Ledger) -> dict[str, int]:
    used: dict[str, int] = {}
    for rec in ledger.events:
        if rec.kind in ("DEPLOY", "CALL"):
            addr = rec.payload["contract"]
        elif rec.kind == "GAS" and rec.payload["payer"] in used:
            addr = rec.payload["payer"]
        else:
            continue
        used[addr] = used.get(addr, 0) + rec.payload["gas"]
    return used


def _check(run: ScenarioRun, index: int, step: dict) -> None:
    def record(check: str, expected: Any, actual: Any) -> None:
        run.checks.append({"step": index, "check": check, "expected": expected, "actual": actual,
                           "ok": expected == actual})

    ledger = run.ledger
    for name, value in step.get("balances", {}).items():
        record(f"balance {name}", value, ledger.balance(run.address_of(name)))
    for name, value in step.get("balance_delta", {}).items():
        record(f"balance_delta {name}", value, ledger.balance(run.address_of(name)) - run.initial.get(name, 0))
    spent = gas_by_account(ledger)
    for name, value in step.get("gas_spent", {}).items():
        record(f"gas_spent {name}", value, spent.get(run.address_of(name).hex, 0))
    for alias, expect in step.get("contracts", {}).items():
        snap = run.contracts[alias].snapshot()
        actual = {
            "state": snap["state"],
            "close_reason": snap["close_reason"],
            "escrow_total": run.contracts[alias].escrow.total,
            "requester_escrow": snap["escrow"]["requester"],
            "provider_escrow": snap["escrow"]["provider"],
            "balance": ledger.balance(run.contracts[alias].address),
            "breaches": len(snap["breach_history"]),
        }
        for key, value in expect.items():
            record(f"contract {alias}.{key}", value, actual.get(key))
    for alias, value in step.get("links", {}).items():
        record(f"link {alias}", value, run.cloud.link_state(run.deliveries[alias].link_id).value)
    for alias, value in step.get("decisions", {}).items():
        decision = run.votes[alias].decision
        record(f"decision {alias}", value, decision.outcome.value if decision else None)
    for alias, value in step.get("fetches", {}).items():
        record(f"fetch {alias}", value, run.fetches.get(alias))
    if "conservation" in step:
        record("conservation", step["conservation"], ledger.total_balance() == ledger.minted)
    if "chain_valid" in step:
        try:
            verify_records(ledger.events)
            valid = True
        except SharePactError:
            valid = False
        record("chain_valid", step["chain_valid"], valid)
    for kind, count in step.get("events", {}).items():
        record(f"events {kind}", count, len(ledger.query_log(kind=kind)))


def build_report(run: ScenarioRun, model: LatencyModel | None = None) -> dict:
    model = model or LatencyModel()
    ledger = run.ledger
    names = run.names()
    label = {a.hex: n for n, a in names.items()}
    label.update({c.address.hex: alias for alias, c in run.contracts.items()})
    label.update({v.address.hex: alias for alias, v in run.votes.items()})
    label.update({a.hex: alias for alias, a in run.deployments.items()})
    lat_rng = random.Random(f"{run.seed}:latency")
    latency = []
    for rec in ledger.query_log(kind="DEPLOY"):
        kind = LATENCY_KIND.get(rec.payload["kind"], "datashare")
        latency.append({
            "contract": label.get(rec.payload["contract"], rec.payload["contract"]),
            "kind": rec.payload["kind"],
            "seconds": model.sample(kind, lat_rng),
        })
    spent = gas_by_account(ledger)
    return {
        "scenario": run.name,
        "seed": run.seed,
        "ok": run.ok,
        "halted": run.halted,
        "balances": {
            n: {"address": a.hex, "initial": run.initial.get(n, 0), "final": ledger.balance(a),
                "delta": ledger.balance(a) - run.initial.get(n, 0), "gas_spent": spent.get(a.hex, 0)}
            for n, a in names.items()
        },
        "total_initial": sum(run.initial.values()),
        "total_final": ledger.total_balance(),
        "event_count": len(ledger.events),
        "chain_head": ledger.head,
        "gas_by_contract": {label.get(a, a): g for a, g in gas_by_contract(ledger).items()},
        "latency": latency,
        "contracts": {alias: c.snapshot() for alias, c in run.contracts.items()},
        "votes": {alias: v.to_json() for alias, v in run.votes.items()},
        "steps": run.steps,
        "assertions": run.checks,
    }


def export_log(run: ScenarioRun, path: str | Path) -> Path:
    return run.ledger.export_jsonl(path)
