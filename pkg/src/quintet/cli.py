"""Command line entry point.

A store is a directory holding ``graph.jsonl``, ``drr.jsonl`` and an
optional ``config.json``. Commands that write take an exclusive lock on
``<store>/lock`` for their whole run; readers never lock because the graph
file is replaced atomically.

Exit status: 0 on success, 1 on domain errors, 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import fcntl
import json
import sys
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path

from .core import (
    DEFAULT_CONFIG,
    Actor,
    ActorKind,
    EpistemicLayer,
    EvidenceRole,
    FormalityLevel,
    VerificationMethod,
    format_timestamp,
    load_config_file,
    parse_timestamp,
    parse_token,
)
from .errors import ParseError, QuintetError
from .gamma import OperatorKind, parse_operator
from .graph import (
    Evidence,
    KnowledgeGraph,
    claim_role_groups,
    effective_reliability,
    explain,
    inspect_dependencies,
    propagate,
    role_scores,
    sweep_stale,
)
from .scope import parse_scope

GRAPH_FILE = "graph.jsonl"
DRR_FILE = "drr.jsonl"
CONFIG_FILE = "config.json"
LOCK_FILE = "lock"


class StoreError(QuintetError):
    code = "StoreError"


class UsageError(Exception):
    """Bad arguments discovered after argparse has finished."""


# -- argument types -------------------------------------------------------------


def _scope_arg(text: str):
    try:
        return parse_scope(text)
    except ParseError as exc:
        raise argparse.ArgumentTypeError(f"invalid scope {text!r}: {exc}") from None


def _time_arg(text: str) -> datetime:
    try:
        return parse_timestamp(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _token_arg(cls):
    def convert(text: str):
        try:
            return parse_token(cls, text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    convert.__name__ = cls.__name__
    return convert


def _operator_arg(text: str) -> OperatorKind:
    try:
        return parse_operator(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# -- store access ---------------------------------------------------------------------


class Store:
    def __init__(self, root: Path):
        self.root = root

    @property
    def graph_path(self) -> Path:
        return self.root / GRAPH_FILE

    @property
    def drr_path(self) -> Path:
        return self.root / DRR_FILE

    def exists(self) -> bool:
        return self.graph_path.exists()

    def require(self) -> None:
        if not self.exists():
            raise StoreError(f"no store at {self.root} (run `quintet init` first)")

    def load_graph(self) -> KnowledgeGraph:
        self.require()
        return KnowledgeGraph.load(self.graph_path)

    def drr_store(self):
        from .drr import DrrStore

        return DrrStore(self.drr_path)

    def config(self, override: str | None):
        if override:
            return load_config_file(override)
        path = self.root / CONFIG_FILE
        if path.exists():
            return load_config_file(path)
        return DEFAULT_CONFIG

    @contextmanager
    def writing(self):
        self.root.mkdir(parents=True, exist_ok=True)
        with open(self.root / LOCK_FILE, "a+") as fh:
            fcntl.flock(fh.fileno(), fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(fh.fileno(), fcntl.LOCK_UN)


# -- output ---------------------------------------------------------------------------


def _emit(args, payload, text: str | None = None) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text if text is not None else json.dumps(payload, indent=2, sort_keys=True))


def _fmt(x: float) -> str:
    return f"{x:.2f}"


# -- commands ---------------------------------------------------------------------------


def cmd_init(args, store: Store, now: datetime) -> int:
    if store.exists() and not args.force:
        raise StoreError(f"store already exists at {store.root} (use --force to reset)")
    with store.writing():
        if args.config:
            cfg = load_config_file(args.config)
            (store.root / CONFIG_FILE).write_text(json.dumps(cfg.to_json(), indent=2, sort_keys=True) + "\n")
        KnowledgeGraph(now).save(store.graph_path)
        if store.drr_path.exists():
            store.drr_path.unlink()
        store.drr_store()
    _emit(args, {"ok": True, "store": str(store.root)}, f"initialized store at {store.root}")
    return 0


@contextmanager
def _mutating(store: Store, now: datetime):
    with store.writing():
        graph = store.load_graph()
        graph.clock = now
        yield graph
        graph.save(store.graph_path)


def cmd_add_claim(args, store, now, cfg) -> int:
    from .fsm import propose

    with _mutating(store, now) as graph:
        actor = Actor(args.actor, args.actor_kind)
        claim = propose(graph, args.statement, args.scope, args.formality, actor, claim_id=args.id, now=now)
        for dep in args.depends_on or ():
            graph.link_dependency(claim.id, dep)
        propagate(graph, cfg, now)
    _emit(args, {"ok": True, "claim": claim.id, "r_eff": claim.cached_r_eff}, claim.id)
    return 0


def cmd_add_evidence(args, store, now, cfg) -> int:
    with _mutating(store, now) as graph:
        ev = Evidence.create(
            args.id or graph.new_id("e"),
            args.score,
            formality=args.formality,
            scope=args.scope,
            method=args.method,
            role=args.role,
            collected_at=args.collected or now,
            valid_until=args.valid_until,
            provenance=args.provenance,
            cfg=cfg,
        )
        graph.add_evidence(ev, attach_to=args.claim or ())
        graph.log("add_evidence", evidence=ev.id, attach_to=sorted(args.claim or ()))
        propagate(graph, cfg, now)
    _emit(args, {"ok": True, "evidence": ev.id}, ev.id)
    return 0


def cmd_link(args, store, now, cfg) -> int:
    with _mutating(store, now) as graph:
        graph.link_dependency(args.claim, args.depends_on)
        graph.log("link", claim=args.claim, depends_on=args.depends_on)
        propagate(graph, cfg, now)
    _emit(args, {"ok": True}, f"{args.claim} -> {args.depends_on}")
    return 0


def cmd_contradict(args, store, now, cfg) -> int:
    with _mutating(store, now) as graph:
        graph.declare_contradiction(args.a, args.b)
        propagate(graph, cfg, now)
    _emit(args, {"ok": True}, f"{args.a} <-> {args.b}")
    return 0


def cmd_promote(args, store, now, cfg) -> int:
    from .fsm import PromotionRequest, promote

    with _mutating(store, now) as graph:
        req = PromotionRequest(args.claim, args.to, Actor(args.actor, args.actor_kind), tuple(args.evidence or ()))
        try:
            claim = promote(graph, req, cfg, now)
        except QuintetError:
            # keep the refusal in the audit trail
            graph.save(store.graph_path)
            raise
    _emit(args, {"ok": True, "claim": claim.id, "layer": claim.layer.token}, f"{claim.id} -> {claim.layer.token}")
    return 0


def cmd_discard(args, store, now, cfg) -> int:
    from .fsm import discard

    with _mutating(store, now) as graph:
        claim = discard(graph, args.claim, Actor(args.actor, args.actor_kind))
        propagate(graph, cfg, now)
    _emit(args, {"ok": True, "claim": claim.id, "status": claim.status.value}, f"{claim.id} discarded")
    return 0


def cmd_ratify(args, store, now, cfg) -> int:
    from .fsm import ratify

    window = None
    if args.valid_from or args.valid_until:
        if not (args.valid_from and args.valid_until):
            raise UsageError("--from and --until must be given together")
        window = (args.valid_from, args.valid_until)
    with _mutating(store, now) as graph:
        try:
            record = ratify(graph, args.claim, Actor(args.actor, args.actor_kind), store.drr_store(), window, cfg, now)
        except QuintetError:
            graph.save(store.graph_path)
            raise
    _emit(args, record.to_json(), f"{record.drr_id} {record.this_hash}")
    return 0


def _score_text(bd, tail) -> str:
    lines = [f"R_eff({bd.claim_id}) = {_fmt(bd.value)}", "terms:"]
    for t in bd.terms:
        mark = "  <- dominating" if t == bd.dominating else ""
        cl = f" [{t.congruence}]" if t.congruence else ""
        lines.append(f"  {t.kind:<18} {t.ref:<12} {_fmt(t.value)}{cl}{mark}")
    for eid in bd.excluded:
        lines.append(f"  {'excluded':<18} {eid:<12} (scope mismatch)")
    lines.append(f"dominating: {bd.dominating.kind} {bd.dominating.ref} = {_fmt(bd.dominating.value)}")
    chain = " -> ".join(bd.weakest_link)
    lines.append(f"weakest link: {bd.weakest_link[-1]} ({tail.kind} {tail.ref} = {_fmt(tail.value)}) via {chain}")
    return "\n".join(lines)


def cmd_score(args, store, now, cfg) -> int:
    graph = store.load_graph()
    bd = explain(graph, args.claim, cfg, now)
    tail = explain(graph, bd.weakest_link[-1], cfg, now).dominating
    payload = bd.to_json()
    payload["weakest_term"] = tail.to_json()
    payload["now"] = format_timestamp(now)
    if args.op is not OperatorKind.GODEL_MIN:
        payload["operator"] = args.op.value
        payload["r_eff_under_operator"] = effective_reliability(graph, args.claim, cfg, now, args.op)
    text = _score_text(bd, tail)
    if args.two_tier:
        groups = claim_role_groups(graph, args.claim, cfg, now)
        if groups:
            roles = role_scores(groups)
            payload["roles"] = {r.token: v for r, v in sorted(roles.items(), key=lambda kv: kv[0].token)}
            payload["two_tier"] = min(roles.values())
            text += "\nroles: " + ", ".join(f"{k}={_fmt(v)}" for k, v in payload["roles"].items())
            text += f"\ntwo-tier: {_fmt(payload['two_tier'])}"
    if "r_eff_under_operator" in payload:
        text += f"\nunder {args.op.value}: {payload['r_eff_under_operator']:.4f}"
    _emit(args, payload, text)
    return 0


def cmd_inspect(args, store, now, cfg) -> int:
    graph = store.load_graph()
    propagate(graph, cfg, now, "full")
    entries = inspect_dependencies(graph, args.claim)
    payload = {"claim": args.claim, "nodes": [e.to_json() for e in entries]}
    lines = []
    for e in entries:
        pad = "  " * e.depth
        if e.kind == "claim":
            lines.append(f"{pad}{e.id} claim {e.layer} {e.status} r_eff={_fmt(e.r_eff)}")
        else:
            lines.append(f"{pad}{e.id} evidence {e.formality} raw={_fmt(e.raw_score)}")
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_sweep(args, store, now, cfg) -> int:
    with _mutating(store, now) as graph:
        before = {cid: c.layer for cid, c in graph.claims.items()}
        flagged = sweep_stale(graph, cfg, now)
        demoted = sorted(cid for cid, c in graph.claims.items() if c.layer < before[cid])
    payload = {"flagged": flagged, "demoted": demoted, "now": format_timestamp(now)}
    _emit(args, payload, f"flagged: {', '.join(flagged) or '-'}\ndemoted: {', '.join(demoted) or '-'}")
    return 0


def cmd_report(args, store, now, cfg) -> int:
    from .drr import verify_chain

    graph = store.load_graph()
    propagate(graph, cfg, now, "full")
    claims = []
    for cid in sorted(graph.claims):
        c = graph.claims[cid]
        claims.append(
            {
                "id": cid,
                "layer": c.layer.token,
                "formality": c.formality.token,
                "phase": c.phase.value,
                "status": c.status.value,
                "r_eff": c.cached_r_eff,
                "proposer": c.proposer.id,
            }
        )
    drr = store.drr_store() if store.drr_path.exists() else None
    brk = verify_chain(store.drr_path) if drr is not None else None
    payload = {
        "now": format_timestamp(now),
        "claims": claims,
        "evidence": len(graph.evidence),
        "events": len(graph.events),
        "drr_records": len(drr) if drr is not None else 0,
        "drr_chain": brk.to_json() if brk else {"ok": True},
    }
    lines = [f"{'id':<12} {'layer':<5} {'F':<3} {'phase':<10} {'status':<12} r_eff"]
    for c in claims:
        lines.append(f"{c['id']:<12} {c['layer']:<5} {c['formality']:<3} {c['phase']:<10} {c['status']:<12} {_fmt(c['r_eff'])}")
    lines.append(f"evidence: {payload['evidence']}  events: {payload['events']}  drr records: {payload['drr_records']}")
    lines.append("drr chain: intact" if brk is None else f"drr chain: BROKEN at record {brk.index}: {brk.reason}")
    _emit(args, payload, "\n".join(lines))
    return 0 if brk is None else 1


def cmd_check_config(args, store, now, cfg) -> int:
    checked = load_config_file(args.file)
    _emit(args, {"ok": True, "config": checked.to_json()}, f"{args.file}: ok")
    return 0


def cmd_proptest(args, store, now, cfg) -> int:
    from .harness import run_suite

    report = run_suite(args.suite, cases=args.cases, seed=args.seed, op=args.op)
    print(json.dumps(report.to_json(), indent=None if args.json else 2, sort_keys=True))
    return 0 if report.passed else 1


# -- parser ---------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # repeated on every subcommand so flags work before or after it
    common.add_argument("--store", default=argparse.SUPPRESS, help="store directory (default: .quintet)")
    common.add_argument("--now", type=_time_arg, default=argparse.SUPPRESS, help="RFC 3339 clock override")
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable output")
    common.add_argument("--config", default=argparse.SUPPRESS, help="config file overriding the store's")

    p = argparse.ArgumentParser(prog="quintet", description="Weakest-link reliability tracking for claim graphs.")
    p.add_argument("--store", default=".quintet")
    p.add_argument("--now", type=_time_arg, default=None)
    p.add_argument("--json", action="store_true", default=False)
    p.add_argument("--config", default=None)
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help):
        sp = sub.add_parser(name, parents=[common], help=help)
        sp.set_defaults(func=func)
        return sp

    sp = add("init", cmd_init, "create an empty store")
    sp.add_argument("--force", action="store_true")

    sp = add("add-claim", cmd_add_claim, "propose a claim at L0")
    sp.add_argument("statement")
    sp.add_argument("--scope", type=_scope_arg, required=True)
    sp.add_argument("--formality", type=_token_arg(FormalityLevel), default=FormalityLevel.F1)
    sp.add_argument("--actor", required=True)
    sp.add_argument("--actor-kind", type=_token_arg(ActorKind), default=ActorKind.GENERATOR)
    sp.add_argument("--id")
    sp.add_argument("--depends-on", action="append", metavar="CLAIM")

    sp = add("add-evidence", cmd_add_evidence, "record an evidence item")
    sp.add_argument("--score", type=float, required=True)
    sp.add_argument("--scope", type=_scope_arg, required=True)
    sp.add_argument("--claim", action="append", metavar="CLAIM", help="attach to this claim (repeatable)")
    sp.add_argument("--id")
    sp.add_argument("--formality", type=_token_arg(FormalityLevel), default=FormalityLevel.F2)
    sp.add_argument("--method", type=_token_arg(VerificationMethod), default=VerificationMethod.EXECUTED_VERIFIED)
    sp.add_argument("--role", type=_token_arg(EvidenceRole), default=EvidenceRole.OTHER)
    sp.add_argument("--collected", type=_time_arg)
    sp.add_argument("--valid-until", type=_time_arg)
    sp.add_argument("--provenance", default="")

    sp = add("link", cmd_link, "make CLAIM depend on DEPENDS_ON")
    sp.add_argument("claim")
    sp.add_argument("depends_on")

    sp = add("contradict", cmd_contradict, "declare two claims contradictory")
    sp.add_argument("a")
    sp.add_argument("b")

    sp = add("promote", cmd_promote, "move a claim up one layer")
    sp.add_argument("claim")
    sp.add_argument("--to", type=_token_arg(EpistemicLayer), required=True)
    sp.add_argument("--actor", required=True)
    sp.add_argument("--actor-kind", type=_token_arg(ActorKind), default=ActorKind.VERIFIER)
    sp.add_argument("--evidence", action="append", metavar="EVIDENCE")

    sp = add("discard", cmd_discard, "archive a refuted claim")
    sp.add_argument("claim")
    sp.add_argument("--actor", required=True)
    sp.add_argument("--actor-kind", type=_token_arg(ActorKind), default=ActorKind.HUMAN)

    sp = add("ratify", cmd_ratify, "finalize an L2 claim into a decision record")
    sp.add_argument("claim")
    sp.add_argument("--actor", required=True)
    sp.add_argument("--actor-kind", type=_token_arg(ActorKind), default=ActorKind.HUMAN)
    sp.add_argument("--from", dest="valid_from", type=_time_arg)
    sp.add_argument("--until", dest="valid_until", type=_time_arg)

    sp = add("score", cmd_score, "effective reliability with its breakdown")
    sp.add_argument("claim")
    sp.add_argument("--two-tier", action="store_true", help="also show role-based aggregation")
    sp.add_argument("--op", type=_operator_arg, default=OperatorKind.GODEL_MIN, help="also score under another operator")

    sp = add("inspect", cmd_inspect, "walk a claim's dependencies and evidence")
    sp.add_argument("claim")

    add("sweep", cmd_sweep, "flag claims resting on expired evidence")
    add("report", cmd_report, "summarize the store and verify the record chain")

    sp = add("check-config", cmd_check_config, "validate a config file")
    sp.add_argument("file")

    sp = add("proptest", cmd_proptest, "run the property suite")
    sp.add_argument("suite", help="category name or 'all'")
    sp.add_argument("--cases", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--op", type=_operator_arg, default=OperatorKind.GODEL_MIN, help="operator under test")
    return p


def _fail(args, exc: BaseException, code: str) -> None:
    if getattr(args, "json", False):
        payload = exc.to_json() if isinstance(exc, QuintetError) else {"error": code, "message": str(exc)}
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    else:
        print(f"error: {code}: {exc}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    now = args.now or datetime.now(timezone.utc)
    store = Store(Path(args.store))
    try:
        if args.func is cmd_init:
            return cmd_init(args, store, now)
        if args.func is cmd_check_config:
            return cmd_check_config(args, store, now, None)
        if args.func is cmd_proptest:
            if args.cases is not None and args.cases < 1:
                raise UsageError("--cases must be at least 1")
            return cmd_proptest(args, store, now, None)
        cfg = store.config(args.config)
        return args.func(args, store, now, cfg)
    except UsageError as exc:
        _fail(args, exc, "UsageError")
        return 2
    except ParseError as exc:
        _fail(args, exc, exc.code)
        return 2
    except QuintetError as exc:
        _fail(args, exc, exc.code)
        return 1
    except (ValueError, OSError) as exc:
        _fail(args, exc, type(exc).__name__)
        return 1


if __name__ == "__main__":
    sys.exit(main())
