"""Fuzz targets: numeric edges, parser mutation, persistence, concurrency."""

from __future__ import annotations

import contextlib
import io
import json
import math
import tempfile
import threading
from dataclasses import replace
from datetime import timedelta
from pathlib import Path

from ..core import DEFAULT_CONFIG, Actor, ActorKind, EvidenceRole, load_config, make_score
from ..drr import DesignRationaleRecord, DrrStore, verify_chain
from ..errors import ParseError, QuintetError, RangeViolation
from ..gamma import OperatorKind, aggregate
from ..graph import Evidence, KnowledgeGraph, propagate, role_scores, score_all, sweep_stale, two_tier_aggregate
from ..scope import Scope, parse_scope, serialize_scope
from . import gens
from .engine import REGISTRY, Rejected, Tape

CAT = "fuzz"
GROUPS: dict[str, str] = {}

NON_FINITE = (math.nan, math.inf, -math.inf, -0.1, 1.0000000000000002, -5e-324, 2.0, True, "0.5", None)
# characters a scope string must never contain, incl. multi-byte ones
BAD_CHARS = ("#", " ", "A", "Z", "*", "!", "\t", "é", "€", "\x00", "/", ";", "😀")
SCOPE_ALPHABET = "abcxyz019_.-=,*!# Aé€"


def target(group: str, gen, cost: int = 1):
    def wrap(fn):
        GROUPS[fn.__name__] = group
        return REGISTRY.add(CAT, gen, cost)(fn)

    return wrap


def fuzz_targets() -> list[dict]:
    return [{"name": p.name, "group": GROUPS[p.name]} for p in REGISTRY.in_category(CAT)]


def _raises(exc_types, fn, *args):
    try:
        fn(*args)
    except exc_types:
        return True
    return False


# -- (a) numeric boundaries -----------------------------------------------------------


@target("numeric", lambda t: gens.EDGE_SCORES[t.draw(len(gens.EDGE_SCORES))])
def edge_scores_accepted_verbatim(x, ctx):
    """0, 1, subnormals and values one ulp from the ends pass through unchanged."""
    assert make_score(x) == x
    assert aggregate(ctx.op or OperatorKind.GODEL_MIN, [x]) == x


@target("numeric", lambda t: NON_FINITE[t.draw(len(NON_FINITE))])
def non_finite_rejected_everywhere(bad, ctx):
    """NaN, infinities and out-of-range values are refused at every entry point."""
    assert _raises(RangeViolation, make_score, bad)
    assert _raises(RangeViolation, aggregate, OperatorKind.GODEL_MIN, [0.5, bad])
    assert _raises(RangeViolation, role_scores, {EvidenceRole.QUALITY: [bad]})
    assert _raises(RangeViolation, lambda: Evidence.create("e", bad, scope=Scope.of(), collected_at=gens.T0))


def _graph_text(t):
    gc = gens.small_dag(t)
    propagate(gc.graph, DEFAULT_CONFIG, gc.now)
    lines = gc.graph.dumps().splitlines()
    candidates = [i for i, ln in enumerate(lines) if '"raw_score"' in ln or '"cached_r_eff"' in ln]
    if not candidates:
        raise Rejected("nothing numeric")
    return lines, t.choice(candidates), t.choice(("NaN", "Infinity", "-Infinity"))


@target("numeric", _graph_text, cost=3)
def non_finite_in_graph_file_rejected(case, ctx):
    lines, i, token = case
    rec = json.loads(lines[i])
    key = "raw_score" if "raw_score" in rec else "cached_r_eff"
    rec[key] = "@@"
    lines = list(lines)
    lines[i] = json.dumps(rec).replace('"@@"', token)
    try:
        KnowledgeGraph.loads("\n".join(lines))
    except RangeViolation:
        return
    raise AssertionError(f"{token} in {key} was loaded")


def _cfg_nan(t):
    sec = t.choice(("formality_ceilings", "layer_ceilings", "verification_multipliers", "validity_days", "grace_days", "llm_cap"))
    return sec, t.choice(("NaN", "Infinity", "-Infinity"))


@target("numeric", _cfg_nan)
def non_finite_in_config_rejected(case, ctx):
    sec, token = case
    full = DEFAULT_CONFIG.to_json()
    if isinstance(full[sec], dict):
        k = sorted(full[sec])[0]
        full[sec][k] = "@@"
    else:
        full[sec] = "@@"
    text = json.dumps(full).replace('"@@"', token)
    assert _raises(RangeViolation, load_config, text), text


def _edge_multiset(t):
    return [gens.EDGE_SCORES[t.draw(len(gens.EDGE_SCORES))] if t.boolean(0.7) else gens.score(t) for _ in range(1 + t.draw(8))]


@target("numeric", _edge_multiset)
def aggregates_stay_in_range(xs, ctx):
    for op in OperatorKind:
        v = aggregate(op, xs)
        assert 0.0 <= v <= 1.0 and not math.isnan(v), (op, v)
    for role in EvidenceRole:
        v = two_tier_aggregate({role: xs})
        assert 0.0 <= v <= 1.0 and not math.isnan(v), (role, v)


def _edge_graph(t):
    gc = gens.small_dag(t)
    g = gc.graph
    for eid in sorted(g.evidence):
        if t.boolean(0.7):
            g.replace_evidence(replace(g.evidence[eid], raw_score=gens.EDGE_SCORES[t.draw(len(gens.EDGE_SCORES))]))
    return gc


@target("numeric", _edge_graph, cost=5)
def edge_scores_through_graph(gc, ctx):
    """Edge values survive penalties, decay and propagation without leaving [0, 1]."""
    for cid, v in score_all(gc.graph, DEFAULT_CONFIG, gc.now, ctx.op or OperatorKind.GODEL_MIN).items():
        assert 0.0 <= v <= 1.0 and not math.isnan(v), (cid, v)
    sweep_stale(gc.graph, DEFAULT_CONFIG, gc.now)
    for c in gc.graph.claims.values():
        assert 0.0 <= c.cached_r_eff <= 1.0


# -- (b) scope parser ---------------------------------------------------------------------------


def mutate(t: Tape, text: str, alphabet: str = SCOPE_ALPHABET) -> str:
    s = list(text)
    for _ in range(1 + t.draw(4)):
        kind = t.draw(4)
        pos = t.draw(len(s) + 1)
        if kind == 0 or not s:
            s.insert(pos, alphabet[t.draw(len(alphabet))])
        elif kind == 1:
            del s[min(pos, len(s) - 1)]
        elif kind == 2:
            s[min(pos, len(s) - 1)] = alphabet[t.draw(len(alphabet))]
        else:
            a = t.draw(len(s))
            s[pos:pos] = s[a : a + 1 + t.draw(4)]
    return "".join(s)


def mutated_scope(t):
    return mutate(t, gens.scope_text(t))


@target("scope_parser", mutated_scope)
def scope_parser_never_crashes(text, ctx):
    """Arbitrary edits of valid text either parse or fail with a located ParseError."""
    try:
        parse_scope(text)
    except ParseError as exc:
        assert 0 <= exc.offset <= len(text.encode("utf-8")), (exc.offset, text)


@target("scope_parser", mutated_scope)
def scope_accepts_roundtrip(text, ctx):
    try:
        s = parse_scope(text)
    except ParseError:
        return
    canon = serialize_scope(s)
    assert parse_scope(canon) == s
    assert serialize_scope(parse_scope(canon)) == canon


def _bad_insert(t):
    text = gens.scope_text(t)
    if text in ("*", "!"):
        text = "task=a"
    pos = t.draw(len(text) + 1)
    return text, pos, BAD_CHARS[t.draw(len(BAD_CHARS))]


@target("scope_parser", _bad_insert)
def scope_error_offset_points_at_culprit(case, ctx):
    """A foreign character inserted into valid text is reported at its own byte offset."""
    text, pos, ch = case
    bad = text[:pos] + ch + text[pos:]
    try:
        parse_scope(bad)
    except ParseError as exc:
        assert exc.offset == len(bad[:pos].encode("utf-8")), (bad, exc.offset, str(exc))
        return
    raise AssertionError(f"accepted {bad!r}")


# -- (c) config parser ------------------------------------------------------------------------------


def _config_text(t):
    text = json.dumps(gens.config(t).to_json(), sort_keys=True)
    return mutate(t, text, alphabet='{}[]":,.0123456789-eE truefalsnNaI')


@target("config_parser", _config_text)
def config_parser_never_crashes(text, ctx):
    """Mutated config files load or fail with a domain error, never anything else."""
    try:
        cfg = load_config(text)
    except QuintetError:
        return
    assert load_config(cfg.to_json()) == cfg


@target("config_parser", gens.config)
def config_text_roundtrip(cfg, ctx):
    text = json.dumps(cfg.to_json())
    assert load_config(text) == cfg
    assert json.dumps(load_config(text).to_json()) == text


# -- (d) persistence and concurrency -------------------------------------------------------------------


def _graph_mutation(t):
    gc = gens.small_dag(t)
    propagate(gc.graph, DEFAULT_CONFIG, gc.now)
    text = gc.graph.dumps()
    raw = bytearray(text.encode("utf-8"))
    for _ in range(1 + t.draw(3)):
        i = t.draw(len(raw))
        raw[i] = b'{}[]":,0123456789.-abcenNIltrufs\n'[t.draw(33)]
    return raw.decode("utf-8", "replace")


@target("persistence", _graph_mutation, cost=3)
def graph_file_mutation_never_crashes(text, ctx):
    try:
        g = KnowledgeGraph.loads(text)
    except (QuintetError, ValueError):
        return
    assert KnowledgeGraph.loads(g.dumps()).state() == g.state()


def _drr_store(t):
    store = DrrStore()
    n = 1 + t.draw(6)
    for i in range(n):
        rec = DesignRationaleRecord(
            drr_id=f"drr-{i + 1}",
            claim_id=f"c{t.draw(4)}",
            decision=t.choice(("adopt retrieval", "keep baseline", "ship v2 ✓")),
            steps=({"claim_id": "c0", "mode": "abduction", "layer": "L0", "actor": "gen-1", "evidence": []},),
            final_r_eff=gens.score(t),
            scope_spec=serialize_scope(gens.scope(t, allow_bottom=False)),
            validity_window=("2025-01-01T00:00:00Z", "2025-06-01T00:00:00Z"),
            ratifier=Actor("hum-1", ActorKind.HUMAN),
            prev_hash="",
        )
        store.append(store.seal(rec))
    data = store.to_bytes()
    lines = data.split(b"\n")
    k = t.draw(n)
    start = sum(len(ln) + 1 for ln in lines[: k + 1])
    pos = start + t.draw(len(lines[k + 1]) + 1)  # may hit the trailing newline
    old = data[pos]
    new = (old + 1 + t.draw(255)) % 256
    corrupted = bytearray(data)
    corrupted[pos] = new
    return bytes(corrupted), k, pos


@target("persistence", _drr_store)
def drr_corruption_localized(case, ctx):
    """Any single-byte change in a record is reported at exactly that record."""
    data, k, pos = case
    brk = verify_chain(data)
    assert brk is not None and brk.index == k, (k, pos, brk)


def _concurrent(t):
    gc = gens.graph_case(t, max_nodes=12, min_nodes=3)
    edits = []
    for _ in range(1 + t.draw(12)):
        if gc.graph.evidence and t.boolean(0.7):
            edits.append(("score", t.choice(sorted(gc.graph.evidence)), gens.score(t)))
        else:
            edits.append(("sweep", None, t.draw(200)))
    return gc, edits


@target("concurrency", _concurrent, cost=100)
def readers_see_consistent_snapshots(case, ctx):
    """Eight readers racing one writer only ever observe fully propagated graphs."""
    gc, edits = case
    g = gc.graph
    cfg = DEFAULT_CONFIG
    propagate(g, cfg, gc.now, "full")
    problems: list[str] = []
    done = threading.Event()

    def writer():
        try:
            now = gc.now
            for kind, ref, val in edits:
                with g.transaction():
                    if kind == "score":
                        g.replace_evidence(replace(g.evidence[ref], raw_score=val))
                        propagate(g, cfg, now)
                    else:
                        now = now + timedelta(days=val)
                        g.clock = now
                        sweep_stale(g, cfg, now)
        finally:
            done.set()

    def reader():
        seen = 0
        while not done.is_set() or seen < 2:
            snap = g.snapshot()
            seen += 1
            stamp = snap._stamp
            if snap.dirty or stamp is None:
                problems.append("snapshot taken mid-update")
                return
            want = score_all(snap, cfg, stamp[0])
            for cid, c in snap.claims.items():
                if c.cached_r_eff != want[cid]:
                    problems.append(f"{cid}: cached {c.cached_r_eff} vs {want[cid]}")
                    return
                for d in c.dependency_refs:
                    if c.cached_r_eff > snap.claims[d].cached_r_eff:
                        problems.append(f"{cid} exceeds premise {d}")
                        return

    threads = [threading.Thread(target=reader) for _ in range(8)]
    for th in threads:
        th.start()
    w = threading.Thread(target=writer)
    w.start()
    w.join()
    for th in threads:
        th.join()
    assert not problems, problems[:3]


def _cli_session(t):
    cmds = []
    n_ev = 0
    for _ in range(1 + t.draw(7)):
        c = f"c{t.draw(3)}"
        kind = t.draw(8)
        if kind == 0:
            cmds.append(["add-claim", f"claim {c}", "--id", c, "--scope", gens.scope_text(t), "--actor", "gen-1"])
        elif kind == 1:
            n_ev += 1
            cmds.append(["add-evidence", "--id", f"e{n_ev}", "--score", repr(gens.score(t)), "--scope", gens.scope_text(t), "--claim", c])
        elif kind == 2:
            cmds.append(["link", c, f"c{t.draw(3)}"])
        elif kind == 3:
            cmds.append(["promote", c, "--to", f"L{1 + t.draw(2)}", "--actor", t.choice(("gen-1", "ver-1"))])
        elif kind == 4:
            cmds.append(["contradict", c, f"c{t.draw(3)}"])
        elif kind == 5:
            cmds.append(["ratify", c, "--actor", "hum-1"])
        elif kind == 6:
            cmds.append(["--now", f"2025-{1 + t.draw(12):02d}-15T00:00:00Z", "sweep"])
        else:
            cmds.append([t.choice(("score", "inspect")), c])
    return [["add-claim", "root", "--id", "c0", "--scope", "task=a", "--actor", "gen-1"]] + cmds


READ_ONLY = {"score", "inspect", "report"}


@target("persistence", _cli_session, cost=20)
def cli_store_roundtrip(cmds, ctx):
    """Each CLI invocation leaves a store the next one loads to the same state."""
    from ..cli import main

    with tempfile.TemporaryDirectory() as tmp:
        base = ["--store", tmp, "--now", "2025-01-01T00:00:00Z"]
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            assert main(base + ["init", "--force"]) == 0
        path = Path(tmp) / "graph.jsonl"
        for cmd in cmds:
            before = path.read_bytes()
            with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
                code = main(base + cmd)
            assert code in (0, 1), (cmd, code, err.getvalue()[-300:])
            after = path.read_bytes()
            if cmd[0] in READ_ONLY:
                assert after == before, cmd
            g = KnowledgeGraph.load(path)
            assert g.dumps().encode("utf-8") == after, cmd
            assert KnowledgeGraph.loads(g.dumps()).state() == g.state()
        assert verify_chain(Path(tmp) / "drr.jsonl") is None


def _writers(t):
    return [gens.scope_text(t) for _ in range(2 + t.draw(5))]


@target("concurrency", _writers, cost=100)
def cli_writers_never_lose_updates(scopes, ctx):
    """Parallel CLI invocations on one store serialize on the lock; every write lands."""
    from ..cli import main

    with tempfile.TemporaryDirectory() as tmp:
        base = ["--store", tmp, "--now", "2025-01-01T00:00:00Z"]
        codes: list[int] = []

        def add(i, sc):
            codes.append(main(base + ["add-claim", f"claim {i}", "--id", f"w{i}", "--scope", sc, "--actor", "gen-1"]))

        with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
            assert main(base + ["init"]) == 0
            threads = [threading.Thread(target=add, args=(i, sc)) for i, sc in enumerate(scopes)]
            for th in threads:
                th.start()
            for th in threads:
                th.join()
        assert codes == [0] * len(scopes), codes
        g = KnowledgeGraph.load(Path(tmp) / "graph.jsonl")
        assert set(g.claims) == {f"w{i}" for i in range(len(scopes))}, sorted(g.claims)
