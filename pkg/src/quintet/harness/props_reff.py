"""Effective-reliability properties, each in a direct and a propagated setting.

"Direct" cases score a single claim over its own evidence. "Graph" cases
score every claim of a generated DAG after propagation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import datetime, timedelta

from ..core import (
    CURRENT_MODEL_FAITHFULNESS,
    DEFAULT_CONFIG,
    Actor,
    ActorKind,
    Config,
    CongruenceLevel,
    EpistemicLayer,
    EvidenceRole,
    FormalityLevel,
    VerificationMethod,
    load_config,
)
from ..errors import EmptyMultiset, OrderingViolation
from ..gamma import OperatorKind, aggregate
from ..graph import (
    EXCLUDED,
    ClaimNode,
    ClaimStatus,
    Evidence,
    KnowledgeGraph,
    adjust_evidence,
    claim_role_groups,
    conservative_owa,
    decay_factor,
    effective_reliability,
    explain,
    probabilistic_sum,
    propagate,
    role_scores,
    score_all,
    two_tier_aggregate,
)
from ..scope import Scope, match_level
from . import gens, oracles
from .engine import REGISTRY, Context, Rejected, Tape

CAT = "r_eff_calculator"
EPS = 1e-12
GEN = Actor("gen-1", ActorKind.GENERATOR)


def prop(gen, cost=1, name=None):
    return REGISTRY.add(CAT, gen, cost, name)


def _op(ctx: Context) -> OperatorKind:
    return ctx.op or OperatorKind.GODEL_MIN


def _cfg(ctx: Context) -> Config:
    return ctx.cfg or DEFAULT_CONFIG


# -- direct cases -----------------------------------------------------------------


@dataclass
class Direct:
    scope: Scope
    layer: EpistemicLayer
    formality: FormalityLevel
    evidence: list[Evidence]
    now: datetime
    cfg: Config = DEFAULT_CONFIG

    def build(self, evidence: list[Evidence] | None = None, **over) -> tuple[KnowledgeGraph, str]:
        g = KnowledgeGraph(self.now)
        g.add_claim(
            ClaimNode(
                "c",
                "claim",
                over.get("layer", self.layer),
                over.get("formality", self.formality),
                over.get("scope", self.scope),
                GEN,
            )
        )
        for ev in self.evidence if evidence is None else evidence:
            g.add_evidence(ev, ["c"])
        return g, "c"

    def score(self, ctx: Context, evidence=None, cfg=None, now=None, **over) -> float:
        g, cid = self.build(evidence, **over)
        return effective_reliability(g, cid, cfg or self.cfg, now or self.now, _op(ctx))


def direct(t: Tape, min_ev: int = 0, with_config: bool = False) -> Direct:
    sc = gens.scope(t, allow_bottom=False)
    n = min_ev + t.draw(5)
    evs = [gens.evidence(t, f"e{i}", near=sc) for i in range(n)]
    return Direct(sc, gens.layer(t), gens.formality(t), evs, gens.timestamp(t, 900), gens.config(t) if with_config else DEFAULT_CONFIG)


def direct1(t):
    return direct(t, min_ev=1)


def direct_cfg(t):
    return direct(t, with_config=True)


def graph(t):
    return gens.graph_case(t, max_nodes=10)


def graph_cfg(t):
    return gens.graph_case(t, max_nodes=10), gens.config(t)


def _scores(case, ctx, cfg=None, now=None):
    return score_all(case.graph, cfg or _cfg(ctx), now or case.now, _op(ctx))


def _adjusted(d: Direct, cfg=None) -> list[float]:
    out = []
    for ev in d.evidence:
        a = adjust_evidence(ev, d.scope, d.now, cfg or d.cfg)
        if a is not EXCLUDED:
            out.append(a)
    return out


def _dep_terms(g: KnowledgeGraph, cid: str, values: dict, cfg: Config):
    c = g.claims[cid]
    for did in c.dependency_refs:
        level = match_level(c.scope, g.claims[did].scope)
        yield did, (0.0 if level is CongruenceLevel.NONE else max(0.0, values[did] - cfg.penalty(level)))


# -- bounds --------------------------------------------------------------------------


@prop(direct_cfg)
def bounds_direct(d: Direct, ctx):
    """A single claim scores inside [0, 1] and never NaN."""
    r = d.score(ctx)
    assert 0.0 <= r <= 1.0 and not math.isnan(r), r


@prop(graph_cfg, cost=10)
def bounds_graph(case, ctx):
    gc, cfg = case
    for cid, r in _scores(gc, ctx, cfg).items():
        assert 0.0 <= r <= 1.0 and not math.isnan(r), (cid, r)


# -- weakest link ---------------------------------------------------------------------


@prop(gens.scores)
def wlnk_aggregate(xs, ctx):
    """The operator never exceeds the least of its inputs."""
    assert aggregate(_op(ctx), xs) <= min(xs), (aggregate(_op(ctx), xs), min(xs))


@prop(direct1)
def wlnk_direct(d: Direct, ctx):
    r = d.score(ctx)
    for a in _adjusted(d):
        assert r <= a, (r, a)


@prop(graph, cost=10)
def wlnk_graph(case, ctx):
    """Every claim stays at or below each of its (penalised) premises."""
    cfg = _cfg(ctx)
    values = _scores(case, ctx)
    for cid in case.graph.claims:
        for did, bound in _dep_terms(case.graph, cid, values, cfg):
            assert values[cid] <= bound, (cid, did, values[cid], bound)


def _chain(t):
    return gens.graph_case(t, max_nodes=20, shape="chain", min_nodes=2, shared_scope=True)


@prop(_chain, cost=10)
def wlnk_chain_head(case, ctx):
    """In a same-scope chain the head is bounded by every adjusted item along it."""
    cfg = _cfg(ctx)
    g = case.graph
    head = max(g.claims, key=lambda c: int(c[1:]))
    r = effective_reliability(g, head, cfg, case.now, _op(ctx))
    for cid in g.ancestors(head) | {head}:
        for eid in g.claims[cid].evidence_refs:
            a = adjust_evidence(g.evidence[eid], g.claims[cid].scope, case.now, cfg)
            if a is not EXCLUDED:
                assert r <= a, (head, cid, eid, r, a)


def _premises(t):
    return gens.score(t), gens.score(t), gens.layer(t), gens.formality(t)


@prop(_premises)
def contradiction_cap(case, ctx):
    """A claim resting on a strong and a weak premise is capped by the weak one."""
    hi, lo, lay, form = case
    g = KnowledgeGraph(gens.T0)
    sc = Scope.of(task="x")
    for cid, s in (("p1", hi), ("p2", lo)):
        g.add_claim(ClaimNode(cid, cid, EpistemicLayer.L2, FormalityLevel.F3, sc, GEN))
        g.add_evidence(Evidence.create(f"e-{cid}", s, scope=sc, collected_at=gens.T0), [cid])
    g.add_claim(ClaimNode("q", "q", lay, form, sc, GEN, dependency_refs={"p1", "p2"}))
    r = effective_reliability(g, "q", DEFAULT_CONFIG, gens.T0, _op(ctx))
    assert r <= min(hi, lo, DEFAULT_CONFIG.formality_ceiling(FormalityLevel.F3)), (r, hi, lo)


# -- idempotence, commutativity -----------------------------------------------------------


@prop(gens.score)
def idem_aggregate(x, ctx):
    assert aggregate(_op(ctx), [x]) == x


@prop(gens.scores)
def idem_duplicates_aggregate(xs, ctx):
    """Repeating the whole multiset leaves the result unchanged."""
    op = _op(ctx)
    assert abs(aggregate(op, xs + xs) - aggregate(op, xs)) <= op.slack * 4, (aggregate(op, xs + xs), aggregate(op, xs))


@prop(direct1)
def idem_duplicate_evidence_direct(d: Direct, ctx):
    """Attaching an identical copy of an item does not move a min-based score."""
    copy = replace(d.evidence[0], id="dup")
    assert d.score(ctx, evidence=d.evidence + [copy]) == d.score(ctx)


def _perm(t):
    xs = gens.scores(t)
    return xs, t.shuffled(xs)


@prop(_perm)
def comm_aggregate(case, ctx):
    xs, ys = case
    op = _op(ctx)
    assert abs(aggregate(op, xs) - aggregate(op, ys)) <= op.slack * len(xs)


def _direct_perm(t):
    d = direct(t, min_ev=2)
    return d, t.shuffled(d.evidence)


@prop(_direct_perm)
def comm_evidence_order_direct(case, ctx):
    d, order = case
    assert d.score(ctx) == d.score(ctx, evidence=order)


def _graph_perm(t):
    gc = graph(t)
    return gc, t.shuffled(sorted(gc.graph.claims)), t.shuffled(gc.edges)


def _rebuild(g: KnowledgeGraph, claim_order, edge_order) -> KnowledgeGraph:
    h = KnowledgeGraph(g.clock)
    for cid in claim_order:
        c = g.claims[cid]
        h.add_claim(ClaimNode(cid, c.statement, c.layer, c.formality, c.scope, c.proposer))
    for eid in reversed(sorted(g.evidence)):
        h.add_evidence(g.evidence[eid])
    for cid in claim_order:
        for eid in sorted(g.claims[cid].evidence_refs, reverse=True):
            h.attach_evidence(cid, eid)
    for child, parent in edge_order:
        h.link_dependency(child, parent)
    return h


@prop(_graph_perm, cost=10)
def comm_construction_order_graph(case, ctx):
    """Scores do not depend on the order claims, items and edges were added."""
    gc, claim_order, edge_order = case
    h = _rebuild(gc.graph, claim_order, edge_order)
    assert _scores(gc, ctx) == score_all(h, _cfg(ctx), gc.now, _op(ctx))


# -- monotonicity -----------------------------------------------------------------------------


def _mono(t):
    xs = gens.scores(t)
    ys = [x if not t.boolean(0.5) else gens.unit_pair(t)[1] for x in xs]
    ys = [max(x, y) for x, y in zip(xs, ys)]
    return xs, ys


@prop(_mono)
def mono_aggregate(case, ctx):
    xs, ys = case
    op = _op(ctx)
    assert aggregate(op, xs) <= aggregate(op, ys) + op.slack, (aggregate(op, xs), aggregate(op, ys))


def _raise_one(t, d: Direct):
    i = t.draw(len(d.evidence))
    ev = d.evidence[i]
    higher = ev.raw_score + (1.0 - ev.raw_score) * gens.score(t)
    evs = list(d.evidence)
    evs[i] = replace(ev, raw_score=min(1.0, higher))
    return evs


def _direct_raised(t):
    d = direct1(t)
    return d, _raise_one(t, d)


@prop(_direct_raised)
def mono_evidence_direct(case, ctx):
    d, better = case
    assert d.score(ctx) <= d.score(ctx, evidence=better)


def _graph_raised(t):
    gc = graph(t)
    if not gc.graph.evidence:
        raise Rejected("no evidence")
    eid = t.choice(sorted(gc.graph.evidence))
    ev = gc.graph.evidence[eid]
    return gc, replace(ev, raw_score=min(1.0, ev.raw_score + (1 - ev.raw_score) * gens.score(t)))


@prop(_graph_raised, cost=10)
def mono_evidence_graph(case, ctx):
    """Raising one item never lowers any claim anywhere in the graph."""
    gc, better = case
    before = _scores(gc, ctx)
    h = gc.graph.snapshot()
    h.replace_evidence(better)
    after = score_all(h, _cfg(ctx), gc.now, _op(ctx))
    for cid in before:
        assert before[cid] <= after[cid], (cid, before[cid], after[cid])


def _direct_plus(t):
    d = direct(t)
    return d, gens.evidence(t, "extra", near=d.scope)


@prop(_direct_plus)
def adding_evidence_never_raises_direct(case, ctx):
    d, extra = case
    assert d.score(ctx, evidence=d.evidence + [extra]) <= d.score(ctx)


def _graph_extra_edge(t):
    gc = graph(t)
    ids = sorted(gc.graph.claims, key=lambda c: int(c[1:]))
    if len(ids) < 2:
        raise Rejected("single node")
    i = 1 + t.draw(len(ids) - 1)
    j = t.draw(i)
    return gc, ids[i], ids[j]


@prop(_graph_extra_edge, cost=10)
def adding_dependency_never_raises_graph(case, ctx):
    gc, child, parent = case
    before = _scores(gc, ctx)
    h = gc.graph.snapshot()
    h.link_dependency(child, parent)
    after = score_all(h, _cfg(ctx), gc.now, _op(ctx))
    for cid in before:
        assert after[cid] <= before[cid], (cid, before[cid], after[cid])


# -- ceilings ---------------------------------------------------------------------------------


@prop(direct_cfg)
def layer_ceiling_direct(d: Direct, ctx):
    assert d.score(ctx) <= d.cfg.layer_ceiling(d.layer)


@prop(graph_cfg, cost=10)
def layer_ceiling_graph(case, ctx):
    gc, cfg = case
    for cid, r in _scores(gc, ctx, cfg).items():
        assert r <= cfg.layer_ceiling(gc.graph.claims[cid].layer), cid


@prop(direct_cfg)
def formality_ceiling_direct(d: Direct, ctx):
    assert d.score(ctx) <= d.cfg.formality_ceiling(d.formality)


@prop(graph_cfg, cost=10)
def formality_ceiling_graph(case, ctx):
    gc, cfg = case
    for cid, r in _scores(gc, ctx, cfg).items():
        assert r <= cfg.formality_ceiling(gc.graph.claims[cid].formality), cid


@prop(direct_cfg)
def ceiling_monotone_in_layer(d: Direct, ctx):
    """Same evidence, higher layer: never a lower score."""
    rs = [d.score(ctx, layer=lay) for lay in EpistemicLayer]
    assert rs == sorted(rs), rs


@prop(direct_cfg)
def ceiling_monotone_in_formality(d: Direct, ctx):
    rs = [d.score(ctx, formality=f) for f in FormalityLevel]
    assert rs == sorted(rs), rs


def _bare(t):
    return gens.layer(t), gens.formality(t), gens.config(t)


@prop(_bare)
def dual_ceiling_direct(case, ctx):
    """A claim with no evidence and no premises sits at the lower of its two ceilings."""
    lay, form, cfg = case
    d = Direct(Scope.of(task="x"), lay, form, [], gens.T0, cfg)
    assert d.score(ctx) == min(cfg.layer_ceiling(lay), cfg.formality_ceiling(form))


def _bare_in_graph(t):
    return graph(t), gens.layer(t), gens.formality(t)


@prop(_bare_in_graph, cost=10)
def dual_ceiling_graph(case, ctx):
    """Unrelated nodes elsewhere in the graph do not move a bare claim."""
    gc, lay, form = case
    h = gc.graph.snapshot()
    h.add_claim(ClaimNode("bare", "bare", lay, form, Scope.of(task="x"), GEN))
    r = effective_reliability(h, "bare", _cfg(ctx), gc.now, _op(ctx))
    assert r == min(_cfg(ctx).layer_ceiling(lay), _cfg(ctx).formality_ceiling(form))


# -- empty sets ----------------------------------------------------------------------------------


@prop(lambda t: gens.config(t))
def empty_multiset_rejected(cfg, ctx):
    try:
        aggregate(_op(ctx), [])
    except EmptyMultiset:
        return
    raise AssertionError("empty multiset was aggregated")


def _deps_only(t):
    gc = gens.graph_case(t, max_nodes=6, min_nodes=2, shape="chain")
    for c in gc.graph.claims.values():
        if c.dependency_refs:
            c.evidence_refs.clear()
    gc.graph._users.clear()
    for c in gc.graph.claims.values():
        for e in c.evidence_refs:
            gc.graph._users.setdefault(e, set()).add(c.id)
    return gc


@prop(_deps_only, cost=5)
def empty_evidence_uses_premises_and_ceilings(gc, ctx):
    """Without evidence a derived claim is bounded only by premises and ceilings."""
    cfg = _cfg(ctx)
    values = _scores(gc, ctx)
    for cid, c in gc.graph.claims.items():
        if c.evidence_refs:
            continue
        expect = min([cfg.layer_ceiling(c.layer), cfg.formality_ceiling(c.formality)] + [v for _, v in _dep_terms(gc.graph, cid, values, cfg)])
        if _op(ctx) is OperatorKind.GODEL_MIN:
            assert values[cid] == expect, (cid, values[cid], expect)


# -- congruence -----------------------------------------------------------------------------------


def _related(t):
    base = gens.scope(t, allow_bottom=False)
    return base, gens.scope_near(t, base), gens.score(t), gens.method(t), gens.config(t)


def _fresh(raw, sc, m):
    return Evidence.create("e", raw, scope=sc, method=m, collected_at=gens.T0)


@prop(_related)
def congruence_adjustment_exact(case, ctx):
    """Adjusted score is raw times multiplier less the level's penalty, floored at 0."""
    base, other, raw, m, cfg = case
    ev = _fresh(raw, other, m)
    level = match_level(base, other)
    got = adjust_evidence(ev, base, gens.T0, cfg)
    if level is CongruenceLevel.NONE:
        assert got is EXCLUDED
    else:
        assert got == max(0.0, raw * cfg.multiplier(m) - cfg.penalty(level)), (got, level)


def _unrelated(t):
    base = gens.scope(t, allow_bottom=False)
    if base.is_top:
        base = Scope.of(task="a")
    return base, gens.conflicting(t, base), gens.score(t), gens.method(t), gens.config(t)


@prop(_unrelated)
def congruence_none_excluded_direct(case, ctx):
    """An item from an incompatible scope is dropped rather than scored."""
    base, other, raw, m, cfg = case
    assert match_level(base, other) is CongruenceLevel.NONE, (base, other)
    d = Direct(base, EpistemicLayer.L2, FormalityLevel.F3, [], gens.T0, cfg)
    assert d.score(ctx, evidence=[_fresh(raw, other, m)]) == d.score(ctx)


@prop(_related)
def congruence_levels_ordered(case, ctx):
    """The same item never scores higher under a weaker congruence level."""
    base, _, raw, m, cfg = case
    ev = _fresh(raw, base, m)
    a3 = adjust_evidence(ev, base, gens.T0, cfg)
    vals = [max(0.0, a3 - cfg.penalty(lv)) for lv in (CongruenceLevel.CL3, CongruenceLevel.CL2, CongruenceLevel.CL1)]
    assert vals[0] >= vals[1] >= vals[2], vals


@prop(graph, cost=10)
def dependency_congruence_graph(case, ctx):
    """Each premise term equals its score less the congruence penalty of the transfer."""
    cfg = _cfg(ctx)
    values = _scores(case, ctx)
    bd_cache = {}
    for cid in case.graph.claims:
        bd = bd_cache.setdefault(cid, explain(case.graph, cid, cfg, case.now))
        for term in bd.terms:
            if term.kind != "dependency":
                continue
            level = CongruenceLevel(term.congruence)
            want = 0.0 if level is CongruenceLevel.NONE else max(0.0, values[term.ref] - cfg.penalty(level))
            if _op(ctx) is OperatorKind.GODEL_MIN:
                assert term.value == want, (cid, term, want)


@prop(graph, cost=10)
def dependency_none_contributes_zero(case, ctx):
    """A premise from an incompatible scope pins the dependent claim to 0."""
    g = case.graph
    values = _scores(case, ctx)
    for cid, c in g.claims.items():
        if any(match_level(c.scope, g.claims[d].scope) is CongruenceLevel.NONE for d in c.dependency_refs):
            assert values[cid] <= 0.0, (cid, values[cid])


# -- verification method ----------------------------------------------------------------------------


@prop(_related)
def verification_multiplier_exact(case, ctx):
    base, _, raw, m, cfg = case
    got = adjust_evidence(_fresh(raw, base, m), base, gens.T0, cfg)
    assert got == raw * cfg.multiplier(m)


def _two_methods(t):
    return gens.score(t), gens.method(t), gens.method(t)


@prop(_two_methods)
def verification_method_ordered(case, ctx):
    """A stronger verification method never lowers the adjusted score."""
    raw, m1, m2 = case
    lo, hi = sorted((m1, m2))
    sc = Scope.of(task="x")
    assert adjust_evidence(_fresh(raw, sc, lo), sc, gens.T0) <= adjust_evidence(_fresh(raw, sc, hi), sc, gens.T0)


# -- decay --------------------------------------------------------------------------------------------


def _decay_case(t):
    cfg = gens.config(t)
    ev = gens.evidence(t, "e")
    return ev, cfg, gens.timestamp(t, 900), gens.timestamp(t, 900)


@prop(_decay_case)
def decay_full_until_expiry(case, ctx):
    ev, cfg, now, _ = case
    if now <= ev.valid_until:
        assert decay_factor(ev, now, cfg) == 1.0


@prop(_decay_case)
def decay_linear_in_grace(case, ctx):
    ev, cfg, now, _ = case
    want = oracles.decay(ev.valid_until, now, cfg.grace_days)
    assert abs(decay_factor(ev, now, cfg) - want) <= 1e-12, (decay_factor(ev, now, cfg), want)


@prop(_decay_case)
def decay_zero_after_grace(case, ctx):
    ev, cfg, now, _ = case
    if now >= ev.valid_until + cfg.grace and now > ev.valid_until:
        assert decay_factor(ev, now, cfg) == 0.0


def _direct_two_times(t):
    d = direct(t, min_ev=1)
    return d, sorted((gens.timestamp(t, 900), gens.timestamp(t, 900)))


@prop(_direct_two_times)
def decay_monotone_direct(case, ctx):
    """A claim's score never rises as the clock advances."""
    d, (t1, t2) = case
    assert d.score(ctx, now=t2) <= d.score(ctx, now=t1)


def _graph_two_times(t):
    gc = graph(t)
    return gc, sorted((gens.timestamp(t, 900), gens.timestamp(t, 900)))


@prop(_graph_two_times, cost=10)
def decay_monotone_graph(case, ctx):
    gc, (t1, t2) = case
    early, late = _scores(gc, ctx, now=t1), _scores(gc, ctx, now=t2)
    for cid in early:
        assert late[cid] <= early[cid], (cid, early[cid], late[cid])


# -- LLM faithfulness cap ------------------------------------------------------------------------------


def _capped(t):
    d = direct1(t)
    cap = gens.score(t)
    return d, Config(llm_cap=cap)


@prop(_capped)
def faithfulness_cap_direct(case, ctx):
    """An LLM-generated item never contributes more than the cap."""
    d, cfg = case
    for ev in d.evidence:
        a = adjust_evidence(ev, d.scope, d.now, cfg)
        if a is not EXCLUDED and ev.provenance.startswith("llm-generated"):
            assert a <= cfg.llm_cap, (a, cfg.llm_cap)


@prop(_capped)
def faithfulness_cap_spares_others(case, ctx):
    d, cfg = case
    for ev in d.evidence:
        if not ev.provenance.startswith("llm-generated"):
            assert adjust_evidence(ev, d.scope, d.now, cfg) == adjust_evidence(ev, d.scope, d.now, DEFAULT_CONFIG)


def _graph_capped(t):
    return graph(t), Config(llm_cap=gens.score(t))


@prop(_graph_capped, cost=10)
def faithfulness_cap_graph(case, ctx):
    """Claims resting, directly or through premises, on LLM output stay under the cap."""
    gc, cfg = case
    g = gc.graph
    values = _scores(gc, ctx, cfg)
    for cid, c in g.claims.items():
        llm_direct = [
            e for e in c.evidence_refs
            if g.evidence[e].provenance.startswith("llm-generated") and match_level(c.scope, g.evidence[e].scope) is not CongruenceLevel.NONE
        ]
        if llm_direct:
            assert values[cid] <= cfg.llm_cap, (cid, values[cid])
            for d in g.descendants([cid]):
                assert values[d] <= cfg.llm_cap, (d, values[d])


def _faith_fixture(t):
    return gens.layer(t), FormalityLevel(3 - t.draw(3))


@prop(_faith_fixture)
def faithfulness_fixture_exact(case, ctx):
    """A verified 0.85 item tagged as LLM output scores exactly the cap."""
    lay, form = case
    if lay is EpistemicLayer.L0:
        lay = EpistemicLayer.L1
    cfg = Config(llm_cap=CURRENT_MODEL_FAITHFULNESS)
    sc = Scope.of(task="x")
    ev = Evidence.create("e", 0.85, formality=FormalityLevel.F1, scope=sc, collected_at=gens.T0, provenance="llm-generated")
    d = Direct(sc, lay, form, [ev], gens.T0, cfg)
    assert d.score(ctx) == CURRENT_MODEL_FAITHFULNESS


# -- presets and config inheritance ----------------------------------------------------------------------


@prop(gens.config)
def config_roundtrip(cfg, ctx):
    assert load_config(cfg.to_json()) == cfg


def _partial(t):
    cfg = gens.config(t)
    full = cfg.to_json()
    keys = [k for k in full if t.boolean(0.5)]
    return {k: full[k] for k in keys}


@prop(_partial)
def config_partial_inherits_defaults(partial, ctx):
    """Keys left out of a config keep their default values."""
    cfg = load_config(partial)
    full, base = cfg.to_json(), DEFAULT_CONFIG.to_json()
    for k in full:
        assert full[k] == (partial[k] if k in partial else base[k]), k


@prop(graph_cfg, cost=10)
def config_reload_scores_identical(case, ctx):
    gc, cfg = case
    again = load_config(cfg.to_json())
    assert _scores(gc, ctx, cfg) == _scores(gc, ctx, again)


def _shuffled_ceilings(t):
    xs = list(gens.ascending(t, 4, 0.3))
    i = t.draw(3)
    xs[i], xs[i + 1] = xs[i + 1], xs[i]
    return xs


@prop(_shuffled_ceilings)
def config_ordering_enforced(xs, ctx):
    """Ceilings out of order are rejected at load time."""
    try:
        load_config({"formality_ceilings": {f"F{i}": x for i, x in enumerate(xs)}})
    except OrderingViolation:
        return
    raise AssertionError(f"accepted unordered ceilings {xs}")


# -- two-tier aggregation ----------------------------------------------------------------------------------


def _roles(t):
    groups = {}
    for r in EvidenceRole:
        if t.boolean(0.6):
            groups[r] = gens.scores(t, 1, 5)
    if not groups:
        groups[EvidenceRole.OTHER] = [gens.score(t)]
    gates = groups.get(EvidenceRole.GATE)
    outcomes = [not t.boolean(0.15) for _ in gates] if gates else None
    return groups, outcomes


@prop(_roles)
def two_tier_failed_gate_zero(case, ctx):
    groups, outcomes = case
    if outcomes and not all(outcomes):
        assert two_tier_aggregate(groups, outcomes) == 0.0


@prop(_roles)
def two_tier_below_every_role(case, ctx):
    groups, outcomes = case
    total = two_tier_aggregate(groups, outcomes)
    for r, v in role_scores(groups, outcomes).items():
        assert total <= v, (r, total, v)


@prop(_roles)
def two_tier_bounds(case, ctx):
    groups, outcomes = case
    assert 0.0 <= two_tier_aggregate(groups, outcomes) <= 1.0


@prop(lambda t: gens.scores(t, 1, 8))
def two_tier_quality_prob_sum(xs, ctx):
    """Independent quality signals combine to at least the best one and at most 1."""
    p = probabilistic_sum(xs)
    assert max(xs) - 1e-15 <= p <= 1.0, (p, xs)


@prop(lambda t: gens.scores(t, 1, 8))
def two_tier_performance_owa(xs, ctx):
    """The conservative OWA stays between the minimum and the plain mean."""
    o = conservative_owa(xs)
    mean = math.fsum(xs) / len(xs)
    assert min(xs) <= o <= mean + 1e-12, (o, xs)


@prop(lambda t: gens.scores(t, 1, 8))
def two_tier_gate_and_other_min(xs, ctx):
    rs = role_scores({EvidenceRole.GATE: xs, EvidenceRole.OTHER: xs})
    assert rs[EvidenceRole.GATE] == min(xs) == rs[EvidenceRole.OTHER]


def _roles_perm(t):
    groups, outcomes = _roles(t)
    order = t.shuffled(list(groups))
    return groups, {r: t.shuffled(groups[r]) if r is not EvidenceRole.GATE else groups[r] for r in order}, outcomes


@prop(_roles_perm)
def two_tier_order_invariant(case, ctx):
    a, b, outcomes = case
    assert abs(two_tier_aggregate(a, outcomes) - two_tier_aggregate(b, outcomes)) <= 1e-12


@prop(graph, cost=10)
def two_tier_graph(case, ctx):
    """Role aggregation over a claim's live evidence stays below each role score."""
    g = case.graph
    for cid in g.claims:
        groups = claim_role_groups(g, cid, _cfg(ctx), case.now)
        if not groups:
            continue
        rs = role_scores(groups)
        total = min(rs.values())
        assert all(total <= v for v in rs.values())
        assert 0.0 <= total <= 1.0


# -- explanation and purity -------------------------------------------------------------------------------------


@prop(direct_cfg)
def explain_matches_score_direct(d: Direct, ctx):
    """The reported breakdown's value and dominating term agree with the score."""
    g, cid = d.build()
    bd = explain(g, cid, d.cfg, d.now)
    assert bd.value == effective_reliability(g, cid, d.cfg, d.now)
    assert bd.dominating.value == bd.value
    assert bd.value == min(t.value for t in bd.terms)


@prop(graph, cost=10)
def explain_path_nondecreasing_graph(case, ctx):
    """Scores along the weakest-link path never decrease toward the root cause."""
    g = case.graph
    values = score_all(g, _cfg(ctx), case.now)
    for cid in g.claims:
        path = explain(g, cid, _cfg(ctx), case.now).weakest_link
        for a, b in zip(path, path[1:]):
            assert b in g.claims[a].dependency_refs
            assert values[a] <= values[b], (path, values[a], values[b])


@prop(graph, cost=10)
def scoring_is_pure(case, ctx):
    """Scoring reads the graph without touching cached values or dirty marks."""
    g = case.graph
    before = g.state(), {k: c.cached_r_eff for k, c in g.claims.items()}, set(g.dirty)
    for cid in g.claims:
        effective_reliability(g, cid, _cfg(ctx), case.now, _op(ctx))
    assert before == (g.state(), {k: c.cached_r_eff for k, c in g.claims.items()}, set(g.dirty))


@prop(graph, cost=10)
def propagate_caches_scores(case, ctx):
    g = case.graph.snapshot()
    propagate(g, _cfg(ctx), case.now, op=_op(ctx))
    want = score_all(g, _cfg(ctx), case.now, _op(ctx))
    assert {k: c.cached_r_eff for k, c in g.claims.items()} == want


@prop(direct_cfg)
def oracle_direct(d: Direct, ctx):
    """Matches a from-scratch reference implementation of the scoring rule."""
    g, cid = d.build()
    want = oracles.reliability(g, d.cfg, d.now)[cid]
    got = d.score(ctx)
    assert abs(got - want) <= EPS, (got, want)


@prop(graph_cfg, cost=10)
def oracle_graph(case, ctx):
    gc, cfg = case
    want = oracles.reliability(gc.graph, cfg, gc.now)
    got = _scores(gc, ctx, cfg)
    for cid in want:
        assert abs(got[cid] - want[cid]) <= EPS * 10, (cid, got[cid], want[cid])


def _status(t):
    return graph(t), t.choice(list(ClaimStatus))


@prop(_status, cost=10)
def status_does_not_change_score(case, ctx):
    gc, status = case
    before = _scores(gc, ctx)
    h = gc.graph.snapshot()
    for c in h.claims.values():
        c.status = status
    assert score_all(h, _cfg(ctx), gc.now, _op(ctx)) == before


@prop(graph, cost=10)
def scoring_deterministic(case, ctx):
    assert _scores(case, ctx) == _scores(case, ctx)


def _subnormal_direct(t):
    d = direct1(t)
    evs = [replace(ev, raw_score=gens.EDGE_SCORES[t.draw(len(gens.EDGE_SCORES))]) for ev in d.evidence]
    return d, evs


@prop(_subnormal_direct)
def bounds_edge_scores_direct(case, ctx):
    """Edge values (0, 1, subnormals, 1 - ulp) stay in range through every adjustment."""
    d, evs = case
    r = d.score(ctx, evidence=evs)
    assert 0.0 <= r <= 1.0 and not math.isnan(r)


@prop(_subnormal_direct)
def zero_item_pins_to_zero(case, ctx):
    """A live, fully matched item with raw score 0 forces the claim to 0."""
    d, evs = case
    zero = Evidence.create("z", 0.0, scope=d.scope, collected_at=gens.T0, valid_until=d.now + timedelta(days=1))
    assert d.score(ctx, evidence=evs + [zero]) == 0.0
