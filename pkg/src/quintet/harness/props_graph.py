"""Graph topology (acyclicity, locality, persistence) and dependency inspection."""

from __future__ import annotations

from dataclasses import replace

from ..core import DEFAULT_CONFIG
from ..errors import CycleDetected
from ..graph import (
    EXCLUDED,
    KnowledgeGraph,
    adjust_evidence,
    effective_reliability,
    explain,
    inspect_dependencies,
    propagate,
    score_all,
)
from . import gens, oracles
from .engine import REGISTRY, Rejected

TOPO = "graph_topology"
INSPECT = "dependency_inspector"


def medium(t):
    return gens.graph_case(t, max_nodes=20)


def _links(t):
    gc = gens.graph_case(t, max_nodes=12, min_nodes=2)
    ids = sorted(gc.graph.claims)
    extra = [(t.choice(ids), t.choice(ids)) for _ in range(t.draw(8))]
    return gc, extra


@REGISTRY.add(TOPO, _links, cost=10)
def cycles_rejected(case, ctx):
    """Edges that would close a cycle are refused and the graph stays acyclic."""
    gc, extra = case
    g = gc.graph.snapshot()
    for child, parent in extra:
        closes = child == parent or child in g.ancestors(parent)
        try:
            g.link_dependency(child, parent)
        except CycleDetected:
            assert closes, (child, parent)
            continue
        assert not closes, (child, parent)
    g.topological_order()


@REGISTRY.add(TOPO, medium, cost=10)
def topological_order_respects_edges(gc, ctx):
    order = gc.graph.topological_order()
    pos = {c: i for i, c in enumerate(order)}
    assert sorted(order) == sorted(gc.graph.claims)
    for cid, c in gc.graph.claims.items():
        for d in c.dependency_refs:
            assert pos[d] < pos[cid], (d, cid)


def _perturbed(t):
    gc = gens.large_dag(t)
    if not gc.graph.evidence:
        raise Rejected("no evidence")
    eid = t.choice(sorted(gc.graph.evidence))
    return gc, eid, gens.score(t), gens.timestamp(t, 900)


@REGISTRY.add(TOPO, _perturbed, cost=50)
def incremental_matches_full(case, ctx):
    """Incremental propagation after an edit equals a full recomputation, bit for bit."""
    gc, eid, new_score, later = case
    g = gc.graph
    propagate(g, DEFAULT_CONFIG, gc.now, "full")
    g.replace_evidence(replace(g.evidence[eid], raw_score=new_score))
    propagate(g, DEFAULT_CONFIG, later, "incremental")
    inc = {k: c.cached_r_eff for k, c in g.claims.items()}
    full = g.snapshot()
    propagate(full, DEFAULT_CONFIG, later, "full")
    assert inc == {k: c.cached_r_eff for k, c in full.claims.items()}


@REGISTRY.add(TOPO, _perturbed, cost=50)
def perturbation_stays_local(case, ctx):
    """Changing one item moves no score outside the claims that use it and their dependents."""
    gc, eid, new_score, _ = case
    g = gc.graph
    before = score_all(g, DEFAULT_CONFIG, gc.now)
    users = {c for c, n in g.claims.items() if eid in n.evidence_refs}
    reach = users | oracles.descendants(g, users)
    g.replace_evidence(replace(g.evidence[eid], raw_score=new_score))
    after = score_all(g, DEFAULT_CONFIG, gc.now)
    moved = {c for c in before if before[c] != after[c]}
    assert moved <= reach, sorted(moved - reach)


@REGISTRY.add(TOPO, medium, cost=10)
def persistence_roundtrip(gc, ctx):
    g = gc.graph
    propagate(g, DEFAULT_CONFIG, gc.now)
    again = KnowledgeGraph.loads(g.dumps())
    assert again.state() == g.state()
    assert again.dumps() == g.dumps()


@REGISTRY.add(TOPO, medium, cost=10)
def snapshot_isolated_from_writes(gc, ctx):
    g = gc.graph
    snap = g.snapshot()
    frozen = snap.state()
    ids = sorted(g.claims)
    g.set_layer(ids[0], type(g.claims[ids[0]].layer)(2 - int(g.claims[ids[0]].layer)))
    for e in list(g.evidence)[:2]:
        g.replace_evidence(replace(g.evidence[e], raw_score=0.0))
    propagate(g, DEFAULT_CONFIG, gc.now)
    assert snap.state() == frozen


@REGISTRY.add(TOPO, medium, cost=10)
def ancestors_descendants_dual(gc, ctx):
    g = gc.graph
    for a in g.claims:
        down = g.descendants([a])
        assert down == oracles.descendants(g, [a])
        for b in g.claims:
            assert (b in down) == (a in g.ancestors(b)), (a, b)


# -- dependency inspector ------------------------------------------------------------------


def inspected(t):
    gc = gens.graph_case(t, max_nodes=15)
    propagate(gc.graph, DEFAULT_CONFIG, gc.now, "full")
    root = t.choice(sorted(gc.graph.claims))
    return gc, root, inspect_dependencies(gc.graph, root)


def insp(cost=5):
    return REGISTRY.add(INSPECT, inspected, cost)


@insp()
def inspect_reaches_every_premise(case, ctx):
    gc, root, entries = case
    claims = {e.id for e in entries if e.kind == "claim"}
    assert claims == gc.graph.ancestors(root) | {root}


@insp()
def inspect_lists_all_evidence(case, ctx):
    gc, root, entries = case
    g = gc.graph
    want = set()
    for cid in g.ancestors(root) | {root}:
        want |= g.claims[cid].evidence_refs
    assert {e.id for e in entries if e.kind == "evidence"} == want


@insp()
def inspect_no_duplicates(case, ctx):
    _, _, entries = case
    ids = [e.id for e in entries]
    assert len(ids) == len(set(ids))


@insp()
def inspect_depth_is_shortest_path(case, ctx):
    gc, root, entries = case
    depths = oracles.bfs_depths(gc.graph, root)
    assert {e.id: e.depth for e in entries} == depths


@insp()
def inspect_sorted_by_depth_then_id(case, ctx):
    _, root, entries = case
    keys = [(e.depth, e.id) for e in entries]
    assert keys == sorted(keys)
    assert entries[0].id == root and entries[0].depth == 0


@insp()
def inspect_scores_match_scoring(case, ctx):
    gc, _, entries = case
    for e in entries:
        if e.kind == "claim":
            assert e.r_eff == effective_reliability(gc.graph, e.id, DEFAULT_CONFIG, gc.now), e


def _rebuilt(t):
    gc, root, entries = inspected(t)
    from .props_reff import _rebuild

    h = _rebuild(gc.graph, t.shuffled(sorted(gc.graph.claims)), t.shuffled(gc.edges))
    propagate(h, DEFAULT_CONFIG, gc.now, "full")
    return entries, inspect_dependencies(h, root)


@REGISTRY.add(INSPECT, _rebuilt, cost=5)
def inspect_independent_of_insertion_order(case, ctx):
    a, b = case
    assert [x.to_json() for x in a] == [x.to_json() for x in b]


@insp()
def explain_path_follows_dependencies(case, ctx):
    gc, root, _ = case
    bd = explain(gc.graph, root, DEFAULT_CONFIG, gc.now)
    assert bd.weakest_link[0] == root
    for a, b in zip(bd.weakest_link, bd.weakest_link[1:]):
        assert b in gc.graph.claims[a].dependency_refs


@insp()
def explain_terms_cover_every_input(case, ctx):
    """Every item and premise shows up either as a term or as excluded."""
    gc, root, _ = case
    g = gc.graph
    c = g.claims[root]
    bd = explain(g, root, DEFAULT_CONFIG, gc.now)
    ev_terms = {t.ref for t in bd.terms if t.kind == "evidence"}
    dep_terms = {t.ref for t in bd.terms if t.kind == "dependency"}
    assert ev_terms | set(bd.excluded) == c.evidence_refs and not ev_terms & set(bd.excluded)
    assert dep_terms == c.dependency_refs
    for eid in bd.excluded:
        assert adjust_evidence(g.evidence[eid], c.scope, gc.now) is EXCLUDED


@insp()
def explain_json_schema_stable(case, ctx):
    gc, root, entries = case
    bd = explain(gc.graph, root, DEFAULT_CONFIG, gc.now).to_json()
    assert set(bd) == {"claim", "r_eff", "terms", "excluded_evidence", "dominating", "weakest_link", "path"}
    for term in bd["terms"] + [bd["dominating"]]:
        assert {"kind", "ref", "value"} <= set(term) <= {"kind", "ref", "value", "congruence"}
    for e in entries:
        j = e.to_json()
        assert {"id", "kind", "depth"} <= set(j)
        assert ("layer" in j) == (e.kind == "claim")
