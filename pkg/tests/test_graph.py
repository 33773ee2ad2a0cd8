import json
from datetime import timedelta

import pytest
from conftest import GEN, T0, chain_graph, claim, evidence
from hypothesis import given, settings
from hypothesis import strategies as st

from quintet.core import CURRENT_MODEL_FAITHFULNESS, DEFAULT_CONFIG, Config, EpistemicLayer, EvidenceRole, VerificationMethod
from quintet.errors import CycleDetected, DuplicateId, EmptyEvidence, MissingRef, RangeViolation
from quintet.gamma import OperatorKind, aggregate
from quintet.graph import (
    EXCLUDED,
    ClaimStatus,
    KnowledgeGraph,
    adjust_evidence,
    conservative_owa,
    effective_reliability,
    explain,
    inspect_dependencies,
    probabilistic_sum,
    propagate,
    role_scores,
    score_all,
    sweep_stale,
    two_tier_aggregate,
)
from quintet.scope import BOTTOM, parse_scope

SC = parse_scope("task=multihop")


# -- evidence adjustment --


def test_adjust_self_reported():
    ev = evidence("e", 0.8, method=VerificationMethod.SELF_REPORTED)
    assert adjust_evidence(ev, SC, T0) == pytest.approx(0.48)


def test_adjust_cl1_penalty():
    ev = evidence("e", 0.9, scope="task=multihop,env=a")
    assert adjust_evidence(ev, parse_scope("task=multihop,model=b"), T0) == pytest.approx(0.5)


def test_adjust_none_is_excluded():
    ev = evidence("e", 0.9, scope="task=other")
    assert adjust_evidence(ev, SC, T0) is EXCLUDED


def test_adjust_decay():
    ev = evidence("e", 0.9, days=10)
    grace = DEFAULT_CONFIG.grace_days
    assert adjust_evidence(ev, SC, T0 + timedelta(days=10)) == 0.9
    half = T0 + timedelta(days=10 + grace / 2)
    assert adjust_evidence(ev, SC, half) == pytest.approx(0.45)
    assert adjust_evidence(ev, SC, T0 + timedelta(days=10 + grace + 1)) == 0.0


def test_llm_cap_only_for_llm_provenance():
    cfg = Config(llm_cap=0.39)
    tagged = evidence("a", 0.85, provenance="llm-generated:llm-1")
    plain = evidence("b", 0.85, provenance="lab notebook")
    assert adjust_evidence(tagged, SC, T0, cfg) == 0.39
    assert adjust_evidence(plain, SC, T0, cfg) == 0.85


def test_valid_until_before_collected():
    with pytest.raises(RangeViolation):
        evidence("e", 0.5, days=-1)


# -- effective reliability --


def test_worked_chain(chain):
    assert effective_reliability(chain, "S1") == 0.40
    terms = [0.95, 0.85, 0.40]
    assert aggregate(OperatorKind.MEAN, terms) == pytest.approx(0.7333333333, abs=1e-9)
    bd = explain(chain, "S1")
    assert bd.weakest_link == ["S1", "S2", "S3"]
    assert bd.dominating.kind == "dependency" and bd.dominating.ref == "S2"


def test_effective_reliability_is_pure(chain):
    before = chain.state()
    effective_reliability(chain, "S1")
    assert chain.state() == before
    assert chain.claims["S1"].cached_r_eff == 0.0


def test_contradiction_capping():
    g = KnowledgeGraph(T0)
    for cid, s in (("P1", 0.9), ("P2", 0.3)):
        g.add_claim(claim(cid, formality="F3"))
        g.add_evidence(evidence(f"e{cid}", s), [cid])
    g.add_claim(claim("Q", formality="F3", deps=["P1", "P2"]))
    assert effective_reliability(g, "P1") == 0.9
    assert effective_reliability(g, "Q") <= 0.3


@pytest.mark.parametrize("layer, formality, expected", [("L0", "F3", 0.35), ("L2", "F2", 0.95), ("L1", "F0", 0.70)])
def test_dual_ceiling(layer, formality, expected):
    g = KnowledgeGraph(T0)
    g.add_claim(claim("X", layer=layer, formality=formality))
    assert effective_reliability(g, "X") == expected


def test_faithfulness_cap():
    g = KnowledgeGraph(T0)
    g.add_claim(claim("X", layer="L1", formality="F1"))
    g.add_evidence(evidence("e", 0.85, provenance="llm-generated"), ["X"])
    assert effective_reliability(g, "X") == 0.75
    cfg = Config(llm_cap=CURRENT_MODEL_FAITHFULNESS)
    assert effective_reliability(g, "X", cfg) == 0.39


def test_none_scoped_dependency_contributes_zero():
    g = KnowledgeGraph(T0)
    g.add_claim(claim("P", scope="task=other"))
    g.add_evidence(evidence("e", 0.9, scope="task=other"), ["P"])
    g.add_claim(claim("Q", deps=["P"]))
    assert effective_reliability(g, "Q") == 0.0


def test_bottom_scope_claim_excludes_everything():
    g = KnowledgeGraph(T0)
    g.add_claim(claim("X", scope="!"))
    assert g.claims["X"].unmatchable
    g.add_evidence(evidence("e", 0.9), ["X"])
    assert explain(g, "X").excluded == ["e"]


def test_chain_of_fifty_with_weak_link():
    g = KnowledgeGraph(T0)
    for i in range(50):
        g.add_claim(claim(f"c{i}", deps=[f"c{i - 1}"] if i else []))
        g.add_evidence(evidence(f"e{i}", 0.2 if i == 17 else 0.9), [f"c{i}"])
    propagate(g, now=T0, mode="full")
    assert g.claims["c49"].cached_r_eff == 0.2
    assert g.claims["c16"].cached_r_eff == 0.9


def test_diamond_counts_shared_premise_once():
    g = KnowledgeGraph(T0)
    g.add_claim(claim("A"))
    g.add_claim(claim("B", deps=["A"]))
    g.add_claim(claim("C", deps=["A"]))
    g.add_claim(claim("D", deps=["B", "C"]))
    g.add_evidence(evidence("eA", 0.9), ["A"])
    propagate(g, now=T0, mode="full")
    from dataclasses import replace

    g.replace_evidence(replace(g.evidence["eA"], raw_score=0.3))
    recomputed = propagate(g, now=T0)
    assert recomputed == {"A", "B", "C", "D"}
    assert g.claims["D"].cached_r_eff == 0.3
    full = score_all(g, now=T0)
    assert {k: c.cached_r_eff for k, c in g.claims.items()} == full


def test_incremental_skips_unrelated_claims():
    g = chain_graph()
    g.add_claim(claim("Z"))
    propagate(g, now=T0, mode="full")
    g.add_evidence(evidence("new", 0.1), ["S2"])
    assert propagate(g, now=T0) == {"S1", "S2"}
    assert g.claims["S1"].cached_r_eff == 0.1


def test_config_change_forces_full_pass(chain):
    propagate(chain, now=T0)
    assert propagate(chain, Config(llm_cap=0.5), T0) == set(chain.claims)


def test_propagate_rejects_bad_mode(chain):
    with pytest.raises(ValueError):
        propagate(chain, now=T0, mode="lazy")


# -- graph mutation --


def test_cycle_rejected():
    g = KnowledgeGraph(T0)
    g.add_claim(claim("A"))
    g.add_claim(claim("B"))
    g.link_dependency("A", "B")
    with pytest.raises(CycleDetected):
        g.link_dependency("B", "A")
    with pytest.raises(CycleDetected):
        g.link_dependency("A", "A")


def test_ids_unique_and_refs_checked():
    g = KnowledgeGraph(T0)
    g.add_claim(claim("A"))
    with pytest.raises(DuplicateId):
        g.add_claim(claim("A"))
    with pytest.raises(DuplicateId):
        g.add_evidence(evidence("A", 0.5))
    with pytest.raises(MissingRef):
        g.add_claim(claim("B", deps=["nope"]))
    with pytest.raises(MissingRef):
        g.attach_evidence("A", "missing")


def test_contradiction_is_symmetric():
    g = KnowledgeGraph(T0)
    g.add_claim(claim("P", layer="L0"))
    g.add_claim(claim("Q", layer="L0"))
    g.declare_contradiction("P", "Q")
    assert g.claims["P"].contradiction_refs == {"Q"}
    assert g.claims["Q"].contradiction_refs == {"P"}
    with pytest.raises(ValueError):
        g.declare_contradiction("P", "P")


def test_contradicting_validated_claim_marks_the_weaker():
    g = KnowledgeGraph(T0)
    g.add_claim(claim("V", layer="L2"))
    g.add_claim(claim("W", layer="L0"))
    g.declare_contradiction("W", "V")
    assert g.claims["W"].status is ClaimStatus.CONTRADICTED
    assert g.claims["V"].status is ClaimStatus.ACTIVE


def test_persistence_roundtrip(tmp_path, chain):
    propagate(chain, now=T0)
    path = tmp_path / "g.jsonl"
    chain.save(path)
    again = KnowledgeGraph.load(path)
    assert again.state() == chain.state()
    assert again.dumps() == chain.dumps()


def test_load_rejects_nan(chain):
    lines = chain.dumps().splitlines()
    bad = [ln.replace('"raw_score":0.4', '"raw_score":NaN') for ln in lines]
    assert bad != lines
    with pytest.raises(RangeViolation):
        KnowledgeGraph.loads("\n".join(bad))


def test_load_rejects_garbage():
    with pytest.raises(ValueError):
        KnowledgeGraph.loads("{not json")


def test_snapshot_is_isolated(chain):
    snap = chain.snapshot()
    chain.set_layer("S3", EpistemicLayer.L0)
    assert snap.claims["S3"].layer is EpistemicLayer.L2


# -- two-tier --


def test_failed_gate_zeroes():
    groups = {EvidenceRole.GATE: [0.9, 0.8], EvidenceRole.QUALITY: [0.9]}
    assert two_tier_aggregate(groups, [True, False]) == 0.0


def test_quality_probabilistic_sum():
    assert two_tier_aggregate({EvidenceRole.QUALITY: [0.5, 0.5]}) == 0.75


def test_gate_and_performance():
    perf = [0.6]
    assert two_tier_aggregate({EvidenceRole.GATE: [0.9], EvidenceRole.PERFORMANCE: perf}) == 0.6


def test_owa_weights():
    # sorted [0.2, 0.8]: weights 4/6 and 2/6
    assert conservative_owa([0.8, 0.2]) == pytest.approx(0.2 * 4 / 6 + 0.8 * 2 / 6)
    assert probabilistic_sum([0.0]) == 0.0


def test_two_tier_errors():
    with pytest.raises(EmptyEvidence):
        two_tier_aggregate({})
    with pytest.raises(ValueError):
        role_scores({EvidenceRole.GATE: [0.5]}, [True, True])


roles = st.dictionaries(st.sampled_from(list(EvidenceRole)), st.lists(st.floats(0, 1), min_size=1, max_size=6), min_size=1)


@given(roles, st.data())
def test_two_tier_bounded_by_role_scores(groups, data):
    n = len(groups.get(EvidenceRole.GATE, [])) or data.draw(st.integers(0, 3))
    outcomes = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
    per_role = role_scores(groups, outcomes)
    total = two_tier_aggregate(groups, outcomes)
    assert total == min(per_role.values())
    assert 0.0 <= total <= 1.0
    if outcomes and not all(outcomes):
        assert total == 0.0


# -- staleness --


def test_sweep_noop_when_nothing_expired(chain):
    propagate(chain, now=T0)
    before = chain.state()
    assert sweep_stale(chain, now=T0 + timedelta(days=1)) == []
    assert chain.state()[:2] == before[:2]


def test_sweep_flags_dependents_and_demotes():
    g = chain_graph()
    g.add_claim(claim("Other"))
    g.add_evidence(evidence("eo", 0.9, days=400), ["Other"])
    flagged = sweep_stale(g, now=T0 + timedelta(days=91))
    assert flagged == ["S1", "S2", "S3"]
    for cid in flagged:
        assert g.claims[cid].status is ClaimStatus.STALE
        assert g.claims[cid].layer is EpistemicLayer.L1
    assert g.claims["Other"].status is ClaimStatus.ACTIVE
    assert g.claims["Other"].layer is EpistemicLayer.L2


def test_sweep_keeps_l2_with_live_evidence():
    g = KnowledgeGraph(T0)
    g.add_claim(claim("X"))
    g.add_evidence(evidence("old", 0.9, days=5), ["X"])
    g.add_evidence(evidence("new", 0.8, days=300), ["X"])
    assert sweep_stale(g, now=T0 + timedelta(days=10)) == ["X"]
    assert g.claims["X"].layer is EpistemicLayer.L2


# -- inspection --


def test_inspect_diamond_lists_shared_premise_once():
    g = KnowledgeGraph(T0)
    g.add_claim(claim("A"))
    g.add_claim(claim("B", deps=["A"]))
    g.add_claim(claim("C", deps=["A"]))
    g.add_claim(claim("D", deps=["B", "C"]))
    entries = inspect_dependencies(g, "D")
    assert [(e.id, e.depth) for e in entries] == [("D", 0), ("B", 1), ("C", 1), ("A", 2)]


def test_inspect_singleton():
    g = KnowledgeGraph(T0)
    g.add_claim(claim("X"))
    assert [e.id for e in inspect_dependencies(g, "X")] == ["X"]


def test_explain_json(chain):
    j = explain(chain, "S1").to_json()
    json.dumps(j)
    assert j["weakest_link"] == "S3" and j["path"] == ["S1", "S2", "S3"]
    assert j["r_eff"] == 0.4


@settings(max_examples=50)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=6))
def test_claim_never_exceeds_any_evidence(scores):
    g = KnowledgeGraph(T0)
    g.add_claim(claim("X", formality="F3"))
    for i, s in enumerate(scores):
        g.add_evidence(evidence(f"e{i}", s), ["X"])
    assert effective_reliability(g, "X") == min(scores + [0.99])
