from datetime import timedelta

import pytest
from conftest import GEN, HUMAN, T0, VER, evidence
from hypothesis import given
from hypothesis import strategies as st

from quintet.core import Actor, ActorKind, EpistemicLayer, FormalityLevel, VerificationMethod
from quintet.drr import DrrStore
from quintet.errors import (
    ClaimDiscarded,
    ContradictsValidated,
    IllegalTransition,
    InsufficientEvidence,
    LayerSkip,
    NotCorroborated,
    SelfRatification,
    SelfVerification,
)
from quintet.fsm import PromotionRequest, deploy, discard, promote, propose, ratify
from quintet.graph import ClaimStatus, KnowledgeGraph
from quintet.harness.props_fsm import Command, simulate
from quintet.phases import TRANSITIONS, Event, Phase, run_events, transition
from quintet.scope import BOTTOM, parse_scope

TASK = parse_scope("task=multihop")


def fresh():
    g = KnowledgeGraph(T0)
    c = propose(g, "32K context improves retrieval", TASK, FormalityLevel.F1, GEN)
    return g, c


def to_l2(g, cid):
    promote(g, PromotionRequest(cid, EpistemicLayer.L1, VER))
    g.add_evidence(evidence("run-1", 0.9, method=VerificationMethod.SCRIPT_ATTACHED))
    promote(g, PromotionRequest(cid, EpistemicLayer.L2, VER, ("run-1",)))
    return g.claims[cid]


# -- phase table --


def test_phase_examples():
    assert transition(Phase.IDLE, Event.START) is Phase.ABDUCTION
    assert transition(Phase.DEDUCTION, Event.RESET) is Phase.IDLE
    with pytest.raises(IllegalTransition):
        transition(Phase.OPERATION, Event.RESET)
    with pytest.raises(IllegalTransition):
        transition("idle", "fly")


def test_full_cycle():
    p = run_events(Phase.IDLE, Event.START, Event.HYPOTHESIZE, Event.VERIFY, Event.VALIDATE, Event.DEPLOY)
    assert p is Phase.OPERATION and p.terminal


@pytest.mark.parametrize("phase", [p for p in Phase if not p.terminal])
def test_every_nonterminal_phase_resets(phase):
    assert transition(phase, Event.RESET) is Phase.IDLE


def test_operation_has_no_exit():
    assert not [k for k in TRANSITIONS if k[0] is Phase.OPERATION]


# -- propose --


def test_propose_starts_at_l0():
    g, c = fresh()
    assert c.layer is EpistemicLayer.L0 and c.proposer == GEN
    assert c.phase is Phase.DEDUCTION
    assert [s.mode for s in c.history] == ["abduction"]


def test_propose_bottom_scope_is_unmatchable():
    g = KnowledgeGraph(T0)
    assert propose(g, "x", BOTTOM, FormalityLevel.F1, GEN).unmatchable


def test_identical_statements_get_distinct_ids():
    g = KnowledgeGraph(T0)
    a = propose(g, "same", TASK, FormalityLevel.F1, GEN)
    b = propose(g, "same", TASK, FormalityLevel.F1, GEN)
    assert a.id != b.id


# -- promote --


def test_promote_to_l1_by_verifier():
    g, c = fresh()
    promote(g, PromotionRequest(c.id, EpistemicLayer.L1, VER))
    assert c.layer is EpistemicLayer.L1
    assert c.cached_r_eff == 0.75


def test_layer_skip():
    g, c = fresh()
    with pytest.raises(LayerSkip):
        promote(g, PromotionRequest(c.id, EpistemicLayer.L2, VER))
    assert c.layer is EpistemicLayer.L0


def test_self_verification():
    g, c = fresh()
    with pytest.raises(SelfVerification):
        promote(g, PromotionRequest(c.id, EpistemicLayer.L1, Actor("llm-1", ActorKind.GENERATOR)))


def test_contradicts_validated_names_the_claim():
    g = KnowledgeGraph(T0)
    old = propose(g, "4K is enough", TASK, FormalityLevel.F1, Actor("llm-2"))
    to_l2(g, old.id)
    new = propose(g, "32K helps", TASK, FormalityLevel.F1, GEN)
    g.declare_contradiction(new.id, old.id)
    with pytest.raises(ContradictsValidated) as info:
        promote(g, PromotionRequest(new.id, EpistemicLayer.L1, VER))
    assert old.id in str(info.value)


def test_l2_needs_qualifying_evidence():
    g, c = fresh()
    promote(g, PromotionRequest(c.id, EpistemicLayer.L1, VER))
    g.add_evidence(evidence("weak", 0.9, method=VerificationMethod.SELF_REPORTED), [c.id])
    g.add_evidence(evidence("expired", 0.9, days=1), [c.id])
    g.add_evidence(evidence("elsewhere", 0.9, scope="task=other"), [c.id])
    with pytest.raises(InsufficientEvidence):
        promote(g, PromotionRequest(c.id, EpistemicLayer.L2, VER), now=T0 + timedelta(days=5))


def test_refused_promotion_changes_nothing_but_the_log():
    g, c = fresh()
    before = g.state()
    with pytest.raises(SelfVerification):
        promote(g, PromotionRequest(c.id, EpistemicLayer.L1, GEN))
    assert g.state()[:3] == before[:3]
    assert g.events[-1]["event"] == "promote_refused"


def test_promotion_history_records_evidence():
    g, c = fresh()
    to_l2(g, c.id)
    assert [(s.mode, s.layer.token) for s in c.history] == [("abduction", "L0"), ("deduction", "L1"), ("induction", "L2")]
    assert c.history[-1].evidence_ids == ("run-1",)


# -- ratify, discard, deploy --


def test_ratify_by_human():
    g, c = fresh()
    to_l2(g, c.id)
    store = DrrStore()
    rec = ratify(g, c.id, HUMAN, store)
    assert rec.claim_id == c.id and len(store) == 1
    assert c.phase is Phase.RATIFIED
    deploy(g, c.id)
    assert c.phase is Phase.OPERATION
    with pytest.raises(IllegalTransition):
        discard(g, c.id, HUMAN)


def test_self_ratification():
    g, c = fresh()
    to_l2(g, c.id)
    with pytest.raises(SelfRatification):
        ratify(g, c.id, GEN, DrrStore())
    with pytest.raises(SelfRatification):
        ratify(g, c.id, Actor("llm-9", ActorKind.GENERATOR), DrrStore())


def test_ratify_l1_not_corroborated():
    g, c = fresh()
    promote(g, PromotionRequest(c.id, EpistemicLayer.L1, VER))
    with pytest.raises(NotCorroborated):
        ratify(g, c.id, HUMAN, DrrStore())


def test_discarded_claim_is_frozen():
    g, c = fresh()
    discard(g, c.id, VER)
    assert c.status is ClaimStatus.DISCARDED and c.phase is Phase.IDLE
    with pytest.raises(ClaimDiscarded):
        promote(g, PromotionRequest(c.id, EpistemicLayer.L1, VER))


# -- command sequences --

commands = st.lists(
    st.builds(
        Command,
        st.sampled_from(["propose", "evidence", "promote", "ratify", "contradict", "advance", "discard"]),
        st.integers(0, 3),
        st.integers(0, 3),
        st.integers(0, 2),
        st.integers(0, 3),
    ),
    max_size=20,
)


@given(commands)
def test_random_sequences_respect_the_mandate(cmds):
    run = simulate(cmds)
    assert all(b - a <= 1 for _, a, b in run.layers_seen)
    assert run.refused_unchanged
    assert not run.violations
    for ev in run.graph.events:
        if ev["event"] == "promote":
            assert ev["actor"] != ev["proposer"]
        if ev["event"] == "ratify":
            assert ev["actor"] != ev["proposer"] and ev["kind"] != "generator"
