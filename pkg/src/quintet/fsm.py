"""Layer promotion rules and actor separation for the claim lifecycle.

Anyone may propose. Promotion and ratification must come from an actor
other than the proposer, and ratification additionally from a non-generator.
Every accepted or refused request is appended to ``graph.events`` so the
separation can be audited after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

from .core import DEFAULT_CONFIG, Actor, ActorKind, Config, EpistemicLayer, FormalityLevel, format_timestamp
from .errors import (
    ClaimDiscarded,
    ContradictsValidated,
    InsufficientEvidence,
    LayerSkip,
    NotCorroborated,
    SelfRatification,
    SelfVerification,
)
from .graph import VALIDATED_STATUSES, ClaimNode, ClaimStatus, KnowledgeGraph, Step, propagate, qualifies_for_corroboration
from .phases import TRANSITIONS, Event, Phase, run_events, transition
from .scope import Scope

__all__ = [
    "Event",
    "Phase",
    "PromotionRequest",
    "TRANSITIONS",
    "check_ratifiable",
    "deploy",
    "discard",
    "promote",
    "propose",
    "ratify",
    "transition",
]

MODE_FOR_LAYER = {
    EpistemicLayer.L0: "abduction",
    EpistemicLayer.L1: "deduction",
    EpistemicLayer.L2: "induction",
}


@dataclass(frozen=True)
class PromotionRequest:
    claim_id: str
    target: EpistemicLayer
    actor: Actor
    evidence_ids: tuple[str, ...] = ()


def propose(
    graph: KnowledgeGraph,
    statement: str,
    scope: Scope,
    formality: FormalityLevel,
    actor: Actor,
    claim_id: str | None = None,
    now: datetime | None = None,
) -> ClaimNode:
    """Register a new conjecture at L0, recording who proposed it."""
    with graph.transaction():
        at = graph.now(now) if (now or graph.clock) else None
        cid = claim_id or graph.new_id("c")
        claim = ClaimNode(
            id=cid,
            statement=statement,
            layer=EpistemicLayer.L0,
            formality=formality,
            scope=scope,
            proposer=actor,
            phase=run_events(Phase.IDLE, Event.START, Event.HYPOTHESIZE),
            history=[Step("abduction", EpistemicLayer.L0, (), actor.id, at)],
        )
        graph.add_claim(claim)
        graph.log("propose", claim=cid, actor=actor.id, kind=actor.kind.token, layer="L0")
        return claim


def _conflicting_validated(graph: KnowledgeGraph, claim: ClaimNode) -> str | None:
    for other in sorted(claim.contradiction_refs):
        c = graph.claims[other]
        if c.layer is EpistemicLayer.L2 and c.status in VALIDATED_STATUSES:
            return other
    return None


def promote(
    graph: KnowledgeGraph,
    req: PromotionRequest,
    cfg: Config = DEFAULT_CONFIG,
    now: datetime | None = None,
) -> ClaimNode:
    """Move a claim exactly one layer up, or raise without touching it."""
    with graph.transaction():
        now = graph.now(now)
        claim = graph.claim(req.claim_id)
        for eid in req.evidence_ids:
            graph.get_evidence(eid)
        try:
            _check_promotion(graph, claim, req, now)
        except Exception as exc:
            graph.log(
                "promote_refused",
                claim=claim.id,
                actor=req.actor.id,
                target=EpistemicLayer(req.target).token,
                reason=getattr(exc, "code", type(exc).__name__),
            )
            raise
        for eid in req.evidence_ids:
            graph.attach_evidence(claim.id, eid)
        source = claim.layer
        target = EpistemicLayer(req.target)
        if target is EpistemicLayer.L1 and claim.phase is Phase.DEDUCTION:
            claim.phase = transition(claim.phase, Event.VERIFY)
        claim.layer = target
        claim.status = ClaimStatus.ACTIVE
        support = set(req.evidence_ids)
        if target is EpistemicLayer.L2:
            support |= {e for e in claim.evidence_refs if qualifies_for_corroboration(graph.evidence[e], claim.scope, now)}
        claim.history.append(Step(MODE_FOR_LAYER[target], target, tuple(sorted(support)), req.actor.id, now))
        graph.touch(claim.id)
        graph.log(
            "promote",
            claim=claim.id,
            actor=req.actor.id,
            proposer=claim.proposer.id,
            from_layer=source.token,
            to_layer=target.token,
            at=format_timestamp(now),
        )
        propagate(graph, cfg, now)
        return claim


def _check_promotion(graph: KnowledgeGraph, claim: ClaimNode, req: PromotionRequest, now: datetime) -> None:
    if claim.status is ClaimStatus.DISCARDED:
        raise ClaimDiscarded(f"{claim.id} was discarded")
    target = EpistemicLayer(req.target)
    if target != claim.layer + 1:
        raise LayerSkip(f"{claim.id} is at {claim.layer.token}; cannot move to {target.token} (one layer at a time)")
    if req.actor.id == claim.proposer.id:
        raise SelfVerification(f"{req.actor.id} proposed {claim.id} and cannot also promote it")
    conflict = _conflicting_validated(graph, claim)
    if conflict is not None:
        raise ContradictsValidated(claim.id, conflict)
    if target is EpistemicLayer.L2:
        pool = claim.evidence_refs | set(req.evidence_ids)
        if not any(qualifies_for_corroboration(graph.evidence[e], claim.scope, now) for e in pool):
            raise InsufficientEvidence(
                f"{claim.id} needs unexpired, scope-matched evidence verified by script or better to reach L2"
            )


def check_ratifiable(graph: KnowledgeGraph, claim_id: str, actor: Actor) -> ClaimNode:
    claim = graph.claim(claim_id)
    if claim.status is ClaimStatus.DISCARDED:
        raise ClaimDiscarded(f"{claim_id} was discarded")
    if claim.layer is not EpistemicLayer.L2:
        raise NotCorroborated(f"{claim_id} is at {claim.layer.token}; only L2 claims can be ratified")
    if actor.id == claim.proposer.id:
        raise SelfRatification(f"{actor.id} proposed {claim_id} and cannot ratify it")
    if actor.kind is ActorKind.GENERATOR:
        raise SelfRatification(f"{actor.id} is a generator; ratification must come from outside the generation loop")
    transition(claim.phase, Event.RATIFY)
    return claim


def ratify(
    graph: KnowledgeGraph,
    claim_id: str,
    actor: Actor,
    store,
    window: tuple[datetime, datetime] | None = None,
    cfg: Config = DEFAULT_CONFIG,
    now: datetime | None = None,
):
    """Finalize an L2 claim into a Design Rationale Record appended to ``store``."""
    from .drr import finalize_drr

    with graph.transaction():
        now = graph.now(now)
        try:
            check_ratifiable(graph, claim_id, actor)
        except Exception as exc:
            graph.log("ratify_refused", claim=claim_id, actor=actor.id, reason=getattr(exc, "code", type(exc).__name__))
            raise
        record = finalize_drr(graph, claim_id, actor, store, window=window, cfg=cfg, now=now)
        claim = graph.claims[claim_id]
        claim.phase = transition(claim.phase, Event.RATIFY)
        graph.log("ratify", claim=claim_id, actor=actor.id, kind=actor.kind.token, proposer=claim.proposer.id, drr=record.drr_id)
        return record


def deploy(graph: KnowledgeGraph, claim_id: str) -> ClaimNode:
    with graph.transaction():
        claim = graph.claim(claim_id)
        claim.phase = transition(claim.phase, Event.DEPLOY)
        graph.log("deploy", claim=claim_id)
        return claim


def discard(graph: KnowledgeGraph, claim_id: str, actor: Actor) -> ClaimNode:
    """Archive a refuted claim. It keeps its layer for the record but can no longer move."""
    with graph.transaction():
        claim = graph.claim(claim_id)
        claim.phase = transition(claim.phase, Event.RESET)
        claim.status = ClaimStatus.DISCARDED
        graph.log("discard", claim=claim_id, actor=actor.id)
        return claim
