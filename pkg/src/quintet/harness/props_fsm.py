"""Phase table checks and lifecycle runs over random command sequences."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import timedelta

from ..core import Actor, ActorKind, EpistemicLayer, FormalityLevel, VerificationMethod
from ..drr import DrrStore, verify_chain
from ..errors import IllegalTransition, LifecycleError, QuintetError
from ..fsm import PromotionRequest, discard, promote, propose, ratify
from ..graph import ClaimStatus, Evidence, KnowledgeGraph, qualifies_for_corroboration, sweep_stale
from ..phases import TRANSITIONS, Event, Phase, transition
from ..scope import Scope
from . import gens
from .engine import REGISTRY, Tape

CAT = "epistemic_fsm"
ACTORS = (
    Actor("gen-1", ActorKind.GENERATOR),
    Actor("gen-2", ActorKind.GENERATOR),
    Actor("ver-1", ActorKind.VERIFIER),
    Actor("hum-1", ActorKind.HUMAN),
)
SCOPES = (Scope.of(task="a"), Scope.of(task="a", env="x"), Scope.of(task="b"))


def prop(gen, cost=1):
    return REGISTRY.add(CAT, gen, cost)


def _reachable(start: Phase) -> set[Phase]:
    seen = {start}
    stack = [start]
    while stack:
        cur = stack.pop()
        for (p, _), q in TRANSITIONS.items():
            if p is cur and q not in seen:
                seen.add(q)
                stack.append(q)
    return seen


def _nothing(t: Tape):
    return None


@prop(_nothing)
def every_nonterminal_phase_reaches_idle(_, ctx):
    for p in Phase:
        if not p.terminal:
            assert Phase.IDLE in _reachable(p), p


@prop(_nothing)
def operation_has_no_exit(_, ctx):
    assert not [k for k in TRANSITIONS if k[0] is Phase.OPERATION]
    for ev in Event:
        try:
            transition(Phase.OPERATION, ev)
        except IllegalTransition:
            continue
        raise AssertionError(f"OPERATION accepted {ev}")


@prop(_nothing)
def every_phase_reachable_from_idle(_, ctx):
    assert _reachable(Phase.IDLE) == set(Phase)


def _events(t):
    return t.choice(list(Phase)), t.many(lambda tt: tt.choice(list(Event)), 0, 12)


@prop(_events)
def illegal_events_leave_phase_unchanged(case, ctx):
    """Undefined (phase, event) pairs raise and nothing moves."""
    phase, events = case
    for ev in events:
        before = phase
        try:
            phase = transition(phase, ev)
        except IllegalTransition:
            assert phase is before
            continue
        assert TRANSITIONS[(before, ev)] is phase


@prop(_events)
def phase_tokens_roundtrip(case, ctx):
    phase, events = case
    assert Phase(phase.value) is phase
    for ev in events:
        assert Event(ev.value) is ev


# -- lifecycle simulation ------------------------------------------------------------------


@dataclass
class Command:
    op: str
    claim: int
    actor: int
    target: int = 0
    extra: int = 0

    def __repr__(self):
        return f"{self.op}(c{self.claim}, {ACTORS[self.actor].id}, {self.target}, {self.extra})"


OPS = ("propose", "evidence", "evidence", "promote", "promote", "promote", "ratify", "ratify", "contradict", "advance")


def _command(t: Tape) -> Command:
    # mostly two claims, so sequences get deep enough to reach ratification
    cid = t.draw(4) if t.boolean(0.25) else t.draw(2)
    # discarding ends a claim's story, so keep it rare
    op = "discard" if t.boolean(0.03) else t.choice(OPS)
    return Command(op, cid, t.draw(len(ACTORS)), t.draw(3), t.draw(4))


def commands(t: Tape) -> list[Command]:
    # open by proposing the two busy claims so later commands have targets
    head = [Command("propose", i, t.draw(len(ACTORS)), t.draw(3)) for i in range(2)]
    return head + t.many(_command, 1, 24, p_more=0.9)


@dataclass
class Run:
    graph: KnowledgeGraph
    store: DrrStore
    layers_seen: list[tuple[str, int, int]]  # (claim, before, after) per step
    refused_unchanged: bool
    refusals: list[str]
    violations: list[str]


def simulate(cmds: list[Command]) -> Run:
    g = KnowledgeGraph(gens.T0)
    store = DrrStore()
    seen: list[tuple[str, int, int]] = []
    refusals: list[str] = []
    unchanged = True
    violations: list[str] = []
    k = 0
    for cmd in cmds:
        cid = f"c{cmd.claim}"
        actor = ACTORS[cmd.actor]
        now = g.clock
        before = {c: int(n.layer) for c, n in g.claims.items()}
        snap = g.state()
        try:
            if cmd.op == "propose":
                if cid in g.claims:
                    continue
                propose(g, f"claim {cid}", SCOPES[cmd.target], FormalityLevel(1 + cmd.target), actor, claim_id=cid, now=now)
            elif cmd.op == "evidence":
                k += 1
                ev = Evidence.create(
                    f"e{k}",
                    0.5 + 0.1 * cmd.extra,
                    scope=SCOPES[cmd.target],
                    method=VerificationMethod(3 - (cmd.extra % 4)),
                    collected_at=now,
                    valid_until=now + timedelta(days=5 + 10 * cmd.extra),
                )
                g.add_evidence(ev, [cid] if cid in g.claims else [])
            elif cmd.op == "promote":
                blocked = cid in g.claims and any(
                    g.claims[o].layer is EpistemicLayer.L2 and g.claims[o].status in (ClaimStatus.ACTIVE, ClaimStatus.STALE)
                    for o in g.claims[cid].contradiction_refs
                )
                # aim one layer up; extra == 3 deliberately tries to skip
                current = int(g.claims[cid].layer) if cid in g.claims else 0
                goal = EpistemicLayer(min(2, current + (2 if cmd.extra == 3 else 1)))
                claim = promote(g, PromotionRequest(cid, goal, actor), now=now)
                if blocked:
                    violations.append(f"{cmd!r} promoted despite a validated contradiction")
                if claim.layer is EpistemicLayer.L2 and not any(
                    qualifies_for_corroboration(g.evidence[e], claim.scope, now) for e in claim.evidence_refs
                ):
                    violations.append(f"{cmd!r} reached L2 without qualifying evidence")
            elif cmd.op == "ratify":
                ratify(g, cid, actor, store, now=now)
            elif cmd.op == "contradict":
                other = f"c{cmd.extra}"
                if cid in g.claims and other in g.claims and other != cid:
                    g.declare_contradiction(cid, other)
            elif cmd.op == "advance":
                g.clock = now + timedelta(days=3 * (1 + cmd.extra))
                sweep_stale(g, now=g.clock)
            elif cmd.op == "discard":
                discard(g, cid, actor)
        except (LifecycleError, QuintetError) as exc:
            refusals.append(f"{cmd!r}: {exc.code}")
            after = g.state()
            # a refusal may add an audit event, nothing else
            if (after[0], after[1], after[2]) != (snap[0], snap[1], snap[2]):
                unchanged = False
            continue
        for c, n in g.claims.items():
            if c in before:
                seen.append((c, before[c], int(n.layer)))
    return Run(g, store, seen, unchanged, refusals, violations)


class Sim:
    """Wraps a command list so the repr shows the commands, not the run."""

    def __init__(self, cmds):
        self.cmds = cmds
        self.run = simulate(cmds)

    def __repr__(self):
        return f"commands={self.cmds!r}"


def sim(t: Tape) -> Sim:
    return Sim(commands(t))


@prop(sim, cost=5)
def no_layer_skips(s: Sim, ctx):
    """No single command raises a claim by more than one layer."""
    for cid, a, b in s.run.layers_seen:
        assert b - a <= 1, (cid, a, b)


@prop(sim, cost=5)
def no_self_promotion(s: Sim, ctx):
    for ev in s.run.graph.events:
        if ev["event"] == "promote":
            assert ev["actor"] != ev["proposer"], ev


@prop(sim, cost=5)
def no_self_ratification(s: Sim, ctx):
    """Ratifiers are never the proposer and never a generator."""
    for ev in s.run.graph.events:
        if ev["event"] == "ratify":
            assert ev["actor"] != ev["proposer"] and ev["kind"] != "generator", ev


@prop(sim, cost=5)
def refusals_change_nothing(s: Sim, ctx):
    assert s.run.refused_unchanged, s.run.refusals


@prop(sim, cost=5)
def corroborated_claims_have_live_evidence(s: Sim, ctx):
    """An L2 claim that is not stale holds at least one qualifying item."""
    g = s.run.graph
    for cid, c in g.claims.items():
        if c.layer is EpistemicLayer.L2 and c.status is ClaimStatus.ACTIVE:
            assert any(qualifies_for_corroboration(g.evidence[e], c.scope, g.clock) for e in c.evidence_refs), cid


@prop(sim, cost=5)
def ratifications_are_recorded(s: Sim, ctx):
    """Each ratification appends one record and the record chain verifies."""
    ratified = [e for e in s.run.graph.events if e["event"] == "ratify"]
    assert len(ratified) == len(s.run.store)
    assert verify_chain(s.run.store) is None


@prop(sim, cost=5)
def discarded_claims_stay_put(s: Sim, ctx):
    g = s.run.graph
    for cid, c in g.claims.items():
        if c.status is ClaimStatus.DISCARDED:
            later = [e for e in g.events if e.get("claim") == cid and e["event"] in ("promote", "ratify")]
            discard_seq = max(e["seq"] for e in g.events if e.get("claim") == cid and e["event"] == "discard")
            assert all(e["seq"] < discard_seq for e in later), (cid, later)


@prop(sim, cost=5)
def promotion_preconditions_hold(s: Sim, ctx):
    """Successful promotions never override a validated contradiction or skip evidence."""
    assert not s.run.violations, s.run.violations
