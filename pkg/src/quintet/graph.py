"""Claims, evidence and dependencies as a DAG with weakest-link scoring.

A claim's effective reliability is the minimum of

* every adjusted evidence score (scope-matched, method-weighted, decayed,
  congruence-penalised, optionally capped for LLM-generated provenance),
* every dependency's reliability less its congruence penalty, floored at 0,
* the layer ceiling and the formality ceiling.

An empty evidence or dependency set contributes nothing, so a bare claim is
governed by its two ceilings alone.
"""

from __future__ import annotations

import heapq
import json
import math
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .core import (
    DEFAULT_CONFIG,
    Actor,
    CongruenceLevel,
    Config,
    EpistemicLayer,
    EvidenceRole,
    FormalityLevel,
    Score,
    VerificationMethod,
    as_utc,
    format_timestamp,
    make_score,
    parse_timestamp,
    parse_token,
)
from .errors import CycleDetected, DuplicateId, EmptyEvidence, MissingRef, RangeViolation
from .gamma import OperatorKind, aggregate
from .phases import Event, Phase, run_events
from .scope import Scope, match_level, parse_scope, serialize_scope

LLM_PROVENANCE_TAG = "llm-generated"
FORMAT_VERSION = 1


class _Excluded:
    __slots__ = ()

    def __repr__(self):
        return "EXCLUDED"

    def __bool__(self):
        return False


EXCLUDED = _Excluded()


class ClaimStatus(Enum):
    ACTIVE = "active"
    STALE = "stale"
    DISCARDED = "discarded"
    CONTRADICTED = "contradicted"


def is_llm_generated(provenance: str) -> bool:
    return provenance == LLM_PROVENANCE_TAG or provenance.startswith(LLM_PROVENANCE_TAG + ":")


@dataclass(frozen=True)
class Evidence:
    id: str
    raw_score: Score
    formality: FormalityLevel
    scope: Scope
    method: VerificationMethod
    role: EvidenceRole
    collected_at: datetime
    valid_until: datetime
    provenance: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("evidence id must be non-empty")
        object.__setattr__(self, "raw_score", make_score(self.raw_score))
        object.__setattr__(self, "collected_at", as_utc(self.collected_at))
        object.__setattr__(self, "valid_until", as_utc(self.valid_until))
        if self.collected_at > self.valid_until:
            raise RangeViolation(f"evidence {self.id}: valid_until precedes collected_at")

    @classmethod
    def create(
        cls,
        id: str,
        raw_score: float,
        *,
        formality: FormalityLevel = FormalityLevel.F2,
        scope: Scope,
        method: VerificationMethod = VerificationMethod.EXECUTED_VERIFIED,
        role: EvidenceRole = EvidenceRole.OTHER,
        collected_at: datetime,
        valid_until: datetime | None = None,
        provenance: str = "",
        cfg: Config = DEFAULT_CONFIG,
    ) -> Evidence:
        """Build evidence, defaulting the validity window from the formality level."""
        collected_at = as_utc(collected_at)
        if valid_until is None:
            valid_until = collected_at + cfg.validity(formality)
        return cls(id, raw_score, formality, scope, method, role, collected_at, valid_until, provenance)

    def expired(self, now: datetime) -> bool:
        return now > self.valid_until

    def to_json(self) -> dict:
        return {
            "type": "evidence",
            "id": self.id,
            "raw_score": self.raw_score,
            "formality": self.formality.token,
            "scope": serialize_scope(self.scope),
            "method": self.method.token,
            "role": self.role.token,
            "collected_at": format_timestamp(self.collected_at),
            "valid_until": format_timestamp(self.valid_until),
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> Evidence:
        return cls(
            id=str(d["id"]),
            raw_score=d["raw_score"],
            formality=parse_token(FormalityLevel, d["formality"]),
            scope=parse_scope(d["scope"]),
            method=parse_token(VerificationMethod, d["method"]),
            role=parse_token(EvidenceRole, d["role"]),
            collected_at=parse_timestamp(d["collected_at"]),
            valid_until=parse_timestamp(d["valid_until"]),
            provenance=str(d.get("provenance", "")),
        )


@dataclass(frozen=True)
class Step:
    """One entry of a claim's promotion history."""

    mode: str  # abduction | deduction | induction
    layer: EpistemicLayer
    evidence_ids: tuple[str, ...]
    actor: str
    at: datetime | None = None

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "layer": self.layer.token,
            "evidence_ids": list(self.evidence_ids),
            "actor": self.actor,
            "at": format_timestamp(self.at) if self.at else None,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> Step:
        at = d.get("at")
        return cls(
            str(d["mode"]),
            parse_token(EpistemicLayer, d["layer"]),
            tuple(d.get("evidence_ids", ())),
            str(d["actor"]),
            parse_timestamp(at) if at else None,
        )


@dataclass
class ClaimNode:
    id: str
    statement: str
    layer: EpistemicLayer
    formality: FormalityLevel
    scope: Scope
    proposer: Actor
    evidence_refs: set[str] = field(default_factory=set)
    dependency_refs: set[str] = field(default_factory=set)
    contradiction_refs: set[str] = field(default_factory=set)
    status: ClaimStatus = ClaimStatus.ACTIVE
    cached_r_eff: Score = 0.0
    phase: Phase = Phase.DEDUCTION
    history: list[Step] = field(default_factory=list)

    @property
    def unmatchable(self) -> bool:
        return self.scope.is_bottom

    def copy(self) -> ClaimNode:
        return replace(
            self,
            evidence_refs=set(self.evidence_refs),
            dependency_refs=set(self.dependency_refs),
            contradiction_refs=set(self.contradiction_refs),
            history=list(self.history),
        )

    def to_json(self) -> dict:
        return {
            "type": "claim",
            "id": self.id,
            "statement": self.statement,
            "layer": self.layer.token,
            "formality": self.formality.token,
            "scope": serialize_scope(self.scope),
            "proposer": self.proposer.to_json(),
            "evidence_refs": sorted(self.evidence_refs),
            "dependency_refs": sorted(self.dependency_refs),
            "contradiction_refs": sorted(self.contradiction_refs),
            "status": self.status.value,
            "cached_r_eff": self.cached_r_eff,
            "phase": self.phase.value,
            "history": [s.to_json() for s in self.history],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> ClaimNode:
        return cls(
            id=str(d["id"]),
            statement=str(d["statement"]),
            layer=parse_token(EpistemicLayer, d["layer"]),
            formality=parse_token(FormalityLevel, d["formality"]),
            scope=parse_scope(d["scope"]),
            proposer=Actor.from_json(d["proposer"]),
            evidence_refs=set(d.get("evidence_refs", ())),
            dependency_refs=set(d.get("dependency_refs", ())),
            contradiction_refs=set(d.get("contradiction_refs", ())),
            status=ClaimStatus(d.get("status", "active")),
            cached_r_eff=make_score(d.get("cached_r_eff", 0.0)),
            phase=Phase(d.get("phase", Phase.DEDUCTION.value)),
            history=[Step.from_json(s) for s in d.get("history", ())],
        )


# -- evidence adjustment --------------------------------------------------------


def decay_factor(ev: Evidence, now: datetime, cfg: Config) -> float:
    """1 up to ``valid_until``, then a linear ramp to 0 across the grace period."""
    if now <= ev.valid_until:
        return 1.0
    grace = cfg.grace_days * 86400.0
    if grace <= 0.0:
        return 0.0
    overdue = (now - ev.valid_until).total_seconds()
    return max(0.0, 1.0 - overdue / grace)


def adjust_evidence(ev: Evidence, claim_scope: Scope, now: datetime, cfg: Config = DEFAULT_CONFIG):
    """Adjusted score of ``ev`` for a claim in ``claim_scope``, or ``EXCLUDED``."""
    level = match_level(claim_scope, ev.scope)
    if level is CongruenceLevel.NONE:
        return EXCLUDED
    s = ev.raw_score * cfg.multiplier(ev.method)
    s *= decay_factor(ev, now, cfg)
    s = max(0.0, s - cfg.penalty(level))
    if cfg.llm_cap is not None and is_llm_generated(ev.provenance):
        s = min(s, cfg.llm_cap)
    return s


def qualifies_for_corroboration(ev: Evidence, claim_scope: Scope, now: datetime) -> bool:
    """Evidence strong enough to hold a claim at the top layer."""
    return (
        not ev.expired(now)
        and ev.method >= VerificationMethod.SCRIPT_ATTACHED
        and match_level(claim_scope, ev.scope) is not CongruenceLevel.NONE
    )


# -- terms of the reliability formula --------------------------------------------


@dataclass(frozen=True)
class Term:
    kind: str  # evidence | dependency | layer_ceiling | formality_ceiling
    ref: str
    value: float
    congruence: str | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "ref": self.ref, "value": self.value}
        if self.congruence is not None:
            out["congruence"] = self.congruence
        return out


def claim_terms(
    claim: ClaimNode,
    evidence: Mapping[str, Evidence],
    dep_value: Callable[[str], float],
    dep_scope: Callable[[str], Scope],
    cfg: Config,
    now: datetime,
) -> tuple[list[Term], list[str]]:
    """All min-terms for ``claim`` plus the ids of excluded evidence."""
    terms: list[Term] = []
    excluded: list[str] = []
    for eid in sorted(claim.evidence_refs):
        adj = adjust_evidence(evidence[eid], claim.scope, now, cfg)
        if adj is EXCLUDED:
            excluded.append(eid)
        else:
            level = match_level(claim.scope, evidence[eid].scope)
            terms.append(Term("evidence", eid, adj, level.token))
    for did in sorted(claim.dependency_refs):
        level = match_level(claim.scope, dep_scope(did))
        if level is CongruenceLevel.NONE:
            # nothing transfers across an incompatible scope: the premise
            # cannot support this claim at all
            value = 0.0
        else:
            value = max(0.0, dep_value(did) - cfg.penalty(level))
        terms.append(Term("dependency", did, value, level.token))
    terms.append(Term("layer_ceiling", claim.layer.token, cfg.layer_ceiling(claim.layer)))
    terms.append(Term("formality_ceiling", claim.formality.token, cfg.formality_ceiling(claim.formality)))
    return terms, excluded


def combine(terms: Sequence[Term], op: OperatorKind = OperatorKind.GODEL_MIN) -> float:
    values = [t.value for t in terms]
    if op is OperatorKind.GODEL_MIN:
        return min(values)
    return aggregate(op, values)


# -- the graph ----------------------------------------------------------------


class KnowledgeGraph:
    """Mutable claim graph with a single-writer lock.

    Mutations mark the touched claim and all of its dependents dirty;
    :func:`propagate` refreshes ``cached_r_eff`` for dirty claims. Readers
    that need a consistent view take :meth:`snapshot`.
    """

    def __init__(self, clock: datetime | None = None):
        self.claims: dict[str, ClaimNode] = {}
        self.evidence: dict[str, Evidence] = {}
        self.clock = as_utc(clock) if clock else None
        self.events: list[dict] = []
        self.dirty: set[str] = set()
        self._dependents: dict[str, set[str]] = {}
        self._users: dict[str, set[str]] = {}
        self._stamp: tuple | None = None
        self._lock = threading.RLock()

    # -- bookkeeping --

    @contextmanager
    def transaction(self) -> Iterator[KnowledgeGraph]:
        with self._lock:
            yield self

    def now(self, now: datetime | None = None) -> datetime:
        if now is not None:
            return as_utc(now)
        if self.clock is None:
            raise ValueError("no clock: pass `now` or set graph.clock")
        return self.clock

    def new_id(self, prefix: str) -> str:
        n = len(self.claims) + len(self.evidence) + 1
        while f"{prefix}{n}" in self.claims or f"{prefix}{n}" in self.evidence:
            n += 1
        return f"{prefix}{n}"

    def log(self, name: str, /, **fields) -> None:
        self.events.append({"seq": len(self.events), "event": name, **fields})

    def claim(self, claim_id: str) -> ClaimNode:
        try:
            return self.claims[claim_id]
        except KeyError:
            raise MissingRef(f"no claim {claim_id!r}") from None

    def get_evidence(self, evidence_id: str) -> Evidence:
        try:
            return self.evidence[evidence_id]
        except KeyError:
            raise MissingRef(f"no evidence {evidence_id!r}") from None

    def _check_new_id(self, new_id: str) -> None:
        if new_id in self.claims or new_id in self.evidence:
            raise DuplicateId(f"id {new_id!r} already in use")

    def dependents_of(self, claim_id: str) -> set[str]:
        return set(self._dependents.get(claim_id, ()))

    def users_of(self, evidence_id: str) -> set[str]:
        return set(self._users.get(evidence_id, ()))

    def descendants(self, ids: Iterable[str]) -> set[str]:
        """Every claim that transitively depends on any of ``ids`` (excluding ``ids``)."""
        seen: set[str] = set()
        stack = list(ids)
        start = set(stack)
        while stack:
            for d in self._dependents.get(stack.pop(), ()):
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
        return seen - start

    def ancestors(self, claim_id: str) -> set[str]:
        seen: set[str] = set()
        stack = [claim_id]
        while stack:
            for d in self.claims[stack.pop()].dependency_refs:
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
        return seen

    def touch(self, claim_id: str) -> None:
        self.dirty.add(claim_id)
        self.dirty |= self.descendants([claim_id])

    def topological_order(self, subset: Iterable[str] | None = None) -> list[str]:
        """Dependencies before dependents; ties broken by id."""
        nodes = set(self.claims) if subset is None else set(subset)
        indeg = {n: 0 for n in nodes}
        for n in nodes:
            indeg[n] = sum(1 for d in self.claims[n].dependency_refs if d in nodes)
        heap = [n for n, k in indeg.items() if k == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            n = heapq.heappop(heap)
            order.append(n)
            for m in self._dependents.get(n, ()):
                if m in indeg:
                    indeg[m] -= 1
                    if indeg[m] == 0:
                        heapq.heappush(heap, m)
        if len(order) != len(nodes):
            raise CycleDetected("dependency cycle among: " + ", ".join(sorted(nodes - set(order))))
        return order

    # -- mutations --

    def add_claim(self, claim: ClaimNode) -> ClaimNode:
        with self._lock:
            self._check_new_id(claim.id)
            for ref in claim.evidence_refs:
                self.get_evidence(ref)
            for ref in claim.dependency_refs | claim.contradiction_refs:
                self.claim(ref)
            self.claims[claim.id] = claim
            for ref in claim.evidence_refs:
                self._users.setdefault(ref, set()).add(claim.id)
            for ref in claim.dependency_refs:
                self._dependents.setdefault(ref, set()).add(claim.id)
            for ref in claim.contradiction_refs:
                self.claims[ref].contradiction_refs.add(claim.id)
            # a fresh node has no dependents, so its edges cannot close a cycle
            self.touch(claim.id)
            return claim

    def add_evidence(self, ev: Evidence, attach_to: Iterable[str] = ()) -> Evidence:
        with self._lock:
            self._check_new_id(ev.id)
            targets = list(attach_to)
            for cid in targets:
                self.claim(cid)
            self.evidence[ev.id] = ev
            for cid in targets:
                self.attach_evidence(cid, ev.id)
            return ev

    def attach_evidence(self, claim_id: str, evidence_id: str) -> None:
        with self._lock:
            claim = self.claim(claim_id)
            self.get_evidence(evidence_id)
            if evidence_id in claim.evidence_refs:
                return
            claim.evidence_refs.add(evidence_id)
            self._users.setdefault(evidence_id, set()).add(claim_id)
            self.touch(claim_id)

    def replace_evidence(self, ev: Evidence) -> None:
        """Swap in a new version of existing evidence (same id)."""
        with self._lock:
            self.get_evidence(ev.id)
            self.evidence[ev.id] = ev
            for cid in self._users.get(ev.id, ()):
                self.touch(cid)

    def link_dependency(self, claim_id: str, depends_on: str) -> None:
        """Record that ``claim_id`` is derived from ``depends_on``."""
        with self._lock:
            claim = self.claim(claim_id)
            self.claim(depends_on)
            if claim_id == depends_on or claim_id in self.ancestors(depends_on):
                raise CycleDetected(f"{claim_id} -> {depends_on} would close a dependency cycle")
            if depends_on in claim.dependency_refs:
                return
            claim.dependency_refs.add(depends_on)
            self._dependents.setdefault(depends_on, set()).add(claim_id)
            self.touch(claim_id)

    def declare_contradiction(self, a: str, b: str) -> None:
        with self._lock:
            ca, cb = self.claim(a), self.claim(b)
            if a == b:
                raise ValueError("a claim cannot contradict itself")
            ca.contradiction_refs.add(b)
            cb.contradiction_refs.add(a)
            for low, high in ((ca, cb), (cb, ca)):
                if (
                    high.layer is EpistemicLayer.L2
                    and high.status in VALIDATED_STATUSES
                    and low.layer < EpistemicLayer.L2
                    and low.status is ClaimStatus.ACTIVE
                ):
                    low.status = ClaimStatus.CONTRADICTED
            self.log("contradiction", claims=sorted([a, b]))

    def set_layer(self, claim_id: str, layer: EpistemicLayer) -> None:
        with self._lock:
            self.claim(claim_id).layer = layer
            self.touch(claim_id)

    # -- views --

    def snapshot(self) -> KnowledgeGraph:
        with self._lock:
            g = KnowledgeGraph(self.clock)
            g.claims = {k: c.copy() for k, c in self.claims.items()}
            g.evidence = dict(self.evidence)
            g.events = [dict(e) for e in self.events]
            g.dirty = set(self.dirty)
            g._dependents = {k: set(v) for k, v in self._dependents.items()}
            g._users = {k: set(v) for k, v in self._users.items()}
            g._stamp = self._stamp
            return g

    def state(self) -> tuple:
        """Comparable content of the graph (what persistence must preserve)."""
        return (
            self.clock,
            {k: c.to_json() for k, c in self.claims.items()},
            {k: e.to_json() for k, e in self.evidence.items()},
            [dict(e) for e in self.events],
        )

    # -- persistence --

    def to_records(self) -> list[dict]:
        out: list[dict] = [
            {"type": "graph", "format_version": FORMAT_VERSION, "clock": format_timestamp(self.clock) if self.clock else None}
        ]
        out += [self.evidence[k].to_json() for k in sorted(self.evidence)]
        out += [self.claims[k].to_json() for k in sorted(self.claims)]
        out += [{"type": "event", **e} for e in self.events]
        return out

    def dumps(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n" for r in self.to_records())

    def save(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(self.dumps(), encoding="utf-8")
        tmp.replace(path)

    @classmethod
    def loads(cls, text: str) -> KnowledgeGraph:
        g = cls()
        claims: list[ClaimNode] = []
        events: list[dict] = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line, parse_constant=_reject_constant)
            except RangeViolation:
                raise
            except ValueError as exc:
                raise ValueError(f"line {lineno}: not JSON: {exc}") from None
            if not isinstance(rec, dict):
                raise ValueError(f"line {lineno}: expected an object")
            kind = rec.get("type")
            try:
                if kind == "graph":
                    g.clock = parse_timestamp(rec["clock"]) if rec.get("clock") else None
                elif kind == "evidence":
                    ev = Evidence.from_json(rec)
                    g._check_new_id(ev.id)
                    g.evidence[ev.id] = ev
                elif kind == "claim":
                    claims.append(ClaimNode.from_json(rec))
                elif kind == "event":
                    events.append({k: v for k, v in rec.items() if k != "type"})
                else:
                    raise ValueError(f"unknown record type {kind!r}")
            except (KeyError, TypeError) as exc:
                raise ValueError(f"line {lineno}: malformed {kind} record: {exc!r}") from None
        for c in claims:
            g._check_new_id(c.id)
            g.claims[c.id] = c
        for c in claims:
            for ref in c.evidence_refs:
                if ref not in g.evidence:
                    raise MissingRef(f"claim {c.id} references missing evidence {ref!r}")
                g._users.setdefault(ref, set()).add(c.id)
            for ref in c.dependency_refs | c.contradiction_refs:
                if ref not in g.claims:
                    raise MissingRef(f"claim {c.id} references missing claim {ref!r}")
            for ref in c.dependency_refs:
                g._dependents.setdefault(ref, set()).add(c.id)
        g.topological_order()
        g.events = sorted(events, key=lambda e: e.get("seq", 0))
        return g

    @classmethod
    def load(cls, path: str | Path) -> KnowledgeGraph:
        return cls.loads(Path(path).read_text(encoding="utf-8"))


VALIDATED_STATUSES = (ClaimStatus.ACTIVE, ClaimStatus.STALE)


def _reject_constant(token):
    raise RangeViolation(f"non-finite number {token} in graph file")


# -- scoring --------------------------------------------------------------------


def _compute(graph: KnowledgeGraph, order: Sequence[str], values: dict[str, float], cfg, now, op) -> None:
    claims, evidence = graph.claims, graph.evidence

    def dep_scope(cid):
        return claims[cid].scope

    for cid in order:
        terms, _ = claim_terms(claims[cid], evidence, values.__getitem__, dep_scope, cfg, now)
        values[cid] = combine(terms, op)


def effective_reliability(
    graph: KnowledgeGraph,
    claim_id: str,
    cfg: Config = DEFAULT_CONFIG,
    now: datetime | None = None,
    op: OperatorKind = OperatorKind.GODEL_MIN,
) -> Score:
    """Score ``claim_id`` from scratch, recomputing every premise it rests on.

    Pure: caches are neither read nor written (see :func:`propagate`).
    """
    now = graph.now(now)
    graph.claim(claim_id)
    order = graph.topological_order(graph.ancestors(claim_id) | {claim_id})
    values: dict[str, float] = {}
    _compute(graph, order, values, cfg, now, op)
    return values[claim_id]


def score_all(graph: KnowledgeGraph, cfg: Config = DEFAULT_CONFIG, now: datetime | None = None, op=OperatorKind.GODEL_MIN) -> dict[str, Score]:
    now = graph.now(now)
    values: dict[str, float] = {}
    _compute(graph, graph.topological_order(), values, cfg, now, op)
    return values


def propagate(
    graph: KnowledgeGraph,
    cfg: Config = DEFAULT_CONFIG,
    now: datetime | None = None,
    mode: str = "incremental",
    op: OperatorKind = OperatorKind.GODEL_MIN,
) -> set[str]:
    """Refresh ``cached_r_eff``; returns the ids that were recomputed.

    ``incremental`` recomputes dirty claims, claims whose evidence decay
    changed since the last run, and everything downstream of them. A
    config or operator change forces a full pass.
    """
    if mode not in ("full", "incremental"):
        raise ValueError(f"mode must be 'full' or 'incremental', got {mode!r}")
    now = graph.now(now)
    with graph._lock:
        stamp = graph._stamp
        if mode == "full" or stamp is None or stamp[1] != cfg or stamp[2] is not op:
            targets = set(graph.claims)
        else:
            targets = set(graph.dirty)
            prev_now = stamp[0]
            if prev_now != now:
                for eid, ev in graph.evidence.items():
                    if decay_factor(ev, prev_now, cfg) != decay_factor(ev, now, cfg):
                        targets |= graph._users.get(eid, set())
            targets |= graph.descendants(targets)
        order = graph.topological_order(targets)
        values = {cid: c.cached_r_eff for cid, c in graph.claims.items()}
        _compute(graph, order, values, cfg, now, op)
        for cid in order:
            graph.claims[cid].cached_r_eff = values[cid]
        graph.dirty.clear()
        graph._stamp = (now, cfg, op)
        return targets


# -- explanation ------------------------------------------------------------------


@dataclass
class Breakdown:
    claim_id: str
    value: float
    terms: list[Term]
    excluded: list[str]
    dominating: Term
    weakest_link: list[str]  # claim ids from this claim down to the step that bounds it

    def to_json(self) -> dict:
        return {
            "claim": self.claim_id,
            "r_eff": self.value,
            "terms": [t.to_json() for t in self.terms],
            "excluded_evidence": self.excluded,
            "dominating": self.dominating.to_json(),
            "weakest_link": self.weakest_link[-1],
            "path": self.weakest_link,
        }


def _dominating(terms: Sequence[Term], value: float) -> Term:
    # evidence first so the step that owns the weak input is named
    for t in terms:
        if t.value == value:
            return t
    return min(terms, key=lambda t: t.value)


def explain(graph: KnowledgeGraph, claim_id: str, cfg: Config = DEFAULT_CONFIG, now: datetime | None = None) -> Breakdown:
    """Score a claim and say which bound decided it.

    The weakest-link path follows dominating dependencies down to the claim
    whose own evidence or ceiling is the binding constraint.
    """
    now = graph.now(now)
    graph.claim(claim_id)
    order = graph.topological_order(graph.ancestors(claim_id) | {claim_id})
    values: dict[str, float] = {}
    _compute(graph, order, values, cfg, now, OperatorKind.GODEL_MIN)

    def dep_scope(cid):
        return graph.claims[cid].scope

    def breakdown(cid):
        terms, excluded = claim_terms(graph.claims[cid], graph.evidence, values.__getitem__, dep_scope, cfg, now)
        return terms, excluded, _dominating(terms, values[cid])

    terms, excluded, dom = breakdown(claim_id)
    path = [claim_id]
    cur_dom = dom
    while cur_dom.kind == "dependency" and cur_dom.congruence != CongruenceLevel.NONE.token:
        nxt = cur_dom.ref
        if nxt in path:
            break
        path.append(nxt)
        _, _, cur_dom = breakdown(nxt)
    return Breakdown(claim_id, values[claim_id], terms, excluded, dom, path)


# -- two-tier aggregation ------------------------------------------------------------


def probabilistic_sum(scores: Sequence[float]) -> float:
    return 1.0 - math.prod(1.0 - s for s in scores)


def conservative_owa(scores: Sequence[float]) -> float:
    """Ordered weighted average leaning on the low end.

    Sorted ascending, the i-th smallest value (1-based) gets weight
    2(n - i + 1) / (n(n + 1)).
    """
    xs = sorted(scores)
    n = len(xs)
    denom = n * (n + 1)
    total = math.fsum(2.0 * (n - i) * x / denom for i, x in enumerate(xs))
    return min(max(total, xs[0]), xs[-1])


def role_scores(
    groups: Mapping[EvidenceRole, Sequence[float]],
    gate_outcomes: Sequence[bool] | None = None,
) -> dict[EvidenceRole, float]:
    """Tier 1: one score per role that has evidence."""
    groups = {parse_token(EvidenceRole, r): [make_score(s) for s in v] for r, v in groups.items()}
    gates = groups.get(EvidenceRole.GATE, [])
    if gate_outcomes is not None:
        outcomes = list(gate_outcomes)
        if not gates:
            gates = [1.0] * len(outcomes)
        elif len(outcomes) != len(gates):
            raise ValueError(f"{len(outcomes)} gate outcomes for {len(gates)} gate scores")
        gates = [s if ok else 0.0 for s, ok in zip(gates, outcomes)]
        groups[EvidenceRole.GATE] = gates
    out: dict[EvidenceRole, float] = {}
    for role, scores in groups.items():
        if not scores:
            continue
        if role is EvidenceRole.QUALITY:
            out[role] = probabilistic_sum(scores)
        elif role is EvidenceRole.PERFORMANCE:
            out[role] = conservative_owa(scores)
        else:
            out[role] = min(scores)
    if not out:
        raise EmptyEvidence("two-tier aggregation needs at least one non-empty role")
    return out


def two_tier_aggregate(
    groups: Mapping[EvidenceRole, Sequence[float]],
    gate_outcomes: Sequence[bool] | None = None,
) -> Score:
    """Tier 2: the minimum across role-level scores. A failed gate forces 0."""
    return min(role_scores(groups, gate_outcomes).values())


def claim_role_groups(graph: KnowledgeGraph, claim_id: str, cfg: Config = DEFAULT_CONFIG, now: datetime | None = None) -> dict[EvidenceRole, list[float]]:
    now = graph.now(now)
    claim = graph.claim(claim_id)
    groups: dict[EvidenceRole, list[float]] = {}
    for eid in sorted(claim.evidence_refs):
        ev = graph.evidence[eid]
        adj = adjust_evidence(ev, claim.scope, now, cfg)
        if adj is not EXCLUDED:
            groups.setdefault(ev.role, []).append(adj)
    return groups


# -- staleness --------------------------------------------------------------------------


def sweep_stale(graph: KnowledgeGraph, cfg: Config = DEFAULT_CONFIG, now: datetime | None = None) -> list[str]:
    """Flag claims resting on expired evidence and demote unsupported L2 claims.

    Returns the flagged claim ids: every user of an expired item plus all
    of their dependents. A flagged L2 claim left without any evidence that
    could still corroborate it drops one layer.
    """
    now = graph.now(now)
    with graph._lock:
        expired = [eid for eid, ev in graph.evidence.items() if ev.expired(now)]
        direct: set[str] = set()
        for eid in expired:
            direct |= graph._users.get(eid, set())
        flagged = direct | graph.descendants(direct)
        flagged = {cid for cid in flagged if graph.claims[cid].status is not ClaimStatus.DISCARDED}
        for cid in sorted(flagged):
            claim = graph.claims[cid]
            if claim.status is not ClaimStatus.STALE:
                claim.status = ClaimStatus.STALE
                graph.log("flag_stale", claim=cid, at=format_timestamp(now))
        for cid in sorted(direct & flagged):
            claim = graph.claims[cid]
            if claim.layer is not EpistemicLayer.L2:
                continue
            if any(qualifies_for_corroboration(graph.evidence[e], claim.scope, now) for e in claim.evidence_refs):
                continue
            claim.layer = EpistemicLayer.L1
            if claim.phase is Phase.RATIFIED:
                claim.phase = run_events(claim.phase, Event.RESET, Event.START, Event.HYPOTHESIZE, Event.VERIFY)
            graph.touch(cid)
            graph.log("demote", claim=cid, from_layer="L2", to_layer="L1", at=format_timestamp(now))
        propagate(graph, cfg, now, "incremental")
        return sorted(flagged)


# -- inspection ----------------------------------------------------------------------------


@dataclass(frozen=True)
class InspectEntry:
    id: str
    kind: str  # claim | evidence
    depth: int
    layer: str | None = None
    r_eff: float | None = None
    status: str | None = None
    raw_score: float | None = None
    formality: str | None = None

    def to_json(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def inspect_dependencies(graph: KnowledgeGraph, claim_id: str) -> list[InspectEntry]:
    """Breadth-first walk over dependency and evidence edges, each node once.

    Ordered by depth, then id.
    """
    graph.claim(claim_id)
    depth = {claim_id: 0}
    frontier = [claim_id]
    while frontier:
        nxt = []
        for cid in frontier:
            claim = graph.claims[cid]
            for ref in sorted(claim.dependency_refs | claim.evidence_refs):
                if ref not in depth:
                    depth[ref] = depth[cid] + 1
                    if ref in graph.claims:
                        nxt.append(ref)
        frontier = nxt
    out = []
    for nid, d in sorted(depth.items(), key=lambda kv: (kv[1], kv[0])):
        if nid in graph.claims:
            c = graph.claims[nid]
            out.append(InspectEntry(nid, "claim", d, layer=c.layer.token, r_eff=c.cached_r_eff, status=c.status.value, formality=c.formality.token))
        else:
            ev = graph.evidence[nid]
            out.append(InspectEntry(nid, "evidence", d, raw_score=ev.raw_score, formality=ev.formality.token))
    return out
