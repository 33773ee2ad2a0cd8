"""Input generators. All randomness comes from the tape so inputs shrink."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from ..core import (
    DEFAULT_CONFIG,
    Actor,
    ActorKind,
    Config,
    EpistemicLayer,
    EvidenceRole,
    FormalityLevel,
    VerificationMethod,
)
from ..graph import ClaimNode, Evidence, KnowledgeGraph
from ..scope import BOTTOM, TOP, Scope
from .engine import Tape

GRID = 2**53
T0 = datetime(2025, 1, 1, tzinfo=timezone.utc)

# smallest subnormal, the double just below 1, the double just above 0 on the grid
EDGE_SCORES = (0.0, 1.0, 5e-324, 1.0 - 2.0**-53, 2.0**-53, 0.5)

DIMS = ("env", "model", "task", "lang")
VALUES = ("a", "b", "c")


def score(t: Tape) -> float:
    """A score in [0, 1]; mostly uniform on a 2^-53 grid, sometimes an edge value."""
    # fixed width (two choices either way) so shrinking one score never
    # shifts the choices that belong to the next value
    kind = t.draw(16)
    i = t.draw(GRID + 1)
    if kind >= 12:
        return EDGE_SCORES[kind - 12]
    return i / GRID


def scores(t: Tape, min_size: int = 1, max_size: int = 8) -> list[float]:
    return t.many(score, min_size, max_size)


def unit_pair(t: Tape) -> tuple[float, float]:
    a, b = score(t), score(t)
    return (a, b) if a <= b else (b, a)


def formality(t: Tape) -> FormalityLevel:
    return FormalityLevel(t.draw(4))


def layer(t: Tape) -> EpistemicLayer:
    return EpistemicLayer(t.draw(3))


def method(t: Tape) -> VerificationMethod:
    # 0 decodes to the strongest method so shrunk inputs stay simple
    return VerificationMethod(3 - t.draw(4))


def role(t: Tape) -> EvidenceRole:
    return t.choice(list(EvidenceRole))


def scope(t: Tape, allow_bottom: bool = True) -> Scope:
    kind = t.draw(20)
    if kind == 19 and allow_bottom:
        return BOTTOM
    if kind == 18:
        return TOP
    items = {}
    for d in DIMS:
        if t.boolean(0.4):
            items[d] = t.choice(VALUES)
    return Scope.of(items)


def scope_near(t: Tape, base: Scope) -> Scope:
    """A scope related to ``base``: equal, wider, narrower or conflicting."""
    if base.is_bottom:
        return scope(t)
    mode = t.draw(4)
    d = base.as_dict()
    if mode == 0:
        return base
    if mode == 1 and d:
        d.pop(t.choice(sorted(d)))
        return Scope.of(d)
    if mode == 2:
        free = [x for x in DIMS if x not in d]
        if free:
            d[t.choice(free)] = t.choice(VALUES)
        return Scope.of(d)
    return scope(t, allow_bottom=False)


def conflicting(t: Tape, base: Scope) -> Scope:
    """A scope that disagrees with ``base`` on every dimension they share."""
    d = base.as_dict()
    if not d:
        d = {t.choice(DIMS): t.choice(VALUES)}
    out = {k: VALUES[(VALUES.index(v) + 1 + t.draw(len(VALUES) - 1)) % len(VALUES)] for k, v in d.items()}
    for k in DIMS:
        if k not in d and t.boolean(0.3):
            out[k] = t.choice(VALUES)
    return Scope.of(out)


def scope_text(t: Tape) -> str:
    """Valid scope text, possibly with unsorted constraints."""
    s = scope(t)
    if s.is_bottom:
        return "!"
    if s.is_top:
        return "*"
    parts = [f"{k}={v}" for k, v in s.constraints]
    return ",".join(t.shuffled(parts))


def timestamp(t: Tape, max_days: int = 800) -> datetime:
    return T0 + timedelta(hours=t.draw(max_days * 24))


def ascending(t: Tape, n: int, lo: float = 0.05, hi: float = 1.0) -> tuple[float, ...]:
    """``n`` strictly increasing values in (lo, hi]."""
    steps = [1 + t.draw(100) for _ in range(n)]
    total = sum(steps) + t.draw(50)
    acc, out = 0, []
    for s in steps:
        acc += s
        out.append(round(lo + (hi - lo) * acc / max(total, acc), 6))
    for i in range(1, n):
        if out[i] <= out[i - 1]:
            out[i] = min(hi, out[i - 1] + 1e-6)
    return tuple(out)


def config(t: Tape) -> Config:
    if not t.boolean(0.7):
        return DEFAULT_CONFIG
    cl2 = t.draw(30) / 100
    cl1 = min(1.0, cl2 + (1 + t.draw(50)) / 100)
    days = sorted({1.0 + t.draw(400) for _ in range(4)})
    while len(days) < 4:
        days.append(days[-1] + 1.0)
    return Config(
        formality_ceilings=ascending(t, 4, 0.3),
        layer_ceilings=ascending(t, 3, 0.2),
        congruence_penalties=(cl2, cl1),
        verification_multipliers=ascending(t, 4, 0.3),
        validity_days=tuple(days),
        grace_days=float(t.draw(30)),
        llm_cap=None if t.boolean(0.7) else score(t),
    )


def actor(t: Tape, pool=("gen-1", "gen-2", "ver-1", "hum-1")) -> Actor:
    name = t.choice(pool)
    kind = {"gen": ActorKind.GENERATOR, "ver": ActorKind.VERIFIER, "hum": ActorKind.HUMAN}[name.split("-")[0]]
    return Actor(name, kind)


def evidence(t: Tape, eid: str, near: Scope | None = None) -> Evidence:
    sc = scope_near(t, near) if near is not None else scope(t, allow_bottom=False)
    collected = timestamp(t, 400)
    f = formality(t)
    return Evidence.create(
        eid,
        score(t),
        formality=f,
        scope=sc,
        method=method(t),
        role=role(t),
        collected_at=collected,
        valid_until=collected + timedelta(days=1 + t.draw(400)),
        provenance="llm-generated:gen-1" if t.boolean(0.2) else "",
    )


# -- graphs -------------------------------------------------------------------------


@dataclass
class GraphCase:
    graph: KnowledgeGraph
    shape: str
    now: datetime
    edges: list[tuple[str, str]] = field(default_factory=list)

    def __repr__(self):
        lines = [f"GraphCase(shape={self.shape}, now={self.now.isoformat()}, edges={self.edges})"]
        for cid in sorted(self.graph.claims):
            c = self.graph.claims[cid]
            ev = ", ".join(
                f"{e}:{self.graph.evidence[e].raw_score!r}@{self.graph.evidence[e].scope}" for e in sorted(c.evidence_refs)
            )
            lines.append(f"  {cid} {c.layer.token}/{c.formality.token} scope={c.scope} ev=[{ev}]")
        return "\n".join(lines)


def _edges(t: Tape, shape: str, n: int) -> list[tuple[int, int]]:
    """Edges (child, parent) with parent < child, so every shape is acyclic."""
    if shape == "chain":
        return [(i, i - 1) for i in range(1, n)]
    if shape == "diamond":
        out = []
        for i in range(1, n):
            out.append((i, i - 1))
            if i >= 2 and i % 2 == 0:
                out.append((i, i - 2))
        return out
    if shape == "random":
        out = []
        for i in range(1, n):
            # about two parents per node on average
            p = min(1.0, 2.0 / i)
            for j in range(i):
                if t.boolean(p):
                    out.append((i, j))
        return out
    # mixed: serial runs joined by parallel fan-ins
    out = []
    for i in range(1, n):
        if t.boolean(0.6):
            out.append((i, i - 1))
        else:
            for j in sorted({t.draw(i) for _ in range(1 + t.draw(3))}):
                out.append((i, j))
    return out


def graph_case(t: Tape, max_nodes: int = 12, shape: str | None = None, min_nodes: int = 1, shared_scope: bool | None = None) -> GraphCase:
    shape = shape or t.choice(("chain", "diamond", "random", "mixed"))
    n = min_nodes + t.draw(max_nodes - min_nodes + 1)
    base = scope(t, allow_bottom=False)
    same = t.boolean(0.5) if shared_scope is None else shared_scope
    g = KnowledgeGraph(T0)
    ids = [f"c{i}" for i in range(n)]
    for i, cid in enumerate(ids):
        sc = base if same else scope_near(t, base)
        g.add_claim(
            ClaimNode(
                id=cid,
                statement=f"claim {i}",
                layer=layer(t),
                formality=formality(t),
                scope=sc,
                proposer=Actor("gen-1", ActorKind.GENERATOR),
            )
        )
    edges = []
    for child, parent in _edges(t, shape, n):
        g.link_dependency(ids[child], ids[parent])
        edges.append((ids[child], ids[parent]))
    k = 0
    for cid in ids:
        for _ in range(t.draw(3)):
            k += 1
            ev = evidence(t, f"e{k}", near=g.claims[cid].scope)
            g.add_evidence(ev, attach_to=[cid])
    # a few items shared between claims
    for _ in range(t.draw(3)):
        if not g.evidence:
            break
        g.attach_evidence(t.choice(ids), t.choice(sorted(g.evidence)))
    now = timestamp(t, 900)
    return GraphCase(g, shape, now, edges)


def large_dag(t: Tape) -> GraphCase:
    return graph_case(t, max_nodes=50, min_nodes=2)


def small_dag(t: Tape) -> GraphCase:
    return graph_case(t, max_nodes=8)
