"""Independent reference implementations used as test oracles.

Written from the scoring rules directly, without calling into the
production scoring path, so agreement between the two means something.
"""

from __future__ import annotations

from datetime import datetime

from ..core import Config


def scope_set(s):
    """A scope as a frozenset of (dim, value) pairs, or None for BOTTOM."""
    return None if s.is_bottom else frozenset(s.constraints)


def match(claim_scope, other_scope) -> str:
    a, b = scope_set(claim_scope), scope_set(other_scope)
    if a is None or b is None:
        return "NONE"
    if a == b:
        return "CL3"
    da, db = dict(a), dict(b)
    common = set(da) & set(db)
    bad = [d for d in common if da[d] != db[d]]
    good = [d for d in common if da[d] == db[d]]
    if not bad:
        return "CL2" if (a <= b or b <= a) else "CL1"
    return "CL1" if good else "NONE"


def penalty(cfg: Config, level: str) -> float:
    return {"CL3": 0.0, "CL2": cfg.congruence_penalties[0], "CL1": cfg.congruence_penalties[1]}[level]


def decay(valid_until: datetime, now: datetime, grace_days: float) -> float:
    if now <= valid_until:
        return 1.0
    if grace_days == 0:
        return 0.0
    late_days = (now - valid_until).total_seconds() / 86400.0
    return max(0.0, 1.0 - late_days / grace_days)


def adjusted(ev, claim_scope, now: datetime, cfg: Config):
    level = match(claim_scope, ev.scope)
    if level == "NONE":
        return None
    v = ev.raw_score * cfg.verification_multipliers[int(ev.method)]
    v = v * decay(ev.valid_until, now, cfg.grace_days)
    v = max(0.0, v - penalty(cfg, level))
    if cfg.llm_cap is not None and ev.provenance.startswith("llm-generated"):
        v = min(v, cfg.llm_cap)
    return v


def reliability(graph, cfg: Config, now: datetime) -> dict[str, float]:
    """Every claim's score by memoized recursion over dependencies."""
    memo: dict[str, float] = {}

    def r(cid: str) -> float:
        if cid in memo:
            return memo[cid]
        c = graph.claims[cid]
        bounds = [cfg.layer_ceilings[int(c.layer)], cfg.formality_ceilings[int(c.formality)]]
        for eid in c.evidence_refs:
            v = adjusted(graph.evidence[eid], c.scope, now, cfg)
            if v is not None:
                bounds.append(v)
        for did in c.dependency_refs:
            level = match(c.scope, graph.claims[did].scope)
            bounds.append(0.0 if level == "NONE" else max(0.0, r(did) - penalty(cfg, level)))
        memo[cid] = min(bounds)
        return memo[cid]

    for cid in graph.claims:
        r(cid)
    return memo


def descendants(graph, roots) -> set[str]:
    """Claims reachable by walking dependency edges backwards from ``roots``."""
    children: dict[str, set[str]] = {}
    for cid, c in graph.claims.items():
        for d in c.dependency_refs:
            children.setdefault(d, set()).add(cid)
    seen: set[str] = set()
    stack = list(roots)
    while stack:
        cur = stack.pop()
        for ch in children.get(cur, ()):
            if ch not in seen:
                seen.add(ch)
                stack.append(ch)
    return seen


def bfs_depths(graph, root: str) -> dict[str, int]:
    depth = {root: 0}
    queue = [root]
    while queue:
        cur = queue.pop(0)
        c = graph.claims[cur]
        for ref in list(c.dependency_refs) + list(c.evidence_refs):
            if ref not in depth:
                depth[ref] = depth[cur] + 1
                if ref in graph.claims:
                    queue.append(ref)
    return depth
