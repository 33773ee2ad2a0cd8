from datetime import datetime, timedelta, timezone

import pytest

from quintet.core import Actor, ActorKind, EpistemicLayer, FormalityLevel, VerificationMethod
from quintet.graph import ClaimNode, Evidence, KnowledgeGraph
from quintet.scope import parse_scope

T0 = datetime(2025, 3, 1, tzinfo=timezone.utc)
GEN = Actor("llm-1", ActorKind.GENERATOR)
VER = Actor("checker", ActorKind.VERIFIER)
HUMAN = Actor("alice", ActorKind.HUMAN)


def claim(cid, layer="L2", formality="F2", scope="task=multihop", proposer=GEN, deps=()):
    return ClaimNode(
        cid,
        f"statement {cid}",
        EpistemicLayer[layer],
        FormalityLevel[formality],
        parse_scope(scope),
        proposer,
        dependency_refs=set(deps),
    )


def evidence(eid, score, scope="task=multihop", method=VerificationMethod.EXECUTED_VERIFIED, at=T0, days=90, **kw):
    return Evidence.create(eid, score, scope=parse_scope(scope), method=method, collected_at=at, valid_until=at + timedelta(days=days), **kw)


def chain_graph():
    """S1 depends on S2 depends on S3; evidence 0.95, 0.85, 0.40; all L2/F2, same scope."""
    g = KnowledgeGraph(T0)
    g.add_claim(claim("S3"))
    g.add_claim(claim("S2", deps=["S3"]))
    g.add_claim(claim("S1", deps=["S2"]))
    for eid, s, cid in (("e1", 0.95, "S1"), ("e2", 0.85, "S2"), ("e3", 0.40, "S3")):
        g.add_evidence(evidence(eid, s), [cid])
    return g


@pytest.fixture
def chain():
    return chain_graph()


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
