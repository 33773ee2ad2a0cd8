"""Weakest-link reliability tracking for claim graphs."""

from .core import (
    Actor,
    ActorKind,
    CongruenceLevel,
    Config,
    EpistemicLayer,
    EvidenceRole,
    FormalityLevel,
    VerificationMethod,
    load_config,
    make_score,
)
from .gamma import OperatorKind, aggregate, quintet_report
from .graph import (
    EXCLUDED,
    ClaimNode,
    ClaimStatus,
    Evidence,
    KnowledgeGraph,
    adjust_evidence,
    effective_reliability,
    explain,
    inspect_dependencies,
    propagate,
    sweep_stale,
    two_tier_aggregate,
)
from .scope import BOTTOM, TOP, Scope, join, match_level, meet, parse_scope, serialize_scope

__version__ = "0.1.0"
