"""Shared vocabulary: scores, levels, layers, congruence, verification, config."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum, IntEnum
from pathlib import Path
from typing import Any, Mapping, TypeVar

from .errors import ConfigError, OrderingViolation, RangeViolation

Score = float

E = TypeVar("E", bound=Enum)


def make_score(value: Any) -> Score:
    """Validate ``value`` as a reliability score: finite and within [0, 1]."""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RangeViolation(f"score must be a real number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        raise RangeViolation(f"score must be finite, got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise RangeViolation(f"score {value!r} outside [0, 1]")
    return value


class FormalityLevel(IntEnum):
    F0 = 0
    F1 = 1
    F2 = 2
    F3 = 3

    @property
    def token(self) -> str:
        return self.name


class EpistemicLayer(IntEnum):
    L0 = 0
    L1 = 1
    L2 = 2

    @property
    def token(self) -> str:
        return self.name


class CongruenceLevel(Enum):
    CL3 = "CL3"
    CL2 = "CL2"
    CL1 = "CL1"
    NONE = "NONE"

    @property
    def token(self) -> str:
        return self.value


class VerificationMethod(IntEnum):
    SELF_REPORTED = 0
    SCRIPT_ATTACHED = 1
    EXTERNALLY_REVIEWED = 2
    EXECUTED_VERIFIED = 3

    @property
    def token(self) -> str:
        return self.name.lower()


class EvidenceRole(Enum):
    GATE = "gate"
    PERFORMANCE = "performance"
    QUALITY = "quality"
    OTHER = "other"

    @property
    def token(self) -> str:
        return self.value


class ActorKind(Enum):
    GENERATOR = "generator"
    VERIFIER = "verifier"
    HUMAN = "human"

    @property
    def token(self) -> str:
        return self.value


def parse_token(cls: type[E], token: str) -> E:
    """Look up an enum member by its wire token (case-insensitive)."""
    if isinstance(token, cls):
        return token
    wanted = str(token).strip().lower()
    for member in cls:
        if member.token.lower() == wanted or member.name.lower() == wanted:
            return member
    choices = ", ".join(m.token for m in cls)
    raise ValueError(f"unknown {cls.__name__} {token!r} (expected one of: {choices})")


@dataclass(frozen=True)
class Actor:
    id: str
    kind: ActorKind = ActorKind.GENERATOR

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id.strip():
            raise ValueError("actor id must be a non-empty token")

    def to_json(self) -> dict:
        return {"id": self.id, "kind": self.kind.token}

    @classmethod
    def from_json(cls, data: Mapping) -> Actor:
        return cls(str(data["id"]), parse_token(ActorKind, data.get("kind", "generator")))


# -- timestamps -------------------------------------------------------------


def as_utc(dt: datetime) -> datetime:
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def parse_timestamp(text: str) -> datetime:
    """Parse an RFC 3339 timestamp. Naive values are taken as UTC."""
    if isinstance(text, datetime):
        return as_utc(text)
    s = str(text).strip()
    if s[-1:] in ("Z", "z"):
        s = s[:-1] + "+00:00"
    try:
        return as_utc(datetime.fromisoformat(s))
    except ValueError as exc:
        raise ValueError(f"bad timestamp {text!r}: {exc}") from None


def format_timestamp(dt: datetime) -> str:
    return as_utc(dt).isoformat().replace("+00:00", "Z")


# -- configuration ------------------------------------------------------------

SUITE_CATEGORIES = (
    "r_eff_calculator",
    "scope_algebra",
    "epistemic_fsm",
    "graph_topology",
    "dependency_inspector",
    "fuzz",
)

DEFAULT_FORMALITY_CEILINGS = (0.70, 0.85, 0.95, 0.99)
DEFAULT_LAYER_CEILINGS = (0.35, 0.75, 1.00)
DEFAULT_CONGRUENCE_PENALTIES = (0.1, 0.4)  # CL2, CL1
DEFAULT_VERIFICATION_MULTIPLIERS = (0.60, 0.85, 0.95, 1.00)
DEFAULT_VALIDITY_DAYS = (30.0, 90.0, 180.0, 365.0)
DEFAULT_GRACE_DAYS = 14.0
DEFAULT_PBT_CASES = 1000

# Chain-of-thought faithfulness bound for current models; opt-in via llm_cap.
CURRENT_MODEL_FAITHFULNESS = 0.39

CONFIG_KEYS = (
    "formality_ceilings",
    "layer_ceilings",
    "congruence_penalties",
    "verification_multipliers",
    "validity_days",
    "grace_days",
    "pbt_cases",
    "llm_cap",
)


@dataclass(frozen=True)
class Config:
    """Immutable scoring policy. Build with :func:`load_config`."""

    formality_ceilings: tuple[float, ...] = DEFAULT_FORMALITY_CEILINGS
    layer_ceilings: tuple[float, ...] = DEFAULT_LAYER_CEILINGS
    congruence_penalties: tuple[float, ...] = DEFAULT_CONGRUENCE_PENALTIES
    verification_multipliers: tuple[float, ...] = DEFAULT_VERIFICATION_MULTIPLIERS
    validity_days: tuple[float, ...] = DEFAULT_VALIDITY_DAYS
    grace_days: float = DEFAULT_GRACE_DAYS
    pbt_cases: tuple[tuple[str, int], ...] = tuple((c, DEFAULT_PBT_CASES) for c in SUITE_CATEGORIES)
    llm_cap: float | None = None

    def __post_init__(self):
        _validate(self)

    def formality_ceiling(self, level: FormalityLevel) -> float:
        return self.formality_ceilings[level]

    def layer_ceiling(self, layer: EpistemicLayer) -> float:
        return self.layer_ceilings[layer]

    def penalty(self, level: CongruenceLevel) -> float:
        if level is CongruenceLevel.CL3:
            return 0.0
        if level is CongruenceLevel.CL2:
            return self.congruence_penalties[0]
        if level is CongruenceLevel.CL1:
            return self.congruence_penalties[1]
        raise ValueError("NONE-matched inputs carry no penalty; they are excluded")

    def multiplier(self, method: VerificationMethod) -> float:
        return self.verification_multipliers[method]

    def validity(self, level: FormalityLevel) -> timedelta:
        return timedelta(days=self.validity_days[level])

    @property
    def grace(self) -> timedelta:
        return timedelta(days=self.grace_days)

    def cases_for(self, category: str) -> int:
        return dict(self.pbt_cases).get(category, DEFAULT_PBT_CASES)

    def to_json(self) -> dict:
        return {
            "formality_ceilings": {f.token: self.formality_ceilings[f] for f in FormalityLevel},
            "layer_ceilings": {lay.token: self.layer_ceilings[lay] for lay in EpistemicLayer},
            "congruence_penalties": {"CL2": self.congruence_penalties[0], "CL1": self.congruence_penalties[1]},
            "verification_multipliers": {m.token: self.verification_multipliers[m] for m in VerificationMethod},
            "validity_days": {f.token: self.validity_days[f] for f in FormalityLevel},
            "grace_days": self.grace_days,
            "pbt_cases": dict(self.pbt_cases),
            "llm_cap": self.llm_cap,
        }


def _strictly_increasing(values) -> bool:
    return all(a < b for a, b in zip(values, values[1:]))


def _validate(cfg: Config) -> None:
    for name in ("formality_ceilings", "layer_ceilings", "congruence_penalties", "verification_multipliers"):
        for v in getattr(cfg, name):
            try:
                make_score(v)
            except RangeViolation as exc:
                raise RangeViolation(f"{name}: {exc}") from None
    for v in cfg.verification_multipliers:
        if v <= 0.0:
            raise RangeViolation(f"verification multiplier {v!r} must be in (0, 1]")
    if not _strictly_increasing(cfg.formality_ceilings):
        raise OrderingViolation(f"formality ceilings must strictly increase F0<F1<F2<F3, got {cfg.formality_ceilings}")
    if not _strictly_increasing(cfg.layer_ceilings):
        raise OrderingViolation(f"layer ceilings must strictly increase L0<L1<L2, got {cfg.layer_ceilings}")
    for v in cfg.validity_days:
        if not _finite_number(v) or v <= 0:
            raise RangeViolation(f"validity_days entries must be positive and finite, got {v!r}")
    if not _strictly_increasing(cfg.validity_days):
        raise OrderingViolation(f"validity_days must strictly increase with formality, got {cfg.validity_days}")
    if not _finite_number(cfg.grace_days) or cfg.grace_days < 0:
        raise RangeViolation(f"grace_days must be finite and >= 0, got {cfg.grace_days!r}")
    for cat, n in cfg.pbt_cases:
        if cat not in SUITE_CATEGORIES:
            raise ConfigError(f"unknown pbt_cases category {cat!r}")
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise RangeViolation(f"pbt_cases[{cat}] must be a positive integer, got {n!r}")
    if cfg.llm_cap is not None:
        try:
            make_score(cfg.llm_cap)
        except RangeViolation as exc:
            raise RangeViolation(f"llm_cap: {exc}") from None


def _finite_number(v) -> bool:
    return not isinstance(v, bool) and isinstance(v, (int, float)) and math.isfinite(v)


def _merge(section: str, raw: Any, members, defaults: tuple) -> tuple:
    if not isinstance(raw, Mapping):
        raise ConfigError(f"{section} must be an object")
    out = list(defaults)
    by_token = {m.token.lower(): m for m in members}
    for key, value in raw.items():
        member = by_token.get(str(key).lower())
        if member is None:
            raise ConfigError(f"{section}: unknown key {key!r}")
        if not _finite_number(value):
            raise RangeViolation(f"{section}.{key} must be a finite number, got {value!r}")
        out[list(by_token.values()).index(member)] = float(value)
    return tuple(out)


class _PenaltyKey(Enum):
    CL2 = "CL2"
    CL1 = "CL1"

    @property
    def token(self):
        return self.value


def _reject_constant(token):
    raise ValueError(f"non-finite literal {token}")


def load_config(source: str | bytes | Mapping | None = None) -> Config:
    """Build a validated :class:`Config` from JSON text (or a parsed mapping).

    Omitted keys take the defaults; unknown keys are rejected.
    """
    if source is None:
        data: Any = {}
    elif isinstance(source, Mapping):
        data = source
    else:
        text = source.decode("utf-8") if isinstance(source, bytes) else source
        if not text.strip():
            data = {}
        else:
            try:
                data = json.loads(text, parse_constant=_reject_constant)
            except ValueError as exc:
                # NaN/Infinity literals land here as well
                if "non-finite" in str(exc):
                    raise RangeViolation(str(exc)) from None
                raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, Mapping):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    kwargs: dict[str, Any] = {}
    if "formality_ceilings" in data:
        kwargs["formality_ceilings"] = _merge("formality_ceilings", data["formality_ceilings"], FormalityLevel, DEFAULT_FORMALITY_CEILINGS)
    if "layer_ceilings" in data:
        kwargs["layer_ceilings"] = _merge("layer_ceilings", data["layer_ceilings"], EpistemicLayer, DEFAULT_LAYER_CEILINGS)
    if "congruence_penalties" in data:
        kwargs["congruence_penalties"] = _merge("congruence_penalties", data["congruence_penalties"], _PenaltyKey, DEFAULT_CONGRUENCE_PENALTIES)
    if "verification_multipliers" in data:
        kwargs["verification_multipliers"] = _merge(
            "verification_multipliers", data["verification_multipliers"], VerificationMethod, DEFAULT_VERIFICATION_MULTIPLIERS
        )
    if "validity_days" in data:
        kwargs["validity_days"] = _merge("validity_days", data["validity_days"], FormalityLevel, DEFAULT_VALIDITY_DAYS)
    if "grace_days" in data:
        g = data["grace_days"]
        if not _finite_number(g):
            raise RangeViolation(f"grace_days must be a finite number, got {g!r}")
        kwargs["grace_days"] = float(g)
    if "pbt_cases" in data:
        raw = data["pbt_cases"]
        if not isinstance(raw, Mapping):
            raise ConfigError("pbt_cases must be an object")
        cases = dict((c, DEFAULT_PBT_CASES) for c in SUITE_CATEGORIES)
        for k, v in raw.items():
            if k not in cases:
                raise ConfigError(f"pbt_cases: unknown category {k!r}")
            cases[k] = v
        kwargs["pbt_cases"] = tuple(cases.items())
    if "llm_cap" in data and data["llm_cap"] is not None:
        cap = data["llm_cap"]
        if not _finite_number(cap):
            raise RangeViolation(f"llm_cap must be a finite number, got {cap!r}")
        kwargs["llm_cap"] = float(cap)
    return Config(**kwargs)


def load_config_file(path: str | Path) -> Config:
    return load_config(Path(path).read_text(encoding="utf-8"))


DEFAULT_CONFIG = Config()
