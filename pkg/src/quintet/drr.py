"""Design Rationale Records: an append-only, hash-chained decision log.

Store layout (UTF-8, one JSON object per line)::

    {"digest_algorithm":"sha256","format_version":1,"type":"header"}
    {"decision":...,"prev_hash":"000...","this_hash":"...","type":"drr",...}
    ...

Each record's ``this_hash`` is the digest of its canonical serialization
with ``this_hash`` removed, and ``prev_hash`` links to the record before it.
Lines are written in canonical form, so any byte change to a record makes
that record fail verification.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path

from .core import DEFAULT_CONFIG, Actor, Config, as_utc, format_timestamp, parse_timestamp
from .errors import AuditError, EmptyHistory, UnscopedDecision
from .fsm import MODE_FOR_LAYER, check_ratifiable
from .graph import KnowledgeGraph, propagate, qualifies_for_corroboration
from .scope import serialize_scope

FORMAT_VERSION = 1
DEFAULT_ALGORITHM = "sha256"
GENESIS = "0" * 64
LAYER_FOR_MODE = {mode: layer.token for layer, mode in MODE_FOR_LAYER.items()}


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False)


def digest(payload: dict, algorithm: str = DEFAULT_ALGORITHM) -> str:
    return hashlib.new(algorithm, canonical(payload).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class DesignRationaleRecord:
    drr_id: str
    claim_id: str
    decision: str
    steps: tuple[dict, ...]
    final_r_eff: float
    scope_spec: str
    validity_window: tuple[str, str]
    ratifier: Actor
    prev_hash: str
    this_hash: str = ""
    supersedes: str | None = None

    def __post_init__(self):
        for step in self.steps:
            if LAYER_FOR_MODE.get(step["mode"]) != step["layer"]:
                raise AuditError(f"step {step} pairs inference mode {step['mode']} with layer {step['layer']}")
        if self.scope_spec == "!":
            raise UnscopedDecision("a decision needs a satisfiable scope")
        start, until = (parse_timestamp(t) for t in self.validity_window)
        if not start < until:
            raise UnscopedDecision("validity window is empty")

    def payload(self) -> dict:
        return {
            "type": "drr",
            "drr_id": self.drr_id,
            "claim_id": self.claim_id,
            "decision": self.decision,
            "steps": list(self.steps),
            "final_r_eff": self.final_r_eff,
            "scope_spec": self.scope_spec,
            "validity_window": list(self.validity_window),
            "ratifier": self.ratifier.to_json(),
            "supersedes": self.supersedes,
            "prev_hash": self.prev_hash,
        }

    def to_json(self) -> dict:
        return {**self.payload(), "this_hash": self.this_hash}

    @classmethod
    def from_json(cls, d: dict) -> DesignRationaleRecord:
        return cls(
            drr_id=d["drr_id"],
            claim_id=d["claim_id"],
            decision=d["decision"],
            steps=tuple(d["steps"]),
            final_r_eff=d["final_r_eff"],
            scope_spec=d["scope_spec"],
            validity_window=tuple(d["validity_window"]),
            ratifier=Actor.from_json(d["ratifier"]),
            prev_hash=d["prev_hash"],
            this_hash=d["this_hash"],
            supersedes=d.get("supersedes"),
        )


class DrrStore:
    """Append-only record log, in memory or backed by a file."""

    def __init__(self, path: str | Path | None = None, algorithm: str = DEFAULT_ALGORITHM):
        self.path = Path(path) if path is not None else None
        self.algorithm = algorithm
        self._lines: list[str] = []
        if self.path is not None and self.path.exists() and self.path.stat().st_size:
            raw = self.path.read_text(encoding="utf-8").splitlines()
            header = json.loads(raw[0])
            if header.get("type") != "header":
                raise AuditError(f"{self.path}: missing store header")
            self.algorithm = header["digest_algorithm"]
            self._lines = raw[1:]
        elif self.path is not None:
            self.path.write_text(self.header_line() + "\n", encoding="utf-8")

    def header_line(self) -> str:
        return canonical({"type": "header", "format_version": FORMAT_VERSION, "digest_algorithm": self.algorithm})

    def __len__(self) -> int:
        return len(self._lines)

    @property
    def head_hash(self) -> str:
        if not self._lines:
            return GENESIS
        return json.loads(self._lines[-1])["this_hash"]

    def records(self) -> list[DesignRationaleRecord]:
        return [DesignRationaleRecord.from_json(json.loads(line)) for line in self._lines]

    def latest_for(self, claim_id: str) -> DesignRationaleRecord | None:
        for line in reversed(self._lines):
            rec = json.loads(line)
            if rec["claim_id"] == claim_id:
                return DesignRationaleRecord.from_json(rec)
        return None

    def seal(self, record: DesignRationaleRecord) -> DesignRationaleRecord:
        """Chain ``record`` onto the current head and compute its hash."""
        chained = replace(record, prev_hash=self.head_hash, this_hash="")
        return replace(chained, this_hash=digest(chained.payload(), self.algorithm))

    def append(self, record: DesignRationaleRecord) -> DesignRationaleRecord:
        if record.prev_hash != self.head_hash:
            raise AuditError(f"{record.drr_id} does not chain onto the current head")
        if digest(record.payload(), self.algorithm) != record.this_hash:
            raise AuditError(f"{record.drr_id} has a wrong digest")
        line = canonical(record.to_json())
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        self._lines.append(line)
        return record

    def to_bytes(self) -> bytes:
        return "".join(line + "\n" for line in [self.header_line(), *self._lines]).encode("utf-8")


@dataclass(frozen=True)
class ChainBreak:
    index: int | None  # 0-based record index; None when the header itself is bad
    reason: str

    def to_json(self) -> dict:
        return {"ok": False, "first_bad_record": self.index, "reason": self.reason}


def verify_chain(store: DrrStore | bytes | str | Path) -> ChainBreak | None:
    """Recompute every link; ``None`` when intact, else the first bad record."""
    if isinstance(store, DrrStore):
        data = store.to_bytes() if store.path is None else store.path.read_bytes()
    elif isinstance(store, (str, Path)):
        data = Path(store).read_bytes()
    else:
        data = bytes(store)
    if not data:
        return None
    lines = data.split(b"\n")
    if data.endswith(b"\n"):
        lines.pop()
    try:
        header = json.loads(lines[0].decode("utf-8"))
        algorithm = header["digest_algorithm"]
        if lines[0].decode("utf-8") != canonical(header) or header.get("type") != "header":
            raise ValueError("non-canonical header")
        hashlib.new(algorithm)
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        return ChainBreak(None, f"bad header: {exc}")
    prev = GENESIS
    for k, raw in enumerate(lines[1:]):
        try:
            text = raw.decode("utf-8")
            rec = json.loads(text)
            if not isinstance(rec, dict):
                raise ValueError("not an object")
        except ValueError as exc:
            return ChainBreak(k, f"unreadable record: {exc}")
        try:
            # an overflowing exponent parses to inf, which has no canonical form
            canon = canonical(rec)
        except ValueError as exc:
            return ChainBreak(k, f"unrepresentable record: {exc}")
        if canon != text:
            return ChainBreak(k, "record bytes are not in canonical form")
        if rec.get("prev_hash") != prev:
            return ChainBreak(k, "prev_hash does not match the preceding record")
        body = {key: v for key, v in rec.items() if key != "this_hash"}
        if digest(body, algorithm) != rec.get("this_hash"):
            return ChainBreak(k, "digest mismatch")
        prev = rec["this_hash"]
    return None


def finalize_drr(
    graph: KnowledgeGraph,
    claim_id: str,
    ratifier: Actor,
    store: DrrStore,
    window: tuple[datetime, datetime] | None = None,
    cfg: Config = DEFAULT_CONFIG,
    now: datetime | None = None,
    supersedes: str | None = None,
) -> DesignRationaleRecord:
    """Build the record for a ratifiable claim and append it to ``store``.

    The default validity window runs from ``now`` until the earliest
    expiry among the evidence that corroborates the claim.
    """
    now = graph.now(now)
    claim = check_ratifiable(graph, claim_id, ratifier)
    if not claim.history:
        raise EmptyHistory(f"{claim_id} has no recorded promotion history")
    if claim.scope.is_bottom:
        raise UnscopedDecision(f"{claim_id} has a contradictory scope")
    if window is None:
        expiries = [
            graph.evidence[e].valid_until
            for e in claim.evidence_refs
            if qualifies_for_corroboration(graph.evidence[e], claim.scope, now)
        ]
        if not expiries:
            raise UnscopedDecision(f"{claim_id} has no live evidence to bound a validity window")
        window = (now, min(expiries))
    if not as_utc(window[0]) < as_utc(window[1]):
        raise UnscopedDecision(f"{claim_id}: validity window is empty")
    propagate(graph, cfg, now)
    steps = []
    for step in claim.history:
        steps.append(
            {
                "claim_id": claim_id,
                "mode": step.mode,
                "layer": step.layer.token,
                "actor": step.actor,
                "evidence": [{"id": e, "provenance": graph.evidence[e].provenance} for e in step.evidence_ids],
            }
        )
    if supersedes is None:
        prior = store.latest_for(claim_id)
        supersedes = prior.drr_id if prior else None
    record = DesignRationaleRecord(
        drr_id=f"drr-{len(store) + 1}",
        claim_id=claim_id,
        decision=claim.statement,
        steps=tuple(steps),
        final_r_eff=claim.cached_r_eff,
        scope_spec=serialize_scope(claim.scope),
        validity_window=(format_timestamp(window[0]), format_timestamp(window[1])),
        ratifier=ratifier,
        prev_hash=store.head_hash,
        supersedes=supersedes,
    )
    return store.append(store.seal(record))
