"""Scope descriptors as a bounded lattice of ``dim=value`` constraints.

Textual syntax::

    scope      := "*" | "!" | constraint ("," constraint)*
    constraint := token "=" token
    token      := [a-z0-9_.-]+

``*`` is TOP (no constraints, applies everywhere) and ``!`` is BOTTOM (a
contradictory scope that applies nowhere). Lower in the lattice means more
specific: ``meet`` unions constraints, ``join`` keeps only the agreement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .core import CongruenceLevel
from .errors import ParseError

TOKEN_CHARS = frozenset("abcdefghijklmnopqrstuvwxyz0123456789_.-")


@dataclass(frozen=True, slots=True)
class Scope:
    constraints: tuple[tuple[str, str], ...] = ()
    is_bottom: bool = False

    @classmethod
    def of(cls, mapping: Mapping[str, str] | None = None, **kw: str) -> Scope:
        items = dict(mapping or {}, **kw)
        for dim, val in items.items():
            _check_token(dim)
            _check_token(val)
        return cls(tuple(sorted(items.items())))

    @property
    def is_top(self) -> bool:
        return not self.is_bottom and not self.constraints

    def as_dict(self) -> dict[str, str]:
        return dict(self.constraints)

    def __str__(self) -> str:
        return serialize_scope(self)

    def __le__(self, other: Scope) -> bool:
        return leq(self, other)


TOP = Scope()
BOTTOM = Scope((), True)


def _check_token(tok: str) -> None:
    if not isinstance(tok, str) or not tok or not set(tok) <= TOKEN_CHARS:
        raise ValueError(f"invalid scope token {tok!r}")


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def parse_scope(text: str) -> Scope:
    if text == "*":
        return TOP
    if text == "!":
        return BOTTOM
    constraints: dict[str, str] = {}
    n = len(text)
    i = 0

    def fail(at: int, reason: str):
        raise ParseError(_byte_offset(text, at), reason, text)

    def token(at: int, what: str) -> int:
        j = at
        while j < n and text[j] in TOKEN_CHARS:
            j += 1
        if j == at:
            if at >= n:
                fail(at, f"expected {what}, found end of input")
            fail(at, f"expected {what}, found {text[at]!r}")
        return j

    if n == 0:
        fail(0, "empty scope (use '*' for the universal scope)")
    while True:
        start = i
        i = token(i, "dimension name")
        dim = text[start:i]
        if i >= n or text[i] != "=":
            fail(i, "expected '='" + (", found end of input" if i >= n else f", found {text[i]!r}"))
        i += 1
        vstart = i
        i = token(i, "value")
        if dim in constraints:
            fail(start, f"duplicate dimension {dim!r}")
        constraints[dim] = text[vstart:i]
        if i == n:
            break
        if text[i] != ",":
            fail(i, f"expected ',' or end of input, found {text[i]!r}")
        i += 1
    return Scope(tuple(sorted(constraints.items())))


def serialize_scope(s: Scope) -> str:
    if s.is_bottom:
        return "!"
    if not s.constraints:
        return "*"
    return ",".join(f"{d}={v}" for d, v in s.constraints)


def meet(a: Scope, b: Scope) -> Scope:
    """Greatest lower bound: both sets of constraints at once, or BOTTOM on conflict."""
    if a.is_bottom or b.is_bottom:
        return BOTTOM
    merged = dict(a.constraints)
    for dim, val in b.constraints:
        if merged.setdefault(dim, val) != val:
            return BOTTOM
    return Scope(tuple(sorted(merged.items())))


def join(a: Scope, b: Scope) -> Scope:
    """Least upper bound: the constraints both scopes agree on."""
    if a.is_bottom:
        return b
    if b.is_bottom:
        return a
    shared = set(a.constraints) & set(b.constraints)
    return Scope(tuple(sorted(shared)))


def leq(a: Scope, b: Scope) -> bool:
    """``a`` is at least as specific as ``b``."""
    if a.is_bottom:
        return True
    if b.is_bottom:
        return False
    return set(b.constraints) <= set(a.constraints)


def meet_all(scopes: Iterable[Scope]) -> Scope:
    out = TOP
    for s in scopes:
        out = meet(out, s)
    return out


def match_level(claim_scope: Scope, evidence_scope: Scope) -> CongruenceLevel:
    """Congruence between the context of a claim and of something transferred into it.

    CL3 for identical scopes, CL2 when one subsumes the other, CL1 when
    they are incomparable but still share an agreeing dimension or do not
    conflict at all, NONE when every shared dimension conflicts or either
    side is BOTTOM.
    """
    if claim_scope.is_bottom or evidence_scope.is_bottom:
        return CongruenceLevel.NONE
    if claim_scope == evidence_scope:
        return CongruenceLevel.CL3
    a = dict(claim_scope.constraints)
    b = dict(evidence_scope.constraints)
    shared = a.keys() & b.keys()
    agree = sum(1 for d in shared if a[d] == b[d])
    conflicts = len(shared) - agree
    if conflicts == 0:
        if shared == a.keys() or shared == b.keys():
            return CongruenceLevel.CL2
        return CongruenceLevel.CL1
    if agree:
        return CongruenceLevel.CL1
    return CongruenceLevel.NONE
