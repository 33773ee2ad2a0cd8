"""Bounded-lattice laws, the text round-trip and congruence matching."""

from __future__ import annotations

from ..core import CongruenceLevel
from ..scope import BOTTOM, TOP, join, leq, match_level, meet, parse_scope, serialize_scope
from . import gens, oracles
from .engine import REGISTRY

CAT = "scope_algebra"


def prop(gen, cost=1):
    return REGISTRY.add(CAT, gen, cost)


def one(t):
    return gens.scope(t)


def two(t):
    a = gens.scope(t)
    return a, gens.scope_near(t, a) if t.boolean(0.5) else gens.scope(t)


def three(t):
    a = gens.scope(t)
    return a, gens.scope_near(t, a), gens.scope(t)


@prop(two)
def meet_commutative(c, ctx):
    a, b = c
    assert meet(a, b) == meet(b, a)


@prop(two)
def join_commutative(c, ctx):
    a, b = c
    assert join(a, b) == join(b, a)


@prop(three)
def meet_associative(c, ctx):
    a, b, d = c
    assert meet(meet(a, b), d) == meet(a, meet(b, d))


@prop(three)
def join_associative(c, ctx):
    a, b, d = c
    assert join(join(a, b), d) == join(a, join(b, d))


@prop(one)
def meet_idempotent(a, ctx):
    assert meet(a, a) == a


@prop(one)
def join_idempotent(a, ctx):
    assert join(a, a) == a


@prop(two)
def absorption_meet_join(c, ctx):
    a, b = c
    assert meet(a, join(a, b)) == a


@prop(two)
def absorption_join_meet(c, ctx):
    a, b = c
    assert join(a, meet(a, b)) == a


@prop(one)
def top_and_bottom_identities(a, ctx):
    assert meet(a, TOP) == a and join(a, BOTTOM) == a


@prop(one)
def top_and_bottom_absorb(a, ctx):
    assert meet(a, BOTTOM) == BOTTOM and join(a, TOP) == TOP


@prop(two)
def order_agrees_with_meet_and_join(c, ctx):
    """a <= b exactly when a meet b is a, and exactly when a join b is b."""
    a, b = c
    assert leq(a, b) == (meet(a, b) == a) == (join(a, b) == b)


@prop(three)
def order_is_partial(c, ctx):
    a, b, d = c
    assert leq(a, a)
    if leq(a, b) and leq(b, a):
        assert a == b
    if leq(a, b) and leq(b, d):
        assert leq(a, d)


@prop(two)
def meet_is_greatest_lower_bound(c, ctx):
    a, b = c
    m = meet(a, b)
    assert leq(m, a) and leq(m, b)
    j = join(a, b)
    assert leq(a, j) and leq(b, j)


@prop(one)
def parse_serialize_roundtrip(a, ctx):
    assert parse_scope(serialize_scope(a)) == a


@prop(gens.scope_text)
def serialize_is_canonical(text, ctx):
    """Any accepted spelling serializes to one stable, sorted form."""
    s = parse_scope(text)
    canon = serialize_scope(s)
    assert serialize_scope(parse_scope(canon)) == canon
    if not s.is_bottom and not s.is_top:
        dims = [p.split("=")[0] for p in canon.split(",")]
        assert dims == sorted(dims)


@prop(two)
def match_level_symmetric(c, ctx):
    a, b = c
    assert match_level(a, b) is match_level(b, a)


@prop(two)
def match_level_oracle(c, ctx):
    a, b = c
    assert match_level(a, b).token == oracles.match(a, b), (a, b)


@prop(two)
def match_level_exact_iff_equal(c, ctx):
    a, b = c
    if a.is_bottom or b.is_bottom:
        assert match_level(a, b) is CongruenceLevel.NONE
    else:
        assert (match_level(a, b) is CongruenceLevel.CL3) == (a == b)


@prop(two)
def comparable_scopes_match_cl2_or_better(c, ctx):
    """Nested, satisfiable scopes always transfer with at most the CL2 penalty."""
    a, b = c
    if a.is_bottom or b.is_bottom or not (leq(a, b) or leq(b, a)):
        return
    assert match_level(a, b) in (CongruenceLevel.CL3, CongruenceLevel.CL2)
