import pytest
from hypothesis import given
from hypothesis import strategies as st

from quintet.core import CongruenceLevel
from quintet.errors import ParseError
from quintet.scope import BOTTOM, TOP, Scope, join, leq, match_level, meet, meet_all, parse_scope, serialize_scope

dims = st.sampled_from(["env", "region", "model", "task"])
vals = st.sampled_from(["a", "b", "prod", "dev"])
plain = st.dictionaries(dims, vals).map(Scope.of)
scopes = st.one_of(plain, st.just(BOTTOM), st.just(TOP))


def s(**kw):
    return Scope.of(kw)


def test_parse_examples():
    assert parse_scope("*") == TOP
    assert parse_scope("!") == BOTTOM
    assert parse_scope("env=prod,region=eu") == s(env="prod", region="eu")


@pytest.mark.parametrize(
    "text, offset",
    [
        ("env=prod,env=dev", 9),
        ("", 0),
        ("env", 3),
        ("env=", 4),
        ("env=prod,", 9),
        ("env=prod;x=y", 8),
        ("Env=prod", 0),
        ("é=x", 0),
        ("a=b,é=x", 4),
    ],
)
def test_parse_errors_point_at_offset(text, offset):
    with pytest.raises(ParseError) as info:
        parse_scope(text)
    assert info.value.offset == offset


def test_serialize_is_canonical():
    assert serialize_scope(s(region="eu", env="prod")) == "env=prod,region=eu"
    assert serialize_scope(TOP) == "*"
    assert serialize_scope(BOTTOM) == "!"
    assert str(parse_scope("region=eu,env=prod")) == "env=prod,region=eu"


def test_meet_join_examples():
    assert meet(s(env="prod"), s(region="eu")) == s(env="prod", region="eu")
    assert meet(s(env="prod"), s(env="dev")) == BOTTOM
    assert join(s(env="prod", region="eu"), s(env="prod", region="us")) == s(env="prod")
    assert meet_all([]) == TOP


def test_match_examples():
    assert match_level(s(env="prod"), s(env="prod")) is CongruenceLevel.CL3
    assert match_level(s(env="prod", region="eu"), s(env="prod")) is CongruenceLevel.CL2
    assert match_level(s(env="prod", region="eu"), s(env="dev", region="eu")) is CongruenceLevel.CL1
    assert match_level(s(env="prod"), s(env="dev")) is CongruenceLevel.NONE
    assert match_level(BOTTOM, BOTTOM) is CongruenceLevel.NONE
    assert match_level(TOP, s(env="prod")) is CongruenceLevel.CL2


def test_invalid_tokens_rejected():
    with pytest.raises(ValueError):
        Scope.of(env="Prod")
    with pytest.raises(ValueError):
        Scope.of({"": "x"})


@given(scopes)
def test_roundtrip(a):
    assert parse_scope(serialize_scope(a)) == a


@given(scopes, scopes, scopes)
def test_lattice_axioms(a, b, c):
    assert meet(a, b) == meet(b, a) and join(a, b) == join(b, a)
    assert meet(a, meet(b, c)) == meet(meet(a, b), c)
    assert join(a, join(b, c)) == join(join(a, b), c)
    assert meet(a, join(a, b)) == a and join(a, meet(a, b)) == a
    assert meet(a, a) == a and join(a, a) == a
    assert meet(a, TOP) == a and join(a, BOTTOM) == a
    assert meet(a, BOTTOM) == BOTTOM and join(a, TOP) == TOP
    assert leq(meet(a, b), a) and leq(a, join(a, b))
    assert leq(a, b) == (meet(a, b) == a)


@given(scopes, scopes)
def test_match_is_symmetric_and_graded(a, b):
    lvl = match_level(a, b)
    assert lvl is match_level(b, a)
    if a.is_bottom or b.is_bottom:
        assert lvl is CongruenceLevel.NONE
    elif a == b:
        assert lvl is CongruenceLevel.CL3
    elif leq(a, b) or leq(b, a):
        assert lvl is CongruenceLevel.CL2
    elif meet(a, b) == BOTTOM and join(a, b) == TOP:
        # every shared dimension conflicts
        assert lvl is CongruenceLevel.NONE


@given(st.text(max_size=30))
def test_parser_total(text):
    try:
        out = parse_scope(text)
    except ParseError as e:
        assert 0 <= e.offset <= len(text.encode("utf-8"))
    else:
        assert parse_scope(serialize_scope(out)) == out
