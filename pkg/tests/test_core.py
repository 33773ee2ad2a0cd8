import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from quintet.core import (
    DEFAULT_CONFIG,
    Actor,
    ActorKind,
    CongruenceLevel,
    Config,
    EpistemicLayer,
    FormalityLevel,
    VerificationMethod,
    format_timestamp,
    load_config,
    load_config_file,
    make_score,
    parse_timestamp,
    parse_token,
)
from quintet.errors import ConfigError, OrderingViolation, RangeViolation


def test_make_score_accepts_unit_interval():
    assert make_score(0.5) == 0.5
    assert make_score(0) == 0.0
    assert make_score(1) == 1.0
    assert make_score(5e-324) == 5e-324


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf, 1.0000001, -0.0001, True, "0.5", None])
def test_make_score_rejects(bad):
    with pytest.raises(RangeViolation):
        make_score(bad)


@given(st.floats(allow_nan=True, allow_infinity=True))
def test_make_score_accepts_exactly_the_unit_interval(x):
    if not math.isnan(x) and 0.0 <= x <= 1.0:
        assert make_score(x) == x
    else:
        with pytest.raises(RangeViolation):
            make_score(x)


def test_default_ceilings_and_penalties():
    cfg = load_config(None)
    assert cfg == DEFAULT_CONFIG
    assert [cfg.formality_ceiling(f) for f in FormalityLevel] == [0.70, 0.85, 0.95, 0.99]
    assert [cfg.layer_ceiling(lay) for lay in EpistemicLayer] == [0.35, 0.75, 1.00]
    assert [cfg.multiplier(m) for m in VerificationMethod] == [0.60, 0.85, 0.95, 1.00]
    assert cfg.penalty(CongruenceLevel.CL3) == 0.0
    assert cfg.penalty(CongruenceLevel.CL2) == 0.1
    assert cfg.penalty(CongruenceLevel.CL1) == 0.4
    with pytest.raises(ValueError):
        cfg.penalty(CongruenceLevel.NONE)


def test_empty_source_gives_defaults():
    assert load_config("") == DEFAULT_CONFIG
    assert load_config("{}") == DEFAULT_CONFIG


def test_formality_ordering_violation():
    with pytest.raises(OrderingViolation):
        load_config({"formality_ceilings": {"F2": 0.80}})


def test_layer_override_within_order_accepted():
    cfg = load_config({"layer_ceilings": {"L1": 0.80}})
    assert cfg.layer_ceiling(EpistemicLayer.L1) == 0.80
    assert cfg.layer_ceiling(EpistemicLayer.L0) == 0.35


def test_layer_ordering_violation():
    with pytest.raises(OrderingViolation):
        load_config({"layer_ceilings": {"L0": 0.9}})


def test_validity_must_increase():
    with pytest.raises(OrderingViolation):
        load_config({"validity_days": {"F0": 400}})


@pytest.mark.parametrize(
    "source",
    [
        {"nonsense": 1},
        {"formality_ceilings": {"F9": 0.5}},
        {"formality_ceilings": [0.1, 0.2]},
        {"pbt_cases": {"unknown": 10}},
    ],
)
def test_config_errors(source):
    with pytest.raises(ConfigError):
        load_config(source)


@pytest.mark.parametrize(
    "source",
    [
        '{"grace_days": NaN}',
        '{"formality_ceilings": {"F0": Infinity}}',
        {"verification_multipliers": {"self_reported": 0.0}},
        {"congruence_penalties": {"CL1": 1.5}},
        {"grace_days": -1},
        {"pbt_cases": {"fuzz": 0}},
        {"llm_cap": 1.2},
    ],
)
def test_config_range_errors(source):
    with pytest.raises(RangeViolation):
        load_config(source)


def test_config_not_json():
    with pytest.raises(ConfigError):
        load_config("{not json")


def test_config_roundtrip_and_file(tmp_path):
    cfg = load_config({"llm_cap": 0.39, "grace_days": 7, "pbt_cases": {"fuzz": 50}})
    assert cfg.llm_cap == 0.39 and cfg.cases_for("fuzz") == 50 and cfg.cases_for("scope_algebra") == 1000
    assert load_config(cfg.to_json()) == cfg
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_json()))
    assert load_config_file(p) == cfg


def test_config_is_immutable():
    with pytest.raises(Exception):
        DEFAULT_CONFIG.grace_days = 3  # type: ignore[misc]
    assert isinstance(DEFAULT_CONFIG, Config)


def test_tokens():
    assert parse_token(FormalityLevel, "f2") is FormalityLevel.F2
    assert parse_token(VerificationMethod, "script_attached") is VerificationMethod.SCRIPT_ATTACHED
    assert VerificationMethod.EXECUTED_VERIFIED.token == "executed_verified"
    with pytest.raises(ValueError):
        parse_token(EpistemicLayer, "L7")


def test_actor_roundtrip():
    a = Actor("llm-1", ActorKind.GENERATOR)
    assert Actor.from_json(a.to_json()) == a
    with pytest.raises(ValueError):
        Actor("  ")


def test_timestamps():
    t = parse_timestamp("2025-03-01T12:00:00Z")
    assert t.utcoffset().total_seconds() == 0
    assert format_timestamp(t) == "2025-03-01T12:00:00Z"
    assert parse_timestamp("2025-03-01T14:00:00+02:00") == t
    assert parse_timestamp("2025-03-01T12:00:00") == t
    with pytest.raises(ValueError):
        parse_timestamp("yesterday")
