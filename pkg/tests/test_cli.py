import json

import pytest

from quintet.cli import main

NOW = "2025-03-01T00:00:00Z"


@pytest.fixture
def run(tmp_path, capsys):
    store = str(tmp_path / "store")

    def go(*argv):
        code = main(["--store", store, "--now", NOW, *argv])
        out, err = capsys.readouterr()
        return code, out, err

    go("init")
    return go


def build_chain(run):
    for cid, score, deps in (("S3", 0.40, []), ("S2", 0.85, ["S3"]), ("S1", 0.95, ["S2"])):
        extra = [x for d in deps for x in ("--depends-on", d)]
        assert run("add-claim", f"step {cid}", "--scope", "task=multihop", "--formality", "F2", "--actor", "llm-1", "--id", cid, *extra)[0] == 0
        e = "e" + cid[1]
        assert run("add-evidence", "--id", e, "--score", str(score), "--scope", "task=multihop", "--claim", cid)[0] == 0
        assert run("promote", cid, "--to", "L1", "--actor", "checker")[0] == 0
        assert run("promote", cid, "--to", "L2", "--actor", "checker")[0] == 0


def test_score_names_the_weak_step(run):
    build_chain(run)
    code, out, _ = run("score", "S1")
    assert code == 0
    assert "0.40" in out
    assert "S3" in out and "weakest link" in out
    code, out, _ = run("--json", "score", "S1")
    data = json.loads(out)
    assert data["r_eff"] == 0.4 and data["weakest_link"] == "S3"


def test_score_under_mean(run):
    build_chain(run)
    code, out, _ = run("score", "S1", "--op", "mean", "--json")
    assert code == 0
    assert json.loads(out)["r_eff"] == 0.4


def test_self_promotion_exits_1(run):
    run("add-claim", "x", "--scope", "task=a", "--actor", "llm-1", "--id", "X")
    code, out, err = run("promote", "X", "--to", "L1", "--actor", "llm-1")
    assert code == 1
    assert "SelfVerification" in err
    code, _, err = run("--json", "promote", "X", "--to", "L1", "--actor", "llm-1")
    assert json.loads(err)["error"] == "SelfVerification"


def test_check_config_ordering(run, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"formality_ceilings": {"F2": 0.80}}))
    code, _, err = run("check-config", str(bad))
    assert code == 1 and "OrderingViolation" in err
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"layer_ceilings": {"L1": 0.80}}))
    assert run("check-config", str(good))[0] == 0


def test_usage_errors_exit_2(run):
    assert run("add-claim", "x", "--scope", "env=prod,env=dev", "--actor", "a")[0] == 2
    assert run("promote", "X", "--to", "L9", "--actor", "a")[0] == 2
    assert main(["no-such-command"]) == 2


def test_missing_claim_exits_1(run):
    code, _, err = run("score", "nope")
    assert code == 1 and "MissingRef" in err


def test_ratify_and_report(run):
    build_chain(run)
    code, out, _ = run("ratify", "S3", "--actor", "alice")
    assert code == 0
    code, out, _ = run("--json", "report")
    assert code == 0
    data = json.loads(out)
    assert data["drr_chain"] == {"ok": True} and data["drr_records"] == 1


def test_self_ratification_refused(run):
    build_chain(run)
    code, _, err = run("ratify", "S3", "--actor", "llm-1")
    assert code == 1 and "SelfRatification" in err


def test_sweep_and_inspect(run):
    build_chain(run)
    code, out, _ = run("--json", "inspect", "S1")
    ids = [e["id"] for e in json.loads(out)["nodes"]]
    assert ids == ["S1", "S2", "e1", "S3", "e2", "e3"]
    code, out, _ = run("--now", "2026-06-01T00:00:00Z", "--json", "sweep")
    data = json.loads(out)
    assert data["flagged"] == ["S1", "S2", "S3"]


def test_link_cycle_and_contradict(run):
    build_chain(run)
    code, _, err = run("link", "S3", "S1")
    assert code == 1 and "CycleDetected" in err
    run("add-claim", "other", "--scope", "task=multihop", "--actor", "llm-2", "--id", "O")
    assert run("contradict", "O", "S1")[0] == 0
    code, _, err = run("promote", "O", "--to", "L1", "--actor", "checker")
    assert code == 1 and "ContradictsValidated" in err


def test_proptest_subcommand(run):
    code, out, _ = run("proptest", "scope_algebra", "--cases", "20", "--seed", "3")
    assert code == 0
    data = json.loads(out)
    assert data["header"]["passed"] is True
    assert data["categories"][0]["name"] == "scope_algebra"


def test_proptest_failure_exit(run):
    code, out, _ = run("proptest", "r_eff_calculator", "--cases", "50", "--op", "mean")
    assert code == 1
    assert json.loads(out)["header"]["passed"] is False


def test_report_flags_broken_chain(run, tmp_path):
    build_chain(run)
    run("ratify", "S3", "--actor", "alice")
    path = tmp_path / "store" / "drr.jsonl"
    path.write_text(path.read_text().replace("step S3", "step S9"))
    code, out, _ = run("report")
    assert code == 1 and "BROKEN at record 0" in out
