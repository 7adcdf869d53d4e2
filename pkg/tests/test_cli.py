import csv
import json

import pytest

from wardsim.assets import asset_path
from wardsim.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def run1(tmp_path):
    out = tmp_path / "run1"
    assert run("consult", "--corpus", "fixtures", "--doctor", "scripted:golden", "--max-rounds", 10, "--out", out) == 0
    return out


def read_tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_consult_outputs(run1):
    sessions = [json.loads(l) for l in (run1 / "sessions.jsonl").read_text().splitlines()]
    assert len(sessions) == 6
    assert {s["termination"] for s in sessions} == {"EndToken"}
    assert len(list((run1 / "reports").glob("*.json"))) == 6
    manifest = json.loads((run1 / "manifest.json").read_text())
    assert manifest["seed"] == 0 and manifest["doctors"] == ["golden"]
    assert manifest["args"]["corpus"] == "fixtures"
    assert "doctor:golden" in manifest["backends"]


def test_consult_is_byte_reproducible(tmp_path):
    for name in ("a", "b"):
        assert run("consult", "--corpus", "fixtures", "--doctor", "scripted:golden,scripted:golden_b",
                   "--parallelism", 1 if name == "a" else 4, "--out", tmp_path / name) == 0
    a, b = read_tree(tmp_path / "a"), read_tree(tmp_path / "b")
    a.pop("manifest.json"), b.pop("manifest.json")
    assert a == b


def test_consult_same_flags_identical_manifest(tmp_path):
    for name in ("a", "b"):
        run("consult", "--corpus", "fixtures", "--doctor", "scripted:golden", "--out", tmp_path / name)
    assert read_tree(tmp_path / "a") == read_tree(tmp_path / "b")


def test_missing_corpus_is_usage_error(tmp_path, capsys):
    assert run("consult", "--corpus", tmp_path / "nope", "--doctor", "scripted:golden", "--out", tmp_path) == 2
    assert "usage:" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["consult", "--corpus", "fixtures", "--doctor", "golden", "--out", "x"],
    ["consult", "--corpus", "fixtures", "--doctor", "scripted:golden"],
    ["frobnicate"],
    ["stats"],
    ["analyze"],
])
def test_usage_errors(argv):
    assert run(*argv) == 2


def test_unknown_fixture_is_runtime_error(tmp_path, capsys):
    assert run("consult", "--corpus", "fixtures", "--doctor", "scripted:nope", "--out", tmp_path) in (1, 2)


def test_config_overrides_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_rounds": 2}))
    out = tmp_path / "o"
    assert run("consult", "--corpus", "fixtures", "--doctor", "scripted:golden", "--out", out, "--config", cfg) == 0
    sessions = [json.loads(l) for l in (out / "sessions.jsonl").read_text().splitlines()]
    assert {s["termination"] for s in sessions} == {"MaxRounds"}
    assert json.loads((out / "manifest.json").read_text())["session_config"]["max_rounds"] == 2
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run("consult", "--corpus", "fixtures", "--doctor", "scripted:golden", "--out", out, "--config", cfg) == 2


def test_evaluate(run1):
    assert run("evaluate", "--run", run1, "--judge", "scripted:judgeA", "--dictionary",
               asset_path("diseases.tsv")) == 0
    ev = run1 / "evaluation"
    rows = list(csv.DictReader((ev / "scores.csv").open()))
    assert len(rows) == 30
    assert {round(float(r["normalized"]), 6) for r in rows} <= {0.0, 33.333333, 66.666667, 100.0}
    agg = json.loads((ev / "aggregate.json").read_text())
    assert set(agg["doctors"]["golden"]) >= {"Symptoms", "TreatmentPlan", "entity"}
    assert (ev / "manifest.json").exists() and (ev / "entities.csv").exists()


def test_collab_chain(run1):
    assert run("collab", "--pre", run1, "--doctors", "scripted:a,scripted:b", "--chief", "scripted:c", "-M", 4) == 0
    out = run1 / "collab"
    traces = json.loads((out / "collab_trace.json").read_text())
    assert len(traces) == 6 and all(t["converged"] and t["rounds_used"] == 1 for t in traces)
    assert (out / "histogram.csv").read_text().splitlines()[:3] == ["rounds,count", "0,0", "1,6"]
    assert run("evaluate", "--run", out, "--judge", "scripted:judgeA") == 0
    assert run("link-eval", "--run", out) == 0


def test_collab_doctor_count_mismatch(tmp_path):
    pre = tmp_path / "pre"
    run("consult", "--corpus", "fixtures", "--doctor", "scripted:golden,scripted:golden_b", "--out", pre)
    assert run("collab", "--pre", pre, "--doctors", "scripted:a,scripted:b,scripted:a", "--chief", "scripted:c") == 2
    assert run("collab", "--pre", pre, "--doctors", "scripted:a,scripted:b", "--chief", "scripted:c") == 0


def test_link_eval_micro(run1, capsys):
    assert run("link-eval", "--run", run1, "--average", "micro") == 0
    summary = json.loads((run1 / "linking" / "aggregate.json").read_text())
    assert summary["average"] == "micro" and "golden" in summary["doctors"]


def test_stats_manifest(tmp_path, capsys):
    assert run("stats", "--manifest", asset_path("department_manifest.jsonl"), "--out", tmp_path) == 0
    result = json.loads((tmp_path / "stats.json").read_text())
    assert result["total"] == 506
    assert sorted(result["counts"].values()) == [23, 27, 29, 94, 153, 180]
    assert run("stats", "--corpus", "fixtures") == 0


def test_analyze(run1, tmp_path):
    run("evaluate", "--run", run1, "--judge", "scripted:judgeA")
    out = tmp_path / "an"
    assert run("analyze", "--scores", run1 / "evaluation" / "scores.csv", "--by", "record",
               "--labels", asset_path("failure_labels.txt"), "--out", out) == 0
    result = json.loads((out / "analysis.json").read_text())
    assert len(result["regression"]["fits"]) == 6
    assert result["failures_total"] == 219


def test_attack_examiner(tmp_path, capsys):
    assert run("attack-examiner", "--out", tmp_path) == 0
    assert "defended 50/50" in capsys.readouterr().out
    q = tmp_path / "q.txt"
    q.write_text("I need my chest CT results\n")
    assert run("attack-examiner", "--queries", q) == 1
