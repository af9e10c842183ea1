import json
import subprocess
import sys
from pathlib import Path

import pytest

from toruslab.cli import main, run
from toruslab.config import load_config, parse_config, snapshot, with_overrides

FIXTURES = Path(__file__).parent / "fixtures"

# fixture -> commands that consume it, in order
PLANS = {
    "cat_classify": ["classify"],
    "salem_classify": ["classify"],
    "game_random": ["game"],
    "game_two_targets": ["game"],
    "equidist_cat": ["equidist"],
    "entropy_cat": ["entropy"],
    "dimension_cantor": ["dimension"],
    "construct_pair": ["construct", "verify", "report"],
}


def run_plan(name: str, out: Path) -> dict:
    recs = {}
    for cmd in PLANS[name]:
        recs[cmd] = run(cmd, FIXTURES / f"{name}.toml", out)
    return recs


def tree(out: Path) -> dict:
    files = {}
    for p in sorted(out.rglob("*")):
        if p.is_file():
            text = p.read_text()
            if p.name.startswith("experiment-"):
                rec = json.loads(text)
                rec.pop("wall_time")
                text = json.dumps(rec, sort_keys=True)
            files[str(p.relative_to(out))] = text
    return files


@pytest.mark.parametrize("name", sorted(PLANS))
def test_replay_is_byte_identical(name, tmp_path):
    run_plan(name, tmp_path / "a")
    run_plan(name, tmp_path / "b")
    a, b = tree(tmp_path / "a"), tree(tmp_path / "b")
    assert a.keys() == b.keys()
    for k in a:
        assert a[k] == b[k], k


@pytest.mark.parametrize("name", sorted(PLANS))
def test_snapshot_round_trips(name, tmp_path):
    recs = run_plan(name, tmp_path)
    for rec in recs.values():
        cfg = parse_config(rec["config"])
        assert snapshot(cfg) == rec["config"]
        assert cfg == load_config(FIXTURES / f"{name}.toml")


def test_classify_record(tmp_path):
    rec = run("classify", FIXTURES / "cat_classify.toml", tmp_path)
    lines = (tmp_path / "classify.jsonl").read_text().splitlines()
    by = {json.loads(s)["matrix"]: json.loads(s) for s in lines}
    assert by["S"]["classification"] == "hyperbolic"
    assert rec["command"] == "classify" and rec["seed"] == 0
    assert {o["path"] for o in rec["outputs"]} == {"classify.jsonl", "classify.csv"}


def test_salem_record(tmp_path):
    run("classify", FIXTURES / "salem_classify.toml", tmp_path)
    r = json.loads((tmp_path / "classify.jsonl").read_text().splitlines()[0])
    assert r["classification"] == "quasihyperbolic_central_spin"
    assert r["dims"] == [1, 2, 1]


def test_construct_references_certificates(tmp_path):
    rec = run("construct", FIXTURES / "construct_pair.toml", tmp_path)
    paths = {o["path"] for o in rec["outputs"]}
    assert {"certificates/seed-0.jsonl", "certificates/seed-1.jsonl"} <= paths
    recs = [json.loads(s) for s in (tmp_path / "construct.jsonl").read_text().splitlines()]
    assert all(r["accepted"] for r in recs)
    for r in recs:
        assert (tmp_path / "transcripts" / f"{r['transcript_sha256']}.jsonl").exists()


def test_verify_after_construct(tmp_path):
    run("construct", FIXTURES / "construct_pair.toml", tmp_path)
    assert main(["verify", "--config", str(FIXTURES / "construct_pair.toml"), "--out", str(tmp_path)]) == 0
    recs = [json.loads(s) for s in (tmp_path / "verify.jsonl").read_text().splitlines()]
    assert recs and all(r["ok"] for r in recs)


def test_tampered_certificate_exit_code(tmp_path):
    run("construct", FIXTURES / "construct_pair.toml", tmp_path)
    p = tmp_path / "certificates" / "seed-0.jsonl"
    lines = p.read_text().splitlines()
    rec = json.loads(lines[0])
    rec["b"][0] = rec["b"][1]
    lines[0] = json.dumps(rec, sort_keys=True)
    p.write_text("\n".join(lines) + "\n")
    assert main(["verify", "--config", str(FIXTURES / "construct_pair.toml"), "--out", str(tmp_path)]) == 4
    recs = {json.loads(s)["certificate"]: json.loads(s) for s in (tmp_path / "verify.jsonl").read_text().splitlines()}
    assert not recs["seed-0.jsonl"]["ok"] and recs["seed-1.jsonl"]["ok"]


class TestExitCodes:
    def test_validation_error_names_field(self, tmp_path, capsys):
        code = main(["classify", "--config", str(FIXTURES / "bad_matrix.toml"), "--out", str(tmp_path)])
        assert code == 2
        assert "matrix.S.rows[0]: expected 2 entries, got 3" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert main(["classify", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]) == 2

    def test_budget_override(self, tmp_path, capsys):
        code = main(["construct", "--config", str(FIXTURES / "construct_pair.toml"), "--out", str(tmp_path),
                     "--precision", "100", "--seed", "0"])
        assert code == 3
        assert "minimal precision" in capsys.readouterr().err

    def test_nonergodic_game(self, tmp_path):
        cfg = tmp_path / "rot.toml"
        cfg.write_text('[experiment]\nid = "rot"\n\n[matrix.T]\nrows = [[0, -1], [1, 0]]\n')
        assert main(["game", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_verify_without_certificates(self, tmp_path):
        assert main(["verify", "--config", str(FIXTURES / "construct_pair.toml"), "--out", str(tmp_path)]) == 2

    def test_console_script_help(self):
        res = subprocess.run([sys.executable, "-m", "toruslab.cli", "--help"], capture_output=True, text=True)
        assert res.returncode == 0 and "classify" in res.stdout


def test_seed_override_updates_snapshot(tmp_path):
    rec = run("game", FIXTURES / "game_random.toml", tmp_path, seed=7)
    cfg = parse_config(rec["config"])
    assert cfg.seed == 7 and cfg.run_seeds == (7,)
    assert rec["seeds"] == [7]


def test_precision_override_round_trips():
    cfg = with_overrides(load_config(FIXTURES / "construct_pair.toml"), precision=20_000)
    again = parse_config(cfg.text)
    assert again.precision == 20_000 and again == cfg


def test_parallel_matches_sequential(tmp_path):
    run("game", FIXTURES / "game_random.toml", tmp_path / "seq")
    run("game", FIXTURES / "game_random.toml", tmp_path / "par", parallel=2)
    assert tree(tmp_path / "seq") == tree(tmp_path / "par")


def test_report_summarizes(tmp_path, capsys):
    run("classify", FIXTURES / "cat_classify.toml", tmp_path)
    assert main(["report", "--config", str(FIXTURES / "cat_classify.toml"), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "classify: 3 records" in out and "span_condition=True" in out
    assert "classification=hyperbolic" in out
