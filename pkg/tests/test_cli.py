import json

import pytest

from rotree.cli import RunManifest, main, parse_generator_spec, replay_outcomes, run_evaluate
from rotree.envs.blocksworld import BlocksInstance, Goal, load_instances, min_plan_length, save_instances
from rotree.errors import ManifestError
from rotree.metrics import read_outcomes
from rotree.reflection import GuidelineStore

GEN = "count=5;steps=2;blocks=3-4;seed=1"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_search_mcts_oracle(tmp_path, capsys):
    code, out, _ = run(capsys, "search", "--method", "mcts", "--iterations", 10, "--c", 0,
                       "--generate", GEN, "--out", tmp_path / "r")
    assert code == 0 and "100.0%" in out
    r = tmp_path / "r"
    assert sorted(p.name for p in (r / "trees").iterdir()) == [f"{i:03d}.json" for i in range(5)]
    assert all(o.correct and o.iterations_used == 10 for o in read_outcomes(r / "outcomes.jsonl"))
    assert json.loads((r / "manifest.json").read_text())["method"] == "mcts"


def test_search_bfs_tags_trees(tmp_path, capsys):
    code, _, _ = run(capsys, "search", "--method", "bfs", "--beam", 5, "--generate", GEN, "--out", tmp_path)
    assert code == 0
    assert {json.loads(p.read_text())["method"] for p in (tmp_path / "trees").iterdir()} == {"BFS"}


def test_invalid_manifest_names_field(tmp_path, capsys):
    code, _, err = run(capsys, "search", "--method", "bfs", "--generate", GEN, "--out", tmp_path)
    report = json.loads(err)
    assert code == 2 and report["error"] == "ManifestError" and "beam_width" in report["message"]
    with pytest.raises(ManifestError, match="mcts_iterations"):
        RunManifest(method="mcts", out="x", generate=GEN).validate()


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"method": "bfs", "beam_width": 1, "generate": GEN, "out": str(tmp_path / "a")}))
    code, _, _ = run(capsys, "search", "--config", cfg, "--beam", 4)
    assert code == 0
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["beam_width"] == 4
    cfg.write_text(json.dumps({"methd": "bfs"}))
    code, _, err = run(capsys, "search", "--config", cfg)
    assert code == 2 and "methd" in err


@pytest.mark.parametrize("method", ["cot", "cot_sc"])
def test_chain_methods(tmp_path, capsys, method):
    code, out, _ = run(capsys, "search", "--method", method, "--chains", 3, "--temperature", 0.5,
                       "--generate", GEN, "--out", tmp_path)
    assert code == 0
    outcomes = read_outcomes(tmp_path / "outcomes.jsonl")
    if method == "cot_sc":
        assert all(len(o.samples) == 3 for o in outcomes) and "pass@n" in out
    assert [o.correct for o in outcomes] == [o.correct for o in replay_outcomes(tmp_path)]


def test_workers_give_identical_trees(tmp_path, capsys):
    for w in (1, 3):
        run(capsys, "search", "--method", "mcts", "--iterations", 6, "--generate", GEN,
            "--workers", w, "--out", tmp_path / f"w{w}")
    for i in range(5):
        assert (tmp_path / "w1" / "trees" / f"{i:03d}.json").read_bytes() == \
            (tmp_path / "w3" / "trees" / f"{i:03d}.json").read_bytes()


def test_reflect_and_guided_search(tmp_path, capsys, rot_fixture_path):
    gen = "count=4;steps=4;blocks=3-5;seed=2"
    run(capsys, "search", "--method", "mcts", "--iterations", 10, "--c", 0, "--generate", gen,
        "--backend", "mock", "--fixture", rot_fixture_path, "--out", tmp_path / "base")
    before = {p.name: p.read_bytes() for p in (tmp_path / "base" / "trees").iterdir()}
    code, out, _ = run(capsys, "reflect", tmp_path / "base", "--mode", "all",
                       "--backend", "mock", "--fixture", rot_fixture_path, "--out", tmp_path / "store")
    assert code == 0 and "stored version: 0000" in out and "selected states:" in out
    assert before == {p.name: p.read_bytes() for p in (tmp_path / "base" / "trees").iterdir()}
    code, out, _ = run(capsys, "reflect", tmp_path / "base", "--mode", "problem-only", "--backend", "mock",
                       "--fixture", rot_fixture_path, "--guideline", f"{tmp_path / 'store'}@0000")
    assert "selected states: 0" in out and "stored version: 0001" in out
    assert GuidelineStore(tmp_path / "store").load("0001").iteration == 1
    code, _, _ = run(capsys, "search", "--method", "mcts", "--iterations", 10, "--c", 0, "--generate", gen,
                     "--backend", "mock", "--fixture", rot_fixture_path,
                     "--guideline", tmp_path / "store", "--out", tmp_path / "guided")
    manifest = json.loads((tmp_path / "guided" / "manifest.json").read_text())
    assert code == 0 and manifest["guideline_version"] == "0001"
    rep = run_evaluate([tmp_path / "base", tmp_path / "guided"], compare=True)
    row = rep.rows[0]
    assert row.guided > row.base


def test_reflect_empty_trace_dir(tmp_path, capsys, rot_fixture_path):
    code, _, err = run(capsys, "reflect", tmp_path, "--backend", "mock", "--fixture", rot_fixture_path)
    assert code == 2 and "EmptyTraceDir" in err


def test_evaluate_modes(tmp_path, capsys):
    for n in (1, 2, 3):
        run(capsys, "search", "--method", "mcts", "--iterations", n, "--generate", GEN, "--out", tmp_path / f"it{n}")
    code, out, _ = run(capsys, "evaluate", tmp_path / "it1")
    assert code == 0 and "accuracy" in out
    code, out, _ = run(capsys, "evaluate", tmp_path / "it1", tmp_path / "it3", "--compare")
    assert "change" in out
    code, out, _ = run(capsys, "evaluate", tmp_path / "it1", tmp_path / "it2", tmp_path / "it3", "--auc")
    assert "auc" in out and "mcts" in out
    code, out, _ = run(capsys, "evaluate", tmp_path / "it1", "--csv")
    assert out.startswith("method,steps")
    code, _, err = run(capsys, "evaluate", tmp_path / "it1", "--compare")
    assert code == 2 and "SchemaMismatch" in err


def test_evaluate_rejects_broken_logs(tmp_path, capsys):
    run(capsys, "search", "--method", "mcts", "--iterations", 2, "--generate", GEN, "--out", tmp_path)
    (tmp_path / "outcomes.jsonl").write_text('{"method": "mcts"}\n')
    code, _, err = run(capsys, "evaluate", tmp_path)
    assert code == 2 and "SchemaMismatch" in err


def test_oracle_command(tmp_path, capsys):
    code, out, _ = run(capsys, "oracle", "--generate", "count=20;steps=4;seed=7", "--out", tmp_path / "i.json")
    assert code == 0 and len(out.splitlines()) == 20
    assert all(min_plan_length(i.state()) == 4 for i in load_instances(tmp_path / "i.json"))
    save_instances([BlocksInstance("easy", (("A",), ("B",)), Goal((("on", "A", "B"),))),
                    BlocksInstance("loop", (("A",), ("B",)), Goal((("on", "A", "B"), ("on", "B", "A"))))],
                   tmp_path / "mixed.json")
    code, out, _ = run(capsys, "oracle", "--instances", tmp_path / "mixed.json")
    assert code == 1 and "easy\t2" in out and "loop\tunsolvable" in out


def test_replay_prints_tree(tmp_path, capsys):
    run(capsys, "search", "--method", "mcts", "--iterations", 4, "--generate", GEN, "--out", tmp_path)
    code, out, _ = run(capsys, "replay", tmp_path / "trees" / "000.json")
    assert code == 0 and out.startswith("tree bw-s2-1-000") and "(root)" in out
    code, out, _ = run(capsys, "replay", tmp_path)
    assert out.count("method=MCTS") == 5


def test_generator_spec():
    assert parse_generator_spec("count=3;steps=2,4;blocks=4;seed=2") == \
        {"count": 3, "steps": [2, 4], "blocks": (4, 4), "seed": 2}
    with pytest.raises(ManifestError):
        parse_generator_spec("size=3")


def test_decomposition_task(tmp_path, capsys):
    (tmp_path / "q.json").write_text(json.dumps([{"id": "q1", "problem": "What is 3 + 4?", "answer": "7"}]))
    script = {"rules": [
        {"contains": ["candidate next subquestions"], "response": {"text": "What is 3 + 4?"}},
        {"contains": ["Answer the last subquestion"], "response": {"text": "3 + 4 = 7. The answer is 7."}},
        {"contains": ["Is the new question useful?"], "response": {"labels": {"Yes": 0.6, "No": 0.4}}},
    ]}
    (tmp_path / "s.json").write_text(json.dumps(script))
    code, out, err = run(capsys, "search", "--task", "decomposition", "--method", "bfs", "--beam", 2, "--depth", 3,
                         "--backend", "mock", "--fixture", tmp_path / "s.json",
                         "--instances", tmp_path / "q.json", "--out", tmp_path / "r")
    assert code == 0, err
    assert read_outcomes(tmp_path / "r" / "outcomes.jsonl")[0].correct
    assert [o.correct for o in replay_outcomes(tmp_path / "r")] == [True]
