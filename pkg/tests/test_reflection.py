import random

import pytest

from rotree.errors import CorruptStore, NotFound
from rotree.policy import TapTransport, scripted_mock
from rotree.reflection import (
    ActionOutcome,
    Guideline,
    GuidelineStore,
    ImportantStateRecord,
    SelectionMode,
    all_internal_states,
    expected_merge_calls,
    extract_guideline,
    merge_guidelines,
    reflect_single,
    reflection_prompt,
    rot_iterate,
    select_for_mode,
    select_important_states,
)
from rotree.search import Method, SearchConfig, SearchTree

from randtrees import brute_importance, random_tree


def small_tree():
    tree = SearchTree(Method.BFS, SearchConfig(), "fig", "the problem")
    root = tree.add_root("s", text="s")
    root.v_estimate = 0.5
    tree.add_child(0, "up", "s1", 0.9, action_text="up", state_text="s1")
    tree.add_child(0, "down", "s2", 0.4, action_text="down", state_text="s2")
    tree.add_child(1, "left", "s3", 0.95, action_text="left", state_text="s3")
    for n in tree.nodes.values():
        n.visit_count = 1
    tree.root.visit_count = 4
    tree[1].visit_count = 2
    return tree


class Recorder:
    """Reflector stand-in that records prompts and answers with a fixed guideline."""

    name = "recorder"

    def __init__(self, reply="Guideline: keep GUIDELINE-X in mind"):
        self.prompts = []
        self.reply = reply

    def generate(self, prompt):
        self.prompts.append(prompt)
        return self.reply if isinstance(self.reply, str) else self.reply(prompt)


def test_importance_example():
    recs = select_important_states(small_tree(), 0.1)
    assert [r.source for r in recs] == [("fig", 0)]
    assert recs[0].importance == pytest.approx(0.4)
    assert [a.action for a in recs[0].actions] == ["up", "down"]


def test_negative_threshold_selects_every_internal_node():
    tree = small_tree()
    assert [r.source[1] for r in select_important_states(tree, -0.001)] == [0, 1]


def test_leaves_never_selected_and_soundness():
    rng = random.Random(0)
    for i in range(100):
        tree = random_tree(rng, rng.randint(1, 60), rng.choice([Method.MCTS, Method.BFS]), f"t{i}")
        expect = brute_importance(tree)
        for lam in (-0.001, 0.1, 0.5):
            got = {r.source[1]: r.importance for r in select_important_states(tree, lam)}
            assert got == pytest.approx({k: v for k, v in expect.items() if v > lam})
            for r in select_important_states(tree, lam):
                assert tree[r.source[1]].children
                assert r.importance == pytest.approx(max(abs(a.next_value - r.own_value) for a in r.actions))


def test_unvisited_mcts_children_are_ignored():
    tree = small_tree()
    tree.method = Method.MCTS
    tree[2].visit_count = 0
    rec = select_important_states(tree, -1)[0]
    assert [a.action for a in rec.actions] == ["up"]


def test_modes():
    rng = random.Random(4)
    trees = [random_tree(rng, 40, Method.BFS, f"t{i}") for i in range(3)]
    n_internal = sum(len(all_internal_states(t)) for t in trees)
    assert len(select_for_mode(trees, SelectionMode.all()).records) == n_internal
    assert select_for_mode(trees, SelectionMode.random(0)).records == []
    picked = select_for_mode(trees, SelectionMode.random(5), seed=1).records
    assert len(picked) == 5 and picked == select_for_mode(trees, SelectionMode.random(5), seed=1).records
    assert len(select_for_mode(trees, SelectionMode.random(10_000)).records) == n_internal
    only = select_for_mode(trees, SelectionMode.problem_only())
    assert only.records == [] and only.problems == [t.problem for t in trees]
    imp = len(select_for_mode(trees, SelectionMode.important(0.1)).records)
    strict = len(select_for_mode(trees, SelectionMode.important(0.5)).records)
    assert strict < imp < n_internal


def test_mode_parsing():
    assert SelectionMode.parse("important:0.5") == SelectionMode.important(0.5)
    assert SelectionMode.parse("random:30") == SelectionMode.random(30)
    assert SelectionMode.parse("problem_only").kind == "problem-only"
    assert SelectionMode.important().tag == "important:0.1"
    with pytest.raises(ValueError):
        SelectionMode.parse("bogus")
    with pytest.raises(ValueError):
        SelectionMode.important(float("nan"))
    with pytest.raises(ValueError):
        SelectionMode.random(-1)


def test_record_round_trip():
    rec = select_important_states(small_tree(), 0.1)[0]
    assert ImportantStateRecord.from_json(rec.to_json()) == rec
    with pytest.raises(ValueError):
        ImportantStateRecord("s", (), 0.5, 0.0, ("t", 0))


def test_reflect_single_prompt_and_provenance():
    rec = ImportantStateRecord("s", (ActionOutcome("b", "sb", 0.7), ActionOutcome("a", "sa", 0.7),
                                     ActionOutcome("c", "sc", 0.9)), 0.5, 0.4, ("t", 3), "problem text")
    r = Recorder()
    g = reflect_single(rec, r)
    assert g.text == "keep GUIDELINE-X in mind" and g.sources == (("t", 3),) and g.reflector_model == "recorder"
    prompt = r.prompts[0]
    assert prompt.index("Action: c") < prompt.index("Action: a") < prompt.index("Action: b")
    assert prompt.count("Next state value:") == 3 and "problem text" in prompt


def test_extract_guideline():
    assert extract_guideline("analysis\nGuideline: x\nGuideline: final") == "final"
    assert extract_guideline("just text ") == "just text"


def test_merge_single_part_unchanged():
    g = Guideline("only one", sources=[["t", 1]])
    out = merge_guidelines([g], Recorder())
    assert out.text == "only one" and out.sources == (("t", 1),)


def test_merge_two_parts_keeps_sentinels():
    r = Recorder(lambda p: "Guideline: " + " ".join(w for w in p.split() if w.startswith("TOKEN")))
    out = merge_guidelines([Guideline("TOKEN1 a", sources=("x",)), Guideline("TOKEN2 b", sources=("y",))], r)
    assert "TOKEN1" in out.text and "TOKEN2" in out.text and out.sources == ("x", "y")


def test_hierarchical_merge_call_count():
    r = Recorder("Guideline: merged text")
    parts = [Guideline(" ".join(["word"] * 60), sources=(("t", i),)) for i in range(50)]
    out = merge_guidelines(parts, r)
    assert len(r.prompts) == expected_merge_calls(50) == 8
    assert len(out.sources) == 50


def test_rot_iterate_chain(tmp_path):
    store = GuidelineStore(tmp_path / "store")
    trees = [small_tree()]
    r = Recorder()
    prev = None
    for i in range(3):
        start = len(r.prompts)
        g, sel = rot_iterate(prev, trees, SelectionMode.important(0.1), r, store=store)
        assert g.iteration == i and g.version == f"{i:04d}"
        if prev is not None:
            assert prev.text in r.prompts[start] and g.parent == prev.version
        prev = g
    versions = store.all()
    assert [v.iteration for v in versions] == [0, 1, 2]
    assert [v.created_at for v in versions] == sorted({v.created_at for v in versions})
    assert [g.iteration for g in store.ancestry("0002")] == [2, 1, 0]


def test_rot_iterate_problem_only():
    r = Recorder()
    g, sel = rot_iterate(None, [small_tree()], SelectionMode.problem_only(), r)
    assert sel.records == [] and g.sources == ("problem-only",) and "the problem" in r.prompts[0]


def test_reflector_from_scripted_mock(rot_script):
    tap = []
    pol = scripted_mock(rot_script, transport_wrapper=lambda t: tap.append(TapTransport(t)) or tap[0])
    g, _ = rot_iterate(None, [small_tree()], SelectionMode.important(0.1), pol)
    assert "GUIDELINE-X" in g.text and g.reflector_model == "scripted-rot-mock"
    assert len(tap[0].prompts) == 1


def test_store_round_trip(tmp_path):
    store = GuidelineStore(tmp_path)
    with pytest.raises(NotFound):
        store.load()
    text = "Line one.\nLine two with ünïcode."
    saved = store.save(Guideline(text, sources=(("t", 1),)))
    assert store.load("latest").text == text and store.load(saved.version) == saved
    with pytest.raises(NotFound):
        store.load("9999")


def test_store_latest_same_iteration_by_time(tmp_path):
    store = GuidelineStore(tmp_path)
    a = store.save(Guideline("first", created_at="2030-01-01T00:00:00.000000+00:00"))
    b = store.save(Guideline("second", created_at="2020-01-01T00:00:00.000000+00:00"))
    assert b.created_at > a.created_at and store.load().text == "second"
    assert [row["version"] for row in store.list()] == ["0000", "0001"]
    assert store.list()[0]["word_count"] == 1


def test_store_detects_corruption(tmp_path):
    store = GuidelineStore(tmp_path)
    g = store.save(Guideline("intact"))
    path = tmp_path / f"g{g.version}.json"
    path.write_text(path.read_text().replace("intact", "edited"))
    with pytest.raises(CorruptStore):
        store.load(g.version)


def test_guideline_validation():
    with pytest.raises(ValueError):
        Guideline("  ")
    with pytest.raises(ValueError):
        Guideline("x", iteration=-1)
    assert Guideline("a b c").word_count == 3
