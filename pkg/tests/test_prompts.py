import pytest

from rotree.envs.blocksworld import BlocksState, parse_action
from rotree.errors import MissingSlot
from rotree.policy.prompts import (
    BlocksworldPrompts,
    DecompositionPrompts,
    PromptBundle,
    assemble_prompt,
    load_asset,
    load_demos,
    render_template,
)

from conftest import B1_GOAL, B1_INIT, DATA

GUIDE = (
    "To effectively manage the BlocksWorld game environment and achieve higher rewards, the following "
    "consolidated policy guideline should be applied by the agent:\n1. The agent should focus on unstacking "
    "or picking up blocks that are essential for constructing the goal configuration, especially if they are "
    "not already positioned correctly."
)
B1_ACTION = parse_action("unstack the yellow block from on top of the orange block")


def b1_state():
    return BlocksState(B1_INIT, None, B1_GOAL)


def test_golden_b1_prompt():
    prompt = assemble_prompt(BlocksworldPrompts(n_demos=1).score_bundle(b1_state(), B1_ACTION, GUIDE))
    assert prompt == (DATA / "golden_score_prompt.txt").read_text()


def test_no_guideline_leaves_no_residue():
    p = BlocksworldPrompts()
    prompt = assemble_prompt(p.score_bundle(b1_state(), B1_ACTION))
    assert "{{" not in prompt and "\n\n\n" not in prompt
    assert prompt.startswith(p.preamble + "\n\nPlease evaluate")


def test_guideline_once_between_rules_and_demos():
    p = BlocksworldPrompts()
    prompt = assemble_prompt(p.score_bundle(b1_state(), B1_ACTION, "GUIDELINE-X keep goal blocks clear"))
    assert prompt.count("GUIDELINE-X") == 1
    assert prompt.index(p.preamble) < prompt.index("GUIDELINE-X") < prompt.index(p.demos[0])
    assert prompt.rstrip().endswith("[EVALUATION]")


def test_default_four_demos():
    assert len(BlocksworldPrompts().demos) == 4
    assert len(load_demos("blocksworld_eval_demos")) == 4


def test_missing_slot_is_named():
    with pytest.raises(MissingSlot) as err:
        render_template("{{a}} and {{b}}", {"a": 1})
    assert err.value.slot == "b"


def test_optional_slot_line_drops_with_blank():
    assert render_template("x\n\n{{g?}}\n\ny", {}) == "x\n\ny"
    assert render_template("x\n\n{{g?}}\n\ny", {"g": "G"}) == "x\n\nG\n\ny"


def test_unknown_template():
    with pytest.raises(MissingSlot):
        assemble_prompt(PromptBundle("no_such_template", "q"))


def test_rendering_is_byte_deterministic():
    p = BlocksworldPrompts()
    a = assemble_prompt(p.score_bundle(b1_state(), B1_ACTION, "G"))
    b = assemble_prompt(BlocksworldPrompts().score_bundle(b1_state(), B1_ACTION, "G"))
    assert a == b


def test_decomposition_prompts_carry_guideline():
    from rotree.envs.decomposition import DecompositionState, SubQuestion

    p = DecompositionPrompts()
    s = DecompositionState("How many?", (("How many left?", "3"),))
    for bundle in (p.propose_bundle(s, 4, "GUIDELINE-X"), p.answer_bundle(s, SubQuestion("Next?"), "GUIDELINE-X"),
                   p.score_bundle(s, SubQuestion("Next?"), "GUIDELINE-X"), p.value_bundle(s, "GUIDELINE-X")):
        prompt = assemble_prompt(bundle)
        assert prompt.count("GUIDELINE-X") == 1
        assert prompt.index(p.preamble) < prompt.index("GUIDELINE-X")
    assert "Question 5.1: How many left?" in assemble_prompt(p.value_bundle(s))


def test_assets_ship():
    for name in ("blocksworld_rules", "reflect_state", "merge_guidelines", "decomposition_useful"):
        assert load_asset(name).strip()
