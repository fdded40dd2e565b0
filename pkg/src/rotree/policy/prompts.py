"""Prompt templates and assembly.

Templates are text assets with ``{{name}}`` placeholders. A placeholder written
``{{name?}}`` on a line of its own is optional: when its value is empty the
line and the blank line after it are dropped, leaving no residue.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from ..errors import MissingSlot

DEFAULT_DEMOS = 4
_SLOT = re.compile(r"\{\{(\w+)(\??)\}\}")


@lru_cache(maxsize=None)
def load_asset(name: str) -> str:
    return resources.files("rotree.assets").joinpath(f"{name}.txt").read_text()


def load_demos(name: str) -> list:
    return [d.strip("\n") for d in load_asset(name).split("\n---\n")]


def render_template(template: str, slots: dict) -> str:
    lines = template.split("\n")
    out = []
    skip_blank = False
    for line in lines:
        if skip_blank:
            skip_blank = False
            if not line.strip():
                continue
        m = _SLOT.fullmatch(line.strip())
        if m and m.group(2) and not slots.get(m.group(1)):
            skip_blank = True
            continue
        out.append(line)
    text = "\n".join(out)

    def fill(m):
        name = m.group(1)
        value = slots.get(name)
        if value is None:
            if m.group(2):
                return ""
            raise MissingSlot(name)
        return str(value)

    return _SLOT.sub(fill, text)


@dataclass
class PromptBundle:
    template_id: str
    query: str
    preamble: str = ""
    demos: list = field(default_factory=list)
    guideline: object = None
    guideline_slot: str = "guideline"
    extra: dict = field(default_factory=dict)

    @property
    def guideline_text(self):
        g = self.guideline
        if g is None:
            return None
        return getattr(g, "text", g)


def assemble_prompt(bundle: PromptBundle, template: str | None = None) -> str:
    """Render ``bundle`` into its template: preamble, guideline, demos, query."""
    if template is None:
        try:
            template = load_asset(bundle.template_id)
        except FileNotFoundError:
            raise MissingSlot(f"template {bundle.template_id}") from None
    slots = dict(bundle.extra)
    slots.update(
        preamble=bundle.preamble,
        demos="\n\n".join(bundle.demos),
        query=bundle.query,
    )
    slots[bundle.guideline_slot] = bundle.guideline_text
    return render_template(template, slots)


class BlocksworldPrompts:
    """Action evaluation in the good/bad format, guideline after the rules."""

    task = "blocksworld"
    score_template = "blocksworld_eval"
    value_template = "blocksworld_state_value"
    labels = ("good", "bad")

    def __init__(self, n_demos=DEFAULT_DEMOS):
        self.preamble = load_asset("blocksworld_rules").rstrip("\n")
        self.demos = load_demos("blocksworld_eval_demos")[:n_demos]

    def score_bundle(self, state, action, guideline=None) -> PromptBundle:
        query = f"[STATEMENT]\n{state.statement()}\n[ACTION]\n{action.render()}\n[EVALUATION]"
        return PromptBundle(self.score_template, query, self.preamble, self.demos, guideline)

    def value_bundle(self, state, guideline=None) -> PromptBundle:
        query = f"[STATEMENT]\n{state.statement()}\n[EVALUATION]"
        return PromptBundle(self.value_template, query, self.preamble, [], guideline)


class DecompositionPrompts:
    """Subquestion proposal, answering, and Yes/No usefulness scoring."""

    task = "decomposition"
    score_template = "decomposition_useful"
    value_template = "decomposition_useful"
    labels = ("Yes", "No")

    def __init__(self, n_demos=DEFAULT_DEMOS):
        self.preamble = load_asset("decomposition_rules").rstrip("\n")
        self.demos = load_demos("decomposition_demos")[:n_demos]

    def _transcript(self, state, extra_question=None):
        lines = [f"Question 5: {state.problem}"]
        for i, (q, a) in enumerate(state.steps, 1):
            lines.append(f"Question 5.{i}: {q}")
            lines.append(f"Answer 5.{i}: {a}")
        if extra_question is not None:
            lines.append(f"Question 5.{len(state.steps) + 1}: {extra_question}")
        return "\n".join(lines)

    def propose_bundle(self, state, k, guideline=None) -> PromptBundle:
        return PromptBundle("decomposition_propose", self._transcript(state), self.preamble,
                            self.demos, guideline, extra={"k": k})

    def answer_bundle(self, state, action, guideline=None) -> PromptBundle:
        return PromptBundle("decomposition_answer", self._transcript(state, action.render()),
                            self.preamble, self.demos, guideline)

    def score_bundle(self, state, action, guideline=None) -> PromptBundle:
        return PromptBundle(self.score_template, self._transcript(state, action.render()),
                            self.preamble, [], guideline)

    def value_bundle(self, state, guideline=None) -> PromptBundle:
        return PromptBundle(self.value_template, self._transcript(state), self.preamble, [], guideline)


TASK_PROMPTS = {"blocksworld": BlocksworldPrompts, "decomposition": DecompositionPrompts}
