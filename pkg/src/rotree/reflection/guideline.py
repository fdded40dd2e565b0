"""Guideline summarization: per-state reflection, merging, iteration."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

from ..policy.prompts import load_asset, render_template
from .selection import SelectionMode, select_for_mode

log = logging.getLogger(__name__)

DEFAULT_BATCH = 8
DEFAULT_TOKEN_BUDGET = 2000
PROBLEM_ONLY = "problem-only"


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


@dataclass(frozen=True)
class Guideline:
    text: str
    iteration: int = 0
    sources: tuple = ()
    reflector_model: str = ""
    created_at: str = field(default_factory=_now)
    selection: str = ""
    parent: str | None = None
    version: str | None = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("guideline text must be non-empty")
        if self.iteration < 0:
            raise ValueError("iteration must be >= 0")
        object.__setattr__(self, "sources", tuple(
            tuple(s) if isinstance(s, list) else s for s in self.sources))

    @property
    def word_count(self) -> int:
        return len(self.text.split())


def extract_guideline(completion: str) -> str:
    """Text after the last ``Guideline:`` marker, or the whole completion."""
    marker = completion.rfind("Guideline:")
    body = completion[marker + len("Guideline:"):] if marker >= 0 else completion
    return body.strip()


def _previous_block(previous):
    if previous is None:
        return None
    return render_template(load_asset("previous_guideline"), {"text": previous.text})


def _model_name(reflector):
    return getattr(reflector, "name", type(reflector).__name__)


def ordered_outcomes(record):
    return sorted(record.actions, key=lambda a: (-a.next_value, a.action))


def reflection_prompt(record, previous=None) -> str:
    lines = []
    for i, a in enumerate(ordered_outcomes(record), 1):
        lines.append(f"{i}. Action: {a.action}\n   Next state: {a.next_state}\n"
                     f"   Next state value: {a.next_value:.3f}")
    return render_template(load_asset("reflect_state"), {
        "problem": record.problem,
        "state": record.state_render,
        "value": f"{record.own_value:.3f}",
        "previous": _previous_block(previous),
        "actions": "\n".join(lines),
    })


def reflect_single(record, reflector, previous=None, iteration=0) -> Guideline:
    """Ask the reflector to contrast every action at one state, then summarize."""
    text = extract_guideline(reflector.generate(reflection_prompt(record, previous)))
    return Guideline(text, iteration, (tuple(record.source),), _model_name(reflector))


def reflect_problem(problem, reflector, previous=None, iteration=0) -> Guideline:
    prompt = render_template(load_asset("reflect_problem"),
                             {"problem": problem, "previous": _previous_block(previous)})
    text = extract_guideline(reflector.generate(prompt))
    return Guideline(text, iteration, (PROBLEM_ONLY,), _model_name(reflector))


def _union_sources(parts):
    seen, out = set(), []
    for g in parts:
        for s in g.sources:
            if s not in seen:
                seen.add(s)
                out.append(s)
    return tuple(out)


def _merge_once(parts, reflector):
    body = "\n\n".join(f"Guideline {i}:\n{g.text}" for i, g in enumerate(parts, 1))
    prompt = render_template(load_asset("merge_guidelines"), {"guidelines": body})
    text = extract_guideline(reflector.generate(prompt))
    return Guideline(text, max(g.iteration for g in parts), _union_sources(parts), _model_name(reflector))


def merge_guidelines(parts, reflector, batch_size=DEFAULT_BATCH, token_budget=DEFAULT_TOKEN_BUDGET) -> Guideline:
    """Merge into one guideline. When the parts together exceed
    ``token_budget`` words they are merged in batches of ``batch_size`` and the
    batch results merged again."""
    if not parts:
        raise ValueError("nothing to merge")
    if batch_size < 2:
        raise ValueError("batch_size must be >= 2")
    if len(parts) == 1:
        g = parts[0]
        return replace(g, sources=_union_sources([g]))
    if sum(g.word_count for g in parts) <= token_budget:
        return _merge_once(parts, reflector)
    merged = []
    for start in range(0, len(parts), batch_size):
        batch = parts[start:start + batch_size]
        merged.append(batch[0] if len(batch) == 1 else _merge_once(batch, reflector))
    return merge_guidelines(merged, reflector, batch_size, token_budget)


def expected_merge_calls(n_parts, batch_size=DEFAULT_BATCH):
    """Calls for a two-level merge: one per batch plus the final merge."""
    return math.ceil(n_parts / batch_size) + 1


def rot_iterate(prev, trees, mode: SelectionMode, reflector, store=None, seed=0,
                batch_size=DEFAULT_BATCH, token_budget=DEFAULT_TOKEN_BUDGET):
    """One reflection round over ``trees`` (searched under ``prev``).

    Returns ``(guideline, selection)``; the guideline is saved to ``store`` when given.
    """
    iteration = 0 if prev is None else prev.iteration + 1
    selection = select_for_mode(trees, mode, seed)
    if selection.records:
        parts = [reflect_single(r, reflector, prev, iteration) for r in selection.records]
    else:
        if mode.kind != "problem-only":
            log.warning("selection %s kept no states; reflecting on problems only", mode.tag)
        parts = [reflect_problem(p, reflector, prev, iteration) for p in dict.fromkeys(selection.problems)]
    merged = merge_guidelines(parts, reflector, batch_size, token_budget)
    guideline = replace(merged, iteration=iteration, selection=mode.tag,
                        parent=None if prev is None else prev.version, created_at=_now())
    if store is not None:
        guideline = store.save(guideline)
    return guideline, selection
