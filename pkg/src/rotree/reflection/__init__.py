from .guideline import (
    Guideline,
    expected_merge_calls,
    extract_guideline,
    merge_guidelines,
    reflect_problem,
    reflect_single,
    reflection_prompt,
    rot_iterate,
)
from .selection import (
    ActionOutcome,
    ImportantStateRecord,
    Selection,
    SelectionMode,
    all_internal_states,
    importance_scores,
    select_for_mode,
    select_important_states,
)
from .store import GuidelineStore

__all__ = [
    "Guideline", "expected_merge_calls", "extract_guideline", "merge_guidelines", "reflect_problem",
    "reflect_single", "reflection_prompt", "rot_iterate", "ActionOutcome", "ImportantStateRecord",
    "Selection", "SelectionMode", "all_internal_states", "importance_scores", "select_for_mode",
    "select_important_states", "GuidelineStore",
]
