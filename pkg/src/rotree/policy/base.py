"""The policy-model contract: the three model roles plus rollout and free-form
generation."""
from __future__ import annotations

import copy


class PolicyModel:
    """Base class. ``guideline`` is the active :class:`~rotree.reflection.Guideline`
    (or ``None``); implementations that build prompts inject it."""

    guideline = None
    name = "policy"

    def propose_actions(self, state, k: int) -> list:
        raise NotImplementedError

    def score_action(self, state, action) -> float:
        raise NotImplementedError

    def predict_next_state(self, state, action):
        raise NotImplementedError

    def generate(self, prompt: str) -> str:
        raise NotImplementedError

    def rollout_value(self, state, depth: int) -> float:
        raise NotImplementedError

    def with_guideline(self, guideline) -> "PolicyModel":
        clone = copy.copy(self)
        clone.guideline = guideline
        return clone
