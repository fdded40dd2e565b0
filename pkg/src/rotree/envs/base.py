"""The environment contract that search procedures run against."""
from __future__ import annotations

from typing import Protocol, runtime_checkable


@runtime_checkable
class TaskState(Protocol):
    def render(self) -> str: ...


@runtime_checkable
class TaskAction(Protocol):
    def render(self) -> str: ...


class Environment:
    """A task instance. States and actions are immutable and self-rendering.

    ``policy`` is passed through for tasks whose actions or transitions are
    produced by the model (subquestion decomposition); rule-based tasks ignore it.
    """

    instance_id: str = "instance"

    def initial_state(self):
        raise NotImplementedError

    def legal_actions(self, state, policy=None) -> list:
        raise NotImplementedError

    def apply(self, state, action, policy=None):
        raise NotImplementedError

    def is_terminal(self, state) -> bool:
        raise NotImplementedError

    def terminal_reward(self, state) -> float:
        raise NotImplementedError

    def render(self, state) -> str:
        return state.render()

    def problem_text(self) -> str:
        """The bare problem statement, used for problem-only reflection."""
        return self.render(self.initial_state())
