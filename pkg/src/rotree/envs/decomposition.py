"""Subquestion decomposition: states are question/answer transcripts and
actions are proposed subquestions, both produced by the policy."""
from __future__ import annotations

from dataclasses import dataclass, replace

from ..answers import answers_match
from ..errors import PolicyFailure
from .base import Environment

DEFAULT_MAX_SUBQUESTIONS = 10


@dataclass(frozen=True)
class SubQuestion:
    text: str
    final: bool = False

    def render(self) -> str:
        return self.text


FINAL_ANSWER = SubQuestion("Now we can answer the question.", final=True)


@dataclass(frozen=True)
class DecompositionState:
    problem: str
    steps: tuple = ()
    final_answer: str | None = None

    def with_step(self, question, answer, final_answer=None) -> "DecompositionState":
        return replace(self, steps=self.steps + ((question, answer),), final_answer=final_answer)

    @property
    def is_terminal(self) -> bool:
        return self.final_answer is not None

    def render(self) -> str:
        lines = [f"Question: {self.problem}"]
        for i, (q, a) in enumerate(self.steps, 1):
            lines.append(f"Subquestion {i}: {q}")
            lines.append(f"Subanswer {i}: {a}")
        if self.final_answer is not None:
            lines.append(f"Final answer: {self.final_answer}")
        return "\n".join(lines)

    def statement(self) -> str:
        return self.render()


def decomposition_step(s: DecompositionState, a: SubQuestion, policy, max_subquestions=DEFAULT_MAX_SUBQUESTIONS):
    """Answer ``a`` with the policy and append it. Once the cap is reached the
    step is forced to the final-answer action."""
    if not a.final and len(s.steps) >= max_subquestions:
        a = FINAL_ANSWER
    nxt = policy.predict_next_state(s, a)
    if len(nxt.steps) != len(s.steps) + 1 or nxt.steps[:-1] != s.steps:
        raise PolicyFailure("policy did not append exactly one subanswer")
    if a.final and nxt.final_answer is None:
        nxt = replace(nxt, final_answer=nxt.steps[-1][1])
    if not a.final and nxt.final_answer is not None:
        nxt = replace(nxt, final_answer=None)
    return nxt


class DecompositionEnv(Environment):
    def __init__(self, problem, answer=None, instance_id="problem", max_subquestions=DEFAULT_MAX_SUBQUESTIONS,
                 proposals=4):
        self.problem = problem
        self.answer = answer
        self.instance_id = instance_id
        self.max_subquestions = max_subquestions
        self.proposals = proposals

    def initial_state(self):
        return DecompositionState(self.problem)

    def legal_actions(self, state, policy=None):
        if state.is_terminal:
            return []
        if len(state.steps) >= self.max_subquestions or policy is None:
            return [FINAL_ANSWER]
        proposed = [a for a in policy.propose_actions(state, self.proposals) if not a.final]
        return proposed + [FINAL_ANSWER]

    def apply(self, state, action, policy=None):
        if policy is None:
            raise PolicyFailure("decomposition steps need a policy to answer subquestions")
        return decomposition_step(state, action, policy, self.max_subquestions)

    def is_terminal(self, state) -> bool:
        return state.is_terminal

    def terminal_reward(self, state) -> float:
        return 1.0 if answers_match(state.final_answer, self.answer) else 0.0

    def problem_text(self) -> str:
        return f"Question: {self.problem}"

    def default_depth_limit(self) -> int:
        return self.max_subquestions + 1
