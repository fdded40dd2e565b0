"""Policy backed by a chat-completion model."""
from __future__ import annotations

import hashlib
import re
import threading

from ..answers import last_number
from ..envs.blocksworld import BlocksState, blocks_apply, blocks_legal_actions
from ..envs.decomposition import DecompositionState, SubQuestion
from ..errors import MalformedResponse
from .backend import ChatBackend
from .base import PolicyModel
from .prompts import DEFAULT_DEMOS, TASK_PROMPTS, assemble_prompt

DEFAULT_SAMPLES = 10
DEFAULT_PROPOSALS = 4

_WORD = re.compile(r"[A-Za-z]+")


def guideline_version(guideline) -> str:
    if guideline is None:
        return "none"
    text = getattr(guideline, "text", guideline)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def parse_label(completion, positive, negative):
    """First alphabetic token, case-insensitive prefix match; ``None`` if neither."""
    m = _WORD.search(completion or "")
    if not m:
        return None
    word = m.group(0).lower()
    for label in (positive, negative):
        if word.startswith(label.lower()):
            return label
    return None


class ScoreCache:
    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key):
        with self._lock:
            if key in self._data:
                self.hits += 1
                return self._data[key]
            self.misses += 1
            return None

    def put(self, key, value):
        with self._lock:
            self._data[key] = value

    def __len__(self):
        return len(self._data)


def llm_score_action(state, action, backend: ChatBackend, prompts, guideline=None,
                     samples=DEFAULT_SAMPLES, cache: ScoreCache | None = None) -> float:
    """Probability the model calls ``action`` good (or useful) in ``state``.

    Uses normalized first-token probabilities when the backend exposes
    logprobs, otherwise the positive-label frequency over ``samples`` draws.
    """
    bundle = prompts.score_bundle(state, action, guideline)
    # the statement carries the goal, so instances sharing a cache cannot collide
    key = (bundle.template_id, guideline_version(guideline), state.statement(), action.render())
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    value = _label_score(assemble_prompt(bundle), backend, prompts.labels, samples)
    if cache is not None:
        cache.put(key, value)
    return value


def _label_score(prompt, backend, labels, samples):
    positive, negative = labels
    if backend.supports_logprobs:
        p = backend.label_probability(prompt, positive, negative)
    else:
        pos = neg = 0
        for _ in range(samples):
            label = parse_label(backend.complete([{"role": "user", "content": prompt}]), positive, negative)
            if label == positive:
                pos += 1
            elif label == negative:
                neg += 1
        if pos + neg == 0:
            raise MalformedResponse(f"no sample contained {positive!r} or {negative!r}")
        p = pos / (pos + neg)
    return min(1.0, max(0.0, p))


class LLMPolicy(PolicyModel):
    """The three model roles over a :class:`ChatBackend`.

    Blocksworld actions and transitions come from rules; only scoring is
    delegated to the model. Decomposition uses the model for all three roles.
    """

    def __init__(self, backend: ChatBackend, task="blocksworld", guideline=None,
                 samples=DEFAULT_SAMPLES, proposals=DEFAULT_PROPOSALS, n_demos=DEFAULT_DEMOS,
                 name=None, cache=None):
        self.backend = backend
        self.task = task
        self.prompts = TASK_PROMPTS[task](n_demos)
        self.guideline = guideline
        self.samples = samples
        self.proposals = proposals
        self.name = name or backend.config.model_name
        self.cache = cache if cache is not None else ScoreCache()

    def _ask(self, bundle) -> str:
        return self.backend.complete([{"role": "user", "content": assemble_prompt(bundle)}])

    def score_action(self, state, action):
        return llm_score_action(state, action, self.backend, self.prompts, self.guideline,
                                self.samples, self.cache)

    def propose_actions(self, state, k):
        if isinstance(state, BlocksState):
            return blocks_legal_actions(state)[:k]
        text = self._ask(self.prompts.propose_bundle(state, k, self.guideline))
        seen, out = set(), []
        for line in text.splitlines():
            q = re.sub(r"^\s*(?:[-*]|\d+[.)]|Question [\d.]+:)\s*", "", line).strip()
            if q and q.lower() not in seen:
                seen.add(q.lower())
                out.append(SubQuestion(q))
            if len(out) >= k:
                break
        return out

    def predict_next_state(self, state, action):
        if isinstance(state, BlocksState):
            return blocks_apply(state, action)
        if not isinstance(state, DecompositionState):
            raise TypeError(f"unsupported state type {type(state).__name__}")
        answer = self._ask(self.prompts.answer_bundle(state, action, self.guideline)).strip()
        final = None
        if action.final:
            final = last_number(answer) or answer
        return state.with_step(action.render(), answer, final)

    def rollout_value(self, state, depth):
        """Single value query on the state (``depth`` is not used by model policies)."""
        bundle = self.prompts.value_bundle(state, self.guideline)
        return _label_score(assemble_prompt(bundle), self.backend, self.prompts.labels, self.samples)

    def generate(self, prompt):
        return self.backend.complete([{"role": "user", "content": prompt}])

