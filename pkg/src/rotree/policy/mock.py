"""Deterministic scripted stand-in for a chat endpoint.

A script is a JSON object::

    {
      "strict": false,
      "default": {"text": "bad"},
      "rules": [
        {"contains": ["GUIDELINE-X"], "response": {"oracle": "blocksworld"}},
        {"digest": "3f2a...", "response": {"labels": {"good": 0.9, "bad": 0.1}}},
        {"contains": ["Merge them"], "response": {"texts": ["a", "b"]}}
      ]
    }

Rules are tried in order; the first whose ``digest`` equals the prompt digest
and whose ``contains`` strings all occur (and ``absent`` strings do not) wins.
Responses are one of: ``text`` (fixed completion), ``texts`` (cycled per rule,
in call order), ``labels`` (a label distribution, returned as top-token
logprobs when requested, else as the most likely label), ``echo`` (the prompt
itself), or ``oracle: "blocksworld"`` (exact-distance action values computed
from the prompt's final statement). Unmatched prompts get ``default``; in
strict mode they raise :class:`UnscriptedQuery`.
"""
from __future__ import annotations

import hashlib
import json
import math
import re
import threading
from pathlib import Path

from ..envs.blocksworld import oracle_action_value, oracle_state_value, parse_action, parse_goal, parse_state
from ..errors import MalformedResponse, UnscriptedQuery
from .backend import BackendConfig, ChatBackend, RetryPolicy, completion_body
from .llm import LLMPolicy

MOCK_ENDPOINT = "mock://scripted"


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode()).hexdigest()[:16]


def _blocksworld_oracle(prompt):
    tail = prompt[prompt.rfind("[STATEMENT]"):]
    m = re.search(r"As initial conditions I have that, (.*)\.\nMy goal is to have that (.*)\.\n", tail)
    if not m:
        raise MalformedResponse("oracle rule: no Blocksworld statement in prompt")
    state = parse_state(m.group(1), parse_goal(m.group(2)))
    action = re.search(r"\[ACTION\]\n(.*)\n", tail)
    if action:
        p = oracle_action_value(state, parse_action(action.group(1)))
    else:
        p = oracle_state_value(state, 10)
    return {"good": p, "bad": 1.0 - p}


class ScriptedTransport:
    def __init__(self, script: dict):
        self.script = script
        self.strict = bool(script.get("strict", False))
        self.rules = list(script.get("rules", []))
        self.default = script.get("default", {"text": ""})
        self._counters = {}
        self._lock = threading.Lock()
        self.calls = 0

    def _match(self, prompt, digest):
        for i, rule in enumerate(self.rules):
            if "digest" in rule and rule["digest"] != digest:
                continue
            if any(s not in prompt for s in rule.get("contains", [])):
                continue
            if any(s in prompt for s in rule.get("absent", [])):
                continue
            return i, rule["response"]
        if self.strict:
            raise UnscriptedQuery(digest)
        return -1, self.default

    def _respond(self, index, response, prompt):
        if "text" in response:
            return response["text"], None
        if "texts" in response:
            with self._lock:
                n = self._counters.get(index, 0)
                self._counters[index] = n + 1
            texts = response["texts"]
            return texts[n % len(texts)], None
        if "echo" in response:
            return prompt, None
        if "labels" in response:
            dist = response["labels"]
        elif response.get("oracle") == "blocksworld":
            dist = _blocksworld_oracle(prompt)
        else:
            raise MalformedResponse(f"unknown scripted response {response!r}")
        best = max(dist, key=lambda k: (dist[k], -list(dist).index(k)))
        return best, dist

    def __call__(self, url, headers, payload):
        with self._lock:
            self.calls += 1
        prompt = payload["messages"][-1]["content"]
        index, response = self._match(prompt, prompt_digest(prompt))
        text, dist = self._respond(index, response, prompt)
        if not payload.get("logprobs"):
            return 200, completion_body(text)
        if dist is None:
            dist = {text: 1.0}
        # zero-probability labels are absent from the top tokens, as with a real endpoint
        tops = [{"token": tok, "logprob": math.log(p)}
                for tok, p in sorted(dist.items(), key=lambda kv: -kv[1]) if p > 0]
        return 200, completion_body(text, tops)


def load_script(path) -> dict:
    return json.loads(Path(path).read_text())


def mock_backend(script, logprobs=True, transport_wrapper=None) -> ChatBackend:
    transport = ScriptedTransport(script if isinstance(script, dict) else load_script(script))
    if transport_wrapper is not None:
        transport = transport_wrapper(transport)
    config = BackendConfig(endpoint=MOCK_ENDPOINT, model_name=script.get("model", "scripted-mock")
                           if isinstance(script, dict) else "scripted-mock",
                           api_key_source=None, logprobs=logprobs, retry=RetryPolicy(1, ()))
    return ChatBackend(config, transport)


def scripted_mock(script, task="blocksworld", strict=None, logprobs=True, transport_wrapper=None,
                  **policy_kwargs) -> LLMPolicy:
    """A fully deterministic :class:`LLMPolicy` over a :class:`ScriptedTransport`."""
    if not isinstance(script, dict):
        script = load_script(script)
    if strict is not None:
        script = dict(script, strict=strict)
    backend = mock_backend(script, logprobs=logprobs, transport_wrapper=transport_wrapper)
    return LLMPolicy(backend, task=task, **policy_kwargs)
