from .backend import (
    BackendConfig,
    ChatBackend,
    HttpxTransport,
    RateLimiter,
    RecordedTransport,
    RetryPolicy,
    TapTransport,
    TransportError,
    chat_complete,
    completion_body,
)
from .base import PolicyModel
from .llm import LLMPolicy, ScoreCache, guideline_version, llm_score_action, parse_label
from .mock import ScriptedTransport, mock_backend, prompt_digest, scripted_mock
from .oracle import OraclePolicy
from .prompts import BlocksworldPrompts, DecompositionPrompts, PromptBundle, assemble_prompt

__all__ = [
    "BackendConfig", "ChatBackend", "HttpxTransport", "RateLimiter", "RecordedTransport", "RetryPolicy",
    "TapTransport", "TransportError", "chat_complete", "completion_body", "PolicyModel", "LLMPolicy",
    "ScoreCache", "guideline_version", "llm_score_action", "parse_label", "ScriptedTransport",
    "mock_backend", "prompt_digest", "scripted_mock", "OraclePolicy", "BlocksworldPrompts",
    "DecompositionPrompts", "PromptBundle", "assemble_prompt",
]
