"""Exact-distance Blocksworld policy standing in for a model in tests."""
from ..envs.blocksworld import (
    blocks_apply,
    blocks_legal_actions,
    oracle_action_value,
    oracle_state_value,
)
from .base import PolicyModel


class OraclePolicy(PolicyModel):
    name = "oracle"

    def propose_actions(self, state, k):
        return blocks_legal_actions(state)[:k]

    def score_action(self, state, action):
        return oracle_action_value(state, action)

    def predict_next_state(self, state, action):
        return blocks_apply(state, action)

    def rollout_value(self, state, depth):
        return oracle_state_value(state, depth)

    def generate(self, prompt):
        return ""
