from .base import Environment
from .blocksworld import (
    BlocksAction,
    BlocksInstance,
    BlocksState,
    BlocksworldEnv,
    Goal,
    blocks_apply,
    blocks_legal_actions,
    blocks_render,
    generate_instances,
    min_plan_length,
    oracle_action_value,
)

__all__ = [
    "Environment", "BlocksAction", "BlocksInstance", "BlocksState", "BlocksworldEnv", "Goal",
    "blocks_apply", "blocks_legal_actions", "blocks_render", "generate_instances",
    "min_plan_length", "oracle_action_value",
]
