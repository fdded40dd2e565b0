from .bfs import beam_bfs
from .chain import sample_chain
from .mcts import backpropagate, best_child, mcts_search, uct_select
from .tree import Method, SearchConfig, SearchNode, SearchTree

__all__ = [
    "Method", "SearchConfig", "SearchNode", "SearchTree",
    "beam_bfs", "mcts_search", "uct_select", "backpropagate", "best_child", "sample_chain",
]
