"""Monte Carlo tree search over an environment with a policy model."""
from .. import kernels
from ..errors import NoChildren, UnknownNode
from .tree import Method, SearchConfig, SearchTree
from ._expand import expand


def uct_select(node, tree, c):
    """Child id maximising ``q + c * sqrt(ln N / n)``; unvisited children
    come first, in insertion order; ties go to the earliest child."""
    if not node.children:
        raise NoChildren(f"node {node.id} is a leaf")
    kids = [tree[cid] for cid in node.children]
    i = kernels.uct_argmax(
        [k.q_estimate for k in kids], [k.visit_count for k in kids], node.visit_count, float(c)
    )
    return node.children[i]


def backpropagate(tree, leaf_id, value):
    """Add ``value`` as a sample to every node on the root path.

    A node's value is the running mean of its samples; a non-root node's first
    sample is the policy's initial estimate.
    """
    if leaf_id not in tree.nodes:
        raise UnknownNode(leaf_id)
    value = float(value)
    for node in tree.path_to(leaf_id):
        node.samples.append(value)
        node.visit_count += 1
        node.v_estimate = sum(node.samples) / len(node.samples)
        if node.parent is not None:
            node.q_estimate = node.v_estimate


def _evaluate(env, policy, cfg, node):
    if node.is_terminal:
        return env.terminal_reward(node.state)
    if cfg.rollout_depth > 0:
        return float(policy.rollout_value(node.state, cfg.rollout_depth))
    return node.samples[0]


def best_child(tree, node):
    """Highest mean value, then most visits, then earliest."""
    return min(
        (tree[c] for c in node.children),
        key=lambda n: (-n.v_estimate, -n.visit_count, n.id),
    )


def mcts_search(env, policy, cfg: SearchConfig, tree_id=None, on_backprop=None):
    """Run ``cfg.mcts_iterations`` rounds of select, expand, evaluate,
    backpropagate.

    Expansion scores every legal action once and evaluates each new child, so
    every child is visited when created. Terminal nodes propagate the
    environment reward. ``on_backprop(leaf_id, value)`` observes each update.
    """
    tree = SearchTree(Method.MCTS, cfg, tree_id or env.instance_id, env.problem_text())
    start = env.initial_state()
    root = tree.add_root(start, terminal=env.is_terminal(start))

    def propagate(node_id, value):
        if on_backprop is not None:
            on_backprop(node_id, value)
        backpropagate(tree, node_id, value)

    for _ in range(cfg.mcts_iterations):
        node = root
        while node.children and not node.is_terminal:
            node = tree[uct_select(node, tree, cfg.exploration_constant)]
        if node.is_terminal or node.depth >= cfg.depth_limit:
            propagate(node.id, _evaluate(env, policy, cfg, node))
            continue
        for child in expand(tree, env, policy, node):
            propagate(child.id, _evaluate(env, policy, cfg, child))

    node = root
    while node.children:
        node = best_child(tree, node)
    tree.best_leaf = node.id
    return tree, tree.plan(node.id)
