"""Depth-synchronous beam breadth-first search."""
from .tree import Method, SearchConfig, SearchTree
from ._expand import expand


def _rank(node):
    return (-node.v_estimate, node.id)


def _leaf_rank(node):
    # equal values: the shortest terminal path, else the deepest leaf (the
    # surviving beam), then the lowest id
    if node.is_terminal:
        return (-node.v_estimate, 0, node.depth, node.id)
    return (-node.v_estimate, 1, -node.depth, node.id)


def beam_bfs(env, policy, cfg: SearchConfig, tree_id=None):
    """Expand every action of every kept state, then keep the ``beam_width``
    best children by value (ties: lowest node id). The returned plan ends at
    the best-valued leaf; ties prefer the shortest terminal path, then the
    deepest leaf, then the lowest id.

    States are scored once, when created; survivors are not re-scored. The
    root, having no incoming action, takes the best child value.
    """
    tree = SearchTree(Method.BFS, cfg, tree_id or env.instance_id, env.problem_text())
    start = env.initial_state()
    root = tree.add_root(start, terminal=env.is_terminal(start))
    frontier = [root]
    depth = 0
    while depth < cfg.depth_limit:
        open_nodes = [n for n in frontier if not n.is_terminal]
        if not open_nodes:
            break
        candidates = []
        for node in open_nodes:
            candidates.extend(expand(tree, env, policy, node))
        frontier = sorted(candidates, key=_rank)[: cfg.beam_width]
        depth += 1
    if root.children:
        root.v_estimate = max(tree[c].v_estimate for c in root.children)
        root.q_estimate = root.v_estimate
    _count_visits(tree)
    best = min(tree.leaves(), key=_leaf_rank)
    tree.best_leaf = best.id
    return tree, tree.plan(best.id)


def _count_visits(tree):
    # each node was scored once; a node's count covers its whole subtree
    for nid in sorted(tree.nodes, reverse=True):
        node = tree[nid]
        node.visit_count = 1 + sum(tree[c].visit_count for c in node.children)
