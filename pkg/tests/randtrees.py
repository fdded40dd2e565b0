"""Random search trees with uniform values, for selection checks."""
from rotree.search import Method, SearchConfig, SearchTree


def random_tree(rng, n_nodes, method=Method.MCTS, tree_id="t"):
    tree = SearchTree(method, SearchConfig(), tree_id, f"problem {tree_id}")
    tree.add_root("s0", text="s0")
    for i in range(1, n_nodes):
        parent = rng.randrange(i)
        q = rng.random()
        node = tree.add_child(parent, f"a{i}", f"s{i}", q, action_text=f"a{i}", state_text=f"s{i}")
        # some MCTS children stay unvisited
        node.visit_count = 0 if method is Method.MCTS and rng.random() < 0.15 else rng.randint(1, 3)
    tree.root.v_estimate = rng.random()
    for nid in sorted(tree.nodes, reverse=True):
        node = tree[nid]
        node.visit_count = max(node.visit_count, sum(tree[c].visit_count for c in node.children))
    return tree


def brute_importance(tree):
    """Node id -> importance by direct rescan, skipping unvisited MCTS children."""
    out = {}
    for node in tree.nodes.values():
        kids = [tree[c] for c in node.children
                if tree.method is not Method.MCTS or tree[c].visit_count > 0]
        if kids:
            out[node.id] = max(abs(k.v_estimate - node.v_estimate) for k in kids)
    return out
