from ..errors import EmptyFrontier


def expand(tree, env, policy, node):
    """Create one child per legal action, each scored once by the policy."""
    actions = env.legal_actions(node.state, policy)
    if not actions:
        raise EmptyFrontier(f"no legal action at non-terminal node {node.id}: {node.state_text!r}")
    children = []
    for action in actions:
        nxt = env.apply(node.state, action, policy)
        q = float(policy.score_action(node.state, action))
        children.append(tree.add_child(node.id, action, nxt, q, terminal=env.is_terminal(nxt)))
    return children
