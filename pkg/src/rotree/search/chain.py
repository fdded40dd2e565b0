"""Single-path sampling used by chain-of-thought style baselines."""
import math
import random

from .tree import Method, SearchTree


def _pick(rng, scores, temperature):
    if temperature <= 0:
        best = max(scores)
        return scores.index(best)
    top = max(scores)
    weights = [math.exp((s - top) / temperature) for s in scores]
    return rng.choices(range(len(scores)), weights=weights)[0]


def sample_chain(env, policy, cfg, seed=None, record=False, max_steps=None):
    """Walk one path, choosing each action by sampling the policy's action
    scores at ``cfg.temperature`` (0 means greedy, first action on ties).

    ``max_steps`` overrides ``cfg.depth_limit`` (and may be 0).
    Returns ``(final_state, actions)``; with ``record=True`` also the chain as a
    single-branch :class:`SearchTree`.
    """
    rng = random.Random(cfg.random_seed if seed is None else seed)
    state = env.initial_state()
    tree = SearchTree(Method.CHAIN, cfg, env.instance_id, env.problem_text()) if record else None
    node = tree.add_root(state, terminal=env.is_terminal(state)) if record else None
    limit = cfg.depth_limit if max_steps is None else max_steps
    trace = []
    while len(trace) < limit and not env.is_terminal(state):
        actions = env.legal_actions(state, policy)
        if not actions:
            break
        scores = [float(policy.score_action(state, a)) for a in actions]
        i = _pick(rng, scores, cfg.temperature)
        nxt = env.apply(state, actions[i], policy)
        if record:
            node = tree.add_child(node.id, actions[i], nxt, scores[i], terminal=env.is_terminal(nxt))
        trace.append(actions[i])
        state = nxt
    if record:
        for n in reversed(list(tree.nodes.values())):
            n.visit_count = 1 + sum(tree[c].visit_count for c in n.children)
        tree.best_leaf = node.id
        return state, trace, tree
    return state, trace
