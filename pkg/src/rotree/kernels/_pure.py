"""Pure-Python kernels. Semantics must match ``_fast.pyx`` exactly."""
from collections import deque
from math import log, sqrt

BACKEND = "python"


def _goal_met(on, goal):
    for i, g in enumerate(goal):
        if g >= 0 and on[i] != g:
            return False
    return True


def _successors(on, n):
    table, hand = n, n + 1
    covered = [False] * n
    held = -1
    for i, below in enumerate(on):
        if below == hand:
            held = i
        elif below < n:
            covered[below] = True
    if held >= 0:
        nxt = list(on)
        nxt[held] = table
        yield tuple(nxt)
        for t in range(n):
            if t != held and not covered[t]:
                nxt = list(on)
                nxt[held] = t
                yield tuple(nxt)
    else:
        for i in range(n):
            if not covered[i]:
                nxt = list(on)
                nxt[i] = hand
                yield tuple(nxt)


def plan_distance(on, goal, max_depth=-1):
    """Breadth-first distance from ``on`` to the nearest goal state, or -1."""
    n = len(on)
    start = tuple(on)
    if _goal_met(start, goal):
        return 0
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        state, depth = frontier.popleft()
        if 0 <= max_depth <= depth:
            continue
        for nxt in _successors(state, n):
            if nxt in seen:
                continue
            if _goal_met(nxt, goal):
                return depth + 1
            seen.add(nxt)
            frontier.append((nxt, depth + 1))
    return -1


def importance_scores(parents, values, visits, require_visit=True):
    """Per-node max |V(child) - V(node)|; -1.0 marks nodes with no counted child."""
    scores = [-1.0] * len(parents)
    for i, p in enumerate(parents):
        if p < 0 or (require_visit and visits[i] <= 0):
            continue
        gap = abs(values[i] - values[p])
        if gap > scores[p]:
            scores[p] = gap
    return scores


def uct_argmax(q, visits, parent_visits, c):
    for i, n in enumerate(visits):
        if n <= 0:
            return i
    log_n = log(parent_visits) if parent_visits > 1 else 0.0
    best, best_score = -1, float("-inf")
    for i, (qi, n) in enumerate(zip(q, visits)):
        score = qi + c * sqrt(log_n / n)
        if score > best_score:
            best, best_score = i, score
    return best
