# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; drop-in replacements for ``_pure``."""
from libc.math cimport log, sqrt, fabs
from libc.stdlib cimport malloc, free
from libcpp.unordered_set cimport unordered_set
from libcpp.deque cimport deque
from libcpp.pair cimport pair
from libc.stdint cimport uint64_t

BACKEND = "cython"

cdef enum:
    MAX_BLOCKS = 14


cdef inline uint64_t _encode(int* on, int n) nogil:
    cdef uint64_t key = 0
    cdef int i
    for i in range(n):
        key = key * <uint64_t>(n + 2) + <uint64_t>on[i]
    return key


cdef inline void _decode(uint64_t key, int* on, int n) nogil:
    cdef int i
    for i in range(n - 1, -1, -1):
        on[i] = <int>(key % <uint64_t>(n + 2))
        key = key // <uint64_t>(n + 2)


cdef inline bint _goal_met(int* on, int* goal, int n) nogil:
    cdef int i
    for i in range(n):
        if goal[i] >= 0 and on[i] != goal[i]:
            return False
    return True


cdef int _bfs(int* start, int* g, int n, int max_depth) noexcept nogil:
    cdef int cur[MAX_BLOCKS]
    cdef bint covered[MAX_BLOCKS]
    cdef int i, t, held, depth
    cdef int table = n, hand = n + 1
    cdef unordered_set[uint64_t] seen
    cdef deque[pair[uint64_t, int]] frontier
    cdef uint64_t key = _encode(start, n)
    cdef uint64_t nxt
    seen.insert(key)
    frontier.push_back(pair[uint64_t, int](key, 0))
    while not frontier.empty():
        key = frontier.front().first
        depth = frontier.front().second
        frontier.pop_front()
        if max_depth >= 0 and depth >= max_depth:
            continue
        _decode(key, cur, n)
        held = -1
        for i in range(n):
            covered[i] = False
        for i in range(n):
            if cur[i] == hand:
                held = i
            elif cur[i] < n:
                covered[cur[i]] = True
        if held >= 0:
            for t in range(-1, n):
                if t == held or (t >= 0 and covered[t]):
                    continue
                cur[held] = table if t < 0 else t
                nxt = _encode(cur, n)
                if seen.count(nxt) == 0:
                    if _goal_met(cur, g, n):
                        return depth + 1
                    seen.insert(nxt)
                    frontier.push_back(pair[uint64_t, int](nxt, depth + 1))
            cur[held] = hand
        else:
            for i in range(n):
                if covered[i]:
                    continue
                t = cur[i]
                cur[i] = hand
                nxt = _encode(cur, n)
                if seen.count(nxt) == 0:
                    if _goal_met(cur, g, n):
                        return depth + 1
                    seen.insert(nxt)
                    frontier.push_back(pair[uint64_t, int](nxt, depth + 1))
                cur[i] = t
    return -1


def plan_distance(on, goal, int max_depth=-1):
    cdef int n = len(on)
    if n > MAX_BLOCKS:
        raise ValueError(f"at most {MAX_BLOCKS} blocks supported")
    cdef int cur[MAX_BLOCKS]
    cdef int g[MAX_BLOCKS]
    cdef int i, result
    for i in range(n):
        cur[i] = on[i]
        g[i] = goal[i]
    if _goal_met(cur, g, n):
        return 0
    with nogil:
        result = _bfs(cur, g, n, max_depth)
    return result


def importance_scores(parents, values, visits, bint require_visit=True):
    cdef Py_ssize_t m = len(parents), i
    cdef int p
    cdef double gap
    cdef double* out = <double*>malloc(m * sizeof(double))
    cdef double* v = <double*>malloc(m * sizeof(double))
    if out == NULL or v == NULL:
        free(out)
        free(v)
        raise MemoryError()
    try:
        for i in range(m):
            out[i] = -1.0
            v[i] = values[i]
        for i in range(m):
            p = parents[i]
            if p < 0 or (require_visit and visits[i] <= 0):
                continue
            gap = fabs(v[i] - v[p])
            if gap > out[p]:
                out[p] = gap
        return [out[i] for i in range(m)]
    finally:
        free(out)
        free(v)


def uct_argmax(q, visits, long parent_visits, double c):
    cdef Py_ssize_t k = len(q), i, best = -1
    cdef long n
    cdef double score, best_score = -1e308, log_n
    for i in range(k):
        if visits[i] <= 0:
            return i
    log_n = log(<double>parent_visits) if parent_visits > 1 else 0.0
    for i in range(k):
        n = visits[i]
        score = <double>q[i] + c * sqrt(log_n / <double>n)
        if score > best_score:
            best = i
            best_score = score
    return best
