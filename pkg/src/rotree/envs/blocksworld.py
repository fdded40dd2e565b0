"""Rule-based Blocksworld: states, the four move rules, the natural-language
format used in prompts, and the exhaustive optimal-plan oracle."""
from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from .. import kernels
from ..errors import IllegalAction, InvalidInstance, Unsolvable
from .base import Environment

ORACLE_MAX_BLOCKS = 8

PICK_UP = "pick-up"
UNSTACK = "unstack"
PUT_DOWN = "put-down"
STACK = "stack"
_KIND_ORDER = {PICK_UP: 0, UNSTACK: 1, PUT_DOWN: 2, STACK: 3}

_NAME = r"([A-Za-z0-9_\-]+)"


def _b(name):
    return f"the {name} block"


def _join(clauses):
    if len(clauses) <= 1:
        return "".join(clauses)
    return ", ".join(clauses[:-1]) + " and " + clauses[-1]


@dataclass(frozen=True)
class Goal:
    """Conjunction of ``("on", x, y)`` and ``("on-table", x)`` predicates."""

    predicates: tuple

    def __post_init__(self):
        preds = tuple(tuple(p) for p in self.predicates)
        for p in preds:
            if not ((len(p) == 3 and p[0] == "on") or (len(p) == 2 and p[0] == "on-table")):
                raise InvalidInstance(f"unsupported goal predicate {p!r}")
        object.__setattr__(self, "predicates", preds)

    def blocks(self):
        out = set()
        for p in self.predicates:
            out.update(p[1:])
        return out

    def satisfied(self, state: "BlocksState") -> bool:
        below = state.below()
        for p in self.predicates:
            if p[0] == "on":
                if below.get(p[1]) != p[2]:
                    return False
            elif below.get(p[1]) != "table":
                return False
        return True

    def render(self) -> str:
        clauses = []
        for p in self.predicates:
            if p[0] == "on":
                clauses.append(f"{_b(p[1])} is on top of {_b(p[2])}")
            else:
                clauses.append(f"{_b(p[1])} is on the table")
        return _join(clauses)

    def to_json(self):
        return [list(p) for p in self.predicates]


@dataclass(frozen=True)
class BlocksAction:
    kind: str
    block: str
    target: str | None = None

    def render(self) -> str:
        if self.kind == PICK_UP:
            return f"pick up {_b(self.block)}"
        if self.kind == PUT_DOWN:
            return f"put down {_b(self.block)}"
        if self.kind == UNSTACK:
            return f"unstack {_b(self.block)} from on top of {_b(self.target)}"
        return f"stack {_b(self.block)} on top of {_b(self.target)}"

    def inverse(self) -> "BlocksAction":
        if self.kind == PICK_UP:
            return BlocksAction(PUT_DOWN, self.block)
        if self.kind == PUT_DOWN:
            return BlocksAction(PICK_UP, self.block)
        if self.kind == UNSTACK:
            return BlocksAction(STACK, self.block, self.target)
        return BlocksAction(UNSTACK, self.block, self.target)

    def sort_key(self):
        return (self.block, _KIND_ORDER[self.kind], self.target or "")


_ACTION_PATTERNS = [
    (re.compile(rf"^pick up the {_NAME} block$"), PICK_UP),
    (re.compile(rf"^put down the {_NAME} block$"), PUT_DOWN),
    (re.compile(rf"^unstack the {_NAME} block from on top of the {_NAME} block$"), UNSTACK),
    (re.compile(rf"^stack the {_NAME} block on top of the {_NAME} block$"), STACK),
]


def parse_action(text: str) -> BlocksAction:
    text = text.strip().rstrip(".")
    for pattern, kind in _ACTION_PATTERNS:
        m = pattern.match(text)
        if m:
            return BlocksAction(kind, *m.groups())
    raise ValueError(f"not a Blocksworld action: {text!r}")


@dataclass(frozen=True)
class BlocksState:
    """Stacks are listed bottom to top and kept sorted by bottom block, so two
    states with the same configuration compare equal."""

    stacks: tuple
    holding: str | None = None
    goal: Goal = field(default_factory=lambda: Goal(()))

    def __post_init__(self):
        stacks = tuple(sorted((tuple(s) for s in self.stacks if s), key=lambda s: s[0]))
        object.__setattr__(self, "stacks", stacks)
        if isinstance(self.goal, (list, tuple)):
            object.__setattr__(self, "goal", Goal(tuple(self.goal)))
        names = [b for s in stacks for b in s]
        if self.holding is not None:
            names.append(self.holding)
        if len(names) != len(set(names)):
            raise InvalidInstance("a block appears more than once")
        unknown = self.goal.blocks() - set(names)
        if unknown:
            raise InvalidInstance(f"goal mentions unknown blocks {sorted(unknown)}")

    @property
    def blocks(self) -> tuple:
        names = [b for s in self.stacks for b in s]
        if self.holding is not None:
            names.append(self.holding)
        return tuple(sorted(names))

    def below(self) -> dict:
        out = {}
        for s in self.stacks:
            out[s[0]] = "table"
            for lower, upper in zip(s, s[1:]):
                out[upper] = lower
        if self.holding is not None:
            out[self.holding] = "hand"
        return out

    def clear_blocks(self) -> list:
        return [s[-1] for s in self.stacks]

    def is_goal(self) -> bool:
        return self.goal.satisfied(self)

    def render(self) -> str:
        return blocks_render(self)

    def statement(self) -> str:
        return (
            f"As initial conditions I have that, {self.render()}.\n"
            f"My goal is to have that {self.goal.render()}."
        )

    def encode(self):
        """Kernel encoding: per block (sorted by name) the index it rests on,
        ``n`` for the table and ``n + 1`` for the hand."""
        names = self.blocks
        index = {b: i for i, b in enumerate(names)}
        n = len(names)
        below = self.below()
        on = tuple(n if below[b] == "table" else n + 1 if below[b] == "hand" else index[below[b]] for b in names)
        goal = [-1] * n
        for p in self.goal.predicates:
            goal[index[p[1]]] = index[p[2]] if p[0] == "on" else n
        return on, tuple(goal)


def blocks_render(s: BlocksState) -> str:
    clauses = [f"{_b(b)} is clear" for b in s.clear_blocks()]
    if s.holding is None:
        clauses.append("the hand is empty")
    else:
        clauses.append(f"the hand is holding {_b(s.holding)}")
    for stack in s.stacks:
        for i in range(len(stack) - 1, 0, -1):
            clauses.append(f"{_b(stack[i])} is on top of {_b(stack[i - 1])}")
    for stack in s.stacks:
        clauses.append(f"{_b(stack[0])} is on the table")
    return _join(clauses)


_ON_RE = re.compile(rf"the {_NAME} block is on top of the {_NAME} block")
_TABLE_RE = re.compile(rf"the {_NAME} block is on the table")
_HOLD_RE = re.compile(rf"the hand is holding the {_NAME} block")


def parse_state(text: str, goal: Goal | None = None) -> BlocksState:
    """Inverse of :func:`blocks_render`."""
    above = {}
    for upper, lower in _ON_RE.findall(text):
        if lower in above:
            raise ValueError(f"two blocks on {lower}")
        above[lower] = upper
    stacks = []
    for bottom in _TABLE_RE.findall(text):
        stack = [bottom]
        while stack[-1] in above:
            stack.append(above.pop(stack[-1]))
        stacks.append(tuple(stack))
    if above:
        raise ValueError("on-relations not grounded on the table")
    held = _HOLD_RE.findall(text)
    return BlocksState(tuple(stacks), held[0] if held else None, goal or Goal(()))


def parse_goal(text: str) -> Goal:
    preds = []
    for clause in re.split(r",\s*|\s+and\s+", text.strip().rstrip(".")):
        m = _ON_RE.fullmatch(clause.strip())
        if m:
            preds.append(("on", *m.groups()))
            continue
        m = _TABLE_RE.fullmatch(clause.strip())
        if m:
            preds.append(("on-table", m.group(1)))
            continue
        raise InvalidInstance(f"unsupported goal clause {clause!r}")
    return Goal(tuple(preds))


def blocks_legal_actions(s: BlocksState) -> list:
    actions = []
    if s.holding is not None:
        actions.append(BlocksAction(PUT_DOWN, s.holding))
        for t in s.clear_blocks():
            actions.append(BlocksAction(STACK, s.holding, t))
    else:
        for stack in s.stacks:
            top = stack[-1]
            if len(stack) == 1:
                actions.append(BlocksAction(PICK_UP, top))
            else:
                actions.append(BlocksAction(UNSTACK, top, stack[-2]))
    actions.sort(key=BlocksAction.sort_key)
    return actions


def blocks_apply(s: BlocksState, a: BlocksAction) -> BlocksState:
    stacks = [list(st) for st in s.stacks]
    where = {st[-1]: i for i, st in enumerate(stacks)}
    if a.kind in (PICK_UP, UNSTACK):
        if s.holding is not None:
            raise IllegalAction("hand-full", f"already holding {s.holding}")
        if a.block not in s.blocks:
            raise IllegalAction("unknown-block", a.block)
        if a.block not in where:
            raise IllegalAction("blocked", f"{a.block} is not clear")
        stack = stacks[where[a.block]]
        if a.kind == PICK_UP and len(stack) != 1:
            raise IllegalAction("not-on-table", f"{a.block} is on {stack[-2]}")
        if a.kind == UNSTACK and (len(stack) < 2 or stack[-2] != a.target):
            raise IllegalAction("not-on-target", f"{a.block} is not on {a.target}")
        stack.pop()
        return BlocksState(tuple(map(tuple, stacks)), a.block, s.goal)
    if a.kind in (PUT_DOWN, STACK):
        if s.holding != a.block:
            raise IllegalAction("not-holding", f"not holding {a.block}")
        if a.kind == PUT_DOWN:
            stacks.append([a.block])
        else:
            if a.target not in where:
                raise IllegalAction("target-not-clear", f"{a.target} is not clear")
            stacks[where[a.target]].append(a.block)
        return BlocksState(tuple(map(tuple, stacks)), None, s.goal)
    raise IllegalAction("unknown-kind", a.kind)


@lru_cache(maxsize=1 << 18)
def _distance(on, goal):
    return kernels.plan_distance(on, goal)


def min_plan_length(s: BlocksState) -> int:
    """Exact optimal plan length by exhaustive breadth-first search."""
    if len(s.blocks) > ORACLE_MAX_BLOCKS:
        raise ValueError(f"oracle supports at most {ORACLE_MAX_BLOCKS} blocks")
    d = _distance(*s.encode())
    if d < 0:
        raise Unsolvable(f"goal unreachable: {s.goal.render()}")
    return d


def oracle_action_value(s: BlocksState, a: BlocksAction) -> float:
    """1 - d(s') / (d(s) + 1): 1.0 for a completing move, lower as s' gets
    farther from the goal."""
    d = min_plan_length(s)
    return 1.0 - min_plan_length(blocks_apply(s, a)) / (d + 1)


def oracle_state_value(s: BlocksState, horizon: int) -> float:
    """Exact value of a state: 1 at the goal, falling linearly to 0 at ``horizon`` steps."""
    d = min_plan_length(s)
    return max(0.0, 1.0 - d / (horizon + 1))


def optimal_plans(s: BlocksState) -> list:
    """Every optimal plan from ``s`` (exhaustive; test oracle)."""
    d = min_plan_length(s)
    if d == 0:
        return [[]]
    plans = []
    for a in blocks_legal_actions(s):
        nxt = blocks_apply(s, a)
        if min_plan_length(nxt) == d - 1:
            plans.extend([a] + rest for rest in optimal_plans(nxt))
    return plans


@dataclass(frozen=True)
class BlocksInstance:
    id: str
    init: tuple
    goal: Goal
    holding: str | None = None
    steps: int | None = None

    def state(self) -> BlocksState:
        return BlocksState(self.init, self.holding, self.goal)

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "blocks": list(self.state().blocks),
            "init": [list(s) for s in self.state().stacks],
            "goal": self.goal.to_json(),
        }
        if self.holding is not None:
            out["holding"] = self.holding
        if self.steps is not None:
            out["steps"] = self.steps
        return out

    @classmethod
    def from_json(cls, data: dict) -> "BlocksInstance":
        try:
            inst = cls(
                id=str(data["id"]),
                init=tuple(tuple(s) for s in data["init"]),
                goal=Goal(tuple(tuple(p) for p in data["goal"])),
                holding=data.get("holding"),
                steps=data.get("steps"),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInstance(f"malformed instance: {exc}") from exc
        declared = data.get("blocks")
        if declared is not None and sorted(declared) != list(inst.state().blocks):
            raise InvalidInstance(f"instance {inst.id}: block list does not match stacks")
        return inst


def load_instances(path) -> list:
    """Read a JSON list of instances (or ``{"instances": [...]}``)."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get("instances", [data])
    return [BlocksInstance.from_json(d) for d in data]


def save_instances(instances, path):
    Path(path).write_text(json.dumps([i.to_json() for i in instances], indent=2) + "\n")


def _random_stacks(rng, names):
    order = list(names)
    rng.shuffle(order)
    stacks = []
    for b in order:
        if stacks and rng.random() < 0.5:
            rng.choice(stacks).append(b)
        else:
            stacks.append([b])
    return stacks


def generate_instances(count, n_blocks, steps, seed=0, max_tries=20000):
    """Random solvable instances whose optimal plan length is exactly ``steps``.

    ``n_blocks`` may be an int or an inclusive ``(lo, hi)`` range. Goals are
    the on-relations of a random target configuration.
    """
    rng = random.Random(seed)
    lo, hi = (n_blocks, n_blocks) if isinstance(n_blocks, int) else n_blocks
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries * max(count, 1):
            raise InvalidInstance(f"could not generate {count} instances with {steps} steps")
        n = rng.randint(lo, hi)
        names = [chr(ord("A") + i) for i in range(n)]
        init = _random_stacks(rng, names)
        target = _random_stacks(rng, names)
        preds = tuple(("on", up, low) for st in target for low, up in zip(st, st[1:]))
        if not preds:
            continue
        goal = Goal(preds)
        state = BlocksState(tuple(map(tuple, init)), None, goal)
        if min_plan_length(state) != steps:
            continue
        out.append(BlocksInstance(f"bw-{seed}-{len(out):03d}", state.stacks, goal, None, steps))
    return out


class BlocksworldEnv(Environment):
    def __init__(self, instance: BlocksInstance):
        self.instance = instance
        self.instance_id = instance.id
        self._initial = instance.state()

    def initial_state(self) -> BlocksState:
        return self._initial

    def legal_actions(self, state, policy=None):
        return blocks_legal_actions(state)

    def apply(self, state, action, policy=None):
        return blocks_apply(state, action)

    def is_terminal(self, state) -> bool:
        return state.is_goal()

    def terminal_reward(self, state) -> float:
        return 1.0 if state.is_goal() else 0.0

    def problem_text(self) -> str:
        return self._initial.statement()

    def default_depth_limit(self) -> int:
        steps = self.instance.steps
        if steps is None:
            steps = min_plan_length(self._initial)
        return steps + 2
