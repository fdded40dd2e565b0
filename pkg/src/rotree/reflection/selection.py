"""Important-state selection from finished search trees."""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .. import kernels

DEFAULT_THRESHOLD = 0.1


@dataclass(frozen=True)
class ActionOutcome:
    action: str
    next_state: str
    next_value: float


@dataclass(frozen=True)
class ImportantStateRecord:
    state_render: str
    actions: tuple
    own_value: float
    importance: float
    source: tuple  # (tree id, node id)
    problem: str = ""

    def __post_init__(self):
        if not self.actions:
            raise ValueError("an important state needs at least one action")

    def to_json(self) -> dict:
        return {
            "state": self.state_render,
            "actions": [[a.action, a.next_state, a.next_value] for a in self.actions],
            "own_value": self.own_value,
            "importance": self.importance,
            "source": list(self.source),
            "problem": self.problem,
        }

    @classmethod
    def from_json(cls, data):
        return cls(data["state"], tuple(ActionOutcome(*a) for a in data["actions"]),
                   data["own_value"], data["importance"], tuple(data["source"]), data.get("problem", ""))


@dataclass(frozen=True)
class SelectionMode:
    kind: str  # important | random | all | problem-only
    threshold: float = DEFAULT_THRESHOLD
    count: int = 0

    KINDS = ("important", "random", "all", "problem-only")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown selection mode {self.kind!r}")
        if self.threshold != self.threshold or self.threshold in (float("inf"), float("-inf")):
            raise ValueError("threshold must be finite")
        if self.count < 0:
            raise ValueError("count must be >= 0")

    @classmethod
    def important(cls, threshold=DEFAULT_THRESHOLD):
        return cls("important", threshold=threshold)

    @classmethod
    def random(cls, count):
        return cls("random", count=count)

    @classmethod
    def all(cls):
        return cls("all")

    @classmethod
    def problem_only(cls):
        return cls("problem-only")

    @classmethod
    def parse(cls, text, threshold=DEFAULT_THRESHOLD, count=20):
        """``important``, ``important:0.5``, ``random:30``, ``all``, ``problem-only``."""
        kind, _, arg = text.partition(":")
        kind = kind.strip().lower().replace("_", "-")
        if kind == "important":
            return cls.important(float(arg) if arg else threshold)
        if kind == "random":
            return cls.random(int(arg) if arg else count)
        return cls(kind)

    @property
    def tag(self) -> str:
        if self.kind == "important":
            return f"important:{self.threshold:g}"
        if self.kind == "random":
            return f"random:{self.count}"
        return self.kind


@dataclass
class Selection:
    records: list
    problems: list = field(default_factory=list)


def _counted(tree, child):
    # unvisited MCTS children carry no evidence
    return child.visit_count > 0 or tree.method.value != "MCTS"


def importance_scores(tree) -> dict:
    """Node id -> importance, for nodes with at least one counted child."""
    ids = sorted(tree.nodes)
    pos = {nid: i for i, nid in enumerate(ids)}
    parents = [-1 if tree[n].parent is None else pos[tree[n].parent] for n in ids]
    values = [tree[n].v_estimate for n in ids]
    visits = [tree[n].visit_count for n in ids]
    scores = kernels.importance_scores(parents, values, visits, tree.method.value == "MCTS")
    return {nid: s for nid, s in zip(ids, scores) if s >= 0.0}


def make_record(tree, node, importance) -> ImportantStateRecord:
    outcomes = tuple(
        ActionOutcome(tree[c].action_text, tree[c].state_text, tree[c].v_estimate)
        for c in node.children if _counted(tree, tree[c])
    )
    return ImportantStateRecord(node.state_text, outcomes, node.v_estimate, importance,
                                (tree.tree_id, node.id), tree.problem)


def select_important_states(tree, threshold=DEFAULT_THRESHOLD) -> list:
    """Every internal node whose largest child value shift exceeds ``threshold``."""
    scores = importance_scores(tree)
    return [make_record(tree, tree[nid], s) for nid, s in sorted(scores.items()) if s > threshold]


def all_internal_states(tree) -> list:
    scores = importance_scores(tree)
    return [make_record(tree, tree[nid], s) for nid, s in sorted(scores.items())]


def select_for_mode(trees, mode: SelectionMode, seed=0) -> Selection:
    problems = [t.problem for t in trees]
    if mode.kind == "problem-only":
        return Selection([], problems)
    if mode.kind == "important":
        records = [r for t in trees for r in select_important_states(t, mode.threshold)]
    else:
        # sorted before sampling so the seed alone fixes the draw
        records = [r for t in trees for r in all_internal_states(t)]
        records.sort(key=lambda r: (str(r.source[0]), r.source[1]))
        if mode.kind == "random":
            rng = random.Random(seed)
            picked = sorted(rng.sample(range(len(records)), min(mode.count, len(records))))
            records = [records[i] for i in picked]
    records.sort(key=lambda r: (str(r.source[0]), r.source[1]))
    return Selection(records, problems)
