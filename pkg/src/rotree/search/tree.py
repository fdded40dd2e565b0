"""Search tree data structures and their JSON interchange format."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import Enum

from ..errors import InvalidTree, UnknownNode

SCHEMA = "rotree.search-tree/1"


class Method(str, Enum):
    BFS = "BFS"
    MCTS = "MCTS"
    CHAIN = "CHAIN"


@dataclass(frozen=True)
class SearchConfig:
    beam_width: int = 5
    depth_limit: int = 6
    mcts_iterations: int = 10
    exploration_constant: float = 1.0
    samples_per_action_score: int = 10
    temperature: float = 0.7
    random_seed: int = 0
    rollout_depth: int = 0

    def __post_init__(self):
        for name in ("beam_width", "depth_limit", "mcts_iterations", "samples_per_action_score"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.exploration_constant < 0:
            raise ValueError("exploration_constant must be >= 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.rollout_depth < 0:
            raise ValueError("rollout_depth must be >= 0")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "SearchConfig":
        known = cls.__dataclass_fields__
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass
class SearchNode:
    id: int
    state: object
    state_text: str
    parent: int | None = None
    incoming_action: object = None
    action_text: str | None = None
    children: list = field(default_factory=list)
    q_estimate: float = 0.0
    v_estimate: float = 0.0
    visit_count: int = 0
    is_terminal: bool = False
    depth: int = 0
    # seed estimate followed by every value propagated through the node
    samples: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "parent": self.parent,
            "action": self.action_text,
            "state": self.state_text,
            "q": self.q_estimate,
            "v": self.v_estimate,
            "visits": self.visit_count,
            "terminal": self.is_terminal,
            "depth": self.depth,
            "children": list(self.children),
        }


class SearchTree:
    def __init__(self, method: Method, config: SearchConfig, tree_id: str = "tree", problem: str = ""):
        self.method = Method(method)
        self.config = config
        self.tree_id = tree_id
        self.problem = problem
        self.nodes: dict[int, SearchNode] = {}
        self.root_id: int | None = None
        self.best_leaf: int | None = None

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, node_id) -> SearchNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    @property
    def root(self) -> SearchNode:
        return self[self.root_id]

    def add_root(self, state, text=None, terminal=False) -> SearchNode:
        if self.nodes:
            raise InvalidTree("tree already has a root")
        node = SearchNode(0, state, text if text is not None else state.render(), is_terminal=terminal)
        self.nodes[0] = node
        self.root_id = 0
        return node

    def add_child(self, parent_id, action, state, q, terminal=False,
                  action_text=None, state_text=None) -> SearchNode:
        parent = self[parent_id]
        node = SearchNode(
            id=len(self.nodes),
            state=state,
            state_text=state_text if state_text is not None else state.render(),
            parent=parent_id,
            incoming_action=action,
            action_text=action_text if action_text is not None else action.render(),
            q_estimate=q,
            v_estimate=q,
            is_terminal=terminal,
            depth=parent.depth + 1,
            samples=[q],
        )
        self.nodes[node.id] = node
        parent.children.append(node.id)
        return node

    def path_to(self, node_id) -> list:
        """Nodes from the root down to ``node_id`` inclusive."""
        path = []
        node = self[node_id]
        while True:
            path.append(node)
            if node.parent is None:
                break
            node = self[node.parent]
        return path[::-1]

    def leaves(self) -> list:
        return [n for n in self.nodes.values() if not n.children]

    def internal_nodes(self, require_visit=None) -> list:
        """Nodes with at least one counted child. MCTS trees ignore unvisited children."""
        if require_visit is None:
            require_visit = self.method is Method.MCTS
        out = []
        for n in self.nodes.values():
            if any(self[c].visit_count > 0 or not require_visit for c in n.children):
                out.append(n)
        return out

    def plan(self, node_id) -> list:
        """``(state, action)`` pairs leading from the root to ``node_id``."""
        path = self.path_to(node_id)
        return [(a.state, b.incoming_action) for a, b in zip(path, path[1:])]

    def validate(self):
        if self.root_id is None or self.root_id not in self.nodes:
            raise InvalidTree("missing root")
        root = self.root
        if root.parent is not None or root.incoming_action is not None or root.action_text is not None:
            raise InvalidTree("root has a parent or incoming action")
        seen = set()
        stack = [self.root_id]
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise InvalidTree(f"node {nid} reachable twice")
            seen.add(nid)
            node = self[nid]
            if len(set(node.children)) != len(node.children):
                raise InvalidTree(f"node {nid} has duplicate children")
            child_visits = 0
            for cid in node.children:
                child = self.nodes.get(cid)
                if child is None or child.parent != nid:
                    raise InvalidTree(f"child {cid} of {nid} is dangling")
                if child.action_text is None:
                    raise InvalidTree(f"node {cid} has no incoming action")
                if child.v_estimate != child.q_estimate:
                    raise InvalidTree(f"node {cid}: V != Q of incoming action")
                child_visits += child.visit_count
                stack.append(cid)
            if node.visit_count < child_visits:
                raise InvalidTree(f"node {nid}: visits below children total")
        if seen != set(self.nodes):
            raise InvalidTree("unreachable nodes present")

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "tree_id": self.tree_id,
            "method": self.method.value,
            "root_id": self.root_id,
            "best_leaf": self.best_leaf,
            "problem": self.problem,
            "config": self.config.to_json(),
            "nodes": [self.nodes[i].to_json() for i in sorted(self.nodes)],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, data: dict) -> "SearchTree":
        if data.get("schema") != SCHEMA:
            raise InvalidTree(f"unsupported tree schema {data.get('schema')!r}")
        tree = cls(Method(data["method"]), SearchConfig.from_json(data["config"]),
                   data.get("tree_id", "tree"), data.get("problem", ""))
        for rec in data["nodes"]:
            node = SearchNode(
                id=rec["id"],
                state=rec["state"],
                state_text=rec["state"],
                parent=rec["parent"],
                incoming_action=rec["action"],
                action_text=rec["action"],
                children=list(rec["children"]),
                q_estimate=rec["q"],
                v_estimate=rec["v"],
                visit_count=rec["visits"],
                is_terminal=rec["terminal"],
                depth=rec.get("depth", 0),
            )
            tree.nodes[node.id] = node
        tree.root_id = data["root_id"]
        tree.best_leaf = data.get("best_leaf")
        tree.validate()
        return tree

    @classmethod
    def loads(cls, text: str) -> "SearchTree":
        return cls.from_json(json.loads(text))
