"""Command-line entry point.

Run directory layout::

    RUN/manifest.json      manifest snapshot (with resolved guideline version)
    RUN/instances.json     the instance set the run used
    RUN/trees/NNN.json     one search tree per instance, in instance order
    RUN/outcomes.jsonl     one outcome per instance, in instance order
    RUN/guidelines/        default guideline store for ``reflect``

The config file given with ``--config`` is a flat JSON object whose keys are
the :class:`RunManifest` fields; command-line flags override it.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .answers import answers_match
from .envs.blocksworld import (
    BlocksworldEnv,
    blocks_apply,
    generate_instances,
    load_instances,
    min_plan_length,
    parse_action,
    save_instances,
)
from .envs.decomposition import DecompositionEnv
from .errors import (
    EmptyTraceDir,
    IllegalAction,
    ManifestError,
    RotreeError,
    SchemaMismatch,
    Unsolvable,
)
from .metrics import (
    Report,
    RunOutcome,
    auc_table,
    read_outcomes,
    self_consistency_vote,
    step_partitioned_report,
    write_outcomes,
)
from .policy import BackendConfig, ChatBackend, LLMPolicy, OraclePolicy, scripted_mock
from .reflection import GuidelineStore, SelectionMode, rot_iterate
from .search import Method, SearchConfig, SearchTree, beam_bfs, mcts_search, sample_chain

TASKS = ("blocksworld", "decomposition")
METHODS = ("cot", "cot_sc", "bfs", "mcts")
BACKENDS = ("oracle", "mock", "http")
DEFAULT_CHAINS = 10


@dataclass
class RunManifest:
    task: str = "blocksworld"
    method: str = "mcts"
    beam_width: int | None = None
    mcts_iterations: int | None = None
    depth_limit: int | None = None  # None: per-instance default
    exploration_constant: float = 1.0
    samples_per_action_score: int = 10
    temperature: float = 0.7
    random_seed: int = 0
    rollout_depth: int = 0
    chains: int = DEFAULT_CHAINS
    backend: str = "oracle"
    fixture: str | None = None
    backend_config: dict = field(default_factory=dict)
    guideline: str | None = None  # STORE[@VERSION]
    guideline_version: str | None = None
    selection: str = "important:0.1"
    out: str | None = None
    instances: str | None = None
    generate: str | None = None
    workers: int = 1

    def validate(self):
        if self.task not in TASKS:
            raise ManifestError(f"task: expected one of {TASKS}, got {self.task!r}")
        if self.method not in METHODS:
            raise ManifestError(f"method: expected one of {METHODS}, got {self.method!r}")
        if self.backend not in BACKENDS:
            raise ManifestError(f"backend: expected one of {BACKENDS}, got {self.backend!r}")
        if self.method == "bfs" and self.beam_width is None:
            raise ManifestError("beam_width: required for method bfs")
        if self.method == "mcts" and self.mcts_iterations is None:
            raise ManifestError("mcts_iterations: required for method mcts")
        if self.backend == "mock" and not self.fixture:
            raise ManifestError("fixture: required for the mock backend")
        if self.backend == "oracle" and self.task != "blocksworld":
            raise ManifestError("backend: the oracle policy only covers blocksworld")
        if not self.out:
            raise ManifestError("out: an output directory is required")
        if (self.instances is None) == (self.generate is None):
            raise ManifestError("instances: give exactly one of an instance file or a generator spec")
        if self.generate is not None and self.task != "blocksworld":
            raise ManifestError("generate: only blocksworld instances can be generated")
        if self.workers < 1:
            raise ManifestError("workers: must be >= 1")
        if self.chains < 1:
            raise ManifestError("chains: must be >= 1")
        try:
            SelectionMode.parse(self.selection)
            self.search_config()
        except ValueError as exc:
            raise ManifestError(str(exc)) from exc
        return self

    def search_config(self, depth_limit=None, seed_offset=0) -> SearchConfig:
        return SearchConfig(
            beam_width=self.beam_width or 5,
            depth_limit=depth_limit or self.depth_limit or 6,
            mcts_iterations=self.mcts_iterations or 10,
            exploration_constant=self.exploration_constant,
            samples_per_action_score=self.samples_per_action_score,
            temperature=self.temperature,
            random_seed=self.random_seed + seed_offset,
            rollout_depth=self.rollout_depth,
        )

    @property
    def variant(self) -> str:
        return "base" if self.guideline is None else "guided"

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "RunManifest":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ManifestError(f"unknown manifest keys {sorted(unknown)}")
        return cls(**data)


# instances

@dataclass(frozen=True)
class QuestionInstance:
    id: str
    problem: str
    answer: str | None = None

    def to_json(self):
        return {"id": self.id, "problem": self.problem, "answer": self.answer}


def parse_generator_spec(spec: str) -> dict:
    """``count=20;steps=2,4;blocks=2-6;seed=7``; ``count`` is per step value."""
    out = {"count": 10, "steps": [4], "blocks": (2, 6), "seed": 0}
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        key, sep, value = part.partition("=")
        if not sep:
            raise ManifestError(f"generate: bad item {part!r}")
        key = key.strip()
        try:
            if key == "count" or key == "seed":
                out[key] = int(value)
            elif key == "steps":
                out["steps"] = [int(v) for v in value.split(",")]
            elif key == "blocks":
                lo, _, hi = value.partition("-")
                out["blocks"] = (int(lo), int(hi or lo))
            else:
                raise ManifestError(f"generate: unknown key {key!r}")
        except ValueError as exc:
            raise ManifestError(f"generate: bad value in {part!r}") from exc
    return out


def generate_from_spec(spec: str) -> list:
    p = parse_generator_spec(spec)
    out = []
    for steps in p["steps"]:
        batch = generate_instances(p["count"], p["blocks"], steps, seed=p["seed"] + 1000 * steps)
        out.extend(replace(inst, id=f"bw-s{steps}-{p['seed']}-{i:03d}") for i, inst in enumerate(batch))
    return out


def load_question_instances(path) -> list:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get("instances", [])
    return [QuestionInstance(str(d.get("id", i)), d["problem"], d.get("answer")) for i, d in enumerate(data)]


def load_instance_set(m: RunManifest) -> list:
    if m.generate is not None:
        return generate_from_spec(m.generate)
    if m.task == "blocksworld":
        return load_instances(m.instances)
    return load_question_instances(m.instances)


def write_instance_set(task, instances, path):
    if task == "blocksworld":
        save_instances(instances, path)
    else:
        Path(path).write_text(json.dumps([i.to_json() for i in instances], indent=2) + "\n")


def read_instance_set(task, path) -> list:
    return load_instances(path) if task == "blocksworld" else load_question_instances(path)


def make_env(task, inst):
    if task == "blocksworld":
        return BlocksworldEnv(inst)
    return DecompositionEnv(inst.problem, inst.answer, inst.id)


# policies and guidelines

def parse_guideline_ref(ref: str):
    store, _, version = ref.partition("@")
    return store, (version or None)


def load_guideline(ref):
    if ref is None:
        return None
    store, version = parse_guideline_ref(ref)
    return GuidelineStore(store).load(version)


def make_policy(m: RunManifest, guideline=None, transport_wrapper=None):
    if m.backend == "oracle":
        return OraclePolicy()
    kwargs = {"task": m.task, "guideline": guideline, "samples": m.samples_per_action_score}
    if m.backend == "mock":
        return scripted_mock(m.fixture, transport_wrapper=transport_wrapper, **kwargs)
    backend = ChatBackend(BackendConfig.from_json(m.backend_config))
    if transport_wrapper is not None:
        backend.transport = transport_wrapper(backend.transport)
    return LLMPolicy(backend, **kwargs)


# running

def _final_answer(text):
    for line in reversed(text.splitlines()):
        if line.startswith("Final answer: "):
            return line[len("Final answer: "):]
    return None


def judge_leaf(task, inst, tree, leaf_id) -> bool:
    """Whether the path to ``leaf_id`` solves ``inst``; works on loaded trees too."""
    path = tree.path_to(leaf_id)
    if task == "blocksworld":
        state = inst.state()
        try:
            for node in path[1:]:
                state = blocks_apply(state, parse_action(node.action_text))
        except (IllegalAction, ValueError):
            return False
        return state.is_goal()
    final = _final_answer(path[-1].state_text)
    return final is not None and answers_match(final, inst.answer)


def _chain_key(task, tree, leaf_id):
    if task == "blocksworld":
        return " | ".join(n.action_text for n in tree.path_to(leaf_id)[1:])
    return _final_answer(tree[leaf_id].state_text) or ""


def _graft(dst, src):
    """Append ``src``'s non-root nodes under ``dst``'s root; returns the id map."""
    ids = {src.root_id: dst.root_id}
    for nid in sorted(src.nodes):
        node = src[nid]
        if node.parent is None:
            continue
        new = dst.add_child(ids[node.parent], node.incoming_action, node.state, node.q_estimate,
                            node.is_terminal, node.action_text, node.state_text)
        new.visit_count = node.visit_count
        ids[nid] = new.id
    return ids


def chain_leaves(tree):
    """End node of every chain in a combined self-consistency tree, in sample order."""
    return [n.id for n in tree.leaves() if n.parent is not None] or [tree.root_id]


def _self_consistency(task, env, policy, m, cfg, inst):
    tree = SearchTree(Method.CHAIN, cfg, env.instance_id, env.problem_text())
    start = env.initial_state()
    tree.add_root(start, terminal=env.is_terminal(start))
    leaves = []
    for k in range(m.chains):
        _, _, chain = sample_chain(env, policy, cfg, seed=cfg.random_seed * 1009 + k, record=True)
        ids = _graft(tree, chain)
        leaves.append(ids[chain.best_leaf])
    tree.root.visit_count = 1 + sum(tree[c].visit_count for c in tree.root.children)
    keys = [_chain_key(task, tree, leaf) for leaf in leaves]
    voted = self_consistency_vote(keys)
    tree.best_leaf = leaves[keys.index(voted)]
    return tree


def _search_one(m: RunManifest, policy, index, inst):
    env = make_env(m.task, inst)
    depth = m.depth_limit or env.default_depth_limit()
    cfg = m.search_config(depth, seed_offset=index)
    started = time.perf_counter()
    if m.method == "mcts":
        tree, _ = mcts_search(env, policy, cfg)
    elif m.method == "bfs":
        tree, _ = beam_bfs(env, policy, cfg)
    elif m.method == "cot":
        _, _, tree = sample_chain(env, policy, cfg, record=True)
    else:
        tree = _self_consistency(m.task, env, policy, m, cfg, inst)
    elapsed = time.perf_counter() - started
    outcome = outcome_from_tree(m, inst, tree)
    outcome.wall_time = elapsed
    return tree, outcome


def outcome_from_tree(m: RunManifest, inst, tree) -> RunOutcome:
    samples = []
    if m.method == "cot_sc":
        samples = [judge_leaf(m.task, inst, tree, leaf) for leaf in chain_leaves(tree)]
    return RunOutcome(
        instance_id=inst.id,
        method=m.method,
        correct=judge_leaf(m.task, inst, tree, tree.best_leaf),
        steps_required=getattr(inst, "steps", None),
        iterations_used=m.mcts_iterations if m.method == "mcts" else 1,
        variant=m.variant,
        samples=samples,
        plan=[n.action_text for n in tree.path_to(tree.best_leaf)[1:]],
    )


@dataclass
class RunResult:
    out: Path
    trees: list
    outcomes: list
    report: Report


def run_search(m: RunManifest, transport_wrapper=None) -> RunResult:
    """Search every instance and persist the run directory. ``transport_wrapper``
    wraps the backend transport (e.g. a tap that records prompts)."""
    m.validate()
    guideline = load_guideline(m.guideline)
    if guideline is not None:
        m = replace(m, guideline_version=guideline.version)
    instances = load_instance_set(m)
    policy = make_policy(m, guideline, transport_wrapper)
    out = Path(m.out)
    (out / "trees").mkdir(parents=True, exist_ok=True)
    jobs = list(enumerate(instances))
    if m.workers > 1:
        with ThreadPoolExecutor(m.workers) as pool:
            results = list(pool.map(lambda job: _search_one(m, policy, *job), jobs))
    else:
        results = [_search_one(m, policy, *job) for job in jobs]
    # single writer: everything is written here, in instance order
    (out / "manifest.json").write_text(json.dumps(m.to_json(), indent=2, sort_keys=True) + "\n")
    write_instance_set(m.task, instances, out / "instances.json")
    for i, (tree, _) in enumerate(results):
        (out / "trees" / f"{i:03d}.json").write_text(tree.dumps())
    outcomes = [o for _, o in results]
    write_outcomes(outcomes, out / "outcomes.jsonl")
    return RunResult(out, [t for t, _ in results], outcomes, step_partitioned_report(outcomes))


def read_manifest(run_dir) -> RunManifest:
    path = Path(run_dir) / "manifest.json"
    try:
        return RunManifest.from_json(json.loads(path.read_text()))
    except (OSError, ValueError) as exc:
        raise SchemaMismatch(f"{path}: {exc}") from exc


def load_trees(run_dir) -> list:
    paths = sorted((Path(run_dir) / "trees").glob("*.json"))
    if not paths:
        raise EmptyTraceDir(f"no trees under {run_dir}")
    return [SearchTree.loads(p.read_text()) for p in paths]


def replay_outcomes(run_dir) -> list:
    """Rebuild a run's outcomes from its stored trees and instance set."""
    m = read_manifest(run_dir)
    instances = read_instance_set(m.task, Path(run_dir) / "instances.json")
    trees = load_trees(run_dir)
    if len(trees) != len(instances):
        raise SchemaMismatch(f"{run_dir}: {len(trees)} trees for {len(instances)} instances")
    return [outcome_from_tree(m, inst, tree) for inst, tree in zip(instances, trees)]


def run_reflect(trace_dir, mode: SelectionMode, reflector, prev=None, store=None, seed=0):
    """Reflect over a run's trees; returns ``(guideline, selection)``."""
    trees = load_trees(trace_dir)
    store = GuidelineStore(store or Path(trace_dir) / "guidelines")
    return rot_iterate(prev, trees, mode, reflector, store=store, seed=seed)


def _dir_outcomes(d, from_trees):
    return replay_outcomes(d) if from_trees else read_outcomes(Path(d) / "outcomes.jsonl")


def run_evaluate(dirs, compare=False, auc=False, from_trees=False) -> Report:
    """Plain table for one dir (or several pooled), baseline vs guided with
    ``compare``, or the AUC table with ``auc`` (dirs in iteration order)."""
    if not dirs:
        raise SchemaMismatch("no run directories given")
    tasks = {read_manifest(d).task for d in dirs if (Path(d) / "manifest.json").exists()}
    if len(tasks) > 1:
        raise SchemaMismatch(f"runs mix tasks {sorted(tasks)}")
    sets = [_dir_outcomes(d, from_trees) for d in dirs]
    if auc:
        return Report([], False, auc_table(sets))
    if compare:
        if len(sets) != 2:
            raise SchemaMismatch("compare needs exactly two run directories")
        return step_partitioned_report(sets[0], sets[1])
    return step_partitioned_report([o for s in sets for o in s])


def oracle_lines(instances) -> tuple:
    """``(lines, n_failed)`` with each instance's minimum plan length."""
    lines, failed = [], 0
    for inst in instances:
        try:
            n = min_plan_length(inst.state())
        except (Unsolvable, ValueError) as exc:
            failed += 1
            lines.append(f"{inst.id}\tunsolvable: {exc}")
            continue
        flag = "" if inst.steps is None or inst.steps == n else f"\tmismatch: declared {inst.steps}"
        if flag:
            failed += 1
        lines.append(f"{inst.id}\t{n}{flag}")
    return lines, failed


def render_tree(tree) -> str:
    head = (f"tree {tree.tree_id}  method={tree.method.value}  nodes={len(tree)}"
            f"  best_leaf={tree.best_leaf}")
    lines = [head]
    best = {n.id for n in tree.path_to(tree.best_leaf)} if tree.best_leaf is not None else set()

    def walk(nid):
        n = tree[nid]
        mark = "*" if nid in best else " "
        label = n.action_text or "(root)"
        term = " terminal" if n.is_terminal else ""
        lines.append(f"{mark} {'  ' * n.depth}[{n.id}] {label}  v={n.v_estimate:.4f} n={n.visit_count}{term}")
        for c in n.children:
            walk(c)

    walk(tree.root_id)
    return "\n".join(lines) + "\n"


# argument handling

def _manifest_from_args(args) -> RunManifest:
    data = {}
    if args.config:
        data = json.loads(Path(args.config).read_text())
    flags = {
        "task": args.task, "method": args.method, "beam_width": args.beam,
        "mcts_iterations": args.iterations, "depth_limit": args.depth,
        "exploration_constant": args.c, "temperature": args.temperature,
        "random_seed": args.seed, "rollout_depth": args.rollout_depth, "chains": args.chains,
        "samples_per_action_score": args.samples,
        "backend": args.backend, "fixture": args.fixture, "guideline": args.guideline,
        "out": args.out, "instances": args.instances, "generate": args.generate,
        "workers": args.workers,
    }
    data.update({k: v for k, v in flags.items() if v is not None})
    if args.backend_config:
        data["backend_config"] = json.loads(Path(args.backend_config).read_text())
    return RunManifest.from_json(data)


def cmd_search(args) -> int:
    result = run_search(_manifest_from_args(args))
    print(f"wrote {len(result.trees)} trees to {result.out}")
    print(result.report.to_text(), end="")
    return 0


def _reflector(args, task):
    if args.backend == "mock":
        if not args.fixture:
            raise ManifestError("fixture: required for the mock backend")
        return scripted_mock(args.fixture, task=task)
    if args.backend == "http":
        data = json.loads(Path(args.backend_config).read_text()) if args.backend_config else {}
        return LLMPolicy(ChatBackend(BackendConfig.from_json(data)), task=task)
    raise ManifestError("backend: reflection needs a mock or http backend")


def cmd_reflect(args) -> int:
    mode = SelectionMode.parse(args.mode)
    if args.lam is not None and mode.kind == "important":
        mode = SelectionMode.important(args.lam)
    task = read_manifest(args.trace_dir).task if (Path(args.trace_dir) / "manifest.json").exists() else "blocksworld"
    prev, store = None, args.out
    if args.guideline:
        ref_store, _ = parse_guideline_ref(args.guideline)
        prev = load_guideline(args.guideline)
        store = store or ref_store
    g, selection = run_reflect(args.trace_dir, mode, _reflector(args, task), prev, store, args.seed or 0)
    print(f"selected states: {len(selection.records)}")
    print(f"stored version: {g.version}")
    return 0


def cmd_evaluate(args) -> int:
    report = run_evaluate(args.dirs, compare=args.compare, auc=args.auc, from_trees=args.from_trees)
    print(report.to_csv() if args.csv else report.to_text(), end="")
    return 0


def cmd_oracle(args) -> int:
    if bool(args.instances) == bool(args.generate):
        raise ManifestError("oracle: give exactly one of --instances or --generate")
    instances = load_instances(args.instances) if args.instances else generate_from_spec(args.generate)
    if args.generate and args.out:
        save_instances(instances, args.out)
    lines, failed = oracle_lines(instances)
    print("\n".join(lines))
    return 1 if failed else 0


def cmd_replay(args) -> int:
    path = Path(args.target)
    if path.is_dir():
        for tree in load_trees(path):
            print(render_tree(tree))
    else:
        print(render_tree(SearchTree.loads(path.read_text())), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rotree", description="Tree search with reflected guidelines.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("search", help="run a search method over an instance set")
    s.add_argument("--config", help="flat JSON manifest; flags override it")
    s.add_argument("--task", choices=TASKS)
    s.add_argument("--method", choices=METHODS)
    s.add_argument("--iterations", type=int, help="MCTS iterations")
    s.add_argument("--beam", type=int, help="beam width for bfs")
    s.add_argument("--depth", type=int, help="depth limit (default: per instance)")
    s.add_argument("--c", type=float, help="UCT exploration constant")
    s.add_argument("--temperature", type=float)
    s.add_argument("--rollout-depth", dest="rollout_depth", type=int)
    s.add_argument("--chains", type=int, help="chains for cot_sc")
    s.add_argument("--samples", type=int, help="samples per action score without logprobs")
    s.add_argument("--instances", help="instance JSON file")
    s.add_argument("--generate", help="generator spec, e.g. 'count=20;steps=4;blocks=2-6;seed=7'")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_search)

    r = sub.add_parser("reflect", help="distill a guideline from a run's trees")
    r.add_argument("trace_dir")
    r.add_argument("--mode", default="important", help="important[:λ] | random:N | all | problem-only")
    r.add_argument("--lambda", dest="lam", type=float)
    r.set_defaults(func=cmd_reflect)

    e = sub.add_parser("evaluate", help="report accuracy from run directories")
    e.add_argument("dirs", nargs="+")
    e.add_argument("--compare", action="store_true", help="first dir is the baseline, second guided")
    e.add_argument("--auc", action="store_true", help="dirs are iterations 1..N")
    e.add_argument("--from-trees", dest="from_trees", action="store_true",
                   help="rebuild outcomes from stored trees")
    e.add_argument("--csv", action="store_true")
    e.set_defaults(func=cmd_evaluate)

    o = sub.add_parser("oracle", help="minimum plan lengths, or generate a verified instance set")
    o.add_argument("--instances")
    o.add_argument("--generate")
    o.set_defaults(func=cmd_oracle)

    rp = sub.add_parser("replay", help="print stored trees")
    rp.add_argument("target", help="a tree JSON file or a run directory")
    rp.set_defaults(func=cmd_replay)

    for sp in (s, r, o):
        sp.add_argument("--out")
    for sp in (s, r):
        sp.add_argument("--backend", choices=BACKENDS)
        sp.add_argument("--fixture", help="mock script JSON")
        sp.add_argument("--backend-config", dest="backend_config", help="BackendConfig JSON file")
        sp.add_argument("--guideline", help="STORE[@VERSION]")
        sp.add_argument("--seed", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RotreeError, OSError, ValueError) as exc:
        report = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        print(json.dumps(report, sort_keys=True), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
