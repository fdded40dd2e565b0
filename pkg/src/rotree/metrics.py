"""Evaluation metrics: accuracy tables, pass@n, self-consistency, iteration
AUC, and the bargaining profit / utility / reward formulas."""
from __future__ import annotations

import csv
import io
import json
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .answers import canonical
from .errors import DegenerateRange, EmptyInput, InsufficientSamples, SchemaMismatch, TooFewPoints

OUTCOME_FIELDS = {"instance_id", "method", "correct", "steps_required", "iterations_used", "wall_time"}


@dataclass
class RunOutcome:
    instance_id: str
    method: str
    correct: bool
    steps_required: int | None = None
    iterations_used: int = 1
    wall_time: float = 0.0
    variant: str = "base"
    samples: list = field(default_factory=list)
    plan: list = field(default_factory=list)

    def __post_init__(self):
        if self.method == "mcts" and self.iterations_used < 1:
            raise ValueError("MCTS outcomes need iterations_used >= 1")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "RunOutcome":
        missing = OUTCOME_FIELDS - set(data)
        if missing:
            raise SchemaMismatch(f"outcome record missing {sorted(missing)}")
        known = cls.__dataclass_fields__
        return cls(**{k: v for k, v in data.items() if k in known})


def write_outcomes(outcomes, path):
    with open(path, "w") as fh:
        for o in outcomes:
            fh.write(json.dumps(o.to_json(), sort_keys=True) + "\n")


def read_outcomes(path) -> list:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            try:
                out.append(RunOutcome.from_json(json.loads(line)))
            except (ValueError, TypeError) as exc:
                raise SchemaMismatch(f"{path}: {exc}") from exc
    return out


def accuracy(outcomes) -> float:
    if not outcomes:
        raise EmptyInput("no outcomes")
    return sum(bool(o.correct) for o in outcomes) / len(outcomes)


def pass_at_n(samples, n) -> bool:
    """True iff any of the first ``n`` samples is correct."""
    if n < 1 or len(samples) < n:
        raise InsufficientSamples(f"need {n} samples, have {len(samples)}")
    return any(samples[:n])


def self_consistency_vote(answers, n=None):
    """Most frequent answer among the first ``n``; numbers compare by value and
    ties go to the earliest. Returns the first occurrence's spelling."""
    pool = list(answers if n is None else answers[:n])
    if not pool:
        raise EmptyInput("no answers to vote on")
    keys = [canonical(str(a)) for a in pool]
    counts = Counter(keys)
    top = max(counts.values())
    for answer, key in zip(pool, keys):
        if counts[key] == top:
            return answer


@dataclass
class IterationCurve:
    points: dict  # iteration -> accuracy

    def __post_init__(self):
        its = sorted(self.points)
        if its and its != list(range(its[0], its[0] + len(its))):
            raise ValueError("iterations must form a contiguous range")
        for v in self.points.values():
            if not 0.0 <= v <= 1.0:
                raise ValueError("accuracies must lie in [0, 1]")

    @classmethod
    def from_list(cls, values, start=1):
        return cls({start + i: v for i, v in enumerate(values)})

    def to_json(self):
        return {str(k): v for k, v in sorted(self.points.items())}


def auc(curve: IterationCurve) -> float:
    """Trapezoidal area over the iteration range divided by its width."""
    its = sorted(curve.points)
    if len(its) < 2:
        raise TooFewPoints("AUC needs at least two iterations")
    ys = [curve.points[i] for i in its]
    area = sum((a + b) / 2.0 for a, b in zip(ys, ys[1:]))
    return area / (len(ys) - 1)


@dataclass(frozen=True)
class DealRecord:
    success: bool
    price: float | None
    seller_target: float
    buyer_target: float

    def __post_init__(self):
        if self.seller_target == self.buyer_target:
            raise DegenerateRange("seller and buyer targets coincide")
        if self.success and self.price is None:
            raise ValueError("a successful deal needs a price")


def profit(p, p_s, p_b) -> float:
    """Seller profit scaled to -1 at the buyer's target and +1 at the seller's."""
    if p_s == p_b:
        raise DegenerateRange("seller and buyer targets coincide")
    # grouped so both endpoints are exact in floating point
    return ((p - p_s) + (p - p_b)) / (p_s - p_b)


def _deal_profit(d):
    return profit(d.price, d.seller_target, d.buyer_target)


def utility(deals) -> float:
    """Mean profit over all deals, failures counting 0."""
    if not deals:
        raise EmptyInput("no deals")
    return sum(_deal_profit(d) if d.success else 0.0 for d in deals) / len(deals)


def agreement_rate(deals) -> float:
    if not deals:
        raise EmptyInput("no deals")
    return sum(d.success for d in deals) / len(deals)


def mean_profit(deals):
    """Mean profit of successful deals; ``None`` when none succeeded."""
    won = [_deal_profit(d) for d in deals if d.success]
    return sum(won) / len(won) if won else None


ENCOURAGE_PROFIT = 0.0
ENCOURAGE_AGREEMENT = 1.0


def reward(deal: DealRecord, l_penalty=ENCOURAGE_PROFIT) -> float:
    """Profit on success, ``-l_penalty`` on failure."""
    if deal.success:
        return _deal_profit(deal)
    return -float(l_penalty)


def relative_improvement(base, guided):
    if base == 0:
        return 0.0 if guided == 0 else None
    return (guided - base) / base


def format_change(rel):
    return "n/a" if rel is None else f"{rel * 100:+.1f}%"


def _pct(x):
    return "-" if x is None else f"{x * 100:.1f}%"


@dataclass
class ReportRow:
    method: str
    steps: int | None
    base: float | None
    guided: float | None = None
    n_base: int = 0
    n_guided: int = 0
    pass_at: float | None = None


@dataclass
class Report:
    rows: list
    compare: bool
    auc_rows: list = field(default_factory=list)

    def to_text(self) -> str:
        out = []
        if self.rows:
            if self.compare:
                header = ["method", "steps", "base", "guided", "change", "n"]
            else:
                header = ["method", "steps", "accuracy", "n"]
            if any(r.pass_at is not None for r in self.rows):
                header.append("pass@n")
            table = [header]
            for r in self.rows:
                steps = "all" if r.steps is None else str(r.steps)
                if self.compare:
                    rel = None if r.base is None or r.guided is None else relative_improvement(r.base, r.guided)
                    change = "-" if r.base is None or r.guided is None else format_change(rel)
                    row = [r.method, steps, _pct(r.base), _pct(r.guided), change, f"{r.n_base}/{r.n_guided}"]
                else:
                    row = [r.method, steps, _pct(r.base), str(r.n_base)]
                if "pass@n" in header:
                    row.append(_pct(r.pass_at))
                table.append(row)
            out.append(_align(table))
        if self.auc_rows:
            table = [["method", "variant", "auc", "iterations"]]
            for method, variant, value, n in self.auc_rows:
                table.append([method, variant, f"{value * 100:.1f}", str(n)])
            out.append(_align(table))
        return "\n\n".join(out) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "steps", "base", "guided", "n_base", "n_guided", "pass_at_n"])
        for r in self.rows:
            w.writerow([r.method, "" if r.steps is None else r.steps,
                        "" if r.base is None else f"{r.base:.6f}",
                        "" if r.guided is None else f"{r.guided:.6f}",
                        r.n_base, r.n_guided, "" if r.pass_at is None else f"{r.pass_at:.6f}"])
        for method, variant, value, n in self.auc_rows:
            w.writerow([f"auc:{method}", variant, f"{value:.6f}", "", n, "", ""])
        return buf.getvalue()


def _align(table):
    widths = [max(len(row[i]) for row in table) for i in range(len(table[0]))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table)


def _pass_rate(group):
    sampled = [o for o in group if o.samples]
    if not sampled:
        return None
    return sum(any(o.samples) for o in sampled) / len(sampled)


def step_partitioned_report(outcomes, guided=None) -> Report:
    """Accuracy per method and step bucket; with ``guided`` outcomes, adds
    the guided column and the relative change."""
    def buckets(items):
        table = defaultdict(list)
        for o in items:
            table[(o.method, o.steps_required)].append(o)
        return table

    base = buckets(outcomes)
    other = buckets(guided or [])
    keys = sorted(set(base) | set(other), key=lambda k: (k[0], -1 if k[1] is None else k[1]))
    rows = []
    for key in keys:
        b, g = base.get(key, []), other.get(key, [])
        rows.append(ReportRow(
            key[0], key[1],
            accuracy(b) if b else None,
            accuracy(g) if g else None,
            len(b), len(g),
            _pass_rate(g if guided is not None and g else b),
        ))
    return Report(rows, compare=guided is not None)


def auc_table(per_iteration) -> list:
    """``per_iteration`` is a list (iteration order) of outcome lists; returns
    ``(method, variant, auc, n_iterations)`` rows."""
    acc = defaultdict(dict)
    for i, outs in enumerate(per_iteration, 1):
        groups = defaultdict(list)
        for o in outs:
            groups[(o.method, o.variant)].append(o)
        for key, group in groups.items():
            acc[key][i] = accuracy(group)
    return [(m, v, auc(IterationCurve(points)), len(points)) for (m, v), points in sorted(acc.items())]
