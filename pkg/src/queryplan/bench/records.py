"""Run records, summaries and histograms with fixed, diff-friendly layouts."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

# wall_time is deliberately absent so replayed suites produce identical CSV bytes
RECORD_COLUMNS = (
    "problem_id", "planner_id", "seed", "budget", "success", "optimal", "wmq_used", "plan_length",
    "optimal_length", "llm_calls", "prompt_tokens", "completion_tokens", "malformed_actions", "failure_reason",
)
SUMMARY_COLUMNS = (
    "planner_id", "runs", "successes", "success_rate", "success_se", "mean_wmq", "mean_wmq_success",
    "optimal_rate", "mean_llm_calls", "mean_prompt_tokens", "mean_completion_tokens", "mean_malformed_actions",
    "failures_at_cap",
)
HISTOGRAM_COLUMNS = ("planner_id", "wmq", "count")


@dataclass
class RunRecord:
    problem_id: str
    planner_id: str
    success: bool
    wmq_used: int
    budget: int | None = None
    seed: int = 0
    optimal: bool | None = None
    plan_length: int | None = None
    optimal_length: int | None = None
    llm_calls: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    malformed_actions: int = 0
    wall_time: float = 0.0
    failure_reason: str | None = None
    plan: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.success and self.plan_length is None:
            raise ValueError("a successful run needs a plan length")
        if self.optimal is not None and self.optimal_length is None:
            raise ValueError("optimality needs an optimal length")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def _csv(rows: Iterable[Sequence], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def records_csv(records: Sequence[RunRecord]) -> str:
    return _csv(([getattr(r, c) for c in RECORD_COLUMNS] for r in records), RECORD_COLUMNS)


def read_records(path: str | Path) -> list[RunRecord]:
    with Path(path).open(encoding="utf-8") as fh:
        return [RunRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def capped_wmq(r: RunRecord) -> int:
    """Failures count at the budget cap when there is one."""
    if not r.success and r.budget:
        return r.budget
    return r.wmq_used


def _by_planner(records: Sequence[RunRecord]) -> dict[str, list[RunRecord]]:
    groups: dict[str, list[RunRecord]] = defaultdict(list)
    for r in records:
        groups[r.planner_id].append(r)
    return dict(groups)


def summarize(records: Sequence[RunRecord]) -> list[dict]:
    """Per-planner aggregates; success error is the normal-approximation binomial SE."""
    rows = []
    for pid, rs in _by_planner(records).items():
        n = len(rs)
        wins = [r for r in rs if r.success]
        p = len(wins) / n
        mean = lambda xs: sum(xs) / len(xs) if xs else None  # noqa: E731
        rows.append({
            "planner_id": pid,
            "runs": n,
            "successes": len(wins),
            "success_rate": p,
            "success_se": math.sqrt(p * (1 - p) / n),
            "mean_wmq": mean([capped_wmq(r) for r in rs]),
            "mean_wmq_success": mean([r.wmq_used for r in wins]),
            "optimal_rate": sum(1 for r in rs if r.optimal) / n,
            "mean_llm_calls": mean([r.llm_calls for r in rs]),
            "mean_prompt_tokens": mean([r.prompt_tokens for r in rs]),
            "mean_completion_tokens": mean([r.completion_tokens for r in rs]),
            "mean_malformed_actions": mean([r.malformed_actions for r in rs]),
            "failures_at_cap": n - len(wins),
        })
    return rows


def summary_csv(records: Sequence[RunRecord]) -> str:
    return _csv(([row[c] for c in SUMMARY_COLUMNS] for row in summarize(records)), SUMMARY_COLUMNS)


def histogram(records: Sequence[RunRecord]) -> dict[str, list[int]]:
    """Per-planner counts over WMQ bins 0..cap; every failure lands in the cap bin.

    Bin 0 holds runs whose start state already satisfied the goal. Without a
    budget the cap is the largest WMQ observed for that planner.
    """
    out = {}
    for pid, rs in _by_planner(records).items():
        budgets = {r.budget for r in rs}
        cap = max(budgets) if None not in budgets else max(r.wmq_used for r in rs)
        counts = [0] * (cap + 1)
        for r in rs:
            counts[cap if not r.success else min(r.wmq_used, cap)] += 1
        out[pid] = counts
    return out


def histogram_csv(records: Sequence[RunRecord]) -> str:
    rows = [(pid, w, c) for pid, counts in histogram(records).items() for w, c in enumerate(counts)]
    return _csv(rows, HISTOGRAM_COLUMNS)
