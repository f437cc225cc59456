"""Result aggregation: machine-readable JSON Lines plus an aligned table."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .metrics import MetricResult


@dataclass
class ResultStore:
    """Per (case, task, strategy) raw scores in [0, 1]."""

    rows: list[dict] = field(default_factory=list)

    def add(self, case_id: str, strategy: str, result: MetricResult) -> None:
        self.rows.append(
            {
                "case_id": case_id,
                "strategy": strategy,
                "task": result.task,
                "metric": result.kind.value,
                "score": result.score,
                "diagnostics": _jsonable(result.diagnostics),
            }
        )

    def add_failure(self, case_id: str, strategy: str, task: str, reason: str) -> None:
        self.rows.append(
            {
                "case_id": case_id,
                "strategy": strategy,
                "task": task,
                "metric": None,
                "score": None,
                "failed": reason,
            }
        )

    def write_jsonl(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for row in sorted(
                self.rows,
                key=lambda r: (r["case_id"], r["task"], r["strategy"]),
            ):
                fh.write(json.dumps(row, sort_keys=True) + "\n")

    def mean_table(self) -> dict[tuple[str, str], float | None]:
        """Per (task, strategy) macro-average over cases; None if all failed."""
        buckets: dict[tuple[str, str], list[float]] = {}
        seen: set[tuple[str, str]] = set()
        for row in self.rows:
            key = (row["task"], row["strategy"])
            seen.add(key)
            if row["score"] is not None:
                buckets.setdefault(key, []).append(row["score"])
        return {
            key: (sum(v) / len(v) if (v := buckets.get(key)) else None)
            for key in seen
        }

    def render_table(self) -> str:
        """Aligned text table, scores x100 with one decimal."""
        table = self.mean_table()
        tasks = sorted({task for task, _ in table})
        strategies = sorted({strategy for _, strategy in table})
        header = ["# mean per-case scores x100 (macro-average across cases)"]
        width = max((len(t) for t in tasks), default=4) + 2
        cols = "".join(f"{s:>10}" for s in strategies)
        lines = header + [f"{'task':<{width}}{cols}"]
        for task in tasks:
            cells = []
            for strategy in strategies:
                value = table.get((task, strategy))
                cells.append(f"{'FAILED':>10}" if value is None else f"{value * 100:>10.1f}")
            lines.append(f"{task:<{width}}{''.join(cells)}")
        return "\n".join(lines) + "\n"


def _jsonable(obj):
    try:
        json.dumps(obj)
        return obj
    except (TypeError, ValueError):
        return repr(obj)
