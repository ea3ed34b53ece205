"""Run records: per-iteration traces with CSV and JSON serialization.

The CSV trace is the reproducibility artifact: identical configs must give
byte-identical files, so the elapsed_s column is written as a 0.0
placeholder by default and real wall-clock timings live in the JSON
document (which also carries the config echo, environment stamp, events,
and optional regret trace).
"""

from __future__ import annotations

import datetime
import platform
from dataclasses import dataclass, field

import numpy as np

from .combinatorics.spaces import Point

CSV_HEADER = "iteration,value,best_so_far,elapsed_s,dict_seed"

# dict_seed for rows not produced by a model step (init, random baseline,
# fit-failure fallback)
NO_DICTIONARY_SEED = -1


@dataclass(frozen=True)
class IterationRow:
    iteration: int
    point: Point
    value: float
    best_so_far: float
    elapsed_s: float
    dict_seed: int
    beta: float | None = None


@dataclass(frozen=True)
class RunRecord:
    """Complete trace of one optimization run (internal minimization units)."""

    problem_name: str
    rows: tuple[IterationRow, ...]
    config_echo: dict
    metadata: dict = field(default_factory=dict)
    events: tuple[str, ...] = ()
    regret: tuple[float, ...] | None = None

    @property
    def best_row(self) -> IterationRow:
        best = self.rows[0]
        for row in self.rows[1:]:
            if row.value < best.value:
                best = row
        return best

    @property
    def best_value(self) -> float:
        return self.best_row.value

    @property
    def best_point(self) -> Point:
        return self.best_row.point

    @property
    def total_elapsed_s(self) -> float:
        return float(sum(row.elapsed_s for row in self.rows))

    @property
    def cumulative_regret(self) -> float | None:
        if self.regret is None:
            return None
        return float(sum(self.regret))

    def best_objective(self) -> float:
        """Best value in the problem's native direction (de-negated)."""
        if self.metadata.get("direction") == "maximize":
            return -self.best_value
        return self.best_value

    def validate(self) -> None:
        """Internal consistency: monotone best-so-far, 1-based iterations."""
        best = np.inf
        for i, row in enumerate(self.rows, start=1):
            if row.iteration != i:
                raise ValueError(f"row {i} carries iteration {row.iteration}")
            best = min(best, row.value)
            if row.best_so_far != best:
                raise ValueError(
                    f"row {i}: best_so_far {row.best_so_far} != running min {best}"
                )
        if self.regret is not None and len(self.regret) != len(self.rows):
            raise ValueError("regret trace length differs from row count")

    def to_csv(self, deterministic_elapsed: bool = True) -> str:
        lines = [CSV_HEADER]
        for row in self.rows:
            elapsed = 0.0 if deterministic_elapsed else row.elapsed_s
            lines.append(
                f"{row.iteration},{row.value!r},{row.best_so_far!r},"
                f"{elapsed!r},{row.dict_seed}"
            )
        return "\n".join(lines) + "\n"

    def to_json_document(self) -> dict:
        doc = {
            "schema_version": 1,
            "problem": self.problem_name,
            "config": self.config_echo,
            "metadata": self.metadata,
            "summary": {
                "n_evaluations": len(self.rows),
                "best_value": self.best_value,
                "best_objective": self.best_objective(),
                "best_iteration": self.best_row.iteration,
                "best_point": _point_to_json(self.best_point),
                "total_elapsed_s": self.total_elapsed_s,
            },
            "environment": environment_stamp(),
            "events": list(self.events),
            "rows": [
                {
                    "iteration": row.iteration,
                    "value": row.value,
                    "best_so_far": row.best_so_far,
                    "elapsed_s": row.elapsed_s,
                    "dict_seed": row.dict_seed,
                    **({"beta": row.beta} if row.beta is not None else {}),
                    "point": _point_to_json(row.point),
                }
                for row in self.rows
            ],
        }
        if self.regret is not None:
            doc["regret"] = {
                "per_iteration": list(self.regret),
                "cumulative": self.cumulative_regret,
            }
        return doc


def _point_to_json(point: Point) -> dict:
    doc = {"discrete": list(point.discrete)}
    if point.continuous is not None:
        doc["continuous"] = list(point.continuous)
    return doc


def environment_stamp() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "platform": platform.platform(),
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def make_run_record(problem, rows, config_echo: dict,
                    events: tuple[str, ...] = ()) -> RunRecord:
    """Assemble a record, deriving the regret trace when the optimum is known."""
    regret = None
    if problem.optimum is not None:
        regret = tuple(row.value - problem.optimum for row in rows)
    metadata = dict(problem.metadata)
    record = RunRecord(
        problem_name=problem.name,
        rows=tuple(rows),
        config_echo=dict(config_echo),
        metadata=metadata,
        events=tuple(events),
        regret=regret,
    )
    record.validate()
    return record
