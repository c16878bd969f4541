"""Accumulated trial data with cost accounting and CSV persistence."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..scm.spec import Intervention, SampleRow, ScmError

__all__ = ["Dataset"]

_DO_RE = re.compile(r"^do\((.*)\)$")


def _format_kind(row: SampleRow) -> str:
    if row.kind == "observational":
        return "observational"
    assert row.intervention is not None
    inner = "|".join(f"{t}={v!r}" for t, v in zip(row.intervention.targets, row.intervention.values))
    return f"do({inner})"


def _parse_kind(text: str) -> tuple[str, Intervention | None]:
    if text == "observational":
        return "observational", None
    match = _DO_RE.match(text)
    if match is None:
        raise ScmError(f"unknown row kind {text!r}")
    inner = match.group(1)
    if not inner:
        return "interventional", Intervention()
    targets, values = [], []
    for piece in inner.split("|"):
        name, value = piece.split("=", 1)
        targets.append(name)
        values.append(float(value))
    return "interventional", Intervention(tuple(targets), tuple(values))


@dataclass
class Dataset:
    """Rows, the cost charged for them, and per-kind counters."""

    nodes: tuple[str, ...]
    rows: list[SampleRow] = field(default_factory=list)
    cumulative_cost: float = 0.0
    n_observations: int = 0
    n_interventions: int = 0
    _costs: list[float] = field(default_factory=list)

    def append(self, row: SampleRow, cost: float) -> None:
        if cost < 0:
            raise ScmError("row cost must be nonnegative")
        unknown = set(row.assignment) - set(self.nodes)
        if unknown:
            raise ScmError(f"row mentions unknown nodes {sorted(unknown)}")
        self.rows.append(row)
        self._costs.append(float(cost))
        self.cumulative_cost += float(cost)
        if row.kind == "observational":
            self.n_observations += 1
        else:
            self.n_interventions += 1

    def extend(self, rows: Iterable[SampleRow], cost_each: float) -> None:
        for row in rows:
            self.append(row, cost_each)

    # -- access --------------------------------------------------------------
    def observational_rows(self, columns: Sequence[str] | None = None) -> list[SampleRow]:
        """Observational rows that carry every requested column."""

        out = []
        for row in self.rows:
            if row.kind != "observational":
                continue
            if columns is not None and any(c not in row.assignment for c in columns):
                continue
            out.append(row)
        return out

    def column_matrix(self, columns: Sequence[str]) -> np.ndarray:
        """(n, len(columns)) matrix over observational rows covering them."""

        rows = self.observational_rows(columns)
        if not rows:
            return np.empty((0, len(columns)))
        return np.array([[row.assignment[c] for c in columns] for row in rows])

    def copy(self) -> "Dataset":
        return Dataset(
            nodes=self.nodes,
            rows=list(self.rows),
            cumulative_cost=self.cumulative_cost,
            n_observations=self.n_observations,
            n_interventions=self.n_interventions,
            _costs=list(self._costs),
        )

    def check_invariants(self) -> None:
        if abs(sum(self._costs) - self.cumulative_cost) > 1e-9:
            raise ScmError("cumulative cost out of sync with per-row costs")
        n_obs = sum(1 for r in self.rows if r.kind == "observational")
        if n_obs != self.n_observations or len(self.rows) - n_obs != self.n_interventions:
            raise ScmError("row counters out of sync")

    # -- persistence -----------------------------------------------------------
    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(list(self.nodes) + ["kind", "step", "cost"])
            for row, cost in zip(self.rows, self._costs):
                record = [
                    repr(row.assignment[node]) if node in row.assignment else ""
                    for node in self.nodes
                ]
                record += [_format_kind(row), str(row.step_index), repr(cost)]
                writer.writerow(record)

    @staticmethod
    def from_csv(path: str | Path) -> "Dataset":
        path = Path(path)
        with path.open(newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader)
            if header[-3:] != ["kind", "step", "cost"]:
                raise ScmError(f"unexpected CSV header in {path}")
            nodes = tuple(header[:-3])
            data = Dataset(nodes=nodes)
            for record in reader:
                values, meta = record[: len(nodes)], record[len(nodes) :]
                kind, iv = _parse_kind(meta[0])
                assignment = {
                    node: float(text) for node, text in zip(nodes, values) if text != ""
                }
                data.append(
                    SampleRow(
                        assignment=assignment,
                        kind=kind,
                        step_index=int(meta[1]),
                        intervention=iv,
                    ),
                    cost=float(meta[2]),
                )
        return data
