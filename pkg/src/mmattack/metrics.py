"""AQN / ASR metrics, per-target rows, and CSV / JSON / dat emission.

AQN is the mean query count over successful attacks only; with no
successes it is absent and rendered as a dash, matching the empty-row
convention of the result tables. Query accounting is emitted both with
and without the setup phase, since the two conventions differ by the
|D(S_1)|+1 setup cost and both appear in the literature.

Every emitted number is a pure function of the per-target rows, so
recomputing a report from serialized traces reproduces the CSV exactly.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

ABSENT = "-"

ROW_COLUMNS = ("attack", "target_id", "seed", "success",
               "queries_setup", "queries_attack", "iterations", "wall_ms")


def compute_aqn(query_counts, success_flags):
    """Mean of counts where success is true; None when nothing succeeded."""
    if len(query_counts) != len(success_flags):
        raise ConfigError("query_counts and success_flags must have equal length")
    kept = [q for q, s in zip(query_counts, success_flags) if s]
    return float(np.mean(kept)) if kept else None


def compute_asr(success_flags):
    if len(success_flags) == 0:
        raise ConfigError("cannot compute a success rate over zero attempts")
    return float(sum(bool(s) for s in success_flags) / len(success_flags))


def render_value(v):
    """Numbers as repr (round-trip exact), absent as a dash."""
    if v is None:
        return ABSENT
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class TargetRow:
    attack: str
    target_id: int
    seed: int
    success: bool
    queries_setup: int
    queries_attack: int
    iterations: int
    wall_ms: float = 0.0

    @property
    def queries_total(self):
        return self.queries_setup + self.queries_attack

    def to_dict(self):
        return {c: getattr(self, c) for c in ROW_COLUMNS}

    @classmethod
    def from_dict(cls, d):
        return cls(str(d["attack"]), int(d["target_id"]), int(d["seed"]),
                   bool(int(d["success"])), int(d["queries_setup"]),
                   int(d["queries_attack"]), int(d["iterations"]),
                   float(d["wall_ms"]))


@dataclass
class AttackSummary:
    attack: str
    n_targets: int
    n_success: int
    asr: float
    aqn_total: float | None
    aqn_attack_only: float | None

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class MetricsReport:
    rows: list = field(default_factory=list)
    summaries: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "rows": [r.to_dict() for r in self.rows],
            "summaries": [s.to_dict() for s in self.summaries],
            "metadata": self.metadata,
        }


def summarize(rows) -> list:
    """One AttackSummary per attack name, in first-appearance order."""
    order, by_attack = [], {}
    for r in rows:
        if r.attack not in by_attack:
            by_attack[r.attack] = []
            order.append(r.attack)
        by_attack[r.attack].append(r)
    out = []
    for name in order:
        group = by_attack[name]
        flags = [r.success for r in group]
        out.append(AttackSummary(
            attack=name,
            n_targets=len(group),
            n_success=sum(flags),
            asr=compute_asr(flags),
            aqn_total=compute_aqn([r.queries_total for r in group], flags),
            aqn_attack_only=compute_aqn([r.queries_attack for r in group], flags),
        ))
    return out


def build_report(rows, metadata=None) -> MetricsReport:
    return MetricsReport(list(rows), summarize(rows), dict(metadata or {}))


def write_rows_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ROW_COLUMNS)
        for r in rows:
            d = r.to_dict()
            w.writerow([render_value(d[c]) for c in ROW_COLUMNS])


def read_rows_csv(path) -> list:
    with open(path, newline="") as fh:
        return [TargetRow.from_dict(d) for d in csv.DictReader(fh)]


def write_summary_csv(summaries, path):
    cols = ("attack", "n_targets", "n_success", "asr", "aqn_total", "aqn_attack_only")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for s in summaries:
            d = s.to_dict()
            w.writerow([render_value(d[c]) for c in cols])


SWEEP_COLUMNS = ("iteration", "qn1", "qn2", "generated", "asr", "aqn")


def write_sweep_csv(sweep_rows, path):
    """sweep_rows: dicts with SWEEP_COLUMNS keys (aqn may be None)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for row in sweep_rows:
            w.writerow([render_value(row[c]) for c in SWEEP_COLUMNS])


def write_dat(rows_of_dicts, columns, path):
    """Whitespace-separated table with a # header, for gnuplot."""
    with open(path, "w") as fh:
        fh.write("# " + " ".join(columns) + "\n")
        for row in rows_of_dicts:
            fh.write(" ".join(render_value(row[c]) for c in columns) + "\n")


def write_traces_json(traces, path):
    with open(path, "w") as fh:
        json.dump([t.to_dict() for t in traces], fh, sort_keys=True)


def rows_from_trace_dicts(trace_dicts) -> list:
    """Rebuild per-target rows from serialized attack traces (see
    experiments.trace_to_row for the field mapping)."""
    rows = []
    for td in trace_dicts:
        rows.append(TargetRow.from_dict(td["row"]))
    return rows
