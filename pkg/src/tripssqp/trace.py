"""Per-iteration run records and their JSON / CSV serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields

__all__ = ["IterationRecord", "RunTrace", "TRACE_SCHEMA_VERSION", "CLASSIFICATIONS"]

TRACE_SCHEMA_VERSION = 1

CLASSIFICATIONS = (
    "gate-fail-unsuccessful",
    "ratio-fail-unsuccessful",
    "reliable",
    "unreliable",
    "accepted",  # fixed-sampling baseline: no acceptance test
)


@dataclass
class IterationRecord:
    k: int
    theta: float
    Delta: float
    eps_bar: float
    mu_bar: float
    batch_g: int
    batch_f: int
    norm_Q_bar: float
    rel_kkt: float
    classification: str
    hessian_norm: float
    step_norm: float
    pred: float = math.nan
    ared: float = math.nan
    gamma_bar: float = math.nan
    merit_turns: int = 0
    flops: int = 0
    grad_evals: int = 0
    samples: int = 0
    charge: float = 0
    norm_Q_true: float = math.nan


@dataclass
class RunTrace:
    records: list = field(default_factory=list)
    status: str = "running"
    budget_kind: str = "iterations"
    budget_used: float = 0
    total_flops: int = 0
    total_grad_evals: int = 0
    total_samples: int = 0
    final_rel_kkt: float = math.nan
    config: dict = field(default_factory=dict)
    message: str = ""

    @property
    def iterations(self):
        return len(self.records)

    def column(self, name):
        return [getattr(r, name) for r in self.records]

    def to_dict(self):
        names = [f.name for f in fields(IterationRecord)]
        return {
            "schema_version": TRACE_SCHEMA_VERSION,
            "config": self.config,
            "status": self.status,
            "message": self.message,
            "totals": {
                "iterations": self.iterations,
                "budget_kind": self.budget_kind,
                "budget_used": self.budget_used,
                "flops": self.total_flops,
                "gradient_evaluations": self.total_grad_evals,
                "samples": self.total_samples,
                "final_rel_kkt": _finite_or_none(self.final_rel_kkt),
            },
            "iterations": {n: [_finite_or_none(v) for v in self.column(n)] for n in names},
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), default=_json_default)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write(f"# tripssqp trace schema v{TRACE_SCHEMA_VERSION}\n")
        names = [f.name for f in fields(IterationRecord)]
        writer = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
        writer.writeheader()
        for r in self.records:
            writer.writerow(asdict(r))
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _finite_or_none(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _json_default(obj):
    try:
        return obj.tolist()
    except AttributeError:
        return str(obj)
