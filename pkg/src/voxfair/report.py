"""MetricReport container and its JSON / plain-text renderings."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .data import Priors
from .metrics import METRICS, ConfusionRates, CostMatrix, bayes_threshold


def _num(x):
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) else x


def _unnum(x):
    return float("nan") if x is None else float(x)


@dataclass
class MetricReport:
    """Metric values per group, unweighted group average and pooled set.

    ``values[metric][column]`` holds floats (``nan`` = undefined); columns are
    the group names followed by ``avg`` and ``pooled``. ``intervals`` mirrors
    ``values`` with :class:`~voxfair.resampling.BootstrapEstimate` cells when
    bootstrapping was requested.
    """

    groups: list
    cost: CostMatrix
    values: dict
    rates: dict
    priors: dict
    intervals: Optional[dict] = None
    provenance: dict = field(default_factory=dict)

    @property
    def columns(self) -> list:
        return list(self.groups) + ["avg", "pooled"]

    def metric_names(self) -> list:
        return [self.cost.nec_name if m == "NEC" else m for m in METRICS]

    def get(self, metric: str, column: str) -> float:
        key = "NEC" if metric.startswith("NEC") else metric
        return self.values[key][column]

    # --- JSON -------------------------------------------------------------

    def to_dict(self) -> dict:
        cells = {}
        for m, name in zip(METRICS, self.metric_names()):
            row = {}
            for c in self.columns:
                v = _num(self.values[m][c])
                if self.intervals is not None and c in self.intervals.get(m, {}):
                    est = self.intervals[m][c]
                    row[c] = {
                        "value": v,
                        "ci_low": _num(est.ci_low),
                        "ci_high": _num(est.ci_high),
                        "b_effective": est.b_effective,
                    }
                else:
                    row[c] = v
            cells[name] = row
        counts = {}
        for c, pr in self.priors.items():
            r = self.rates[c]
            counts[c] = {"n": r.n, "n_h": r.n_h, "n_d": r.n_d, "p_h": pr.p_h, "p_d": pr.p_d}
        rates = {
            c: {"r_fp": _num(r.r_fp), "r_fn": _num(r.r_fn), "fp": r.fp, "fn": r.fn}
            for c, r in self.rates.items()
        }
        return {
            "metrics": self.metric_names(),
            "columns": self.columns,
            "cost": {"c_fp": self.cost.c_fp, "c_fn": self.cost.c_fn},
            "decision_threshold": bayes_threshold(self.cost),
            "cells": cells,
            "counts": counts,
            "rates": rates,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        from .resampling import BootstrapEstimate

        cost = CostMatrix(d["cost"]["c_fp"], d["cost"]["c_fn"])
        columns = d["columns"]
        groups = [c for c in columns if c not in ("avg", "pooled")]
        values, intervals = {}, {}
        for m, name in zip(METRICS, d["metrics"]):
            values[m] = {}
            for c in columns:
                cell = d["cells"][name][c]
                if isinstance(cell, dict):
                    values[m][c] = _unnum(cell["value"])
                    intervals.setdefault(m, {})[c] = BootstrapEstimate(
                        point=_unnum(cell["value"]),
                        ci_low=_unnum(cell["ci_low"]),
                        ci_high=_unnum(cell["ci_high"]),
                        replicates=0,
                        confidence=float("nan"),
                        seed=0,
                        b_effective=cell["b_effective"],
                    )
                else:
                    values[m][c] = _unnum(cell)
        rates, priors = {}, {}
        for c, cnt in d["counts"].items():
            r = d["rates"][c]
            rates[c] = ConfusionRates(_unnum(r["r_fp"]), _unnum(r["r_fn"]), cnt["n_h"], cnt["n_d"], r["fp"], r["fn"])
            priors[c] = Priors(cnt["p_h"], cnt["p_d"])
        return cls(groups, cost, values, rates, priors, intervals or None, d.get("provenance", {}))

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        return cls.from_dict(json.loads(text))

    # --- text -------------------------------------------------------------

    def to_text(self, digits: int = 3) -> str:
        """Aligned table: one row per metric, one column per group, avg, pooled."""
        cols = self.columns
        width = max(digits + 4, 7)
        label_w = max(len(n) for n in self.metric_names() + ["count", "prior_h"]) + 2

        def fmt(v):
            return "-" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.{digits}f}"

        lines = ["group".ljust(label_w) + "".join(c.rjust(width) for c in cols)]
        counts = [str(self.rates[c].n) if c in self.rates else "-" for c in cols]
        lines.append("count".ljust(label_w) + "".join(s.rjust(width) for s in counts))
        ph = [fmt(self.priors[c].p_h) if c in self.priors else "-" for c in cols]
        lines.append("prior_h".ljust(label_w) + "".join(s.rjust(width) for s in ph))
        for m, name in zip(METRICS, self.metric_names()):
            lines.append(name.ljust(label_w) + "".join(fmt(self.values[m][c]).rjust(width) for c in cols))
        if self.intervals:
            lines.append("")
            lines.append("bootstrap intervals (low..high)")
            for m, name in zip(METRICS, self.metric_names()):
                row = self.intervals.get(m, {})
                cells = [
                    f"{fmt(row[c].ci_low)}..{fmt(row[c].ci_high)}" if c in row else "-" for c in cols
                ]
                w = 2 * width + 1
                lines.append(name.ljust(label_w) + "".join(s.rjust(w) for s in cells))
        lines.append("")
        lines.append(f"R_FP / R_FN at threshold {bayes_threshold(self.cost):.4g}")
        for c in self.groups + ["pooled"]:
            r = self.rates[c]
            lines.append(f"  {c.ljust(label_w)}R_FP={fmt(r.r_fp)}  R_FN={fmt(r.r_fn)}")
        return "\n".join(lines) + "\n"
