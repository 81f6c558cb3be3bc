"""Speaker-level bootstrap confidence intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import EvalSet
from .errors import DegenerateDataError
from .kernels import gather_speakers

DEFAULT_REPLICATES = 1000
DEFAULT_CONFIDENCE = 0.95


@dataclass(frozen=True)
class BootstrapEstimate:
    """Point value with a percentile interval.

    The interval need not contain ``point`` for skewed replicate
    distributions; ``ci_low <= ci_high`` always holds. ``b_effective`` counts
    the replicates on which the metric was defined.
    """

    point: float
    ci_low: float
    ci_high: float
    replicates: int
    confidence: float
    seed: int
    b_effective: int

    @property
    def dropped(self) -> int:
        return self.replicates - self.b_effective


class SpeakerIndex:
    """Speakers (sorted by id) and the sample indices each one owns."""

    def __init__(self, ev: EvalSet):
        speakers, codes = np.unique(ev.speaker_id.astype(str), return_inverse=True)
        self.speakers = speakers
        self.members = np.argsort(codes, kind="stable").astype(np.int64)
        counts = np.bincount(codes, minlength=speakers.size)
        self.offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    def __len__(self) -> int:
        return self.speakers.size

    def draw(self, seed: int, replicate: int) -> np.ndarray:
        """Sample indices of one replicate; substream keyed on (seed, replicate)."""
        rng = np.random.default_rng([seed, replicate])
        draws = rng.integers(0, len(self), size=len(self))
        return gather_speakers(self.offsets, self.members, draws)


def percentile_interval(values, confidence: float) -> tuple[float, float]:
    """Linear interpolation between order statistics (numpy's default rule)."""
    lo, hi = np.quantile(np.asarray(values, dtype=float), [(1 - confidence) / 2, (1 + confidence) / 2])
    return float(lo), float(hi)


def _defined(x) -> bool:
    return x is not None and not math.isnan(x)


def _check(replicates: int, confidence: float):
    if replicates < 100:
        raise ValueError("at least 100 bootstrap replicates required")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must be in (0, 1)")


def bootstrap_metric(
    ev: EvalSet,
    metric: Callable[[EvalSet], float],
    replicates: int = DEFAULT_REPLICATES,
    confidence: float = DEFAULT_CONFIDENCE,
    seed: int = 42,
) -> BootstrapEstimate:
    """Percentile bootstrap of ``metric`` resampling whole speakers.

    Replicates on which ``metric`` is undefined (returns ``nan`` or raises
    :class:`DegenerateDataError`) are dropped and counted.
    """
    _check(replicates, confidence)
    point = float(metric(ev))
    if not _defined(point):
        raise DegenerateDataError("metric undefined on the original set")
    index = SpeakerIndex(ev)
    values = []
    for b in range(replicates):
        try:
            v = float(metric(ev.take(index.draw(seed, b))))
        except DegenerateDataError:
            continue
        if _defined(v):
            values.append(v)
    if not values:
        raise DegenerateDataError("metric undefined on every bootstrap replicate")
    lo, hi = percentile_interval(values, confidence)
    return BootstrapEstimate(point, lo, hi, replicates, confidence, seed, len(values))


def bootstrap_report(
    ev: EvalSet,
    cost=None,
    replicates: int = DEFAULT_REPLICATES,
    confidence: float = DEFAULT_CONFIDENCE,
    seed: int = 42,
):
    """:func:`~voxfair.metrics.summarize` with an interval on every cell.

    All cells share the same speaker resamples, so intervals are paired.
    """
    from .metrics import METRICS, summarize

    _check(replicates, confidence)
    report = summarize(ev, cost=cost)
    index = SpeakerIndex(ev)
    cols = report.columns
    samples = {m: {c: [] for c in cols} for m in METRICS}
    for b in range(replicates):
        rep = summarize(ev.take(index.draw(seed, b)), cost=report.cost)
        for m in METRICS:
            group_vals = [rep.values[m].get(g, float("nan")) for g in report.groups]
            row = dict(zip(report.groups, group_vals))
            row["avg"] = float(np.mean(group_vals))
            row["pooled"] = rep.values[m]["pooled"]
            for c in cols:
                if _defined(row[c]):
                    samples[m][c].append(row[c])
    intervals = {}
    for m in METRICS:
        intervals[m] = {}
        for c in cols:
            vals = samples[m][c]
            if vals:
                lo, hi = percentile_interval(vals, confidence)
            else:
                lo = hi = float("nan")
            intervals[m][c] = BootstrapEstimate(
                report.values[m][c], lo, hi, replicates, confidence, seed, len(vals)
            )
    report.intervals = intervals
    return report
