"""Cost-sensitive decision metrics and cross-entropy for binary posteriors.

Conventions: the positive class is *disordered* (label 1); logs are natural;
posteriors are clamped to ``[EPS, 1 - EPS]`` before any log is taken.
Quantities that are undefined for the data at hand (single-class sets, zero
prior entropy) are returned as ``nan`` (:data:`UNDEFINED`) and propagate
through averages; they are never dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import ClassLabel, EvalSet, Priors, empirical_priors
from .errors import DegenerateDataError
from .kernels import cell_counts

EPS = 1e-6
UNDEFINED = float("nan")

METRICS = ("ACC", "UAR", "NTER", "NBER", "NEC", "NXE")


def is_undefined(x) -> bool:
    return x is None or (isinstance(x, float) and math.isnan(x))


# --------------------------------------------------------------------------
# Score transforms
# --------------------------------------------------------------------------

def log_odds(p):
    """``ln(p / (1 - p))`` after clamping ``p`` to ``[EPS, 1 - EPS]``."""
    q = np.clip(np.asarray(p, dtype=np.float64), EPS, 1.0 - EPS)
    out = np.log(q) - np.log1p(-q)
    return float(out) if out.ndim == 0 else out


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.exp(-np.logaddexp(0.0, -z))
    return float(out) if out.ndim == 0 else out


def llr(p, priors: Priors):
    """Posterior log-odds minus the prior log-odds of *disordered*.

    Zero means the sample moves the prior neither way. The prior log-odds is
    computed through :func:`log_odds` so a posterior equal to the prior maps
    to exactly 0.
    """
    if priors.p_d <= 0.0 or priors.p_h <= 0.0:
        raise DegenerateDataError("llr needs both priors strictly positive")
    return log_odds(p) - log_odds(priors.p_d)


# --------------------------------------------------------------------------
# Costs and Bayes decisions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CostMatrix:
    """Binary error costs; correct decisions cost zero."""

    c_fp: float = 1.0
    c_fn: float = 3.0

    def __post_init__(self):
        if not (self.c_fp > 0 and self.c_fn > 0) or not (math.isfinite(self.c_fp) and math.isfinite(self.c_fn)):
            raise ValueError(f"costs must be finite and positive, got ({self.c_fp}, {self.c_fn})")

    @classmethod
    def unit(cls) -> "CostMatrix":
        return cls(1.0, 1.0)

    @classmethod
    def balanced(cls, priors: Priors) -> "CostMatrix":
        """Costs under which the expected cost is the balanced error rate."""
        if priors.p_h <= 0 or priors.p_d <= 0:
            raise DegenerateDataError("balanced costs need both classes present")
        return cls(1.0 / (2.0 * priors.p_h), 1.0 / (2.0 * priors.p_d))

    @property
    def nec_name(self) -> str:
        if self.c_fp == 1.0 and float(self.c_fn).is_integer():
            return f"NEC{int(self.c_fn)}"
        return f"NEC({self.c_fp:g},{self.c_fn:g})"


def bayes_threshold(cost: CostMatrix) -> float:
    return cost.c_fp / (cost.c_fp + cost.c_fn)


def decide(p, threshold: float):
    """1 (disordered) where ``p >= threshold``; ties go to the positive class."""
    p = np.asarray(p, dtype=np.float64)
    out = (p >= threshold).astype(np.int8)
    if out.ndim == 0:
        return ClassLabel(int(out))
    return out


# --------------------------------------------------------------------------
# Rates and expected cost
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionRates:
    r_fp: float
    r_fn: float
    n_h: int
    n_d: int
    fp: int = 0
    fn: int = 0

    @classmethod
    def from_counts(cls, counts) -> "ConfusionRates":
        """From a ``counts[label, decision]`` 2x2 table."""
        n_h = int(counts[0, 0] + counts[0, 1])
        n_d = int(counts[1, 0] + counts[1, 1])
        fp = int(counts[0, 1])
        fn = int(counts[1, 0])
        return cls(
            fp / n_h if n_h else UNDEFINED,
            fn / n_d if n_d else UNDEFINED,
            n_h, n_d, fp, fn,
        )

    @property
    def n(self) -> int:
        return self.n_h + self.n_d


def _labels(x) -> np.ndarray:
    return x.label if isinstance(x, EvalSet) else np.asarray(x)


def confusion_rates(ev, decisions) -> ConfusionRates:
    labels = _labels(ev)
    decisions = np.asarray(decisions)
    if decisions.shape != labels.shape:
        raise ValueError("decisions misaligned with samples")
    counts = cell_counts(np.zeros(labels.shape[0], dtype=np.int64), labels, decisions, 1)[0]
    return ConfusionRates.from_counts(counts)


def expected_cost(rates: ConfusionRates, priors: Priors, cost: CostMatrix) -> float:
    """``c_fn * P_d * R_fn + c_fp * P_h * R_fp``."""
    total = 0.0
    for prior, rate, c, name in (
        (priors.p_d, rates.r_fn, cost.c_fn, "R_fn"),
        (priors.p_h, rates.r_fp, cost.c_fp, "R_fp"),
    ):
        if prior > 0:
            if is_undefined(rate):
                raise DegenerateDataError(f"{name} undefined but its class prior is {prior}")
            total += c * prior * rate
    return total


def naive_ec(priors: Priors, cost: CostMatrix) -> float:
    """Expected cost of the best input-blind constant decision."""
    return min(cost.c_fn * priors.p_d, cost.c_fp * priors.p_h)


def normalized_ec(ec: float, priors: Priors, cost: CostMatrix) -> float:
    ref = naive_ec(priors, cost)
    if ref <= 0.0:
        return UNDEFINED
    return ec / ref


def standard_metrics(ev, decisions) -> dict:
    """ACC, TER, NTER, UAR, BER and NBER of a set of hard decisions."""
    rates = confusion_rates(ev, decisions)
    return _standard_from_rates(rates)


def _standard_from_rates(rates: ConfusionRates) -> dict:
    n = rates.n
    if n == 0:
        raise DegenerateDataError("no samples")
    ter = (rates.fp + rates.fn) / n
    p_d = rates.n_d / n
    p_h = rates.n_h / n
    m = min(p_h, p_d)
    if rates.n_h and rates.n_d:
        ber = 0.5 * rates.r_fp + 0.5 * rates.r_fn
        uar = 1.0 - ber
        nber = 2.0 * ber
    else:
        ber = uar = nber = UNDEFINED
    return {
        "acc": 1.0 - ter,
        "ter": ter,
        "nter": ter / m if m > 0 else UNDEFINED,
        "uar": uar,
        "ber": ber,
        "nber": nber,
    }


# --------------------------------------------------------------------------
# Cross-entropy
# --------------------------------------------------------------------------

def cross_entropy(ev, posteriors=None) -> float:
    """Mean negative log posterior of the true class, in nats."""
    labels = _labels(ev)
    if posteriors is None:
        if not isinstance(ev, EvalSet):
            raise TypeError("posteriors required when passing bare labels")
        posteriors = ev.posterior
    p = np.clip(np.asarray(posteriors, dtype=np.float64), EPS, 1.0 - EPS)
    if p.shape != labels.shape:
        raise ValueError("posteriors misaligned with samples")
    if p.shape[0] == 0:
        raise DegenerateDataError("cross-entropy of an empty set")
    q = np.where(labels == 1, p, 1.0 - p)
    return float(-np.mean(np.log(q)))


def prior_entropy(priors: Priors) -> float:
    return -sum(p * math.log(p) for p in (priors.p_h, priors.p_d) if p > 0)


def normalized_xe(xe: float, priors: Priors) -> float:
    h = prior_entropy(priors)
    if h <= 0.0:
        return UNDEFINED
    return xe / h


# --------------------------------------------------------------------------
# Group summary
# --------------------------------------------------------------------------

def _cell(labels: np.ndarray, post: np.ndarray, cost: CostMatrix, uar_threshold: float) -> tuple[dict, ConfusionRates]:
    n = labels.shape[0]
    priors = empirical_priors(labels)
    zeros = np.zeros(n, dtype=np.int64)

    acc_rates = ConfusionRates.from_counts(cell_counts(zeros, labels, decide(post, 0.5), 1)[0])
    std = _standard_from_rates(acc_rates)

    if 0.0 < priors.p_d < 1.0 and not math.isnan(uar_threshold):
        bal = ConfusionRates.from_counts(cell_counts(zeros, labels, decide(post, uar_threshold), 1)[0])
        bal_std = _standard_from_rates(bal)
        uar, nber = bal_std["uar"], bal_std["nber"]
    else:
        uar = nber = UNDEFINED

    nec_rates = ConfusionRates.from_counts(
        cell_counts(zeros, labels, decide(post, bayes_threshold(cost)), 1)[0]
    )
    nec = normalized_ec(expected_cost(nec_rates, priors, cost), priors, cost)
    nxe = normalized_xe(cross_entropy(labels, post), priors)
    values = {"ACC": std["acc"], "UAR": uar, "NTER": std["nter"], "NBER": nber, "NEC": nec, "NXE": nxe}
    return values, nec_rates


def summarize(ev: EvalSet, posteriors=None, cost: Optional[CostMatrix] = None):
    """Per-group, averaged and pooled metrics (see :class:`MetricReport`).

    Every metric takes Bayes decisions for its own costs and is normalised
    with the priors of the subset being scored. ACC/NTER decide at 0.5 and
    NEC at ``bayes_threshold(cost)``. UAR/NBER decide at the balanced-cost
    threshold of the whole evaluation set (its disordered prior), one
    threshold shared by every column. The average column is the unweighted
    mean over the groups present, in canonical order.
    """
    from .report import MetricReport

    cost = cost or CostMatrix()
    post = ev.posterior if posteriors is None else np.asarray(posteriors, dtype=np.float64)
    if post.shape != ev.label.shape:
        raise ValueError("posteriors misaligned with samples")
    if len(ev) == 0:
        raise DegenerateDataError("cannot summarize an empty set")

    pooled_priors = empirical_priors(ev.label)
    uar_thr = pooled_priors.p_d if 0.0 < pooled_priors.p_d < 1.0 else UNDEFINED
    groups = ev.groups_present()
    values: dict[str, dict[str, float]] = {m: {} for m in METRICS}
    rates: dict[str, ConfusionRates] = {}
    priors: dict[str, Priors] = {}
    for g in groups:
        mask = ev.group == g
        v, r = _cell(ev.label[mask], post[mask], cost, uar_thr)
        for m in METRICS:
            values[m][g.name] = v[m]
        rates[g.name] = r
        priors[g.name] = empirical_priors(ev.label[mask])
    v, r = _cell(ev.label, post, cost, uar_thr)
    for m in METRICS:
        values[m]["avg"] = float(np.mean([values[m][g.name] for g in groups]))
        values[m]["pooled"] = v[m]
    rates["pooled"] = r
    priors["pooled"] = pooled_priors
    return MetricReport(
        groups=[g.name for g in groups],
        cost=cost,
        values=values,
        rates=rates,
        priors=priors,
    )
