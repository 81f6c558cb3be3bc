"""Affine (Platt) and PAV calibration, calibration loss, cross-validated pipelines."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import EvalSet, FoldAssignment, assign_folds
from .errors import CalibrationError, DegenerateDataError, SchemaError
from .kernels import logistic_fit, pav_blocks
from .metrics import cross_entropy, log_odds, sigmoid

MAX_ITER = 500
GRAD_TOL = 1e-9


class CalibrationScope(str, enum.Enum):
    GLOBAL = "global"
    GROUP_WISE = "group_wise"


def _as_targets(labels) -> np.ndarray:
    y = np.asarray([int(v) for v in labels] if not isinstance(labels, np.ndarray) else labels, dtype=np.float64)
    if y.size and not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1 or ClassLabel values")
    return y


@dataclass(frozen=True)
class AffineCalibrator:
    """``posterior = sigmoid(a * log_odds + b)``.

    ``a < 0`` is allowed but inverts the score ranking; :attr:`inverted`
    flags it for reports.
    """

    a: float = 1.0
    b: float = 0.0
    objective: float = field(default=float("nan"), compare=False)
    grad_norm: float = field(default=float("nan"), compare=False)
    iterations: int = field(default=0, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("affine parameters must be finite")

    @property
    def inverted(self) -> bool:
        return self.a < 0

    def __call__(self, lo):
        return apply_affine(self, lo)

    def calibrate(self, posteriors):
        """Apply to posteriors (converted to log-odds first)."""
        return apply_affine(self, log_odds(posteriors))

    def to_dict(self) -> dict:
        return {"type": "affine", "parameters": {"a": self.a, "b": self.b}}


@dataclass(frozen=True)
class PavCalibrator:
    """Step function: score ``s`` maps to the first bin whose upper bound is >= ``s``."""

    upper: tuple
    posterior: tuple

    def __post_init__(self):
        up = np.asarray(self.upper, dtype=float)
        po = np.asarray(self.posterior, dtype=float)
        if up.size == 0 or up.shape != po.shape:
            raise ValueError("PAV calibrator needs matching, nonempty bins")
        if np.any(np.diff(up) <= 0):
            raise ValueError("bin upper bounds must be strictly increasing")
        if np.any(np.diff(po) < 0) or np.any((po < 0) | (po > 1)):
            raise ValueError("bin posteriors must be nondecreasing in [0, 1]")

    def __call__(self, score):
        return apply_pav(self, score)

    def to_dict(self) -> dict:
        return {
            "type": "pav",
            "parameters": [{"upper": u, "posterior": p} for u, p in zip(self.upper, self.posterior)],
        }


def calibrator_to_json(cal) -> str:
    return json.dumps(cal.to_dict())


def calibrator_from_json(text: str):
    d = json.loads(text)
    kind = d.get("type")
    params = d.get("parameters")
    if kind == "affine":
        return AffineCalibrator(float(params["a"]), float(params["b"]))
    if kind == "pav":
        return PavCalibrator(
            tuple(float(p["upper"]) for p in params),
            tuple(float(p["posterior"]) for p in params),
        )
    raise SchemaError(f"unknown calibrator type {kind!r}", field="type")


# --------------------------------------------------------------------------
# Affine
# --------------------------------------------------------------------------

def fit_affine(log_odds_in, labels) -> AffineCalibrator:
    """Cross-entropy-optimal affine map of log-odds, by damped Newton.

    Starts from the identity map; stops when the gradient max-norm of the
    mean log-loss drops to 1e-9 or after 500 iterations.
    """
    x = np.asarray(log_odds_in, dtype=np.float64)
    y = _as_targets(labels)
    if x.shape != y.shape:
        raise ValueError("scores and labels misaligned")
    if x.size < 2:
        raise DegenerateDataError("affine fit needs at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite log-odds")
    n_d = int(y.sum())
    if n_d == 0 or n_d == y.size:
        raise DegenerateDataError("affine fit needs both classes")
    a, b, f, g, it = logistic_fit(x, y, 1.0, 0.0, MAX_ITER, GRAD_TOL)
    return AffineCalibrator(a, b, objective=f, grad_norm=g, iterations=it)


def apply_affine(cal: AffineCalibrator, lo):
    return sigmoid(cal.a * np.asarray(lo, dtype=np.float64) + cal.b)


# --------------------------------------------------------------------------
# PAV
# --------------------------------------------------------------------------

def fit_pav(scores, labels) -> PavCalibrator:
    """Isotonic (pool adjacent violators) fit of disordered indicators on scores."""
    s = np.asarray(scores, dtype=np.float64)
    y = _as_targets(labels)
    if s.shape != y.shape:
        raise ValueError("scores and labels misaligned")
    if s.size == 0:
        raise DegenerateDataError("PAV fit needs at least one sample")
    if not np.all(np.isfinite(s)):
        raise ValueError("non-finite scores")
    order = np.argsort(s, kind="stable")
    upper, mean, _ = pav_blocks(s[order], y[order])
    return PavCalibrator(tuple(upper.tolist()), tuple(np.clip(mean, 0.0, 1.0).tolist()))


def apply_pav(cal: PavCalibrator, score):
    up = np.asarray(cal.upper)
    idx = np.minimum(np.searchsorted(up, np.asarray(score, dtype=np.float64), side="left"), up.size - 1)
    out = np.asarray(cal.posterior)[idx]
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# Calibration loss
# --------------------------------------------------------------------------

def recalibrate_in_place(ev: EvalSet, posteriors=None, family: str = "affine") -> np.ndarray:
    """Posteriors after a calibrator of ``family`` is fitted on the same data."""
    post = ev.posterior if posteriors is None else np.asarray(posteriors, dtype=np.float64)
    lo = log_odds(post)
    if family == "affine":
        return apply_affine(fit_affine(lo, ev.label), lo)
    if family == "monotone":
        return apply_pav(fit_pav(lo, ev.label), lo)
    raise ValueError(f"family must be 'affine' or 'monotone', got {family!r}")


def calibration_loss(ev: EvalSet, posteriors=None, family: str = "affine") -> float:
    """XE of the posteriors minus XE after refitting a calibrator on the same data."""
    post = ev.posterior if posteriors is None else np.asarray(posteriors, dtype=np.float64)
    n_d = int(ev.label.sum())
    if n_d == 0 or n_d == len(ev):
        raise DegenerateDataError("calibration loss needs both classes")
    return cross_entropy(ev, post) - cross_entropy(ev, recalibrate_in_place(ev, post, family))


# --------------------------------------------------------------------------
# Cross-validated calibration
# --------------------------------------------------------------------------

def _fit_split(lo, labels, group_name, fold) -> AffineCalibrator:
    n_d = int(labels.sum())
    if n_d == 0 or n_d == labels.size:
        raise CalibrationError(
            f"training split for group {group_name} outside fold {fold} lacks a class "
            f"({n_d} disordered of {labels.size})",
            group=group_name, fold=fold,
        )
    return fit_affine(lo, labels)


def cv_calibrate(
    ev: EvalSet,
    k: int = 10,
    scope: CalibrationScope | str = CalibrationScope.GLOBAL,
    seed: int = 42,
    folds: Optional[FoldAssignment] = None,
) -> EvalSet:
    """Replace every posterior by an out-of-fold affine calibration.

    For each fold, calibrators are trained on the samples outside it (one
    calibrator for ``global`` scope, one per group for ``group_wise``) and
    applied to the fold. Pass ``folds`` to share an assignment between runs.
    """
    scope = CalibrationScope(scope)
    if folds is None:
        folds = assign_folds(ev, k, seed)
    fold = folds.fold_of(ev)
    lo = log_odds(ev.posterior)
    out = np.empty(len(ev))
    if scope is CalibrationScope.GLOBAL:
        cells = [("all", np.ones(len(ev), dtype=bool))]
    else:
        cells = [(g.name, ev.group == g) for g in ev.groups_present()]
    for f in range(folds.k):
        test = fold == f
        if not test.any():
            continue
        for name, cell in cells:
            tgt = test & cell
            if not tgt.any():
                continue
            train = cell & ~test
            cal = _fit_split(lo[train], ev.label[train].astype(np.float64), name, f)
            out[tgt] = apply_affine(cal, lo[tgt])
    return ev.with_posteriors(out)
