"""``voxfair`` command line: evaluate | hist | synth | bootstrap.

Exit codes: 0 success, 2 schema/validation, 3 degenerate data, 4 I/O.
Failures print one line to stderr::

    voxfair: error kind=<kind> code=<n> message=<text>
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .calibration import CalibrationScope, cv_calibrate
from .data import ClassLabel, EvalSet, filter_severity, format_eval_csv, parse_eval_csv
from .errors import DegenerateDataError, SchemaError, VoxfairError
from .kernels import BACKEND
from .metrics import CostMatrix, llr, log_odds, summarize
from .data import empirical_priors
from .report import MetricReport
from .resampling import DEFAULT_CONFIDENCE, DEFAULT_REPLICATES, bootstrap_metric, bootstrap_report
from .synthetic import PRESETS, SyntheticSpec, generate, preset

log = logging.getLogger("voxfair")

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_DEGENERATE = 3
EXIT_IO = 4

N_BINS = 50


class IOFailure(VoxfairError):
    exit_code = EXIT_IO


@dataclass
class RunConfig:
    input: Optional[str] = None
    c_fp: float = 1.0
    c_fn: float = 3.0
    calibration: str = "none"
    folds: int = 10
    seed: int = 42
    bootstrap: bool = False
    replicates: int = DEFAULT_REPLICATES
    confidence: float = DEFAULT_CONFIDENCE
    min_g: Optional[int] = None
    out_json: Optional[str] = None
    out_text: Optional[str] = None

    def __post_init__(self):
        if self.calibration not in ("none", "global", "group-wise", "group_wise"):
            raise SchemaError(f"calibration must be none|global|group-wise, got {self.calibration!r}", field="calibration")
        if self.folds < 2:
            raise SchemaError("folds must be >= 2", field="folds")
        if self.min_g is not None and self.min_g not in (0, 1, 2, 3):
            raise SchemaError("min-g must be in 0..3", field="min_g")
        if self.bootstrap and (self.replicates < 100 or not 0 < self.confidence < 1):
            raise SchemaError("bootstrap needs replicates >= 100 and 0 < confidence < 1", field="replicates")
        try:
            CostMatrix(self.c_fp, self.c_fn)
        except ValueError as exc:
            raise SchemaError(str(exc), field="c_fp") from None

    @property
    def cost(self) -> CostMatrix:
        return CostMatrix(self.c_fp, self.c_fn)


# --------------------------------------------------------------------------
# I/O helpers
# --------------------------------------------------------------------------

def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to a temp file beside ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".voxfair-", dir=directory)
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc.strerror or exc}") from None


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError:
        raise SchemaError(f"{path} is not valid UTF-8", field="encoding") from None


def load_eval(path: str) -> tuple[EvalSet, str]:
    text = _read_text(path)
    return parse_eval_csv(text), hashlib.sha256(text.encode("utf-8")).hexdigest()


def _provenance(config, digest: str) -> dict:
    return {
        "tool": "voxfair",
        "version": __version__,
        "backend": BACKEND,
        "input_sha256": digest,
        "config": dataclasses.asdict(config),
    }


def _calibrated(ev: EvalSet, config: RunConfig) -> EvalSet:
    if config.calibration == "none":
        return ev
    scope = CalibrationScope.GROUP_WISE if config.calibration.startswith("group") else CalibrationScope.GLOBAL
    return cv_calibrate(ev, config.folds, scope, config.seed)


# --------------------------------------------------------------------------
# evaluate
# --------------------------------------------------------------------------

def run_evaluate(config: RunConfig) -> MetricReport:
    """Ingest, optionally calibrate out-of-fold, filter by severity, summarize.

    Calibration is fitted on the full input; the severity filter only
    restricts which samples are scored.
    """
    ev, digest = load_eval(config.input)
    if len(ev) == 0:
        raise DegenerateDataError("input has no samples")
    ev = _calibrated(ev, config)
    if config.min_g is not None:
        ev = filter_severity(ev, config.min_g)
        if len(ev) == 0:
            raise DegenerateDataError(f"no samples left after min-g {config.min_g}")
    if config.bootstrap:
        report = bootstrap_report(ev, config.cost, config.replicates, config.confidence, config.seed)
    else:
        report = summarize(ev, cost=config.cost)
    report.provenance = _provenance(config, digest)
    if config.out_json:
        write_atomic(config.out_json, report.to_json())
    if config.out_text:
        write_atomic(config.out_text, report.to_text())
    return report


# --------------------------------------------------------------------------
# hist
# --------------------------------------------------------------------------

@dataclass
class HistogramSeries:
    group: str
    cls: str
    edges: np.ndarray
    density: np.ndarray
    n: int

    @property
    def area(self) -> float:
        return float(np.sum(self.density * np.diff(self.edges)))


@dataclass
class HistogramTable:
    transform: str
    series: list = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["group", "class", "bin_low", "bin_high", "density"])
        for s in self.series:
            for lo, hi, d in zip(s.edges[:-1], s.edges[1:], s.density):
                w.writerow([s.group, s.cls, repr(float(lo)), repr(float(hi)), repr(float(d))])
        return out.getvalue()


def histogram_table(ev: EvalSet, transform: str = "llr", min_g: Optional[int] = None,
                    bins: int = N_BINS) -> HistogramTable:
    """Density of log-odds or LLR per (group, class) on a shared symmetric range.

    LLRs subtract each group's prior log-odds, with priors taken before any
    severity filtering.
    """
    transform = transform.replace("-", "_")
    if transform not in ("log_odds", "llr"):
        raise SchemaError("transform must be log-odds or llr", field="transform")
    values = np.empty(len(ev))
    for g in ev.groups_present():
        mask = ev.group == g
        if transform == "llr":
            values[mask] = llr(ev.posterior[mask], empirical_priors(ev.label[mask]))
        else:
            values[mask] = log_odds(ev.posterior[mask])
    keep = np.ones(len(ev), dtype=bool)
    if min_g is not None:
        keep = (ev.label == ClassLabel.HEALTHY) | (ev.severity >= min_g)
    kept = values[keep]
    limit = float(math.ceil(np.max(np.abs(kept)))) if kept.size else 1.0
    limit = max(limit, 1.0)
    edges = np.linspace(-limit, limit, bins + 1)
    table = HistogramTable(transform)
    for g in ev.groups_present():
        for label in ClassLabel:
            sel = keep & (ev.group == g) & (ev.label == label)
            v = values[sel]
            if v.size == 0:
                log.warning("empty series %s/%s: zero densities emitted", g.name, label.token)
                dens = np.zeros(bins)
            else:
                dens, _ = np.histogram(v, bins=edges, density=True)
            table.series.append(HistogramSeries(g.name, label.token, edges, dens, int(v.size)))
    return table


def run_hist(config: RunConfig, transform: str = "llr", out: Optional[str] = None) -> HistogramTable:
    ev, _ = load_eval(config.input)
    if len(ev) == 0:
        raise DegenerateDataError("input has no samples")
    ev = _calibrated(ev, config)
    table = histogram_table(ev, transform, config.min_g)
    if out:
        write_atomic(out, table.to_csv())
    return table


# --------------------------------------------------------------------------
# synth
# --------------------------------------------------------------------------

def run_synth(spec_path: Optional[str], out_path: Optional[str], preset_name: Optional[str] = None,
              seed: Optional[int] = None) -> EvalSet:
    if preset_name:
        spec = preset(preset_name, seed if seed is not None else 42)
    else:
        spec = SyntheticSpec.from_json(_read_text(spec_path))
        if seed is not None:
            spec = dataclasses.replace(spec, seed=seed)
    ev = generate(spec)
    if out_path:
        write_atomic(out_path, format_eval_csv(ev))
    return ev


# --------------------------------------------------------------------------
# bootstrap
# --------------------------------------------------------------------------

def run_bootstrap(config: RunConfig, metric: str, column: str) -> dict:
    """Interval for a single report cell, e.g. ``NXE`` on ``avg``."""
    ev, digest = load_eval(config.input)
    ev = _calibrated(ev, config)
    if config.min_g is not None:
        ev = filter_severity(ev, config.min_g)
    cost = config.cost
    groups = [g.name for g in ev.groups_present()]
    if column not in groups + ["avg", "pooled"]:
        raise SchemaError(f"column {column!r} not in {groups + ['avg', 'pooled']}", field="column")
    key = "NEC" if metric.upper().startswith("NEC") else metric.upper()

    def cell(e: EvalSet) -> float:
        vals = summarize(e, cost=cost).values[key]
        if column == "avg":
            return float(np.mean([vals.get(g, float("nan")) for g in groups]))
        return vals.get(column, float("nan"))

    est = bootstrap_metric(ev, cell, config.replicates, config.confidence, config.seed)
    result = {
        "metric": metric,
        "column": column,
        "value": est.point,
        "ci_low": est.ci_low,
        "ci_high": est.ci_high,
        "b_effective": est.b_effective,
        "replicates": est.replicates,
        "confidence": est.confidence,
        "seed": est.seed,
        "provenance": _provenance(config, digest),
    }
    if config.out_json:
        write_atomic(config.out_json, json.dumps(result, indent=2) + "\n")
    return result


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, *, cost: bool = True) -> None:
    p.add_argument("--input", required=True, help="evaluation CSV")
    if cost:
        p.add_argument("--c-fp", type=float, default=1.0)
        p.add_argument("--c-fn", type=float, default=3.0)
    p.add_argument("--calibration", choices=["none", "global", "group-wise"], default="none")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--min-g", type=int, choices=[0, 1, 2, 3], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voxfair", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"voxfair {__version__} ({BACKEND})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="per-group / average / pooled metric report")
    _common(ev)
    ev.add_argument("--bootstrap", action="store_true")
    ev.add_argument("--replicates", type=int, default=DEFAULT_REPLICATES)
    ev.add_argument("--confidence", type=float, default=DEFAULT_CONFIDENCE)
    ev.add_argument("--out-json")
    ev.add_argument("--out-text")

    hi = sub.add_parser("hist", help="log-odds / LLR densities per group and class")
    _common(hi, cost=False)
    hi.add_argument("--transform", choices=["log-odds", "llr"], default="llr")
    hi.add_argument("--out", required=True)

    sy = sub.add_parser("synth", help="generate a synthetic evaluation CSV")
    src = sy.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", help="SyntheticSpec JSON")
    src.add_argument("--preset", choices=PRESETS)
    sy.add_argument("--seed", type=int, default=None, help="override the spec seed")
    sy.add_argument("--out", required=True)

    bs = sub.add_parser("bootstrap", help="bootstrap interval for one report cell")
    _common(bs)
    bs.add_argument("--metric", default="NXE", help="ACC, UAR, NTER, NBER, NEC, NXE")
    bs.add_argument("--column", default="avg", help="group name, avg or pooled")
    bs.add_argument("--replicates", type=int, default=DEFAULT_REPLICATES)
    bs.add_argument("--confidence", type=float, default=DEFAULT_CONFIDENCE)
    bs.add_argument("--out-json")
    return parser


def _config(args) -> RunConfig:
    return RunConfig(
        input=args.input,
        c_fp=getattr(args, "c_fp", 1.0),
        c_fn=getattr(args, "c_fn", 3.0),
        calibration=args.calibration,
        folds=args.folds,
        seed=args.seed,
        bootstrap=getattr(args, "bootstrap", False) or args.command == "bootstrap",
        replicates=getattr(args, "replicates", DEFAULT_REPLICATES),
        confidence=getattr(args, "confidence", DEFAULT_CONFIDENCE),
        min_g=args.min_g,
        out_json=getattr(args, "out_json", None),
        out_text=getattr(args, "out_text", None),
    )


def _fail(kind: str, code: int, message: str) -> int:
    message = " ".join(str(message).split())
    print(f"voxfair: error kind={kind} code={code} message={message}", file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="voxfair: %(levelname)s %(message)s")
    try:
        if args.command == "synth":
            ev = run_synth(args.spec, args.out, args.preset, args.seed)
            log.info("wrote %d rows to %s", len(ev), args.out)
        elif args.command == "evaluate":
            report = run_evaluate(_config(args))
            if not args.out_text:
                sys.stdout.write(report.to_text())
        elif args.command == "hist":
            run_hist(_config(args), args.transform, args.out)
        elif args.command == "bootstrap":
            result = run_bootstrap(_config(args), args.metric, args.column)
            if not args.out_json:
                sys.stdout.write(json.dumps({k: v for k, v in result.items() if k != "provenance"}) + "\n")
    except SchemaError as exc:
        return _fail("schema", EXIT_SCHEMA, exc)
    except DegenerateDataError as exc:
        return _fail("degenerate", EXIT_DEGENERATE, exc)
    except IOFailure as exc:
        return _fail("io", EXIT_IO, exc)
    except ValueError as exc:
        return _fail("validation", EXIT_SCHEMA, exc)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
