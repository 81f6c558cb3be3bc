"""Synthetic grouped score corpora, the reference cohort fixture and a
metadata-only (per-group prior) baseline classifier."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data import BAND_AGE, NO_SEVERITY, EvalSet, FoldAssignment, GroupKey, Priors
from .errors import DegenerateDataError, SchemaError
from .metrics import sigmoid

NEUTRAL_SEVERITY = (0.0, 1.0, 0.0, 0.0)


@dataclass(frozen=True)
class Table1Row:
    n_h: int
    n_d: int
    g_counts: tuple  # disordered speakers graded G=0..3; not all are graded

    @property
    def n(self) -> int:
        return self.n_h + self.n_d

    @property
    def priors(self) -> Priors:
        return Priors(self.n_h / self.n, self.n_d / self.n)


_TABLE1 = {
    GroupKey.YF: Table1Row(318, 102, (32, 30, 15, 2)),
    GroupKey.AF: Table1Row(44, 358, (84, 83, 128, 27)),
    GroupKey.OF: Table1Row(19, 261, (43, 25, 99, 41)),
    GroupKey.YM: Table1Row(137, 58, (20, 6, 6, 3)),
    GroupKey.AM: Table1Row(99, 217, (57, 35, 56, 35)),
    GroupKey.OM: Table1Row(16, 345, (32, 40, 113, 98)),
}
_TABLE1_POOLED = Table1Row(633, 1341, (268, 219, 417, 206))


def table1_fixture() -> dict:
    """Speaker counts per demographic group of the reference corpus.

    Keys are :class:`GroupKey` members plus ``"pooled"``.
    """
    out: dict = dict(_TABLE1)
    out["pooled"] = _TABLE1_POOLED
    return out


# --------------------------------------------------------------------------
# Scenario description
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupScenario:
    """One group's class sizes and score model.

    Clean log-odds are unit-variance normals centred at ``-d_prime/2``
    (healthy) and ``d_prime/2 + 0.5*(G-1)`` (disordered with grade G). The
    reported posterior is ``sigmoid(miscal_scale * lo + miscal_offset)``.
    """

    group: GroupKey
    n_h: int
    n_d: int
    d_prime: float = 0.0
    miscal_scale: float = 1.0
    miscal_offset: float = 0.0
    severity_mix: tuple = NEUTRAL_SEVERITY

    def __post_init__(self):
        object.__setattr__(self, "group", GroupKey[self.group] if isinstance(self.group, str) else GroupKey(self.group))
        object.__setattr__(self, "severity_mix", tuple(float(x) for x in self.severity_mix))
        g = self.group.name
        if self.n_h < 0 or self.n_d < 0 or self.n_h + self.n_d == 0:
            raise SchemaError(f"group {g}: n_h + n_d must be positive", field="n_h")
        if not (self.d_prime >= 0 and math.isfinite(self.d_prime)):
            raise SchemaError(f"group {g}: d_prime must be finite and >= 0", field="d_prime")
        if not (math.isfinite(self.miscal_scale) and math.isfinite(self.miscal_offset)):
            raise SchemaError(f"group {g}: miscalibration must be finite", field="miscal_scale")
        mix = self.severity_mix
        if len(mix) != 4 or any(p < 0 for p in mix) or abs(sum(mix) - 1.0) > 1e-9:
            raise SchemaError(
                f"group {g}: severity_mix must be 4 nonnegative probabilities summing to 1, got {list(mix)}",
                field="severity_mix",
            )


@dataclass(frozen=True)
class SyntheticSpec:
    scenarios: tuple
    seed: int = 42
    samples_per_speaker: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        keys = [s.group for s in self.scenarios]
        if not keys:
            raise SchemaError("at least one scenario required", field="scenarios")
        if len(set(keys)) != len(keys):
            raise SchemaError("group keys must be unique", field="scenarios")
        if self.samples_per_speaker < 1:
            raise SchemaError("samples_per_speaker must be >= 1", field="samples_per_speaker")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "samples_per_speaker": self.samples_per_speaker,
            "scenarios": [
                {
                    "group": s.group.name,
                    "n_h": s.n_h,
                    "n_d": s.n_d,
                    "d_prime": s.d_prime,
                    "miscal_scale": s.miscal_scale,
                    "miscal_offset": s.miscal_offset,
                    "severity_mix": list(s.severity_mix),
                }
                for s in self.scenarios
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SyntheticSpec":
        if not isinstance(d, Mapping):
            raise SchemaError("spec must be a JSON object", field="$")
        scen = d.get("scenarios")
        if not isinstance(scen, list):
            raise SchemaError("scenarios: expected a list", field="scenarios")
        out = []
        allowed = {"group", "n_h", "n_d", "d_prime", "miscal_scale", "miscal_offset", "severity_mix"}
        for i, s in enumerate(scen):
            path = f"scenarios[{i}]"
            if not isinstance(s, Mapping):
                raise SchemaError(f"{path}: expected an object", field=path)
            extra = set(s) - allowed
            if extra:
                raise SchemaError(f"{path}: unknown fields {sorted(extra)}", field=path)
            try:
                group = GroupKey[s["group"]]
            except (KeyError, TypeError):
                raise SchemaError(f"{path}.group: expected one of {[g.name for g in GroupKey]}", field=f"{path}.group") from None
            try:
                out.append(GroupScenario(
                    group=group,
                    n_h=int(s["n_h"]),
                    n_d=int(s["n_d"]),
                    d_prime=float(s.get("d_prime", 0.0)),
                    miscal_scale=float(s.get("miscal_scale", 1.0)),
                    miscal_offset=float(s.get("miscal_offset", 0.0)),
                    severity_mix=tuple(s.get("severity_mix", NEUTRAL_SEVERITY)),
                ))
            except SchemaError as exc:
                raise SchemaError(f"{path}.{exc.field}: {exc}", field=f"{path}.{exc.field}") from None
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"{path}: {exc}", field=path) from None
        try:
            return cls(tuple(out), int(d.get("seed", 42)), int(d.get("samples_per_speaker", 1)))
        except (TypeError, ValueError) as exc:
            raise SchemaError(str(exc), field="$") from None

    @classmethod
    def from_json(cls, text: str) -> "SyntheticSpec":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}", field="$") from None
        return cls.from_dict(d)


# --------------------------------------------------------------------------
# Generation
# --------------------------------------------------------------------------

def apportion(total: int, weights: Sequence[float]) -> np.ndarray:
    """Largest-remainder split of ``total`` into integer counts."""
    w = np.asarray(weights, dtype=float)
    raw = total * w / w.sum()
    counts = np.floor(raw).astype(np.int64)
    short = total - int(counts.sum())
    if short:
        # ties broken by lower grade first (stable sort)
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def _speaker_sizes(n: int, per: int) -> np.ndarray:
    full, rest = divmod(n, per)
    return np.array([per] * full + ([rest] if rest else []), dtype=np.int64)


def generate(spec: SyntheticSpec) -> EvalSet:
    """Draw an :class:`EvalSet` from ``spec``; fully determined by ``spec.seed``.

    Each group uses its own random substream, keyed on (seed, group code).
    Speakers own ``samples_per_speaker`` consecutive samples and a single
    class; severity grades are dealt to disordered speakers in exact
    largest-remainder proportions of ``severity_mix``.
    """
    per = spec.samples_per_speaker
    ids, spk, grp, post, lab, sev, ages = [], [], [], [], [], [], []
    for sc in spec.scenarios:
        g = sc.group
        rng = np.random.default_rng([spec.seed, int(g)])

        h_sizes = _speaker_sizes(sc.n_h, per)
        d_sizes = _speaker_sizes(sc.n_d, per)
        grades = np.repeat(np.arange(4), apportion(d_sizes.size, sc.severity_mix)) if d_sizes.size else np.empty(0, int)
        grades = rng.permutation(grades)
        g_d = np.repeat(grades, d_sizes)

        lo_h = rng.normal(-sc.d_prime / 2.0, 1.0, size=sc.n_h)
        lo_d = rng.normal(sc.d_prime / 2.0 + 0.5 * (g_d - 1), 1.0, size=sc.n_d)
        p_h = sigmoid(sc.miscal_scale * lo_h + sc.miscal_offset)
        p_d = sigmoid(sc.miscal_scale * lo_d + sc.miscal_offset)

        for cls_tag, sizes, p, label, g_arr in (
            ("h", h_sizes, np.atleast_1d(p_h), 0, np.full(sc.n_h, NO_SEVERITY)),
            ("d", d_sizes, np.atleast_1d(p_d), 1, g_d),
        ):
            owner = np.repeat(np.arange(sizes.size), sizes)
            for i in range(int(sizes.sum())):
                ids.append(f"{g.name}-{cls_tag}{i:05d}")
                spk.append(f"{g.name}-{cls_tag}spk{owner[i]:05d}")
            grp.extend([int(g)] * int(sizes.sum()))
            post.extend(p.tolist())
            lab.extend([label] * int(sizes.sum()))
            sev.extend(np.asarray(g_arr).tolist())
            ages.extend([BAND_AGE[g.age_band]] * int(sizes.sum()))
    return EvalSet(ids, spk, grp, post, lab, sev, ages)


# --------------------------------------------------------------------------
# Presets built on the reference cohort sizes
# --------------------------------------------------------------------------

def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def table1_spec(
    d_prime: float = 0.0,
    miscal_scale: float = 1.0,
    miscal_offset=0.0,
    severity: str | tuple = "neutral",
    seed: int = 42,
    samples_per_speaker: int = 1,
) -> SyntheticSpec:
    """Scenarios with the reference cohort class counts.

    ``miscal_offset`` is a number, a mapping/sequence over the six groups in
    canonical order, or ``"prior"`` for each group's prior log-odds of
    *disordered*. ``severity`` is ``"neutral"`` (all grade 1, no shift),
    ``"table1"`` (the graded proportions of the fixture) or an explicit mix.
    """
    scen = []
    for i, (g, row) in enumerate(_TABLE1.items()):
        if isinstance(miscal_offset, str):
            if miscal_offset != "prior":
                raise ValueError("miscal_offset string must be 'prior'")
            off = _logit(row.priors.p_d)
        elif isinstance(miscal_offset, Mapping):
            off = float(miscal_offset[g])
        elif isinstance(miscal_offset, (list, tuple)):
            off = float(miscal_offset[i])
        else:
            off = float(miscal_offset)
        if severity == "neutral":
            mix = NEUTRAL_SEVERITY
        elif severity == "table1":
            c = np.asarray(row.g_counts, dtype=float)
            mix = tuple((c / c.sum()).tolist())
        else:
            mix = tuple(severity)
        scen.append(GroupScenario(g, row.n_h, row.n_d, d_prime, miscal_scale, off, mix))
    return SyntheticSpec(tuple(scen), seed, samples_per_speaker)


GROUP_OFFSETS = (-2.0, -1.0, 0.0, 1.0, 2.0, 3.0)


def preset(name: str, seed: int = 42) -> SyntheticSpec:
    """Named scenario sets used by tests, benchmarks and ``voxfair synth``.

    ``table1-null``
        No discrimination; posteriors carry only the group prior, blurred.
    ``table1-offsets``
        Weak discrimination, a different miscalibration offset per group.
    ``table1-severity``
        Disordered means shifted by grade with the fixture's grade mix.
    ``identity``
        Balanced classes whose reported posteriors are calibrated.
    """
    if name == "table1-null":
        return table1_spec(0.0, 0.3, "prior", "neutral", seed)
    if name == "table1-offsets":
        return table1_spec(1.0, 1.0, GROUP_OFFSETS, "neutral", seed, samples_per_speaker=1)
    if name == "table1-severity":
        return table1_spec(1.0, 1.0, 0.0, "table1", seed)
    if name == "identity":
        return SyntheticSpec(
            tuple(GroupScenario(g, 400, 400, 1.0, 1.0, 0.0) for g in GroupKey), seed, 2
        )
    raise KeyError(f"unknown preset {name!r}; choose from {PRESETS}")


PRESETS = ("table1-null", "table1-offsets", "table1-severity", "identity")


# --------------------------------------------------------------------------
# Metadata-only baseline
# --------------------------------------------------------------------------

def metadata_baseline(ev: EvalSet, folds: FoldAssignment) -> EvalSet:
    """Replace each posterior by its group's disordered frequency outside its fold.

    A prior lookup on (gender, age band): the best any classifier restricted
    to those two features can do, up to fold noise.
    """
    fold = folds.fold_of(ev)
    out = np.empty(len(ev))
    for f in range(folds.k):
        test = fold == f
        for g in np.unique(ev.group[test]):
            cell = ev.group == g
            train = cell & ~test
            n = int(train.sum())
            if n == 0:
                raise DegenerateDataError(f"group {GroupKey(int(g)).name} has no training samples outside fold {f}")
            out[test & cell] = ev.label[train].sum() / n
    return ev.with_posteriors(out)
