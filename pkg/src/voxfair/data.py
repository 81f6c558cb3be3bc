"""Scored evaluation sets, demographic groups, folds and CSV exchange."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import DegenerateDataError, SchemaError

CSV_COLUMNS = (
    "sample_id",
    "speaker_id",
    "gender",
    "age",
    "posterior_disordered",
    "label",
    "severity",
)

NO_SEVERITY = -1
MIN_AGE = 14


class ClassLabel(enum.IntEnum):
    HEALTHY = 0
    DISORDERED = 1  # positive class

    @property
    def token(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, token: str) -> "ClassLabel":
        try:
            return cls[token.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown label {token!r}") from None


class GroupKey(enum.IntEnum):
    """Gender by age band. Member order is the canonical report order."""

    YF = 0
    AF = 1
    OF = 2
    YM = 3
    AM = 4
    OM = 5

    @property
    def gender(self) -> str:
        return self.name[1]

    @property
    def age_band(self) -> str:
        return self.name[0]

    @classmethod
    def of(cls, gender: str, age_band: str) -> "GroupKey":
        return cls[age_band + gender]


# representative ages used when writing synthetic rows
BAND_AGE = {"Y": 22, "A": 43, "O": 65}


def derive_group(gender: str, age: int) -> GroupKey:
    """Map gender and age in years to a :class:`GroupKey`.

    Young is 14-30, adult 31-55 and older 56+. Ages under 14 are rejected.
    """
    if gender not in ("F", "M"):
        raise ValueError(f"gender must be F or M, got {gender!r}")
    if age < MIN_AGE:
        raise ValueError(f"age {age} below {MIN_AGE}; such samples are discarded")
    if age <= 30:
        band = "Y"
    elif age <= 55:
        band = "A"
    else:
        band = "O"
    return GroupKey.of(gender, band)


@dataclass(frozen=True)
class ScoredSample:
    sample_id: str
    speaker_id: str
    group: GroupKey
    posterior_d: float
    label: ClassLabel
    severity: Optional[int] = None
    age: Optional[int] = None

    def __post_init__(self):
        if not (0.0 <= self.posterior_d <= 1.0):
            raise ValueError(f"posterior {self.posterior_d} outside [0, 1]")
        if self.severity is not None:
            if self.severity not in (0, 1, 2, 3):
                raise ValueError(f"severity {self.severity} not in 0..3")
            if self.label != ClassLabel.DISORDERED:
                raise ValueError("severity only allowed on disordered samples")


@dataclass(frozen=True)
class Priors:
    p_h: float
    p_d: float

    def __post_init__(self):
        if self.p_h < 0 or self.p_d < 0 or abs(self.p_h + self.p_d - 1.0) > 1e-12:
            raise ValueError(f"invalid priors ({self.p_h}, {self.p_d})")

    @classmethod
    def from_p_d(cls, p_d: float) -> "Priors":
        return cls(1.0 - p_d, p_d)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class EvalSet:
    """Immutable, column-oriented collection of scored samples.

    Columns are read-only numpy arrays: ``label`` (1 = disordered), ``group``
    (:class:`GroupKey` codes), ``posterior``, ``severity`` (``-1`` when
    absent) and ``age`` (``-1`` when unknown), plus object arrays of ids.
    """

    __slots__ = ("sample_id", "speaker_id", "group", "posterior", "label", "severity", "age")

    def __init__(self, sample_id, speaker_id, group, posterior, label, severity=None, age=None,
                 *, validate: bool = True):
        n = len(sample_id)
        sev = np.full(n, NO_SEVERITY, dtype=np.int8) if severity is None else np.asarray(severity, dtype=np.int8)
        ages = np.full(n, -1, dtype=np.int16) if age is None else np.asarray(age, dtype=np.int16)
        cols = dict(
            sample_id=np.asarray(sample_id, dtype=object),
            speaker_id=np.asarray(speaker_id, dtype=object),
            group=np.asarray(group, dtype=np.int8),
            posterior=np.asarray(posterior, dtype=np.float64),
            label=np.asarray(label, dtype=np.int8),
            severity=sev,
            age=ages,
        )
        for name, col in cols.items():
            if col.shape != (n,):
                raise ValueError(f"column {name} has shape {col.shape}, expected ({n},)")
            object.__setattr__(self, name, _frozen(col))
        if validate:
            self._validate()

    def __setattr__(self, name, value):
        raise AttributeError("EvalSet is immutable")

    def _validate(self):
        p = self.posterior
        if not np.all((p >= 0.0) & (p <= 1.0)):
            bad = int(np.flatnonzero(~((p >= 0.0) & (p <= 1.0)))[0])
            raise ValueError(f"posterior of sample {self.sample_id[bad]!r} outside [0, 1]")
        if not np.all((self.label == 0) | (self.label == 1)):
            raise ValueError("labels must be 0 (healthy) or 1 (disordered)")
        if not np.all((self.group >= 0) & (self.group < len(GroupKey))):
            raise ValueError("group codes out of range")
        sev = self.severity
        if not np.all((sev >= NO_SEVERITY) & (sev <= 3)):
            raise ValueError("severity must be 0..3 or absent")
        if np.any((sev != NO_SEVERITY) & (self.label != ClassLabel.DISORDERED)):
            raise ValueError("severity only allowed on disordered samples")
        if len(set(self.sample_id.tolist())) != len(self):
            raise ValueError("duplicate sample_id")

    # --- construction -----------------------------------------------------

    @classmethod
    def from_samples(cls, samples: Iterable[ScoredSample]) -> "EvalSet":
        samples = list(samples)
        return cls(
            [s.sample_id for s in samples],
            [s.speaker_id for s in samples],
            [int(s.group) for s in samples],
            [s.posterior_d for s in samples],
            [int(s.label) for s in samples],
            [NO_SEVERITY if s.severity is None else s.severity for s in samples],
            [-1 if s.age is None else s.age for s in samples],
        )

    def take(self, idx) -> "EvalSet":
        """Subset (or resample) by integer index or boolean mask.

        Resampled sets may repeat sample ids, so no validation is run.
        """
        idx = np.asarray(idx)
        return EvalSet(
            self.sample_id[idx], self.speaker_id[idx], self.group[idx], self.posterior[idx],
            self.label[idx], self.severity[idx], self.age[idx], validate=False,
        )

    def with_posteriors(self, posterior) -> "EvalSet":
        posterior = np.asarray(posterior, dtype=np.float64)
        if posterior.shape != self.posterior.shape:
            raise ValueError("posterior array misaligned with samples")
        out = EvalSet(
            self.sample_id, self.speaker_id, self.group, posterior,
            self.label, self.severity, self.age, validate=False,
        )
        if not np.all((posterior >= 0.0) & (posterior <= 1.0)):
            raise ValueError("posteriors outside [0, 1]")
        return out

    # --- views --------------------------------------------------------------

    def __len__(self) -> int:
        return self.sample_id.shape[0]

    def __iter__(self) -> Iterator[ScoredSample]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i: int) -> ScoredSample:
        sev = int(self.severity[i])
        age = int(self.age[i])
        return ScoredSample(
            str(self.sample_id[i]), str(self.speaker_id[i]), GroupKey(int(self.group[i])),
            float(self.posterior[i]), ClassLabel(int(self.label[i])),
            None if sev == NO_SEVERITY else sev, None if age < 0 else age,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, EvalSet):
            return NotImplemented
        return all(np.array_equal(getattr(self, c), getattr(other, c)) for c in self.__slots__)

    def __repr__(self) -> str:
        return f"EvalSet(n={len(self)}, disordered={int(self.label.sum())})"

    def groups_present(self) -> list[GroupKey]:
        return [GroupKey(g) for g in np.unique(self.group)]

    def by_group(self) -> dict[GroupKey, "EvalSet"]:
        return {g: self.take(self.group == g) for g in self.groups_present()}


# --------------------------------------------------------------------------
# Priors, folds, severity
# --------------------------------------------------------------------------

def _labels(x) -> np.ndarray:
    return x.label if isinstance(x, EvalSet) else np.asarray(x)


def empirical_priors(samples) -> Priors:
    """Class frequencies of an :class:`EvalSet` (or a label array)."""
    labels = _labels(samples)
    n = labels.shape[0]
    if n == 0:
        raise DegenerateDataError("cannot estimate priors of an empty set")
    p_d = float(np.count_nonzero(labels == 1)) / n
    return Priors(1.0 - p_d, p_d)


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    speaker_fold: dict

    def fold_of(self, ev: EvalSet) -> np.ndarray:
        """Fold index of every sample in ``ev``."""
        try:
            return np.fromiter((self.speaker_fold[s] for s in ev.speaker_id), dtype=np.int64, count=len(ev))
        except KeyError as exc:
            raise ValueError(f"speaker {exc.args[0]!r} has no fold") from None


def assign_folds(ev: EvalSet, k: int = 10, seed: int = 42) -> FoldAssignment:
    """Deal speakers round-robin into ``k`` folds after a seeded shuffle.

    The result depends only on the set of speaker ids and ``seed``.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    speakers = sorted(set(ev.speaker_id.tolist()))
    if len(speakers) < k:
        raise DegenerateDataError(f"{len(speakers)} speakers cannot fill {k} folds")
    order = np.random.default_rng(seed).permutation(len(speakers))
    return FoldAssignment(k, {speakers[j]: pos % k for pos, j in enumerate(order)})


def filter_severity(ev: EvalSet, min_g: int) -> EvalSet:
    """Keep healthy samples and disordered samples graded ``min_g`` or above."""
    if min_g not in (0, 1, 2, 3):
        raise ValueError("min_g must be in 0..3")
    keep = (ev.label == ClassLabel.HEALTHY) | (ev.severity >= min_g)
    return ev.take(keep)


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def _row_error(line: int, field: str, msg: str) -> SchemaError:
    return SchemaError(f"line {line}: field {field}: {msg}", line=line, field=field)


def parse_eval_csv(text) -> EvalSet:
    """Read the evaluation CSV exchange format.

    ``text`` may be a string or a text stream. Rows keep their order.
    Raises :class:`SchemaError` carrying the offending line and field.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise SchemaError("empty input: header required", line=1, field="header")
    if tuple(h.strip() for h in header) != CSV_COLUMNS:
        raise SchemaError(f"header must be {','.join(CSV_COLUMNS)}", line=1, field="header")

    ids, spk, grp, post, lab, sev, ages = [], [], [], [], [], [], []
    seen = set()
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(CSV_COLUMNS):
            raise _row_error(line, "row", f"expected {len(CSV_COLUMNS)} fields, got {len(row)}")
        sid, sp, gender, age_s, p_s, label_s, sev_s = (c.strip() for c in row)
        if not sid:
            raise _row_error(line, "sample_id", "empty")
        if sid in seen:
            raise _row_error(line, "sample_id", f"duplicate {sid!r}")
        if not sp:
            raise _row_error(line, "speaker_id", "empty")
        if gender not in ("F", "M"):
            raise _row_error(line, "gender", f"{gender!r} not in F/M")
        try:
            age = int(age_s)
        except ValueError:
            raise _row_error(line, "age", f"{age_s!r} is not an integer") from None
        if age < MIN_AGE:
            raise _row_error(line, "age", f"{age} below {MIN_AGE}")
        try:
            p = float(p_s)
        except ValueError:
            raise _row_error(line, "posterior_disordered", f"{p_s!r} is not a number") from None
        if not (0.0 <= p <= 1.0) or math.isnan(p):
            raise _row_error(line, "posterior_disordered", f"{p_s} outside [0, 1]")
        try:
            label = ClassLabel.parse(label_s)
        except ValueError:
            raise _row_error(line, "label", f"unknown label {label_s!r}") from None
        if sev_s == "":
            g = NO_SEVERITY
        else:
            if sev_s not in ("0", "1", "2", "3"):
                raise _row_error(line, "severity", f"{sev_s!r} not in 0..3")
            if label != ClassLabel.DISORDERED:
                raise _row_error(line, "severity", "healthy rows must leave severity empty")
            g = int(sev_s)
        seen.add(sid)
        ids.append(sid)
        spk.append(sp)
        grp.append(int(derive_group(gender, age)))
        post.append(p)
        lab.append(int(label))
        sev.append(g)
        ages.append(age)
    return EvalSet(ids, spk, grp, post, lab, sev, ages, validate=False)


def format_eval_csv(ev: EvalSet) -> str:
    """Serialise to the CSV exchange format; floats are written round-trip exact."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in ev:
        g = GroupKey(s.group)
        age = s.age if s.age is not None else BAND_AGE[g.age_band]
        w.writerow([
            s.sample_id, s.speaker_id, g.gender, age, repr(s.posterior_d),
            s.label.token, "" if s.severity is None else s.severity,
        ])
    return out.getvalue()


def concat(sets: Sequence[EvalSet]) -> EvalSet:
    cols = {c: np.concatenate([getattr(s, c) for s in sets]) for c in EvalSet.__slots__}
    return EvalSet(**cols)
