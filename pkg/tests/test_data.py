import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from voxfair.data import (
    ClassLabel, EvalSet, GroupKey, Priors, ScoredSample, assign_folds, concat, derive_group,
    empirical_priors, filter_severity, format_eval_csv, parse_eval_csv,
)
from voxfair.errors import DegenerateDataError, SchemaError
from voxfair.synthetic import generate, table1_fixture, table1_spec

from conftest import make_eval

HEADER = "sample_id,speaker_id,gender,age,posterior_disordered,label,severity\n"


def test_parse_single_row():
    ev = parse_eval_csv(HEADER + "u1,spk1,F,25,0.80,disordered,2\n")
    assert len(ev) == 1
    s = ev[0]
    assert s.group is GroupKey.YF
    assert s.severity == 2
    assert s.label is ClassLabel.DISORDERED
    assert s.posterior_d == 0.8


def test_parse_empty_severity():
    ev = parse_eval_csv(HEADER + "u1,spk1,M,40,0.1,healthy,\n")
    assert ev[0].severity is None
    assert ev[0].group is GroupKey.AM


@pytest.mark.parametrize(
    "row, field",
    [
        ("u1,spk1,F,25,1.2,disordered,2", "posterior_disordered"),
        ("u1,spk1,F,25,abc,disordered,2", "posterior_disordered"),
        ("u1,spk1,F,25,0.5,sick,", "label"),
        ("u1,spk1,F,13,0.5,healthy,", "age"),
        ("u1,spk1,X,25,0.5,healthy,", "gender"),
        ("u1,spk1,F,25,0.5,healthy,2", "severity"),
        ("u1,spk1,F,25,0.5,disordered,5", "severity"),
        ("u1,spk1,F,25,0.5", "row"),
    ],
)
def test_parse_rejects(row, field):
    with pytest.raises(SchemaError) as info:
        parse_eval_csv(HEADER + "u0,spk0,F,30,0.5,healthy,\n" + row + "\n")
    assert info.value.line == 3
    assert info.value.field == field
    assert "line 3" in str(info.value)


def test_parse_duplicate_id():
    with pytest.raises(SchemaError, match="duplicate"):
        parse_eval_csv(HEADER + "u1,a,F,30,0.5,healthy,\nu1,b,F,30,0.5,healthy,\n")


def test_parse_bad_header():
    with pytest.raises(SchemaError):
        parse_eval_csv("a,b,c\n")


def test_parse_accepts_stream():
    ev = parse_eval_csv(io.StringIO(HEADER + "u1,spk1,F,60,0.3,healthy,\n"))
    assert ev[0].group is GroupKey.OF


@pytest.mark.parametrize(
    "gender, age, expected",
    [("F", 25, GroupKey.YF), ("M", 56, GroupKey.OM), ("F", 14, GroupKey.YF), ("F", 30, GroupKey.YF),
     ("M", 31, GroupKey.AM), ("F", 55, GroupKey.AF), ("M", 90, GroupKey.OM)],
)
def test_derive_group(gender, age, expected):
    assert derive_group(gender, age) is expected


def test_derive_group_rejects_children():
    with pytest.raises(ValueError):
        derive_group("F", 13)


def test_six_groups():
    assert [g.name for g in GroupKey] == ["YF", "AF", "OF", "YM", "AM", "OM"]


def test_round_trip_synthetic():
    ev = generate(table1_spec(1.0, severity="table1", seed=3, samples_per_speaker=2))
    again = parse_eval_csv(format_eval_csv(ev))
    assert again == ev


@settings(max_examples=40, deadline=None)
@given(st.lists(
    st.tuples(st.floats(0, 1), st.booleans(), st.integers(14, 90), st.sampled_from("FM"),
              st.one_of(st.none(), st.integers(0, 3))),
    min_size=1, max_size=20,
))
def test_round_trip_property(rows):
    samples = []
    for i, (p, d, age, gender, g) in enumerate(rows):
        label = ClassLabel.DISORDERED if d else ClassLabel.HEALTHY
        samples.append(ScoredSample(f"id{i}", f"sp{i % 3}", derive_group(gender, age), p, label,
                                    g if d else None, age))
    ev = EvalSet.from_samples(samples)
    assert parse_eval_csv(format_eval_csv(ev)) == ev


def test_evalset_immutable():
    ev = make_eval([0, 1])
    with pytest.raises(AttributeError):
        ev.label = None
    with pytest.raises(ValueError):
        ev.posterior[0] = 0.3


def test_evalset_validation():
    with pytest.raises(ValueError):
        make_eval([0, 1], [0.2, 1.5])
    with pytest.raises(ValueError):
        make_eval([0, 1], severity=[2, 2])
    with pytest.raises(ValueError):
        EvalSet(["a", "a"], ["x", "y"], [0, 0], [0.1, 0.2], [0, 1])


def test_partition_by_group_sums_to_n():
    ev = generate(table1_spec(seed=5))
    parts = ev.by_group()
    assert sum(len(p) for p in parts.values()) == len(ev)
    ids = [set(p.sample_id.tolist()) for p in parts.values()]
    assert sum(len(s) for s in ids) == len(set().union(*ids))


def test_table1_counts_per_group():
    ev = generate(table1_spec(seed=0))
    fx = table1_fixture()
    for g, part in ev.by_group().items():
        assert int((part.label == 0).sum()) == fx[g].n_h
        assert int((part.label == 1).sum()) == fx[g].n_d


def test_empirical_priors():
    fx = table1_fixture()
    yf = make_eval([0] * fx[GroupKey.YF].n_h + [1] * fx[GroupKey.YF].n_d)
    assert empirical_priors(yf).p_h == pytest.approx(0.757, abs=5e-4)
    assert empirical_priors(make_eval([1, 1, 1])).p_h == 0.0
    pooled = fx["pooled"]
    assert empirical_priors(np.array([0] * pooled.n_h + [1] * pooled.n_d)).p_d == pytest.approx(0.6793, abs=5e-5)
    with pytest.raises(DegenerateDataError):
        empirical_priors(np.array([], dtype=int))


def test_priors_validation():
    Priors(0.25, 0.75)
    with pytest.raises(ValueError):
        Priors(0.3, 0.6)


def test_assign_folds_one_speaker_each():
    ev = make_eval([0, 1] * 5)
    fa = assign_folds(ev, 10, seed=1)
    assert sorted(fa.speaker_fold.values()) == list(range(10))


def test_assign_folds_deterministic_and_order_invariant(rng):
    ev = generate(table1_spec(seed=2, samples_per_speaker=3))
    a = assign_folds(ev, 10, 7)
    b = assign_folds(ev, 10, 7)
    perm = rng.permutation(len(ev))
    c = assign_folds(ev.take(perm), 10, 7)
    assert a == b == c


def test_assign_folds_speaker_samples_share_fold():
    ev = generate(table1_spec(seed=2, samples_per_speaker=3))
    fa = assign_folds(ev, 10, 42)
    fold = fa.fold_of(ev)
    for spk in set(ev.speaker_id.tolist()):
        assert len(set(fold[ev.speaker_id == spk].tolist())) == 1
    sizes = np.bincount(list(fa.speaker_fold.values()))
    assert sizes.max() - sizes.min() <= 1


def test_assign_folds_too_few_speakers():
    with pytest.raises(DegenerateDataError):
        assign_folds(make_eval([0, 1, 1]), 10, 0)


def test_filter_severity():
    ev = make_eval([1, 1, 1, 0, 1], severity=[1, 2, 3, -1, -1])
    out = filter_severity(ev, 2)
    assert out.sample_id.tolist() == ["s1", "s2", "s3"]
    out0 = filter_severity(ev, 0)
    assert out0.sample_id.tolist() == ["s0", "s1", "s2", "s3"]
    with pytest.raises(ValueError):
        filter_severity(ev, 4)


def test_concat():
    a = make_eval([0, 1])
    b = EvalSet(["t0"], ["x"], [1], [0.3], [1])
    c = concat([a, b])
    assert len(c) == 3 and c[2].group is GroupKey.AF
