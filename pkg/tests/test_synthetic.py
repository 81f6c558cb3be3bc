import json

import numpy as np
import pytest

from voxfair.data import GroupKey, assign_folds, format_eval_csv
from voxfair.errors import SchemaError
from voxfair.metrics import CostMatrix, summarize
from voxfair.synthetic import (
    GroupScenario, SyntheticSpec, apportion, generate, metadata_baseline, preset, table1_fixture, table1_spec,
)

from oracles import ranking_auc


def test_table1_preset_counts_and_mixes_exact():
    rows = table1_fixture()
    ev = generate(table1_spec(1.0, 1.0, 0.0, "table1"))
    assert len(ev) == 1974
    for g in GroupKey:
        sub = ev.take(ev.group == g)
        assert (int((sub.label == 0).sum()), int((sub.label == 1).sum())) == (rows[g].n_h, rows[g].n_d)
        grades = np.bincount(sub.severity[sub.label == 1], minlength=4)
        # every disordered speaker is graded, in the annotated proportions
        assert grades.tolist() == apportion(rows[g].n_d, rows[g].g_counts).tolist()
        expected = np.asarray(rows[g].g_counts) / sum(rows[g].g_counts)
        assert np.all(np.abs(grades / rows[g].n_d - expected) <= 1 / rows[g].n_d)
        assert np.all(sub.severity[sub.label == 0] == -1)


def test_apportion_largest_remainder():
    assert list(apportion(10, [1, 1, 1])) == [4, 3, 3]
    assert apportion(79, [32, 30, 15, 2]).tolist() == [32, 30, 15, 2]
    assert apportion(102, [32, 30, 15, 2]).tolist() == [41, 39, 19, 3]
    assert apportion(7, [0.5, 0.5]).sum() == 7


def test_generate_is_deterministic_and_seeded():
    a = generate(preset("table1-offsets", seed=3))
    b = generate(preset("table1-offsets", seed=3))
    c = generate(preset("table1-offsets", seed=4))
    assert format_eval_csv(a) == format_eval_csv(b)
    assert not np.array_equal(a.posterior, c.posterior)


def test_speakers_share_grade_and_group():
    ev = generate(preset("identity"))
    for spk in np.unique(ev.speaker_id.astype(str))[:50]:
        m = ev.speaker_id.astype(str) == spk
        assert np.unique(ev.group[m]).size == 1 and np.unique(ev.severity[m]).size == 1
        assert m.sum() == 2


def test_zero_separation_gives_chance_auc():
    spec = SyntheticSpec((GroupScenario("AM", 5000, 5000, d_prime=0.0),), seed=9)
    ev = generate(spec)
    assert abs(ranking_auc(ev.posterior, ev.label) - 0.5) <= 0.02


def test_large_separation_gives_small_cost():
    spec = SyntheticSpec((GroupScenario("AM", 2000, 2000, d_prime=6.0),), seed=9)
    ev = generate(spec)
    assert summarize(ev, cost=CostMatrix(1, 3)).get("NEC", "pooled") <= 0.05


def test_auc_tracks_d_prime():
    # binormal equal-variance: AUC = Phi(d'/sqrt(2))
    from scipy.stats import norm

    ev = generate(SyntheticSpec((GroupScenario("OF", 20000, 20000, d_prime=1.5),), seed=1))
    assert ranking_auc(ev.posterior, ev.label) == pytest.approx(norm.cdf(1.5 / np.sqrt(2)), abs=0.01)


def test_metadata_baseline_constant_per_cell():
    ev = generate(preset("table1-null"))
    folds = assign_folds(ev, 10, 42)
    base = metadata_baseline(ev, folds)
    fold = folds.fold_of(ev)
    for f in range(10):
        for g in GroupKey:
            cell = (fold == f) & (ev.group == g)
            if cell.any():
                vals = np.unique(base.posterior[cell])
                assert vals.size == 1
                train = (fold != f) & (ev.group == g)
                assert vals[0] == pytest.approx(ev.label[train].mean())


def test_spec_json_round_trip():
    spec = preset("table1-severity", seed=11)
    back = SyntheticSpec.from_json(json.dumps(spec.to_dict()))
    assert back == spec


@pytest.mark.parametrize(
    "scenario, field",
    [
        ({"group": "YF", "n_h": 1, "n_d": 1, "severity_mix": [0.5, 0.6, 0, 0]}, "scenarios[0].severity_mix"),
        ({"group": "XX", "n_h": 1, "n_d": 1}, "scenarios[0].group"),
        ({"group": "YF", "n_h": 1, "n_d": 1, "d_prime": -1}, "scenarios[0].d_prime"),
        ({"group": "YF", "n_h": 0, "n_d": 0}, "scenarios[0].n_h"),
    ],
)
def test_spec_schema_errors(scenario, field):
    with pytest.raises(SchemaError) as info:
        SyntheticSpec.from_dict({"scenarios": [scenario]})
    assert info.value.field == field


def test_severity_mix_error_names_group():
    with pytest.raises(SchemaError, match="OM"):
        GroupScenario("OM", 10, 10, severity_mix=(0.2, 0.2, 0.2, 0.2))


def test_duplicate_group_rejected():
    with pytest.raises(SchemaError):
        SyntheticSpec((GroupScenario("YF", 1, 1), GroupScenario("YF", 2, 2)))


def test_unknown_preset():
    with pytest.raises((KeyError, ValueError)):
        preset("nope")
