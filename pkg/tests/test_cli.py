import json
import os
import subprocess
import sys

import numpy as np

from voxfair.cli import RunConfig, histogram_table, main, run_evaluate
from voxfair.data import format_eval_csv, parse_eval_csv
from voxfair.report import MetricReport
from voxfair.synthetic import generate, preset

from conftest import make_eval


def _synth(tmp_path, name, seed=None):
    out = tmp_path / f"{name}.csv"
    argv = ["synth", "--preset", name, "--out", str(out)]
    if seed is not None:
        argv += ["--seed", str(seed)]
    assert main(argv) == 0
    return out


def _error_line(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert err[0].startswith("voxfair: error kind=")
    return err[0]


def test_synth_byte_identical_and_row_count(tmp_path):
    a = _synth(tmp_path, "table1-null")
    b = tmp_path / "again.csv"
    assert main(["synth", "--preset", "table1-null", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 1974 + 1


def test_synth_from_spec_file(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(preset("identity", seed=5).to_dict()))
    out = tmp_path / "o.csv"
    assert main(["synth", "--spec", str(spec), "--out", str(out)]) == 0
    assert out.read_text() == format_eval_csv(generate(preset("identity", seed=5)))


def test_synth_invalid_mix_names_group(tmp_path, capsys):
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps({"scenarios": [{"group": "AM", "n_h": 3, "n_d": 3, "severity_mix": [1, 1, 0, 0]}]}))
    assert main(["synth", "--spec", str(spec), "--out", str(tmp_path / "x.csv")]) == 2
    line = _error_line(capsys)
    assert "AM" in line and "code=2" in line
    assert not (tmp_path / "x.csv").exists()


def test_schema_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("sample_id,speaker_id,gender,age,posterior_disordered,label,severity\nu1,s1,X,25,0.5,healthy,\n")
    assert main(["evaluate", "--input", str(bad)]) == 2
    assert "kind=schema" in _error_line(capsys)


def test_degenerate_exit_3(tmp_path, capsys):
    ev = make_eval([0, 0, 0, 1, 1, 1] + [1] * 6, np.linspace(0.1, 0.9, 12), groups=[0] * 6 + [1] * 6)
    path = tmp_path / "deg.csv"
    path.write_text(format_eval_csv(ev))
    assert main(["evaluate", "--input", str(path), "--calibration", "group-wise", "--folds", "3"]) == 3
    line = _error_line(capsys)
    assert "kind=degenerate" in line and "AF" in line


def test_io_exit_4(tmp_path, capsys):
    assert main(["evaluate", "--input", str(tmp_path / "missing.csv")]) == 4
    _error_line(capsys)
    src = _synth(tmp_path, "identity")
    capsys.readouterr()
    assert main(["evaluate", "--input", str(src), "--out-json", str(tmp_path / "no" / "dir" / "r.json")]) == 4
    assert "kind=io" in _error_line(capsys)


def test_run_config_defaults():
    c = RunConfig(input="x.csv")
    assert (c.c_fp, c.c_fn, c.folds, c.seed, c.replicates, c.confidence) == (1.0, 3.0, 10, 42, 1000, 0.95)
    assert c.calibration == "none" and not c.bootstrap and c.min_g is None


def _report(path, **kw):
    return run_evaluate(RunConfig(input=str(path), **kw))


def test_evaluate_identity_fixture_global_within_noise(tmp_path):
    src = _synth(tmp_path, "identity")
    raw = _report(src)
    glob = _report(src, calibration="global")
    assert abs(raw.get("NXE", "pooled") - glob.get("NXE", "pooled")) <= 0.02
    assert abs(raw.get("NXE", "avg") - glob.get("NXE", "avg")) <= 0.02


def test_evaluate_group_wise_beats_global_on_offsets(tmp_path):
    src = _synth(tmp_path, "table1-offsets")
    glob = _report(src, calibration="global")
    gw = _report(src, calibration="group-wise")
    assert gw.get("NXE", "avg") < glob.get("NXE", "avg")


def test_evaluate_min_g_lowers_r_fn(tmp_path):
    src = _synth(tmp_path, "table1-severity")
    full = _report(src)
    hi = _report(src, min_g=2)
    for g in full.groups:
        assert hi.rates[g].r_fn < full.rates[g].r_fn
    full = _report(src, calibration="group-wise")
    hi = _report(src, calibration="group-wise", min_g=2)
    for g in full.groups:
        assert hi.rates[g].r_fn <= full.rates[g].r_fn


def test_evaluate_json_deterministic_and_round_trips(tmp_path, capsys):
    src = _synth(tmp_path, "table1-offsets")
    outs = []
    j, t = tmp_path / "r.json", tmp_path / "r.txt"
    for _ in range(2):
        assert main(["evaluate", "--input", str(src), "--calibration", "global",
                     "--out-json", str(j), "--out-text", str(t)]) == 0
        outs.append(j.read_bytes())
    assert outs[0] == outs[1]
    rep = MetricReport.from_json(outs[0].decode())
    prov = json.loads(outs[0])["provenance"]
    assert prov["config"]["calibration"] == "global" and len(prov["input_sha256"]) == 64
    assert rep.get("NXE", "pooled") == _report(src, calibration="global").get("NXE", "pooled")


def test_evaluate_text_to_stdout(tmp_path, capsys):
    src = _synth(tmp_path, "identity")
    capsys.readouterr()
    assert main(["evaluate", "--input", str(src)]) == 0
    out = capsys.readouterr().out
    assert "NEC3" in out and "pooled" in out


def test_evaluate_bootstrap_cells(tmp_path):
    src = _synth(tmp_path, "identity")
    rep = _report(src, bootstrap=True, replicates=100)
    cell = rep.intervals["NXE"]["avg"]
    assert cell.ci_low <= cell.ci_high and cell.b_effective == 100
    d = json.loads(rep.to_json())
    assert set(d["cells"]["NXE"]["avg"]) == {"value", "ci_low", "ci_high", "b_effective"}


def test_bootstrap_subcommand(tmp_path, capsys):
    src = _synth(tmp_path, "identity")
    capsys.readouterr()
    argv = ["bootstrap", "--input", str(src), "--metric", "NEC3", "--column", "pooled", "--replicates", "100"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == first
    res = json.loads(first)
    assert res["ci_low"] <= res["ci_high"]


def test_hist_areas(tmp_path):
    src = _synth(tmp_path, "table1-severity")
    out = tmp_path / "h.csv"
    assert main(["hist", "--input", str(src), "--transform", "llr", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "group,class,bin_low,bin_high,density"
    assert len(lines) == 1 + 12 * 50
    table = histogram_table(parse_eval_csv(src.read_text()), "log-odds")
    edges = table.series[0].edges
    assert edges.size == 51 and edges[0] == -edges[-1] and float(edges[-1]).is_integer()
    for s in table.series:
        assert abs(s.area - 1) <= 1e-9


def test_hist_prior_system_spike_at_zero():
    labels = [0, 0, 0, 1] * 5 + [1, 1, 0, 1] * 5
    groups = [0] * 20 + [4] * 20
    post = [0.25] * 20 + [0.75] * 20
    table = histogram_table(make_eval(labels, post, groups=groups), "llr")
    for s in table.series:
        nz = np.flatnonzero(s.density)
        assert nz.size == 1
        assert s.edges[nz[0]] <= 0 < s.edges[nz[0] + 1] or s.edges[nz[0]] < 0 <= s.edges[nz[0] + 1]


def test_hist_min_g_restricts_disordered(caplog):
    ev = generate(preset("table1-severity"))
    full = histogram_table(ev, "llr")
    hi = histogram_table(ev, "llr", min_g=2)
    for a, b in zip(full.series, hi.series):
        if a.cls == "healthy":
            assert a.n == b.n
        else:
            assert b.n < a.n


def test_hist_empty_series_warns(caplog):
    ev = make_eval([0, 0, 1, 1], [0.2, 0.3, 0.6, 0.7], severity=[-1, -1, 0, 1])
    with caplog.at_level("WARNING"):
        table = histogram_table(ev, "llr", min_g=2)
    dis = [s for s in table.series if s.cls == "disordered"][0]
    assert dis.n == 0 and not dis.density.any()
    assert "empty series" in caplog.text


def test_jit_flag_selects_numpy_backend():
    env = dict(os.environ, VOXFAIR_DISABLE_JIT="1")
    out = subprocess.run([sys.executable, "-c", "import voxfair.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "voxfair.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "voxfair" in out.stdout
