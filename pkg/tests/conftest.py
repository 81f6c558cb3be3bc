import numpy as np
import pytest

from voxfair.data import EvalSet, GroupKey


def make_eval(labels, posteriors=None, groups=None, speakers=None, severity=None):
    labels = np.asarray(labels, dtype=int)
    n = labels.size
    if posteriors is None:
        posteriors = np.full(n, 0.5)
    if groups is None:
        groups = np.full(n, int(GroupKey.YF))
    ids = [f"s{i}" for i in range(n)]
    if speakers is None:
        speakers = [f"spk{i}" for i in range(n)]
    return EvalSet(ids, speakers, groups, posteriors, labels, severity)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
