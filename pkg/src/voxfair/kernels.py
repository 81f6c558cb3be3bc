"""Numeric inner loops.

Every kernel exists twice: a loop version compiled with numba (``*_nb``) and a
vectorised numpy version (``*_np``). The public name binds to one of them at
import time according to :data:`voxfair._accel.USE_JIT`. Both versions are
exercised by the test-suite, so either may be selected in production.
"""

import math

import numpy as np

from ._accel import USE_JIT, njit

__all__ = [
    "pav_blocks",
    "logistic_fit",
    "logistic_objective",
    "gather_speakers",
    "cell_counts",
    "BACKEND",
]


# --------------------------------------------------------------------------
# Pool adjacent violators
# --------------------------------------------------------------------------

@njit(cache=True)
def _pav_blocks_nb(scores, y):
    n = scores.shape[0]
    upper = np.empty(n)
    total = np.empty(n)
    weight = np.empty(n)
    m = 0
    i = 0
    while i < n:
        s = scores[i]
        t = 0.0
        w = 0.0
        while i < n and scores[i] == s:
            t += y[i]
            w += 1.0
            i += 1
        upper[m] = s
        total[m] = t
        weight[m] = w
        m += 1
        # pool while the previous block mean exceeds the current one
        while m > 1 and total[m - 2] * weight[m - 1] > total[m - 1] * weight[m - 2]:
            total[m - 2] += total[m - 1]
            weight[m - 2] += weight[m - 1]
            upper[m - 2] = upper[m - 1]
            m -= 1
    return upper[:m].copy(), total[:m] / weight[:m], weight[:m].copy()


def _pav_blocks_np(scores, y):
    uniq, first, counts = np.unique(scores, return_index=True, return_counts=True)
    sums = np.add.reduceat(y, first) if len(y) else np.empty(0)
    upper, total, weight = [], [], []
    for s, t, w in zip(uniq.tolist(), sums.tolist(), counts.tolist()):
        upper.append(s)
        total.append(t)
        weight.append(float(w))
        while len(total) > 1 and total[-2] * weight[-1] > total[-1] * weight[-2]:
            t_last, w_last, u_last = total.pop(), weight.pop(), upper.pop()
            total[-1] += t_last
            weight[-1] += w_last
            upper[-1] = u_last
    total = np.asarray(total, dtype=float)
    weight = np.asarray(weight, dtype=float)
    return np.asarray(upper, dtype=float), total / weight, weight


# --------------------------------------------------------------------------
# Logistic (affine) fit by damped Newton
# --------------------------------------------------------------------------

@njit(cache=True)
def _softplus(z):
    if z > 0.0:
        return z + math.log1p(math.exp(-z))
    return math.log1p(math.exp(z))


@njit(cache=True)
def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def _logistic_terms_nb(x, y, a, b):
    n = x.shape[0]
    f = 0.0
    ga = 0.0
    gb = 0.0
    haa = 0.0
    hab = 0.0
    hbb = 0.0
    for i in range(n):
        z = a * x[i] + b
        f += _softplus(z) - y[i] * z
        s = _sigmoid(z)
        r = s - y[i]
        ga += r * x[i]
        gb += r
        v = s * (1.0 - s)
        haa += v * x[i] * x[i]
        hab += v * x[i]
        hbb += v
    return f / n, ga / n, gb / n, haa / n, hab / n, hbb / n


@njit(cache=True)
def _logistic_value_nb(x, y, a, b):
    n = x.shape[0]
    f = 0.0
    for i in range(n):
        z = a * x[i] + b
        f += _softplus(z) - y[i] * z
    return f / n


def _logistic_value_np(x, y, a, b):
    z = a * x + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def _logistic_terms_np(x, y, a, b):
    z = a * x + b
    s = np.exp(-np.logaddexp(0.0, -z))
    r = s - y
    v = s * (1.0 - s)
    f = np.mean(np.logaddexp(0.0, z) - y * z)
    return (
        float(f),
        float(np.mean(r * x)),
        float(np.mean(r)),
        float(np.mean(v * x * x)),
        float(np.mean(v * x)),
        float(np.mean(v)),
    )


def _make_newton(terms, value):
    def newton(x, y, a, b, max_iter, tol):
        f, ga, gb, haa, hab, hbb = terms(x, y, a, b)
        it = 0
        while it < max_iter:
            if max(abs(ga), abs(gb)) <= tol:
                break
            it += 1
            det = haa * hbb - hab * hab
            if det > 1e-14 * (haa * hbb + 1e-300):
                da = (hbb * ga - hab * gb) / det
                db = (haa * gb - hab * ga) / det
            else:
                # rank deficient (e.g. constant scores): diagonal step
                da = ga / haa if haa > 1e-300 else 0.0
                db = gb / hbb if hbb > 1e-300 else 0.0
            slope = ga * da + gb * db
            # objective values are only resolvable to a few ulps
            noise = 1e-14 * (1.0 + abs(f))
            t = 1.0
            accepted = False
            for _ in range(60):
                fa = value(x, y, a - t * da, b - t * db)
                if fa <= f - 1e-4 * t * slope + noise:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                break
            a = a - t * da
            b = b - t * db
            f, ga, gb, haa, hab, hbb = terms(x, y, a, b)
        return a, b, f, max(abs(ga), abs(gb)), it

    return newton


_logistic_fit_nb = njit(cache=False)(_make_newton(_logistic_terms_nb, _logistic_value_nb))
_logistic_fit_np = _make_newton(_logistic_terms_np, _logistic_value_np)


# --------------------------------------------------------------------------
# Speaker-level bootstrap gather
# --------------------------------------------------------------------------

@njit(cache=True)
def _gather_speakers_nb(offsets, members, draws):
    total = 0
    for k in range(draws.shape[0]):
        s = draws[k]
        total += offsets[s + 1] - offsets[s]
    out = np.empty(total, dtype=np.int64)
    pos = 0
    for k in range(draws.shape[0]):
        s = draws[k]
        for j in range(offsets[s], offsets[s + 1]):
            out[pos] = members[j]
            pos += 1
    return out


def _gather_speakers_np(offsets, members, draws):
    starts = offsets[draws]
    lengths = offsets[draws + 1] - starts
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    block_start = np.cumsum(lengths) - lengths
    pos = np.arange(total, dtype=np.int64) - np.repeat(block_start, lengths)
    return members[np.repeat(starts, lengths) + pos].astype(np.int64)


# --------------------------------------------------------------------------
# Confusion counts per cell
# --------------------------------------------------------------------------

@njit(cache=True)
def _cell_counts_nb(cells, labels, decisions, n_cells):
    out = np.zeros((n_cells, 2, 2), dtype=np.int64)
    for i in range(cells.shape[0]):
        out[cells[i], labels[i], decisions[i]] += 1
    return out


def _cell_counts_np(cells, labels, decisions, n_cells):
    flat = (cells.astype(np.int64) * 4) + labels.astype(np.int64) * 2 + decisions.astype(np.int64)
    return np.bincount(flat, minlength=n_cells * 4).reshape(n_cells, 2, 2)


if USE_JIT:
    BACKEND = "numba"
    _pav_blocks = _pav_blocks_nb
    _logistic_fit = _logistic_fit_nb
    _gather = _gather_speakers_nb
    _cell_counts = _cell_counts_nb
    _logistic_value = _logistic_value_nb
else:
    BACKEND = "numpy"
    _pav_blocks = _pav_blocks_np
    _logistic_fit = _logistic_fit_np
    _gather = _gather_speakers_np
    _cell_counts = _cell_counts_np
    _logistic_value = _logistic_value_np


def pav_blocks(scores, y):
    """Isotonic blocks of ``y`` against sorted ``scores``.

    Parameters
    ----------
    scores : ndarray
        Scores sorted ascending.
    y : ndarray
        Targets in [0, 1] aligned with ``scores``.

    Returns
    -------
    upper, mean, weight : ndarray
        Largest score, pooled target mean and sample count of each block.
        Tied scores always share a block; block means are nondecreasing.
    """
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return _pav_blocks(scores, y)


def logistic_fit(x, y, a0=1.0, b0=0.0, max_iter=500, tol=1e-9):
    """Minimise mean log-loss of ``sigmoid(a*x + b)`` against ``y``.

    Returns ``(a, b, objective, grad_max_norm, iterations)``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    a, b, f, g, it = _logistic_fit(x, y, float(a0), float(b0), int(max_iter), float(tol))
    return float(a), float(b), float(f), float(g), int(it)


def logistic_objective(x, y, a, b):
    """Mean log-loss (nats) of ``sigmoid(a*x + b)`` against ``y``, unclamped."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return float(_logistic_value(x, y, float(a), float(b)))


def gather_speakers(offsets, members, draws):
    """Sample indices of the drawn speakers, concatenated in draw order."""
    return _gather(
        np.ascontiguousarray(offsets, dtype=np.int64),
        np.ascontiguousarray(members, dtype=np.int64),
        np.ascontiguousarray(draws, dtype=np.int64),
    )


def cell_counts(cells, labels, decisions, n_cells):
    """``counts[c, label, decision]`` over integer cell codes."""
    return _cell_counts(
        np.ascontiguousarray(cells, dtype=np.int64),
        np.ascontiguousarray(labels, dtype=np.int64),
        np.ascontiguousarray(decisions, dtype=np.int64),
        int(n_cells),
    )
