"""Inner loops shared by the shell families and the ROUGE set functions.

Every kernel exists twice: an explicit-loop version compiled with numba
``@njit`` and a vectorized numpy version. The numba path is used when numba
imports and ``SHELLMIX_DISABLE_NUMBA`` is unset (or ``0``). Both paths accept
the same arguments and agree to floating-point rounding; integer kernels
agree exactly.

Subsets are passed as boolean masks, either one row ``(n,)`` or a batch
``(m, n)``. The numba loops accumulate in increasing element index, so a
value never depends on the order in which a subset was built.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("SHELLMIX_DISABLE_NUMBA", "0") in ("", "0")


# ---------------------------------------------------------------- loop forms

def _cluster_sums_loop(masks, labels, values, k):
    m, n = masks.shape
    out = np.zeros((m, k))
    for s in range(m):
        for j in range(n):
            if masks[s, j]:
                out[s, labels[j]] += values[j]
    return out


def _cluster_max_loop(masks, labels, values, k):
    m, n = masks.shape
    out = np.zeros((m, k))
    for s in range(m):
        for j in range(n):
            if masks[s, j] and values[j] > out[s, labels[j]]:
                out[s, labels[j]] = values[j]
    return out


def _coverage_loop(masks, delta):
    # delta is symmetric, so row j holds the column j contributions
    m, n = masks.shape
    out = np.zeros((m, n))
    for s in range(m):
        for j in range(n):
            if masks[s, j]:
                for i in range(n):
                    out[s, i] += delta[j, i]
    return out


def _saturated_mean_loop(cov, totals, alpha):
    m, n = cov.shape
    out = np.zeros(m)
    if n == 0:
        return out
    for s in range(m):
        acc = 0.0
        for i in range(n):
            if totals[i] > 0.0:
                acc += min(cov[s, i] / totals[i], alpha)
        out[s] = acc / n
    return out


def _fidelity_gains_loop(cov, totals, delta, cand, alpha):
    n = cov.shape[0]
    out = np.zeros(cand.shape[0])
    for c in range(cand.shape[0]):
        v = cand[c]
        acc = 0.0
        for i in range(n):
            t = totals[i]
            if t > 0.0 and delta[v, i] != 0.0:
                acc += min((cov[i] + delta[v, i]) / t, alpha) - min(cov[i] / t, alpha)
        out[c] = acc / n
    return out


def _clipped_counts_loop(masks, counts, refs):
    m, n = masks.shape
    n_refs, n_grams = refs.shape
    out = np.zeros(m, dtype=np.int64)
    held = np.zeros(n_grams, dtype=np.int64)
    for s in range(m):
        held[:] = 0
        for j in range(n):
            if masks[s, j]:
                for e in range(n_grams):
                    held[e] += counts[j, e]
        total = 0
        for k in range(n_refs):
            for e in range(n_grams):
                r = refs[k, e]
                if r > 0:
                    total += min(held[e], r)
        out[s] = total
    return out


def _clipped_gains_loop(held, counts, refs, cand):
    n_refs, n_grams = refs.shape
    out = np.zeros(cand.shape[0], dtype=np.int64)
    for c in range(cand.shape[0]):
        v = cand[c]
        total = 0
        for e in range(n_grams):
            add = counts[v, e]
            if add == 0:
                continue
            for k in range(n_refs):
                r = refs[k, e]
                if r > 0:
                    total += min(held[e] + add, r) - min(held[e], r)
        out[c] = total
    return out


# ------------------------------------------------------------ numpy versions

def _cluster_sums_np(masks, labels, values, k):
    onehot = np.zeros((labels.shape[0], k))
    onehot[np.arange(labels.shape[0]), labels] = values
    return masks.astype(np.float64) @ onehot


def _cluster_max_np(masks, labels, values, k):
    m, n = masks.shape
    if n == 0 or k == 0:
        return np.zeros((m, k))
    member = np.zeros((n, k), dtype=bool)
    member[np.arange(n), labels] = True
    picked = masks[:, :, None] & member[None, :, :]
    return np.where(picked, values[None, :, None], 0.0).max(axis=1)


def _coverage_np(masks, delta):
    return masks.astype(np.float64) @ delta


def _saturated_mean_np(cov, totals, alpha):
    m, n = cov.shape
    if n == 0:
        return np.zeros(m)
    live = totals > 0.0
    ratio = np.divide(cov, totals, out=np.zeros_like(cov), where=live[None, :])
    return np.where(live[None, :], np.minimum(ratio, alpha), 0.0).sum(axis=1) / n


def _fidelity_gains_np(cov, totals, delta, cand, alpha):
    n = cov.shape[0]
    if n == 0 or cand.shape[0] == 0:
        return np.zeros(cand.shape[0])
    live = totals > 0.0
    safe = np.where(live, totals, 1.0)
    base = np.where(live, np.minimum(cov / safe, alpha), 0.0)
    new = np.where(live[None, :], np.minimum((cov[None, :] + delta[cand]) / safe, alpha), 0.0)
    return (new - base[None, :]).sum(axis=1) / n


def _clipped_counts_np(masks, counts, refs):
    held = masks.astype(np.int64) @ counts
    total = np.zeros(masks.shape[0], dtype=np.int64)
    for row in refs:
        total += np.minimum(held, row[None, :]).sum(axis=1)
    return total


def _clipped_gains_np(held, counts, refs, cand):
    new = held[None, :] + counts[cand]
    total = np.zeros(cand.shape[0], dtype=np.int64)
    for row in refs:
        total += (np.minimum(new, row[None, :]) - np.minimum(held, row)[None, :]).sum(axis=1)
    return total


NUMPY_KERNELS = {
    "cluster_sums": _cluster_sums_np,
    "cluster_max": _cluster_max_np,
    "coverage": _coverage_np,
    "saturated_mean": _saturated_mean_np,
    "fidelity_gains": _fidelity_gains_np,
    "clipped_counts": _clipped_counts_np,
    "clipped_gains": _clipped_gains_np,
}

_LOOPS = {
    "cluster_sums": _cluster_sums_loop,
    "cluster_max": _cluster_max_loop,
    "coverage": _coverage_loop,
    "saturated_mean": _saturated_mean_loop,
    "fidelity_gains": _fidelity_gains_loop,
    "clipped_counts": _clipped_counts_loop,
    "clipped_gains": _clipped_gains_loop,
}

if NUMBA_AVAILABLE:
    NUMBA_KERNELS = {name: numba.njit(cache=True)(fn) for name, fn in _LOOPS.items()}
else:  # pragma: no cover
    NUMBA_KERNELS = {}

ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS
BACKEND = "numba" if USE_NUMBA else "numpy"

cluster_sums = ACTIVE["cluster_sums"]
cluster_max = ACTIVE["cluster_max"]
coverage = ACTIVE["coverage"]
saturated_mean = ACTIVE["saturated_mean"]
fidelity_gains = ACTIVE["fidelity_gains"]
clipped_counts = ACTIVE["clipped_counts"]
clipped_gains = ACTIVE["clipped_gains"]
