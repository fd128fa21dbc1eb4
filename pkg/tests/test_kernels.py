import os
import subprocess
import sys

import numpy as np
import pytest

from shellmix import _kernels as K

pytestmark = pytest.mark.skipif(not K.NUMBA_AVAILABLE, reason="numba not installed")


def args_for(rng, n=23, m=7, grams=40):
    masks = rng.random((m, n)) < 0.4
    labels = rng.integers(0, 5, n).astype(np.int64)
    values = rng.random(n)
    A = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.5), 1)
    delta = A + A.T
    delta[np.diag_indices(n)] = 1.0
    cov = K.NUMPY_KERNELS["coverage"](masks, delta)
    totals = delta.sum(axis=0)
    cand = np.flatnonzero(~masks[0]).astype(np.int64)
    counts = rng.integers(0, 3, (n, grams)).astype(np.int64)
    refs = rng.integers(0, 3, (3, grams)).astype(np.int64)
    held = masks[0].astype(np.int64) @ counts
    return {
        "cluster_sums": (masks, labels, values, 5),
        "cluster_max": (masks, labels, values, 5),
        "coverage": (masks, delta),
        "saturated_mean": (cov, totals, 0.3),
        "fidelity_gains": (np.ascontiguousarray(cov[0]), totals, delta, cand, 0.3),
        "clipped_counts": (masks, counts, refs),
        "clipped_gains": (held, counts, refs, cand),
    }


@pytest.mark.parametrize("seed", range(5))
def test_backends_agree(seed):
    for name, a in args_for(np.random.default_rng(seed)).items():
        x = K.NUMPY_KERNELS[name](*a)
        y = K.NUMBA_KERNELS[name](*a)
        if np.asarray(x).dtype.kind == "i":
            assert np.array_equal(x, y), name
        else:
            np.testing.assert_allclose(x, y, rtol=0, atol=1e-12, err_msg=name)


def test_env_flag_selects_numpy():
    code = ("from shellmix import BACKEND; from shellmix.synth import random_mixture;"
            "from shellmix.maximize import greedy_knapsack, BudgetConstraint; import numpy as np;"
            "f, g = random_mixture(15, np.random.default_rng(1));"
            "r = greedy_knapsack(f, BudgetConstraint(0.3 * sum(g.costs), g.costs));"
            "print(BACKEND, list(r.selected))")
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, SHELLMIX_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                             text=True, check=True)
        backend, sel = res.stdout.strip().split(" ", 1)
        out[backend] = sel
    assert set(out) == {"numpy", "numba"}
    assert out["numpy"] == out["numba"]
