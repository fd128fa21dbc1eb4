"""Time the numba kernels against their numpy twins, then a full greedy run.

    python3 benchmarks/bench_kernels.py [--n 200] [--batch 256] [--repeat 20]

The end-to-end part re-runs itself in a subprocess with
SHELLMIX_DISABLE_NUMBA=1 so each backend is measured in a clean process.
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from shellmix import _kernels as K


def inputs(n, batch, grams, rng):
    masks = rng.random((batch, n)) < 0.3
    labels = rng.integers(0, max(1, n // 10), size=n).astype(np.int64)
    k = int(labels.max()) + 1
    values = rng.random(n)
    A = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.3), 1)
    delta = A + A.T
    delta[np.diag_indices(n)] = 1.0
    cov = K.NUMPY_KERNELS["coverage"](masks, delta)
    totals = delta.sum(axis=0)
    cand = np.flatnonzero(~masks[0]).astype(np.int64)
    counts = rng.poisson(0.05, size=(n, grams)).astype(np.int64)
    refs = rng.poisson(0.1, size=(4, grams)).astype(np.int64)
    held = (masks[0].astype(np.int64) @ counts)
    return {
        "cluster_sums": (masks, labels, values, k),
        "cluster_max": (masks, labels, values, k),
        "coverage": (masks, delta),
        "saturated_mean": (cov, totals, 0.3),
        "fidelity_gains": (np.ascontiguousarray(cov[0]), totals, delta, cand, 0.3),
        "clipped_counts": (masks, counts, refs),
        "clipped_gains": (held, counts, refs, cand),
    }


def best_of(fn, args, repeat):
    fn(*args)  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_table(n, batch, grams, repeat):
    if not K.NUMBA_AVAILABLE:
        print("numba is not installed; only the numpy path exists")
        return
    args = inputs(n, batch, grams, np.random.default_rng(0))
    print(f"kernels: n={n} batch={batch} grams={grams} (best of {repeat})")
    print(f"{'kernel':<16} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'max |diff|':>11}")
    for name, a in args.items():
        t_np = best_of(K.NUMPY_KERNELS[name], a, repeat)
        t_nb = best_of(K.NUMBA_KERNELS[name], a, repeat)
        diff = np.max(np.abs(np.asarray(K.NUMPY_KERNELS[name](*a), dtype=float)
                             - np.asarray(K.NUMBA_KERNELS[name](*a), dtype=float)))
        print(f"{name:<16} {t_np * 1e3:10.3f} {t_nb * 1e3:10.3f} {t_np / t_nb:8.2f} {diff:11.3g}")


def end_to_end(instances):
    from shellmix.maximize import BudgetConstraint, greedy_knapsack
    from shellmix.pipeline import featurize
    from shellmix.shells import instantiate_all
    from shellmix.core import Mixture
    from shellmix.synth import SynthSpec, synth_corpus

    spec = SynthSpec(instances=instances, sentences=80, seed=1)
    corpus = synth_corpus(spec)
    t0 = time.perf_counter()
    picks = []
    for inst in corpus:
        ground, feats, _, con = featurize(inst, spec.recipe)
        comps = instantiate_all(spec.planted_shells, feats, ground)
        mix = Mixture(comps, np.ones(len(comps)))
        picks.append(list(greedy_knapsack(mix, BudgetConstraint(con.budget, con.costs)).selected))
    return {"backend": K.BACKEND, "seconds": time.perf_counter() - t0, "picks": picks}


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--grams", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = p.parse_args()
    if args.child:
        print(json.dumps(end_to_end(args.instances)))
        return
    kernel_table(args.n, args.batch, args.grams, args.repeat)

    runs = {}
    for flag in ("0", "1"):
        env = dict(os.environ, SHELLMIX_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, __file__, "--child", "--instances",
                              str(args.instances)], env=env, check=True,
                             capture_output=True, text=True).stdout
        res = json.loads(out.strip().splitlines()[-1])
        runs[res["backend"]] = res
    print(f"\ngreedy summaries on {args.instances} synthetic instances (80 sentences):")
    for name, res in runs.items():
        print(f"  {name:<6} {res['seconds']:.3f} s")
    if len(runs) == 2:
        same = runs["numba"]["picks"] == runs["numpy"]["picks"]
        print(f"  identical selections: {same}")


if __name__ == "__main__":
    main()
