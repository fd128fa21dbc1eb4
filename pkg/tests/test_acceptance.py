"""The ten acceptance criteria, each at its stated size and tolerance.

Every test records one ``PASS``/``FAIL`` line (shown in the terminal summary)
before asserting.
"""
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from shellmix.learn import auto_lambda, risk_bound
from shellmix.shells import instantiate_all
from shellmix.textproc import CorpusInstance, build_features, generic_ensemble, \
    query_focused_ensemble
from shellmix.verify import (
    greedy_suite, mixture_suite, rouge_suite, setcover_suite, shell_suite, subgradient_suite,
)

pytestmark = pytest.mark.acceptance


def record(number, ok, text):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_01_shell_submodularity():
    res = shell_suite(params=10, trials=1000, max_n=30, tol=1e-9)
    ok = res.violations == 0 and res.seconds <= 60
    record(1, ok, f"shell families: {res.violations} violations in {res.checks} checks, "
                  f"{res.seconds:.1f}s")
    assert ok


def test_02_mixture_closure():
    res = mixture_suite(mixtures=100, size=5, trials=1000, max_n=30, tol=1e-9)
    ok = res.violations == 0 and res.seconds <= 60
    record(2, ok, f"mixtures: {res.violations} violations in {res.checks} checks, "
                  f"{res.seconds:.1f}s")
    assert ok


def test_03_greedy_guarantees():
    res = greedy_suite(knapsack=200, cardinality=200, n=12, k=4, budget_fraction=0.4)
    d = res.detail
    ok = res.violations == 0 and res.seconds <= 300
    record(3, ok, f"knapsack min {d['knapsack_min']:.4f} mean {d['knapsack_mean']:.4f} "
                  f"(>= {1 - 1 / math.sqrt(math.e):.4f}); cardinality min "
                  f"{d['cardinality_min']:.4f} mean {d['cardinality_mean']:.4f} "
                  f"(>= {1 - 1 / math.e:.4f}); {res.seconds:.1f}s")
    assert ok


def test_04_loss_modularity():
    res = rouge_suite(corpora=20, pairs=500, trials=1000)
    ok = res.violations == 0 and res.seconds <= 60
    record(4, ok, f"exact modularity + ROUGE-N suites: {res.violations} violations in "
                  f"{res.checks} checks, {res.seconds:.1f}s")
    assert ok


def test_05_setcover_equivalence():
    res = setcover_suite(instances=50, n=8, universe=12)
    ok = res.violations == 0 and res.checks == 50 * 256 and res.seconds <= 10
    record(5, ok, f"set cover: {res.violations} mismatches on {res.checks} subsets, "
                  f"{res.seconds:.1f}s")
    assert ok


def test_06_subgradient_validity():
    res = subgradient_suite(steps=50, probes=100, max_n=10, tol=1e-9)
    ok = res.violations == 0 and res.checks == 5000 and res.seconds <= 120
    record(6, ok, f"subgradient inequality: {res.violations} violations in {res.checks} "
                  f"probes, worst gap {res.detail['worst_gap']:.3g}, {res.seconds:.1f}s")
    assert ok


def test_07_planted_weight_recovery(planted_runs):
    runs, seconds = planted_runs
    hits = sum(int(np.argmax(r["weights"]) == r["planted"]) for r in runs)
    learned = float(np.mean([r["learned_loss"] for r in runs]))
    planted = float(np.mean([r["planted_loss"] for r in runs]))
    argmax_ok = hits >= 18
    loss_ok = learned <= 1.2 * planted
    ok = argmax_ok and loss_ok and seconds <= 600
    record(7, ok, f"argmax recovered in {hits}/20 seeds ({'ok' if argmax_ok else 'short'}); "
                  f"held-out loss learned {learned:.4f} vs 1.2 x planted {1.2 * planted:.4f} "
                  f"({'ok' if loss_ok else 'exceeded'}); {seconds:.1f}s")
    assert ok


def test_08_risk_bound_arithmetic():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        G = float(rng.uniform(0, 10))
        M = int(rng.integers(1, 50))
        T = int(rng.integers(1, 100_000))
        want = (G / M) * math.sqrt(2 * (1 + math.log(T)) / T)
        worst = max(worst, abs(auto_lambda(G, M, T) - want))
        rep = risk_bound(M, G, 1.0, 0.5, 0.05, T)
        worst = max(worst, abs(rep.lam - want))
    rep = risk_bound(4, 1.5, 2.0, 0.25, 0.1, 500)
    terms = ((4 * 1.5 / 0.25) * math.sqrt(2 * (1 + math.log(500)) / 500),
             2.0 * math.sqrt((2 / 500) * math.log(10)),
             (0.75 / 0.25) * 4)
    terms_ok = all(abs(a - b) <= 1e-12 for a, b in zip(rep.terms, terms))
    exact_third = risk_bound(4, 1.5, 2.0, 1.0, 0.1, 500).terms[2] == 0.0
    ok = worst <= 1e-12 and terms_ok and exact_third
    record(8, ok, f"addends {'match' if terms_ok else 'differ'}; rho=1 third addend "
                  f"{'zero' if exact_third else 'nonzero'}; auto-lambda max error {worst:.2g}")
    assert ok


def _cli(*args, cwd):
    env = dict(os.environ)
    subprocess.run([sys.executable, "-m", "shellmix", *map(str, args), "-q"], cwd=cwd,
                   env=env, check=True, capture_output=True)


def test_09_determinism(tmp_path):
    from shellmix import io
    from shellmix.synth import SynthSpec

    io.write_json(tmp_path / "spec.json", SynthSpec(instances=10, sentences=14, seed=9).to_dict())
    for k in (1, 2):
        _cli("synth", "spec.json", "-o", f"c{k}.jsonl", "--write-recipe", f"r{k}.json",
             cwd=tmp_path)
        _cli("train", f"c{k}.jsonl", "--recipe", f"r{k}.json", "-o", f"m{k}.json",
             "--trace-out", f"t{k}.jsonl", "--seed", 9, cwd=tmp_path)
        _cli("summarize", f"m{k}.json", f"c{k}.jsonl", "-o", f"s{k}.jsonl", cwd=tmp_path)
    same = {name: (tmp_path / name.format(1)).read_bytes() == (tmp_path / name.format(2)).read_bytes()
            for name in ("c{}.jsonl", "r{}.json", "m{}.json", "t{}.jsonl", "s{}.jsonl")}
    ok = all(same.values())
    record(9, ok, "byte-identical reruns: " + ", ".join(
        f"{n.format('')}={'yes' if v else 'NO'}" for n, v in same.items()))
    assert ok


def test_10_experiment_shapes():
    sents = [f"Solar power sentence {i} about panels and grids number {i}." for i in range(20)]
    qf_recipe, qf_shells = query_focused_ensemble()
    inst = CorpusInstance("q", sents, [sents[:3]], 30.0, query="solar power grids")
    ground, feats, _ = build_features(inst, qf_recipe)
    qf = instantiate_all(qf_shells, feats, ground)

    g_recipe, g_shells = generic_ensemble(external=("lsa",))
    ext = CorpusInstance("g", sents, [sents[:3]], 30.0, similarities={"lsa": np.eye(20)})
    ground, feats, _ = build_features(ext, g_recipe)
    gen = instantiate_all(g_shells, feats, ground)
    families = {s.family for s in g_shells}
    ok = len(qf) == 25 and len(gen) == 15 and families == {"fidelity"}
    record(10, ok, f"query-focused ensemble {len(qf)} components (want 25); generic ensemble "
                   f"{len(gen)} fidelity components (want 15)")
    assert ok
