"""Property suites run by ``shellmix verify`` and by the acceptance tests.

Each suite returns a :class:`SuiteResult`; ``passed`` is the verdict, while
``detail`` carries the numbers worth printing (worst gaps, ratio quantiles).
"""
from dataclasses import dataclass, field
import itertools
import math
import time

import numpy as np

from ._rng import stream
from .core import FunctionOf, Mixture, check_monotone, check_submodular
from .learn import GREEDY_RHO, TrainInstance, lai, subgradient
from .losses import EllRouge, RougeN, build_ngram_table, ell_rouge_exact
from .maximize import BudgetConstraint, brute_force, greedy_cardinality, greedy_knapsack
from .shells import FAMILIES, instantiate_all, setcover_from_truncations
from .synth import random_features, random_mixture, random_shell

CARDINALITY_RHO = 1.0 - 1.0 / math.e


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checks: int
    violations: int
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        extra = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(self.detail.items())
                         if not isinstance(v, (list, tuple)))
        return (f"{verdict} {self.name}: {self.checks} checks, {self.violations} violations"
                + (f" ({extra})" if extra else ""))


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _timed(fn):
    def run(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


# --------------------------------------------------------------- toy text

def toy_table(n_sentences, rng, vocab=10, order=None, refs=None):
    """Random tokenized instance: sentences over a tiny vocabulary."""
    words = [f"t{i}" for i in range(vocab)]
    order = order or int(rng.integers(1, 3))
    sents = [list(rng.choice(words, size=int(rng.integers(2, 8)))) for _ in range(n_sentences)]
    refs = refs or int(rng.integers(1, 4))
    references = [list(rng.choice(words, size=int(rng.integers(3, 12)))) for _ in range(refs)]
    return build_ngram_table(sents, references, n=order)


# ----------------------------------------------------------------- suites

@_timed
def shell_suite(seed=0, params=10, trials=1000, max_n=30, tol=1e-9):
    """Every family x random parameterizations: diminishing returns and monotonicity."""
    violations = checks = 0
    worst = 0.0
    for fam in FAMILIES:
        for p in range(params):
            rng = stream(seed, "verify-shell", fam, p)
            n = int(rng.integers(2, max_n + 1))
            ground, feats = random_features(n, rng)
            f = instantiate_all([random_shell(fam, rng)], feats, ground)[0]
            sub = check_submodular(f, trials, seed=int(rng.integers(2**31)), tol=tol)
            mono = check_monotone(f, trials, seed=int(rng.integers(2**31)), tol=tol)
            checks += sub.trials + mono.trials
            violations += sub.violations + mono.violations
            worst = max(worst, sub.worst_gap, mono.worst_gap)
    return SuiteResult("shells", violations == 0, checks, violations,
                       detail={"worst_gap": worst})


@_timed
def mixture_suite(seed=0, mixtures=100, size=5, trials=1000, max_n=30, tol=1e-9):
    """Nonnegative mixtures of random shells stay monotone submodular."""
    violations = checks = 0
    worst = 0.0
    for m in range(mixtures):
        rng = stream(seed, "verify-mixture", m)
        f, _ = random_mixture(int(rng.integers(2, max_n + 1)), rng, size=size)
        sub = check_submodular(f, trials, seed=int(rng.integers(2**31)), tol=tol)
        mono = check_monotone(f, trials, seed=int(rng.integers(2**31)), tol=tol)
        checks += sub.trials + mono.trials
        violations += sub.violations + mono.violations
        worst = max(worst, sub.worst_gap, mono.worst_gap)
    return SuiteResult("mixtures", violations == 0, checks, violations,
                       detail={"worst_gap": worst})


def _ratio(got, best):
    return 1.0 if best <= 0 else got / best


@_timed
def greedy_suite(seed=0, knapsack=200, cardinality=200, n=12, k=4, budget_fraction=0.4):
    """Greedy value over the brute-force optimum on random monotone mixtures."""
    kn, card = [], []
    for i in range(knapsack):
        rng = stream(seed, "verify-knapsack", i)
        f, ground = random_mixture(n, rng)
        con = BudgetConstraint(budget_fraction * math.fsum(ground.costs), ground.costs)
        kn.append(_ratio(greedy_knapsack(f, con).value, brute_force(f, con).value))
    for i in range(cardinality):
        rng = stream(seed, "verify-cardinality", i)
        f, _ = random_mixture(n, rng)
        best = brute_force(f, BudgetConstraint.cardinality(n, k)).value
        card.append(_ratio(greedy_cardinality(f, k).value, best))
    kn, card = np.array(kn), np.array(card)
    bad = int(np.sum(kn < GREEDY_RHO - 1e-12) + np.sum(card < CARDINALITY_RHO - 1e-12))
    detail = {
        "knapsack_min": float(kn.min()) if kn.size else 1.0,
        "knapsack_mean": float(kn.mean()) if kn.size else 1.0,
        "cardinality_min": float(card.min()) if card.size else 1.0,
        "cardinality_mean": float(card.mean()) if card.size else 1.0,
        "knapsack_ratios": kn.tolist(),
        "cardinality_ratios": card.tolist(),
    }
    return SuiteResult("greedy", bad == 0, kn.size + card.size, bad, detail=detail)


@_timed
def rouge_suite(seed=0, corpora=20, pairs=500, trials=1000, max_sentences=12):
    """Exact modularity of the complement loss; ROUGE-N monotone submodular."""
    violations = checks = 0
    for c in range(corpora):
        rng = stream(seed, "verify-rouge", c)
        n = int(rng.integers(2, max_sentences + 1))
        table = toy_table(n, rng)
        for _ in range(pairs):
            S = set(np.flatnonzero(rng.random(n) < 0.5).tolist())
            T = set(np.flatnonzero(rng.random(n) < 0.5).tolist())
            lhs = ell_rouge_exact(S, table) + ell_rouge_exact(T, table)
            rhs = ell_rouge_exact(S | T, table) + ell_rouge_exact(S & T, table)
            checks += 1
            violations += lhs != rhs
        if table.ref_counts.sum() > 0:
            f = RougeN(table)
            sub = check_submodular(f, trials, seed=int(rng.integers(2**31)))
            mono = check_monotone(f, trials, seed=int(rng.integers(2**31)))
            checks += sub.trials + mono.trials
            violations += sub.violations + mono.violations
    return SuiteResult("rouge", violations == 0, checks, violations)


@_timed
def setcover_suite(seed=0, instances=50, n=8, universe=12):
    """Truncation mixtures reproduce union cardinality on every subset."""
    violations = checks = 0
    for i in range(instances):
        rng = stream(seed, "verify-setcover", i)
        sets = [set(np.flatnonzero(rng.random(universe) < rng.uniform(0.1, 0.6)).tolist())
                for _ in range(n)]
        f = setcover_from_truncations(sets, universe)
        for r in range(n + 1):
            for B in itertools.combinations(range(n), r):
                want = len(set().union(*(sets[j] for j in B)))
                checks += 1
                violations += f(B) != want
    return SuiteResult("setcover", violations == 0, checks, violations)


def _subgradient_instances(seed, count, max_n, shells):
    out = []
    for i in range(count):
        rng = stream(seed, "verify-subgradient-instance", i)
        n = int(rng.integers(3, max_n + 1))
        ground, feats = random_features(n, rng)
        specs = [random_shell(FAMILIES[int(rng.integers(len(FAMILIES)))], rng)
                 for _ in range(shells)]
        comps = instantiate_all(specs, feats, ground)
        table = toy_table(n, rng)
        con = BudgetConstraint(0.5 * math.fsum(ground.costs), ground.costs)
        target = brute_force(Mixture(comps, rng.random(shells)), con).selected
        out.append(TrainInstance(f"toy-{i}", comps, EllRouge(table), con, target))
    return out


def regularized_hinge(w, inst, lam, solver="brute"):
    """``hinge(w) + (lam/2)||w||^2``; ``lam * w + f(y_hat) - f(y*)`` is its subgradient."""
    res = lai(w, inst, solver=solver)
    return res.objective - float(w @ inst.gold) + 0.5 * lam * float(w @ w), res


@_timed
def subgradient_suite(seed=0, steps=50, probes=100, max_n=10, shells=3, lam=0.1,
                      tol=1e-9, instances=5):
    """Subgradient inequality at every iterate of projected descent."""
    insts = _subgradient_instances(seed, instances, max_n, shells)
    rng = stream(seed, "verify-subgradient-probe")
    w = np.zeros(shells)
    violations = checks = 0
    worst = -math.inf
    for t in range(1, steps + 1):
        inst = insts[(t - 1) % len(insts)]
        h, res = regularized_hinge(w, inst, lam)
        g = subgradient(w, inst, res.selected, lam)
        scale = max(1.0, float(np.abs(w).max()))
        for _ in range(probes):
            w2 = rng.exponential(scale, size=shells) * (rng.random(shells) < 0.8)
            h2, _ = regularized_hinge(w2, inst, lam)
            gap = h + float(g @ (w2 - w)) - h2
            checks += 1
            if gap > tol:
                violations += 1
            worst = max(worst, gap)
        w = np.maximum(w - (2.0 / (lam * t)) * g, 0.0)
    return SuiteResult("subgradient", violations == 0, checks, violations,
                       detail={"worst_gap": worst})


@_timed
def mutation_suite(seed=0, trials=1000, n=12):
    """The submodularity check must flag a supermodular function."""
    f = FunctionOf(n, lambda S: float(len(S)) ** 2, monotone=True, label="square")
    rep = check_submodular(f, trials, seed=int(stream(seed, "verify-mutation").integers(2**31)))
    caught = rep.violations > 0
    return SuiteResult("mutation", caught, rep.trials, 0 if caught else 1,
                       detail={"flagged": rep.violations})


SUITES = {
    "shells": shell_suite,
    "mixtures": mixture_suite,
    "greedy": greedy_suite,
    "rouge": rouge_suite,
    "setcover": setcover_suite,
    "subgradient": subgradient_suite,
    "mutation": mutation_suite,
}

# knobs scaled down by --quick
QUICK = {
    "shells": {"params": 3, "trials": 200},
    "mixtures": {"mixtures": 20, "trials": 200},
    "greedy": {"knapsack": 40, "cardinality": 40},
    "rouge": {"corpora": 5, "pairs": 100, "trials": 200},
    "setcover": {"instances": 10},
    "subgradient": {"steps": 10, "probes": 20},
    "mutation": {},
}


def run_suites(names=None, seed=0, quick=False):
    names = list(SUITES) if not names else list(names)
    return [SUITES[name](seed=seed, **(QUICK[name] if quick else {})) for name in names]


def ratio_histogram(ratios, edges=(0.0, GREEDY_RHO, 0.8, 0.9, 0.95, 0.99, 1.0 + 1e-12)):
    """Counts of ``ratios`` per bin, as ``[(lo, hi, count), ...]``."""
    counts, _ = np.histogram(np.asarray(ratios), bins=np.asarray(edges))
    return [(edges[i], edges[i + 1], int(c)) for i, c in enumerate(counts)]

