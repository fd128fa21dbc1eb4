import time

import numpy as np
import pytest

from shellmix.learn import TrainConfig, train
from shellmix.losses import ell_rouge
from shellmix.pipeline import summarize_instance, training_instances
from shellmix.synth import SynthSpec, synth_corpus

PLANTED_SEEDS = range(20)
PLANTED_TRAIN = 60
PLANTED_HELD_OUT = 20


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def planted_run(seed, planted=0):
    """Train on 60 planted-truth instances, score 20 held-out ones."""
    w_star = [0.0] * 5
    w_star[planted] = 1.0
    spec = SynthSpec(instances=PLANTED_TRAIN + PLANTED_HELD_OUT, planted_weights=w_star,
                     seed=seed)
    corpus = synth_corpus(spec)
    train_set, held_out = corpus[:PLANTED_TRAIN], corpus[PLANTED_TRAIN:]
    insts = training_instances(train_set, spec.recipe, spec.planted_shells)
    res = train(insts, spec.planted_shells, TrainConfig(seed=seed, passes=5))
    w = np.array(res.model.weights)

    def held_out_loss(weights):
        losses = []
        for inst in held_out:
            out, table = summarize_instance(inst, spec.recipe, spec.planted_shells, weights)
            losses.append(ell_rouge(out.selected, table))
        return float(np.mean(losses))

    return {
        "seed": seed,
        "weights": w,
        "planted": planted,
        "pass_means": res.pass_means(PLANTED_TRAIN),
        "learned_loss": held_out_loss(w),
        "planted_loss": held_out_loss(np.array(w_star)),
    }


@pytest.fixture(scope="session")
def planted_runs():
    t0 = time.perf_counter()
    runs = [planted_run(s) for s in PLANTED_SEEDS]
    return runs, time.perf_counter() - t0


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
