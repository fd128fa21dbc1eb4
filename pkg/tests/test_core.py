import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shellmix.core import (
    DomainError, FunctionOf, GroundSet, Mixture, Modular, ParameterError, PreconditionError,
    check_monotone, check_submodular, evaluate, marginal_gain, mixture_evaluate,
)
from shellmix.synth import random_features, random_mixture, random_shell
from shellmix.shells import FAMILIES, instantiate_all


def test_modular_value_and_gain():
    f = Modular([1, 2, 3])
    assert evaluate(f, {0, 2}) == 4.0
    assert marginal_gain(f, {0}, 2) == 3.0
    assert f(()) == 0.0


def test_marginal_gain_preconditions():
    f = Modular([1, 2, 3])
    with pytest.raises(PreconditionError):
        marginal_gain(f, {0, 2}, 2)
    with pytest.raises(DomainError):
        marginal_gain(f, {0}, 5)
    with pytest.raises(DomainError):
        f({-1})


def test_ground_set_validation():
    assert GroundSet.uniform(3).costs == (1.0, 1.0, 1.0)
    with pytest.raises(ParameterError):
        GroundSet((1.0, -2.0))


def test_mixture_identities(rng):
    ground, feats = random_features(9, rng)
    comps = instantiate_all([random_shell(f, rng) for f in ("diversity", "fidelity", "cfacility")],
                            feats, ground)
    zero = Mixture(comps, [0, 0, 0])
    one = Mixture(comps[:1], [1.0])
    w = rng.random(3)
    mix = Mixture(comps, w)
    for _ in range(20):
        S = set(np.flatnonzero(rng.random(9) < 0.5).tolist())
        assert zero(S) == 0.0
        assert one(S) == comps[0](S)
        assert mixture_evaluate(mix, S) == pytest.approx(sum(wi * c(S) for wi, c in zip(w, comps)),
                                                          abs=1e-12)


def test_mixture_rejects_negative_weights(rng):
    ground, feats = random_features(4, rng)
    comps = instantiate_all([random_shell("fidelity", rng)], feats, ground)
    with pytest.raises(ParameterError):
        Mixture(comps, [-0.1])


def test_supermodular_and_decreasing_are_flagged():
    sq = FunctionOf(10, lambda S: float(len(S)) ** 2)
    assert check_submodular(sq, 1000).violations > 0
    dec = FunctionOf(10, lambda S: -float(len(S)))
    assert check_monotone(dec, 1000).violations > 0


def test_modular_and_constant_are_clean():
    rep = check_submodular(Modular([0.5, 2.0, 1.0, 3.0]), 500)
    assert rep.violations == 0 and rep.worst_gap == 0.0
    const = FunctionOf(6, lambda S: 2.5)
    for rep in (check_submodular(const, 200), check_monotone(const, 200)):
        assert rep.violations == 0 and rep.worst_gap == 0.0


def test_checkers_degenerate_sizes():
    assert check_submodular(Modular([1.0]), 10).trials == 0
    assert check_monotone(Modular([]), 10).trials == 0


@pytest.mark.parametrize("family", FAMILIES)
def test_gains_match_value_differences(family, rng):
    for _ in range(5):
        n = int(rng.integers(2, 15))
        ground, feats = random_features(n, rng)
        f = instantiate_all([random_shell(family, rng)], feats, ground)[0]
        mask = rng.random(n) < 0.4
        cand = np.flatnonzero(~mask)
        got = f.gains(mask, cand)
        S = set(np.flatnonzero(mask).tolist())
        want = [f(S | {int(v)}) - f(S) for v in cand]
        np.testing.assert_allclose(got, want, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 20))
def test_random_mixtures_submodular_monotone(seed, n):
    f, _ = random_mixture(n, np.random.default_rng(seed))
    assert check_submodular(f, 200, seed=seed).ok
    assert check_monotone(f, 200, seed=seed).ok


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=1, max_size=12), st.data())
def test_modular_is_additive(weights, data):
    f = Modular(weights)
    n = len(weights)
    S = data.draw(st.sets(st.integers(0, n - 1)))
    T = data.draw(st.sets(st.integers(0, n - 1)))
    assert f(S | T) + f(S & T) == pytest.approx(f(S) + f(T), abs=1e-9)
