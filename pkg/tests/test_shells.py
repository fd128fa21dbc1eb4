import math

import numpy as np
import pytest

from shellmix.core import ConfigurationError, GroundSet, ParameterError, check_monotone, \
    check_submodular
from shellmix.shells import (
    UNBOUNDED, ClusteredFacility, Diversity, Fidelity, InstanceFeatures, ShellSpec, Truncation,
    cfacility_eval, diversity_eval, fidelity_eval, instantiate, resolve_cluster_count,
    setcover_from_truncations, truncation_eval,
)
from shellmix.synth import random_features, random_shell


def subsets(rng, n, count=30):
    return [set(np.flatnonzero(rng.random(n) < p).tolist())
            for p in rng.uniform(0, 1, size=count)]


def test_diversity_hand_value():
    f = Diversity([0, 0, 1], [1.0, 1.0, 1.0], 0.5)
    assert f({0, 2}) == pytest.approx(2 / (math.sqrt(2) + 1), abs=1e-12)
    assert round(f({0, 2}), 6) == 0.828427
    assert f(set()) == 0.0
    assert f({0, 1, 2}) == 1.0


def test_cfacility_hand_value():
    f = ClusteredFacility([0, 0, 1, 1], [0.2, 0.9, 0.5, 0.1])
    assert f({0, 1, 3}) == pytest.approx(0.5, abs=1e-15)
    assert f(set()) == 0.0
    g = ClusteredFacility([0, 0, 0, 0], [0.2, 0.9, 0.5, 0.1])
    assert g({0, 2}) == 0.5


def test_fidelity_small_cases():
    f = Fidelity(np.eye(5), 1.0)
    for S in ({0}, {1, 3}, {0, 1, 2, 3, 4}):
        assert f(S) == pytest.approx(len(S) / 5)
    assert Fidelity(np.ones((1, 1)), 0.3)({0}) == pytest.approx(0.3)
    d = np.array([[1.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 1.0]])
    assert Fidelity(d, 0.7)({0, 1, 2}) == pytest.approx(0.7)


def test_truncation_cases():
    f = Truncation.from_threshold([1, 1, 1, 1], 0.5)
    for S in ({0, 1, 2}, {1, 2, 3}, {0, 2, 3}):
        assert f(S) == 2.0
    g = Truncation.from_threshold([1, 2, 3], UNBOUNDED)
    assert g({0, 2}) == 4.0
    assert g(set()) == 0.0


def test_diversity_with_unit_curvature_ignores_partition(rng):
    r = rng.random(10)
    a = Diversity(rng.integers(0, 3, 10), r, 1.0)
    b = Diversity(np.arange(10), r, 1.0)
    for S in subsets(rng, 10):
        want = sum(r[i] for i in S) / r.sum()
        assert a(S) == pytest.approx(want, abs=1e-12)
        assert b(S) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_classes_match_definitional_loops(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 14))
    labels = rng.integers(0, max(1, n // 2), n)
    r = rng.random(n)
    r[rng.random(n) < 0.2] = 0.0
    ground, feats = random_features(n, rng)
    delta = feats.similarities["x"]
    costs = feats.aux_costs["x"]
    a = float(rng.uniform(0.05, 1.0))
    alpha = float(rng.uniform(0.01, 1.0))
    t = float(rng.uniform(0.05, 1.0))
    div, fac = Diversity(labels, r, a), ClusteredFacility(labels, r)
    fid, tr = Fidelity(delta, alpha), Truncation.from_threshold(costs, t)
    for S in subsets(rng, n):
        assert div(S) == pytest.approx(diversity_eval(S, labels, r, a), abs=1e-12)
        assert fac(S) == pytest.approx(cfacility_eval(S, labels, r), abs=1e-12)
        assert fid(S) == pytest.approx(fidelity_eval(S, delta, alpha), abs=1e-12)
        assert tr(S) == pytest.approx(truncation_eval(S, costs, t), abs=1e-12)


def test_fidelity_gain_matches_value_difference(rng):
    n = 7
    _, feats = random_features(n, rng)
    f = Fidelity(feats.similarities["x"], 0.4)
    for S in subsets(rng, n, 10):
        for v in set(range(n)) - S:
            assert f.marginal_gain(S, v) == pytest.approx(f(S | {v}) - f(S), abs=1e-12)


def test_fidelity_eval_with_callables():
    cov = [lambda S: float(len(S)), lambda S: 2.0 * (0 in S)]
    assert fidelity_eval({0}, cov, 0.5) == pytest.approx((0.5 + 0.5) / 2)


@pytest.mark.parametrize("family", ["diversity", "cfacility", "fidelity", "truncation", "modular"])
def test_random_specs_on_eight_elements(family, rng):
    for k in range(4):
        ground, feats = random_features(8, rng)
        f = instantiate(random_shell(family, rng), feats, ground)
        assert f(set()) == 0.0
        assert check_submodular(f, 1000, seed=k).violations == 0
        assert check_monotone(f, 1000, seed=k).violations == 0


def test_setcover_exact(rng):
    sets = [{0, 1}, {1, 2, 3}, {5}, set()]
    f = setcover_from_truncations(sets, 6)
    assert f(set()) == 0
    assert f({0, 1}) == 4
    assert f({0, 1, 2, 3}) == 5
    full = [set(range(12))] * 4
    g = setcover_from_truncations(full, 12)
    assert all(g(B) == 12 for B in ({0}, {1, 3}, {0, 1, 2, 3}))


def test_shellspec_validation_and_roundtrip():
    s = ShellSpec("truncation", {"threshold": "inf", "cost": "words"})
    assert s.params["threshold"] == UNBOUNDED
    assert ShellSpec.from_dict(s.to_dict()) == s
    d = ShellSpec("diversity", {"curvature": 0.5, "clustering": "k", "reward": "r"})
    assert ShellSpec.from_dict(d.to_dict()) == d
    with pytest.raises(ParameterError):
        ShellSpec("fidelity", {"saturation": 0.0, "similarity": "s"})
    with pytest.raises(ConfigurationError):
        ShellSpec("fidelity", {"saturation": 0.5})
    with pytest.raises(ConfigurationError):
        ShellSpec("nope", {})


def test_missing_channel_is_configuration_error(rng):
    ground, feats = random_features(5, rng)
    spec = ShellSpec("fidelity", {"saturation": 0.5, "similarity": "missing"})
    with pytest.raises(ConfigurationError):
        instantiate(spec, feats, ground)
    with pytest.raises(ConfigurationError):
        instantiate(random_shell("fidelity", rng), feats, GroundSet.uniform(4))


def test_features_validation():
    with pytest.raises(ParameterError):
        InstanceFeatures(2, rewards={"r": [0.5, 1.5]})
    with pytest.raises(ParameterError):
        InstanceFeatures(2, similarities={"s": [[1.0, 0.2], [0.3, 1.0]]})
    with pytest.raises(ParameterError):
        InstanceFeatures(2, similarities={"s": [[0.0, 0.2], [0.2, 1.0]]})
    f = InstanceFeatures(3, partitions={"p": [[0, 2], [1]]})
    assert f.partitions["p"].tolist() == [0, 1, 0]
    assert InstanceFeatures(0).degenerate


def test_cluster_count_rounding():
    assert resolve_cluster_count(30, fraction=0.1) == 3
    assert resolve_cluster_count(30, fraction=0.3) == 9
    assert resolve_cluster_count(5, fraction=0.01) == 1
    assert resolve_cluster_count(5, count=9) == 5
