import math

import numpy as np
import pytest
from sklearn.feature_extraction.text import TfidfVectorizer

from shellmix.core import ConfigurationError
from shellmix.shells import instantiate_all
from shellmix.textproc import (
    CorpusInstance, FeatureRecipe, build_features, cluster, generic_ensemble,
    query_focused_ensemble, reward_query_dependent, reward_query_independent, segments,
    sentence_cost, stopwords, terms, tfidf_cosine_matrix, tokenize,
)


def test_tokenize():
    assert tokenize("The cat sat.") == ["the", "cat", "sat"]
    assert tokenize("") == []
    assert tokenize("The cat sat.", stop={"the"}) == ["cat", "sat"]
    assert tokenize("Don't_stop", lowercase=False) == ["Don", "t", "stop"]
    assert "the" in stopwords()


def test_segments_and_cost():
    assert segments("One two. Three!") == [["one", "two"], ["three"]]
    assert sentence_cost("One two. Three!") == 3.0
    assert sentence_cost("whatever", 2.5) == 2.5


def test_hand_cosine():
    sim = tfidf_cosine_matrix(["apple banana", "apple cherry", "banana banana"])
    ia = ib = math.log(4 / 3) + 1
    ic = math.log(2) + 1
    want01 = ia * ia / (math.hypot(ia, ib) * math.hypot(ia, ic))
    assert sim[0, 1] == pytest.approx(want01, abs=1e-12)
    assert sim[0, 2] == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert sim[1, 2] == 0.0
    assert np.array_equal(sim, sim.T)
    assert np.all(np.diag(sim) == 1.0)


def test_cosine_edge_cases():
    sim = tfidf_cosine_matrix(["red fish", "red fish", "blue sky", ""])
    assert sim[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert sim[0, 2] == 0.0
    assert sim[3].sum() == 0.0


@pytest.mark.parametrize("order", [1, 2])
def test_tfidf_matches_sklearn(order, rng):
    words = [f"w{i}" for i in range(15)]
    sents = [" ".join(rng.choice(words, int(rng.integers(3, 10)))) + "." for _ in range(12)]
    vec = TfidfVectorizer(analyzer=lambda s: terms(segments(s), order), smooth_idf=True,
                          norm="l2", sublinear_tf=False)
    X = vec.fit_transform(sents).toarray()
    want = np.clip(X @ X.T, 0, 1)
    got = tfidf_cosine_matrix(sents, order=order)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_cluster_edge_counts(rng):
    X = rng.random((6, 4))
    assert cluster(X, 6, rng).tolist() == list(range(6))
    assert cluster(X, 1, rng).tolist() == [0] * 6


def test_cluster_separable_groups(rng):
    X = np.zeros((8, 6))
    X[:4, :3] = rng.random((4, 3)) + 0.1
    X[4:, 3:] = rng.random((4, 3)) + 0.1
    labels = cluster(X, 2, rng)
    assert labels.tolist() == [0, 0, 0, 0, 1, 1, 1, 1]


def test_cluster_has_no_empty_clusters(rng):
    for _ in range(20):
        X = rng.random((15, 5)) * (rng.random((15, 5)) < 0.5)
        k = int(rng.integers(2, 10))
        assert len(set(cluster(X, k, rng).tolist())) == k


def test_query_independent_rewards():
    assert reward_query_independent(np.ones((1, 1))).tolist() == [0.0]
    assert reward_query_independent(np.ones((3, 3))).tolist() == [1.0, 1.0, 1.0]
    sim = np.array([[1.0, 0.5, 0.1], [0.5, 1.0, 0.3], [0.1, 0.3, 1.0]])
    np.testing.assert_allclose(reward_query_independent(sim), [0.6 / 0.8, 1.0, 0.4 / 0.8])


def test_query_dependent_rewards():
    sents = ["Wind farms are big.", "Solar is cheap.", "Power from solar panels."]
    r = reward_query_dependent(sents, "solar power", stopwords())
    assert r.tolist() == [0.0, 0.5, 1.0]
    assert reward_query_dependent(["a b", "c d"], "zzz").tolist() == [0.0, 0.0]
    full = reward_query_dependent(["the solar power plant", "solar"], "solar power")
    assert full[0] == 1.0
    with pytest.raises(ConfigurationError):
        reward_query_dependent(["x"], None)


def test_build_features_channel_inventory():
    recipe = FeatureRecipe(similarities={"s": {"kind": "tfidf", "order": 1}})
    inst = CorpusInstance("i", ["A b c.", "b c d.", "e f."], [["a b c"]], 3.0)
    ground, feats, table = build_features(inst, recipe)
    assert feats.channel_ids()["similarities"] == ["s"]
    assert ground.costs == (3.0, 3.0, 2.0)
    assert table.n == 2
    empty = CorpusInstance("e", [], [], 0.0)
    _, f0, _ = build_features(empty, recipe)
    assert f0.degenerate and f0.similarities["s"].shape == (0, 0)


def test_external_similarity_required():
    recipe, shells = generic_ensemble()
    inst = CorpusInstance("i", ["a b.", "c d."], [["a b"]], 2.0)
    with pytest.raises(ConfigurationError):
        build_features(inst, recipe)


def test_ensemble_sizes():
    recipe, shells = query_focused_ensemble()
    assert len(shells) == 25
    inst = CorpusInstance("q", [f"Sentence {i} about solar power number {i}." for i in range(20)],
                          [["solar power"]], 20.0, query="solar power")
    ground, feats, _ = build_features(inst, recipe)
    assert len(instantiate_all(shells, feats, ground)) == 25

    recipe, shells = generic_ensemble()
    assert len(shells) == 15 and {s.family for s in shells} == {"fidelity"}
    ext = np.eye(20)
    inst = CorpusInstance("g", inst.sentences, inst.references, 20.0,
                          similarities={"lsa": ext.tolist()})
    ground, feats, _ = build_features(inst, recipe)
    assert len(instantiate_all(shells, feats, ground)) == 15


def test_recipe_roundtrip_and_validation():
    recipe, _ = query_focused_ensemble()
    assert FeatureRecipe.from_dict(recipe.to_dict()) == recipe
    with pytest.raises(ConfigurationError):
        FeatureRecipe(clusterings={"k": {"order": 1}})
    with pytest.raises(ConfigurationError):
        FeatureRecipe(rewards={"r": {"kind": "query_independent", "similarity": "nope"}})
