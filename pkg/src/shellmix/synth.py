"""Seeded synthetic data.

Two kinds: random feature channels for property checks (no text involved),
and planted-truth corpora whose reference summaries are the greedy
summaries of a known shell mixture.
"""
from dataclasses import dataclass, field

import numpy as np

from ._rng import stream
from .core import GroundSet, Mixture, ParameterError
from .maximize import BudgetConstraint, greedy_knapsack
from .shells import FAMILIES, InstanceFeatures, ShellSpec, instantiate_all
from .textproc import CorpusInstance, FeatureRecipe, build_features, stopwords


# ------------------------------------------------------ random feature sets

def random_similarity(n, rng, density=0.5):
    A = rng.random((n, n)) * (rng.random((n, n)) < density)
    A = np.triu(A, 1)
    A = A + A.T
    A[np.diag_indices(n)] = 1.0
    return A


def random_features(n, rng, clusters=None):
    """Ground set plus one channel of every kind, all named ``"x"``."""
    k = clusters or int(rng.integers(1, max(2, n // 2) + 1))
    labels = rng.integers(0, k, size=n)
    costs = rng.integers(1, 10, size=n).astype(np.float64)
    features = InstanceFeatures(
        n,
        rewards={"x": rng.random(n)},
        similarities={"x": random_similarity(n, rng)},
        partitions={"x": labels},
        aux_costs={"x": costs},
    )
    return GroundSet(costs), features


def random_shell(family, rng):
    if family == "diversity":
        return ShellSpec(family, {"curvature": float(rng.random()), "clustering": "x", "reward": "x"})
    if family == "cfacility":
        return ShellSpec(family, {"clustering": "x", "reward": "x"})
    if family == "fidelity":
        return ShellSpec(family, {"saturation": float(rng.uniform(0.01, 1.0)), "similarity": "x"})
    if family == "truncation":
        t = "inf" if rng.random() < 0.2 else float(rng.uniform(0.05, 1.0))
        return ShellSpec(family, {"threshold": t, "cost": "x"})
    if family == "modular":
        return ShellSpec(family, {"cost": "x"})
    raise ParameterError(f"unknown family {family!r}")


def random_mixture(n, rng, size=5):
    """A random nonnegative mixture of ``size`` shells on a random instance."""
    ground, feats = random_features(n, rng)
    specs = [random_shell(FAMILIES[int(rng.integers(len(FAMILIES)))], rng) for _ in range(size)]
    comps = instantiate_all(specs, feats, ground)
    return Mixture(comps, rng.random(size)), ground


# ------------------------------------------------------- planted corpora

def default_recipe(seed=0):
    return FeatureRecipe(
        similarities={"tfidf1": {"kind": "tfidf", "order": 1},
                      "tfidf2": {"kind": "tfidf", "order": 2}},
        clusterings={"k10": {"order": 1, "fraction": 0.1},
                     "k20": {"order": 1, "fraction": 0.2},
                     "k30": {"order": 1, "fraction": 0.3}},
        rewards={"qi": {"kind": "query_independent", "similarity": "tfidf1"},
                 "qd": {"kind": "query_dependent"}},
        costs={"words": {"kind": "words"}},
        seed=seed,
    )


def default_shells():
    """Five shells from different families reading different channels."""
    return [
        ShellSpec("fidelity", {"saturation": 0.3, "similarity": "tfidf1"}),
        ShellSpec("diversity", {"curvature": 0.5, "clustering": "k20", "reward": "qi"}),
        ShellSpec("cfacility", {"clustering": "k30", "reward": "qd"}),
        ShellSpec("fidelity", {"saturation": 0.1, "similarity": "tfidf2"}),
        ShellSpec("diversity", {"curvature": 0.7, "clustering": "k10", "reward": "qd"}),
    ]


@dataclass
class SynthSpec:
    instances: int = 60
    sentences: int = 30
    vocab_size: int = 400
    topics: int = 5
    topic_words: int = 25
    sentence_length: tuple = (6, 16)
    planted_shells: list = field(default_factory=default_shells)
    planted_weights: list = field(default_factory=lambda: [1.0, 0.0, 0.0, 0.0, 0.0])
    recipe: FeatureRecipe = field(default_factory=default_recipe)
    budget_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        self.sentence_length = tuple(int(x) for x in self.sentence_length)
        self.planted_shells = [s if isinstance(s, ShellSpec) else ShellSpec.from_dict(s)
                               for s in self.planted_shells]
        self.planted_weights = [float(w) for w in self.planted_weights]
        if isinstance(self.recipe, dict):
            self.recipe = FeatureRecipe.from_dict(self.recipe)
        if len(self.planted_shells) != len(self.planted_weights):
            raise ParameterError("planted shells and weights differ in length")
        if any(not w >= 0 for w in self.planted_weights):
            raise ParameterError("planted weights must be nonnegative")
        if not 0 < self.budget_fraction:
            raise ParameterError("budget fraction must be positive")
        lo, hi = self.sentence_length
        if not 1 <= lo <= hi:
            raise ParameterError(f"bad sentence length range {self.sentence_length}")
        if self.instances < 0 or self.sentences < 1 or self.vocab_size < self.topic_words:
            raise ParameterError("synthetic sizes out of range")
        self.recipe.check_shells(self.planted_shells)

    def to_dict(self):
        return {
            "instances": self.instances,
            "sentences": self.sentences,
            "vocab_size": self.vocab_size,
            "topics": self.topics,
            "topic_words": self.topic_words,
            "sentence_length": list(self.sentence_length),
            "planted_shells": [s.to_dict() for s in self.planted_shells],
            "planted_weights": list(self.planted_weights),
            "recipe": self.recipe.to_dict(),
            "budget_fraction": self.budget_fraction,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "recipe" in d:
            d["recipe"] = FeatureRecipe.from_dict(d["recipe"])
        return cls(**d)


def _sentence(rng, spec, topic_vocab, topic_p, vocab, fillers):
    lo, hi = spec.sentence_length
    t = int(rng.choice(len(topic_vocab), p=topic_p))
    words = topic_vocab[t]
    zipf = 1.0 / np.arange(1, len(words) + 1)
    zipf /= zipf.sum()
    out = []
    for _ in range(int(rng.integers(lo, hi + 1))):
        u = rng.random()
        if u < 0.65:
            out.append(words[int(rng.choice(len(words), p=zipf))])
        elif u < 0.8:
            out.append(vocab[int(rng.integers(len(vocab)))])
        else:
            out.append(fillers[int(rng.integers(len(fillers)))])
    out[0] = out[0].capitalize()
    return " ".join(out) + "."


def synth_text(spec, index):
    """Sentences and query (no references yet) for instance ``index``."""
    rng = stream(spec.seed, "instance", index)
    vocab = [f"w{i:04d}" for i in range(spec.vocab_size)]
    fillers = sorted(stopwords())
    topic_vocab = [[vocab[j] for j in rng.choice(spec.vocab_size, spec.topic_words, replace=False)]
                   for _ in range(spec.topics)]
    topic_p = rng.dirichlet(np.ones(spec.topics))
    sentences = [_sentence(rng, spec, topic_vocab, topic_p, vocab, fillers)
                 for _ in range(spec.sentences)]
    lead = int(np.argmax(topic_p))
    q = rng.choice(topic_vocab[lead][:10], size=4, replace=False)
    return sentences, " ".join(q)


def synth_instance(spec, index):
    sentences, query = synth_text(spec, index)
    iid = f"synth-{spec.seed}-{index:04d}"
    draft = CorpusInstance(iid, sentences, [], 0.0, query)
    costs = draft.sentence_costs()
    budget = spec.budget_fraction * sum(costs)
    if budget < min(costs):
        raise ParameterError(f"{iid}: budget {budget} is below the cheapest sentence")
    draft.budget = budget
    ground, feats, _ = build_features(draft, spec.recipe)
    comps = instantiate_all(spec.planted_shells, feats, ground)
    mix = Mixture(comps, spec.planted_weights)
    res = greedy_knapsack(mix, BudgetConstraint(budget, ground.costs), fill_budget=True)
    target = list(res.selected)
    return CorpusInstance(iid, sentences, [[sentences[i] for i in target]], budget, query,
                          target=target)


def synth_corpus(spec):
    return [synth_instance(spec, i) for i in range(spec.instances)]
