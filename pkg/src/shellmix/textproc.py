"""Corpus ingestion and featurization.

Turns a pre-segmented instance (sentences, optional query, references,
budget) into a ground set with costs, the named feature channels the shells
read, and the n-gram table the losses read.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
import math
import re

import numpy as np

from ._rng import stream
from .core import ConfigurationError, GroundSet, ParameterError
from .losses import build_ngram_table, ngrams
from .shells import InstanceFeatures, canonical_labels, resolve_cluster_count

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)
_SENTENCE_END = re.compile(r"[.!?]+")


@lru_cache(maxsize=None)
def stopwords():
    text = resources.files("shellmix").joinpath("data/stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip() and not w.startswith("#"))


def tokenize(text, lowercase=True, stop=None):
    toks = _TOKEN.findall(text or "")
    if lowercase:
        toks = [t.lower() for t in toks]
    if stop:
        toks = [t for t in toks if t not in stop]
    return toks


def segments(text, lowercase=True, stop=None):
    """Token lists for each sentence-like span of ``text``."""
    out = []
    for part in _SENTENCE_END.split(text or ""):
        toks = tokenize(part, lowercase, stop)
        if toks:
            out.append(toks)
    return out


def sentence_cost(text, override=None):
    if override is not None:
        return float(override)
    return float(len(tokenize(text, lowercase=False)))


@dataclass
class CorpusInstance:
    instance_id: str
    sentences: list
    references: list = field(default_factory=list)
    budget: float = 0.0
    query: str = None
    costs: list = None          # per-sentence overrides, None entries use word counts
    target: list = None         # gold extractive summary, if known
    similarities: dict = None   # externally supplied matrices, by channel id

    def __post_init__(self):
        if not self.budget >= 0:
            raise ParameterError(f"{self.instance_id}: budget must be >= 0")
        if self.costs is not None and len(self.costs) != len(self.sentences):
            raise ParameterError(f"{self.instance_id}: {len(self.costs)} cost overrides "
                                 f"for {len(self.sentences)} sentences")

    def sentence_costs(self):
        over = self.costs or [None] * len(self.sentences)
        return [sentence_cost(s, c) for s, c in zip(self.sentences, over)]

    def reference_text(self, k):
        ref = self.references[k]
        return " ".join(ref) if isinstance(ref, list) else ref


# ------------------------------------------------------------------ tf-idf

def terms(tokens_by_segment, order):
    out = []
    for seg in tokens_by_segment:
        out.extend(" ".join(g) for g in ngrams(seg, order))
    return out


def tfidf_vectors(term_lists):
    """Raw-count TF times smoothed IDF ``ln((1 + D) / (1 + d_e)) + 1``."""
    vocab = sorted(set().union(*map(set, term_lists))) if term_lists else []
    col = {t: i for i, t in enumerate(vocab)}
    D = len(term_lists)
    tf = np.zeros((D, len(vocab)))
    for s, ts in enumerate(term_lists):
        for t in ts:
            tf[s, col[t]] += 1.0
    df = (tf > 0).sum(axis=0)
    idf = np.log((1.0 + D) / (1.0 + df)) + 1.0
    return tf * idf[None, :], vocab


def cosine_matrix(X):
    norms = np.sqrt((X * X).sum(axis=1))
    live = norms > 0
    U = np.zeros_like(X)
    U[live] = X[live] / norms[live, None]
    sim = np.clip(U @ U.T, 0.0, 1.0)
    sim = np.triu(sim, 1)
    sim = sim + sim.T
    sim[np.diag_indices_from(sim)] = live.astype(np.float64)
    return sim


def tfidf_cosine_matrix(sentences, order=1, stop=None, lowercase=True):
    if order not in (1, 2):
        raise ParameterError(f"gram order must be 1 or 2, got {order}")
    tl = [terms(segments(s, lowercase, stop), order) for s in sentences]
    X, _ = tfidf_vectors(tl)
    return cosine_matrix(X)


# -------------------------------------------------------------- clustering

def _dissimilarity(U, C):
    # rows of U and C are unit length or zero; zero rows sit at distance 1
    return 1.0 - np.clip(U @ C.T, -1.0, 1.0)


def _unit_rows(X):
    norms = np.sqrt((X * X).sum(axis=1))
    U = np.zeros_like(X, dtype=np.float64)
    live = norms > 0
    U[live] = X[live] / norms[live, None]
    return U


def cluster(X, k, rng, iterations=50):
    """Spherical k-means with farthest-first seeding; returns labels 0..k-1."""
    D = X.shape[0]
    if D == 0:
        return np.zeros(0, dtype=np.int64)
    k = max(1, min(int(k), D))
    if k == D:
        return np.arange(D, dtype=np.int64)
    if k == 1:
        return np.zeros(D, dtype=np.int64)
    U = _unit_rows(X)
    chosen = [int(rng.integers(D))]
    nearest = _dissimilarity(U, U[chosen])[:, 0]
    while len(chosen) < k:
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, _dissimilarity(U, U[[nxt]])[:, 0])
    centers = U[chosen].copy()
    labels = None
    for _ in range(iterations):
        dist = _dissimilarity(U, centers)
        new = np.argmin(dist, axis=1)
        new = _reseed_empty(new, dist, k)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = U[labels == c]
            centers[c] = _unit_rows(members.sum(axis=0, keepdims=True))[0]
    return canonical_labels(labels)


def _reseed_empty(labels, dist, k):
    labels = labels.copy()
    for c in range(k):
        if np.any(labels == c):
            continue
        sizes = np.bincount(labels, minlength=k)
        own = dist[np.arange(len(labels)), labels]
        movable = sizes[labels] > 1
        own = np.where(movable, own, -np.inf)
        labels[int(np.argmax(own))] = c
    return labels


# ----------------------------------------------------------------- rewards

def reward_query_independent(sim):
    sim = np.asarray(sim, dtype=np.float64)
    r = sim.sum(axis=1) - np.diag(sim)
    top = r.max() if r.size else 0.0
    return r / top if top > 0 else np.zeros_like(r)


def query_terms(text, stop):
    toks = tokenize(text, True, stop)
    return set(toks) | {" ".join(g) for g in ngrams(toks, 2)}


def reward_query_dependent(sentences, query, stop=None):
    """Distinct query unigrams and bigrams (stopwords removed) found in each sentence."""
    if query is None:
        raise ConfigurationError("query-dependent reward needs a query")
    stop = stopwords() if stop is None else stop
    q = query_terms(query, stop)
    counts = np.array([len(q & query_terms(s, stop)) for s in sentences], dtype=np.float64)
    top = counts.max() if counts.size else 0.0
    return counts / top if top > 0 else np.zeros_like(counts)


# ------------------------------------------------------------------ recipe

def _freeze(channels):
    return {str(k): dict(v) for k, v in sorted((channels or {}).items())}


@dataclass(frozen=True)
class FeatureRecipe:
    """Which feature channels to compute for each instance.

    similarities: id -> {"kind": "tfidf", "order": 1|2} or {"kind": "external"}
    clusterings:  id -> {"order": 1|2, "fraction": f} or {"order": ..., "count": k}
    rewards:      id -> {"kind": "query_independent", "similarity": id}
                        or {"kind": "query_dependent"}
    costs:        id -> {"kind": "words"} or {"kind": "unit"}
    """

    similarities: dict = field(default_factory=dict)
    clusterings: dict = field(default_factory=dict)
    rewards: dict = field(default_factory=dict)
    costs: dict = field(default_factory=dict)
    lowercase: bool = True
    tfidf_stopwords: bool = True
    loss_order: int = 2
    seed: int = 0

    def __post_init__(self):
        for name in ("similarities", "clusterings", "rewards", "costs"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))
        for cid, spec in self.similarities.items():
            if spec.get("kind") not in ("tfidf", "external"):
                raise ConfigurationError(f"similarity {cid!r}: unknown kind {spec.get('kind')!r}")
            if spec["kind"] == "tfidf" and spec.get("order", 1) not in (1, 2):
                raise ConfigurationError(f"similarity {cid!r}: order must be 1 or 2")
        for cid, spec in self.clusterings.items():
            if ("fraction" in spec) == ("count" in spec):
                raise ConfigurationError(f"clustering {cid!r}: give exactly one of fraction/count")
        for cid, spec in self.rewards.items():
            kind = spec.get("kind")
            if kind == "query_independent":
                if spec.get("similarity") not in self.similarities:
                    raise ConfigurationError(
                        f"reward {cid!r}: similarity {spec.get('similarity')!r} not in recipe")
            elif kind != "query_dependent":
                raise ConfigurationError(f"reward {cid!r}: unknown kind {kind!r}")
        for cid, spec in self.costs.items():
            if spec.get("kind") not in ("words", "unit"):
                raise ConfigurationError(f"cost {cid!r}: unknown kind {spec.get('kind')!r}")
        if self.loss_order not in (1, 2):
            raise ConfigurationError(f"loss n-gram order must be 1 or 2, got {self.loss_order}")

    def to_dict(self):
        return {
            "similarities": self.similarities,
            "clusterings": self.clusterings,
            "rewards": self.rewards,
            "costs": self.costs,
            "lowercase": self.lowercase,
            "tfidf_stopwords": self.tfidf_stopwords,
            "loss_order": self.loss_order,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def check_shells(self, shells):
        """Every channel a shell reads must be produced by this recipe."""
        where = {"clustering": self.clusterings, "reward": self.rewards,
                 "similarity": self.similarities, "cost": self.costs}
        for s in shells:
            for key, table in where.items():
                if key in s.params and s.params[key] not in table:
                    raise ConfigurationError(
                        f"{s.label}: {key} channel {s.params[key]!r} missing from recipe")


def build_features(instance, recipe, loss_order=None):
    """Featurize one instance: ``(GroundSet, InstanceFeatures, NGramTable)``."""
    stop = stopwords() if recipe.tfidf_stopwords else None
    sents = list(instance.sentences)
    n = len(sents)
    ground = GroundSet(instance.sentence_costs())

    token_segs = {}
    vectors = {}

    def vecs(order):
        if order not in vectors:
            if order not in token_segs:
                token_segs[order] = [terms(segments(s, recipe.lowercase, stop), order)
                                     for s in sents]
            vectors[order] = tfidf_vectors(token_segs[order])[0]
        return vectors[order]

    sims = {}
    for cid, spec in recipe.similarities.items():
        if spec["kind"] == "tfidf":
            sims[cid] = cosine_matrix(vecs(spec.get("order", 1))) if n else np.zeros((0, 0))
        else:
            ext = (instance.similarities or {}).get(cid)
            if ext is None:
                raise ConfigurationError(
                    f"{instance.instance_id}: external similarity {cid!r} not supplied")
            sims[cid] = np.asarray(ext, dtype=np.float64)

    parts = {}
    for cid, spec in recipe.clusterings.items():
        k = resolve_cluster_count(n, spec.get("count"), spec.get("fraction"))
        rng = stream(recipe.seed, "cluster", instance.instance_id, cid)
        X = vecs(spec.get("order", 1)) if n else np.zeros((0, 0))
        parts[cid] = cluster(X, k, rng)

    rewards = {}
    for cid, spec in recipe.rewards.items():
        if spec["kind"] == "query_independent":
            rewards[cid] = reward_query_independent(sims[spec["similarity"]])
        else:
            rewards[cid] = reward_query_dependent(sents, instance.query, stopwords())

    costs = {}
    for cid, spec in recipe.costs.items():
        costs[cid] = ground.cost_array() if spec["kind"] == "words" else np.ones(n)

    features = InstanceFeatures(n, rewards=rewards, similarities=sims, partitions=parts,
                                aux_costs=costs)
    return ground, features, instance_ngrams(instance, loss_order or recipe.loss_order)


def instance_ngrams(instance, n):
    """n-gram table of an instance's sentences against its references."""
    return build_ngram_table(
        [segments(s) for s in instance.sentences],
        [segments(instance.reference_text(k)) for k in range(len(instance.references))],
        n=n)


# -------------------------------------------------------- ensemble recipes

def query_focused_ensemble(curvatures=(0.5, 0.6, 0.7), fractions=(0.1, 0.2, 0.3),
                           saturation=0.1, seed=0):
    """Recipe and shells for query-focused summarization.

    Three clusterings times two reward kinds give six clustered-facility
    shells; three curvatures on each of those six pairs give eighteen
    diversity shells; one fidelity shell rounds it out to 25.
    """
    from .shells import ShellSpec

    clusterings = {f"k{int(round(f * 100)):02d}": {"order": 1, "fraction": f} for f in fractions}
    recipe = FeatureRecipe(
        similarities={"tfidf1": {"kind": "tfidf", "order": 1}},
        clusterings=clusterings,
        rewards={"qi": {"kind": "query_independent", "similarity": "tfidf1"},
                 "qd": {"kind": "query_dependent"}},
        costs={"words": {"kind": "words"}},
        seed=seed,
    )
    shells = []
    for c in clusterings:
        for r in ("qi", "qd"):
            shells.append(ShellSpec("cfacility", {"clustering": c, "reward": r}))
    for a in curvatures:
        for c in clusterings:
            for r in ("qi", "qd"):
                shells.append(ShellSpec("diversity", {"curvature": a, "clustering": c, "reward": r}))
    shells.append(ShellSpec("fidelity", {"saturation": saturation, "similarity": "tfidf1"}))
    return recipe, shells


def generic_ensemble(thresholds=(0.01, 0.02, 0.03, 0.04, 0.05), external=("lsa",), seed=0):
    """Recipe and fidelity shells for generic summarization.

    Unigram and bigram TF-IDF cosine plus each externally supplied similarity,
    crossed with every saturation threshold.
    """
    from .shells import ShellSpec

    sims = {"tfidf1": {"kind": "tfidf", "order": 1}, "tfidf2": {"kind": "tfidf", "order": 2}}
    for e in external:
        sims[e] = {"kind": "external"}
    recipe = FeatureRecipe(similarities=sims, costs={"words": {"kind": "words"}},
                           loss_order=1, seed=seed)
    shells = [ShellSpec("fidelity", {"saturation": t, "similarity": s})
              for s in sims for t in thresholds]
    return recipe, shells
