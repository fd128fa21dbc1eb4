"""The shell catalog and its instantiation against a concrete instance.

A shell is a family tag plus family parameters (curvature, saturation,
threshold, and the names of the feature channels it reads). Instantiating it
against an :class:`InstanceFeatures` yields a monotone submodular
:class:`~shellmix.core.SetFunction` on that instance's sentences.

Five closed families:

``diversity``   sum over clusters of (reward mass in S)^a, normalized by V
``cfacility``   mean over clusters of the best reward picked from that cluster
``fidelity``    mean over elements of min(coverage ratio, saturation)
``truncation``  min(c(S), threshold * c(V))
``modular``     c(S)
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import _kernels as K
from .core import (
    ConfigurationError,
    GroundSet,
    Mixture,
    Modular,
    ParameterError,
    SetFunction,
    canonical,
)

FAMILIES = ("diversity", "cfacility", "fidelity", "truncation", "modular")

_PARAMS = {
    "diversity": {"curvature", "clustering", "reward"},
    "cfacility": {"clustering", "reward"},
    "fidelity": {"saturation", "similarity"},
    "truncation": {"threshold", "cost"},
    "modular": {"cost"},
}

UNBOUNDED = math.inf


def resolve_cluster_count(n, count=None, fraction=None):
    """Cluster count for a ground set of size ``n``.

    A fraction resolves to ``max(1, ceil(fraction * n))``; the product is
    nudged down by 1e-9 first so 0.1 * 30 gives 3, not 4.
    """
    if n == 0:
        return 0
    if count is not None:
        k = int(count)
    elif fraction is not None:
        k = max(1, math.ceil(float(fraction) * n - 1e-9))
    else:
        raise ConfigurationError("cluster channel needs a count or a fraction")
    if k < 1:
        raise ParameterError(f"cluster count must be >= 1, got {k}")
    return min(k, n)


def _threshold(value):
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity", "unbounded"):
            return UNBOUNDED
        value = float(value)
    return float(value)


@dataclass(frozen=True)
class ShellSpec:
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown shell family {self.family!r}")
        params = dict(self.params)
        missing = _PARAMS[self.family] - set(params)
        extra = set(params) - _PARAMS[self.family]
        if missing or extra:
            raise ConfigurationError(
                f"{self.family} shell: missing {sorted(missing)}, unexpected {sorted(extra)}")
        if "curvature" in params:
            a = float(params["curvature"])
            if not 0.0 <= a <= 1.0:
                raise ParameterError(f"diversity curvature must lie in [0, 1], got {a}")
            params["curvature"] = a
        if "saturation" in params:
            alpha = float(params["saturation"])
            if not 0.0 < alpha <= 1.0:
                raise ParameterError(f"fidelity saturation must lie in (0, 1], got {alpha}")
            params["saturation"] = alpha
        if "threshold" in params:
            t = _threshold(params["threshold"])
            if not t > 0:
                raise ParameterError(f"truncation threshold must be > 0, got {t}")
            params["threshold"] = t
        for key in ("clustering", "reward", "similarity", "cost"):
            if key in params:
                params[key] = str(params[key])
        object.__setattr__(self, "params", params)

    @property
    def label(self):
        inner = ",".join(f"{k}={self.params[k]}" for k in sorted(self.params))
        return f"{self.family}({inner})"

    def to_dict(self):
        params = dict(self.params)
        if params.get("threshold") == UNBOUNDED:
            params["threshold"] = "inf"
        return {"family": self.family, "params": {k: params[k] for k in sorted(params)}}

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], dict(d.get("params", {})))


def canonical_labels(labels):
    """Relabel cluster ids to 0..K-1 in order of first appearance."""
    labels = np.asarray(labels, dtype=np.int64)
    mapping = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        out[i] = mapping.setdefault(int(lab), len(mapping))
    return out


def labels_from_blocks(blocks, n):
    labels = np.full(n, -1, dtype=np.int64)
    for k, block in enumerate(blocks):
        for i in block:
            i = int(i)
            if not 0 <= i < n:
                raise ParameterError(f"partition block names element {i} outside 0..{n - 1}")
            if labels[i] != -1:
                raise ParameterError(f"element {i} appears in two partition blocks")
            labels[i] = k
    if np.any(labels < 0):
        raise ParameterError(f"partition misses elements {np.flatnonzero(labels < 0).tolist()}")
    return canonical_labels(labels)


def blocks_from_labels(labels):
    labels = np.asarray(labels)
    if labels.size == 0:
        return []
    return [tuple(np.flatnonzero(labels == k).tolist()) for k in range(int(labels.max()) + 1)]


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class InstanceFeatures:
    """Named feature channels for one ground set of size ``n``."""

    n: int
    rewards: dict = field(default_factory=dict)
    similarities: dict = field(default_factory=dict)
    partitions: dict = field(default_factory=dict)
    aux_costs: dict = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.n)
        rewards, sims, parts, costs = {}, {}, {}, {}
        for name, r in self.rewards.items():
            r = _frozen(r)
            if r.shape != (n,) or np.any(~np.isfinite(r)) or np.any((r < 0) | (r > 1)):
                raise ParameterError(f"reward channel {name!r} must be {n} values in [0, 1]")
            rewards[name] = r
        for name, d in self.similarities.items():
            d = _frozen(d)
            if d.shape != (n, n) or np.any(~np.isfinite(d)) or np.any(d < 0):
                raise ParameterError(f"similarity {name!r} must be a nonnegative {n}x{n} matrix")
            if not np.array_equal(d, d.T):
                raise ParameterError(f"similarity {name!r} is not symmetric")
            rowmass = d.sum(axis=1)
            if np.any((np.diag(d) <= 0) & (rowmass > 0)):
                raise ParameterError(f"similarity {name!r} has a zero diagonal on a nonzero row")
            sims[name] = d
        for name, p in self.partitions.items():
            if isinstance(p, np.ndarray) and p.ndim == 1 and p.dtype.kind in "iu":
                labels = p
                if labels.shape != (n,) or np.any(labels < 0):
                    raise ParameterError(f"partition {name!r} must label all {n} elements")
                labels = canonical_labels(labels)
            else:
                labels = labels_from_blocks(p, n)
            parts[name] = _frozen(labels, np.int64)
        for name, c in self.aux_costs.items():
            c = _frozen(c)
            if c.shape != (n,) or np.any(~np.isfinite(c)) or np.any(c < 0):
                raise ParameterError(f"cost channel {name!r} must be {n} nonnegative values")
            costs[name] = c
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "similarities", sims)
        object.__setattr__(self, "partitions", parts)
        object.__setattr__(self, "aux_costs", costs)

    @property
    def degenerate(self):
        return self.n == 0

    def channel_ids(self):
        return {
            "rewards": sorted(self.rewards),
            "similarities": sorted(self.similarities),
            "partitions": sorted(self.partitions),
            "aux_costs": sorted(self.aux_costs),
        }


# ------------------------------------------------------------------ families

def _concave(x, a):
    # x**0 is taken as 0 at x = 0 so that f(empty) = 0
    if a == 0.0:
        return (x > 0).astype(np.float64)
    if a == 1.0:
        return x
    return np.power(x, a)


class Diversity(SetFunction):
    def __init__(self, labels, rewards, curvature):
        labels = np.ascontiguousarray(labels, dtype=np.int64)
        super().__init__(len(labels))
        if not 0.0 <= curvature <= 1.0:
            raise ParameterError(f"curvature must lie in [0, 1], got {curvature}")
        self.labels = labels
        self.rewards = np.ascontiguousarray(rewards, dtype=np.float64)
        self.curvature = float(curvature)
        self.k = int(labels.max()) + 1 if self.n else 0
        full = K.cluster_sums(np.ones((1, self.n), dtype=bool), labels, self.rewards, self.k)[0]
        self.denominator = float(_concave(full, self.curvature).sum())

    def _values(self, masks):
        if self.denominator <= 0.0:
            return np.zeros(masks.shape[0])
        sums = K.cluster_sums(masks, self.labels, self.rewards, self.k)
        return _concave(sums, self.curvature).sum(axis=1) / self.denominator

    def _gains(self, mask, cand):
        if self.denominator <= 0.0:
            return np.zeros(len(cand))
        sums = K.cluster_sums(mask[None, :], self.labels, self.rewards, self.k)[0]
        before = sums[self.labels[cand]]
        after = before + self.rewards[cand]
        a = self.curvature
        return (_concave(after, a) - _concave(before, a)) / self.denominator


class ClusteredFacility(SetFunction):
    def __init__(self, labels, rewards):
        labels = np.ascontiguousarray(labels, dtype=np.int64)
        super().__init__(len(labels))
        self.labels = labels
        self.rewards = np.ascontiguousarray(rewards, dtype=np.float64)
        self.k = int(labels.max()) + 1 if self.n else 0

    def _values(self, masks):
        if self.k == 0:
            return np.zeros(masks.shape[0])
        return K.cluster_max(masks, self.labels, self.rewards, self.k).sum(axis=1) / self.k

    def _gains(self, mask, cand):
        if self.k == 0:
            return np.zeros(len(cand))
        best = K.cluster_max(mask[None, :], self.labels, self.rewards, self.k)[0]
        before = best[self.labels[cand]]
        return (np.maximum(before, self.rewards[cand]) - before) / self.k


class Fidelity(SetFunction):
    """Saturated coverage with ``C_i(S) = sum_{j in S} delta[i, j]``."""

    def __init__(self, similarity, saturation):
        delta = np.ascontiguousarray(similarity, dtype=np.float64)
        super().__init__(delta.shape[0])
        if not 0.0 < saturation <= 1.0:
            raise ParameterError(f"saturation must lie in (0, 1], got {saturation}")
        self.delta = delta
        self.saturation = float(saturation)
        self.totals = K.coverage(np.ones((1, self.n), dtype=bool), delta)[0]

    def _values(self, masks):
        cov = K.coverage(masks, self.delta)
        return K.saturated_mean(cov, self.totals, self.saturation)

    def _gains(self, mask, cand):
        cov = K.coverage(mask[None, :], self.delta)[0]
        return K.fidelity_gains(cov, self.totals, self.delta, cand, self.saturation)


class Truncation(SetFunction):
    """``min(c(S), cap)`` for a nonnegative modular ``c``."""

    def __init__(self, costs, cap=UNBOUNDED):
        costs = np.ascontiguousarray(costs, dtype=np.float64)
        super().__init__(len(costs))
        if np.any(costs < 0):
            raise ParameterError("truncation costs must be nonnegative")
        if not cap >= 0:
            raise ParameterError(f"truncation cap must be >= 0, got {cap}")
        self.costs = costs
        self.cap = float(cap)

    @classmethod
    def from_threshold(cls, costs, threshold):
        costs = np.asarray(costs, dtype=np.float64)
        threshold = _threshold(threshold)
        if threshold == UNBOUNDED:
            return cls(costs, UNBOUNDED)
        # the best B for a nonnegative modular c is V itself
        return cls(costs, threshold * math.fsum(costs))

    def _values(self, masks):
        return np.minimum(np.where(masks, self.costs[None, :], 0.0).sum(axis=1), self.cap)

    def _gains(self, mask, cand):
        held = float(np.where(mask, self.costs, 0.0).sum())
        return np.minimum(held + self.costs[cand], self.cap) - min(held, self.cap)


def _lookup(channels, key, kind, spec):
    try:
        return channels[key]
    except KeyError:
        raise ConfigurationError(
            f"{spec.label}: {kind} channel {key!r} not found (have {sorted(channels)})") from None


def instantiate(spec, features, ground=None):
    """Build the concrete set function for ``spec`` on one instance."""
    if ground is not None and ground.size != features.n:
        raise ConfigurationError(
            f"ground set has {ground.size} elements, features describe {features.n}")
    p = spec.params
    fam = spec.family
    if fam == "diversity":
        f = Diversity(_lookup(features.partitions, p["clustering"], "clustering", spec),
                      _lookup(features.rewards, p["reward"], "reward", spec),
                      p["curvature"])
    elif fam == "cfacility":
        f = ClusteredFacility(_lookup(features.partitions, p["clustering"], "clustering", spec),
                              _lookup(features.rewards, p["reward"], "reward", spec))
    elif fam == "fidelity":
        f = Fidelity(_lookup(features.similarities, p["similarity"], "similarity", spec),
                     p["saturation"])
    elif fam == "truncation":
        f = Truncation.from_threshold(_lookup(features.aux_costs, p["cost"], "cost", spec),
                                      p["threshold"])
    else:
        f = Modular(_lookup(features.aux_costs, p["cost"], "cost", spec))
    f.label = spec.label
    return f


def instantiate_all(specs, features, ground=None):
    return [instantiate(s, features, ground) for s in specs]


# ------------------------------------------------- definitional evaluations
# Plain loops straight off the formulas; the vectorized classes above are
# checked against these.

def _as_blocks(partition, n):
    if isinstance(partition, np.ndarray) and partition.ndim == 1:
        return blocks_from_labels(partition)
    return [tuple(b) for b in partition]


def diversity_eval(S, partition, rewards, curvature):
    a = float(curvature)
    if not 0.0 <= a <= 1.0:
        raise ParameterError(f"curvature must lie in [0, 1], got {a}")
    S = set(canonical(S))

    def wrap(x):
        if x == 0.0:
            return 0.0
        return x ** a

    blocks = _as_blocks(partition, len(rewards))
    num = sum(wrap(sum(rewards[i] for i in sorted(b) if i in S)) for b in blocks)
    den = sum(wrap(sum(rewards[i] for i in sorted(b))) for b in blocks)
    return num / den if den > 0 else 0.0


def cfacility_eval(S, partition, rewards):
    S = set(canonical(S))
    blocks = _as_blocks(partition, len(rewards))
    if not blocks:
        return 0.0
    return sum(max((rewards[i] for i in b if i in S), default=0.0) for b in blocks) / len(blocks)


def fidelity_eval(S, coverages, saturation):
    """``coverages`` is a similarity matrix or a list of callables ``C_i(S)``."""
    alpha = float(saturation)
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"saturation must lie in (0, 1], got {alpha}")
    S = canonical(S)
    if isinstance(coverages, np.ndarray) or (coverages and not callable(coverages[0])):
        delta = np.asarray(coverages, dtype=np.float64)
        n = delta.shape[0]
        coverages = [(lambda T, row=delta[i]: sum(row[j] for j in T)) for i in range(n)]
    n = len(coverages)
    if n == 0:
        return 0.0
    everything = tuple(range(n))
    total = 0.0
    for C in coverages:
        full = C(everything)
        if full > 0:
            total += min(C(S) / full, alpha)
    return total / n


def truncation_eval(S, costs, threshold):
    threshold = _threshold(threshold)
    cs = sum(costs[i] for i in canonical(S))
    if threshold == UNBOUNDED:
        return float(cs)
    return float(min(cs, threshold * sum(costs)))


def setcover_from_truncations(sets, universe_size):
    """Set cover ``|union of A_i for i in B|`` as a mixture of truncations.

    One component per universe item ``j``: unit costs on the sets that contain
    ``j``, capped at 1.
    """
    n = len(sets)
    components = []
    for j in range(universe_size):
        c = np.zeros(n)
        for i, A in enumerate(sets):
            if j in A:
                c[i] = 1.0
        f = Truncation(c, cap=1.0)
        f.label = f"truncation(item={j})"
        components.append(f)
    if not components:
        return Mixture([], [])
    return Mixture(components, np.ones(len(components)))
