"""Set functions over a finite ground set ``{0, ..., n-1}``.

Subsets cross the API as index iterables (or boolean masks) and are
canonicalized to a boolean mask before any arithmetic, so the value of a
subset never depends on the order its elements were listed in.
"""
from dataclasses import dataclass
import math

import numpy as np

# absolute slack for every diminishing-returns / monotonicity assertion
TOL = 1e-9


class ShellmixError(Exception):
    """Base class for errors raised by this package."""


class DomainError(ShellmixError, ValueError):
    """A subset names an element outside the ground set."""


class PreconditionError(ShellmixError, ValueError):
    pass


class ParameterError(ShellmixError, ValueError):
    pass


class ConfigurationError(ShellmixError, ValueError):
    pass


class SizeError(ShellmixError, ValueError):
    pass


@dataclass(frozen=True)
class GroundSet:
    """Elements ``0..size-1`` with a nonnegative cost each."""

    costs: tuple

    def __post_init__(self):
        costs = tuple(float(c) for c in self.costs)
        if any(not math.isfinite(c) or c < 0 for c in costs):
            raise ParameterError("ground-set costs must be finite and nonnegative")
        object.__setattr__(self, "costs", costs)

    @property
    def size(self):
        return len(self.costs)

    def cost_array(self):
        return np.asarray(self.costs, dtype=np.float64)

    @classmethod
    def uniform(cls, n, cost=1.0):
        return cls((cost,) * n)


def canonical(S):
    """Sorted, duplicate-free tuple of element indices."""
    if isinstance(S, np.ndarray) and S.dtype == bool:
        return tuple(int(i) for i in np.flatnonzero(S))
    return tuple(sorted({int(i) for i in S}))


class SetFunction:
    """A real-valued function on subsets of ``range(n)``.

    Subclasses implement ``_values(masks)`` for a ``(m, n)`` boolean batch.
    ``_gains`` has a generic definition in terms of ``_values``; families with
    a cheaper incremental form override it. A gain for candidate ``v`` must not
    depend on which other candidates share the call (the lazy greedy relies on
    this to reproduce the eager scan bit for bit).
    """

    monotone = True
    submodular = True
    label = None

    def __init__(self, n):
        self.n = int(n)

    def __repr__(self):
        return self.label or f"{type(self).__name__}(n={self.n})"

    def mask(self, S):
        if isinstance(S, np.ndarray) and S.dtype == bool:
            if S.shape != (self.n,):
                raise DomainError(f"mask of shape {S.shape} for ground set of size {self.n}")
            return S.copy()
        out = np.zeros(self.n, dtype=bool)
        for i in S:
            i = int(i)
            if i < 0 or i >= self.n:
                raise DomainError(f"element {i} outside ground set of size {self.n}")
            out[i] = True
        return out

    def _values(self, masks):
        raise NotImplementedError

    def _gains(self, mask, cand):
        masks = np.repeat(mask[None, :], len(cand) + 1, axis=0)
        masks[np.arange(1, len(cand) + 1), cand] = True
        vals = self._values(masks)
        return vals[1:] - vals[0]

    def evaluate(self, S):
        return float(self._values(self.mask(S)[None, :])[0])

    __call__ = evaluate

    def evaluate_many(self, masks):
        masks = np.ascontiguousarray(masks, dtype=bool)
        if masks.ndim != 2 or masks.shape[1] != self.n:
            raise DomainError(f"expected masks of shape (m, {self.n}), got {masks.shape}")
        return np.asarray(self._values(masks), dtype=np.float64)

    def gains(self, mask, cand):
        """``f(S + v) - f(S)`` for every ``v`` in ``cand``; ``mask`` encodes S."""
        mask = np.ascontiguousarray(mask, dtype=bool)
        cand = np.ascontiguousarray(cand, dtype=np.int64)
        if cand.size == 0:
            return np.zeros(0)
        return np.asarray(self._gains(mask, cand), dtype=np.float64)

    def marginal_gain(self, S, v):
        mask = self.mask(S)
        v = int(v)
        if v < 0 or v >= self.n:
            raise DomainError(f"element {v} outside ground set of size {self.n}")
        if mask[v]:
            raise PreconditionError(f"element {v} already in the subset")
        return float(self.gains(mask, [v])[0])


class Modular(SetFunction):
    """``f(S) = sum of weights[i] for i in S``."""

    def __init__(self, weights):
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        super().__init__(len(self.weights))
        self.monotone = bool(np.all(self.weights >= 0))

    def _values(self, masks):
        return np.where(masks, self.weights[None, :], 0.0).sum(axis=1)

    def _gains(self, mask, cand):
        return self.weights[cand].copy()


class FunctionOf(SetFunction):
    """Wrap a plain Python callable on sorted index tuples.

    Declared properties are taken on trust; the checkers below are how you
    find out whether they hold.
    """

    def __init__(self, n, fn, monotone=False, submodular=False, label=None):
        super().__init__(n)
        self.fn = fn
        self.monotone = monotone
        self.submodular = submodular
        self.label = label

    def _values(self, masks):
        return np.array([float(self.fn(canonical(row))) for row in masks], dtype=np.float64)


class Mixture(SetFunction):
    """Nonnegative combination ``sum_i w_i f_i`` over one ground set."""

    def __init__(self, components, weights):
        components = list(components)
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if len(components) != len(weights):
            raise ConfigurationError(
                f"{len(components)} components but {len(weights)} weights")
        if np.any(~np.isfinite(weights)) or np.any(weights < 0):
            raise ParameterError("mixture weights must be finite and nonnegative")
        sizes = {c.n for c in components}
        if len(sizes) > 1:
            raise ConfigurationError(f"components disagree on ground-set size: {sorted(sizes)}")
        super().__init__(sizes.pop() if sizes else 0)
        self.components = components
        self.weights = weights
        self.monotone = all(c.monotone for c in components)
        self.submodular = all(c.submodular for c in components)

    def _active(self):
        return [(w, c) for w, c in zip(self.weights, self.components) if w != 0.0]

    def _values(self, masks):
        out = np.zeros(masks.shape[0])
        for w, c in self._active():
            out += w * c._values(masks)
        return out

    def _gains(self, mask, cand):
        out = np.zeros(len(cand))
        for w, c in self._active():
            out += w * c._gains(mask, cand)
        return out

    def vector(self, S):
        """Per-component values ``(f_1(S), ..., f_M(S))``."""
        mask = self.mask(S)[None, :]
        return np.array([c._values(mask)[0] for c in self.components])


def evaluate(f, S):
    return f.evaluate(S)


def marginal_gain(f, S, v):
    return f.marginal_gain(S, v)


def mixture_evaluate(m, S):
    return m.evaluate(S)


@dataclass(frozen=True)
class PropertyReport:
    trials: int
    violations: int
    worst_gap: float

    @property
    def ok(self):
        return self.violations == 0


def _sample_nested(n, trials, rng):
    """Random ``(A, B, v)`` with ``A <= B <= V - {v}`` as mask arrays."""
    v = rng.integers(0, n, size=trials)
    p = rng.random((trials, 1))
    q = rng.random((trials, 1))
    B = rng.random((trials, n)) < p
    B[np.arange(trials), v] = False
    A = B & (rng.random((trials, n)) < q)
    return A, B, v


def _with(masks, v):
    out = masks.copy()
    out[np.arange(len(v)), v] = True
    return out


def check_submodular(f, trials=1000, seed=0, tol=TOL):
    """Sampled diminishing-returns test: count ``gain(A, v) < gain(B, v) - tol``."""
    if f.n < 2 or trials <= 0:
        return PropertyReport(0, 0, 0.0)
    rng = np.random.default_rng(seed)
    A, B, v = _sample_nested(f.n, trials, rng)
    vals = f.evaluate_many(np.concatenate([A, _with(A, v), B, _with(B, v)]))
    fa, fav, fb, fbv = vals.reshape(4, trials)
    gap = (fbv - fb) - (fav - fa)
    return PropertyReport(trials, int(np.sum(gap > tol)), float(max(0.0, gap.max())))


def check_monotone(f, trials=1000, seed=0, tol=TOL):
    """Sampled test of ``f(A) <= f(A + v) + tol``."""
    if f.n < 1 or trials <= 0:
        return PropertyReport(0, 0, 0.0)
    rng = np.random.default_rng(seed)
    _, A, v = _sample_nested(f.n, trials, rng)
    vals = f.evaluate_many(np.concatenate([A, _with(A, v)]))
    fa, fav = vals.reshape(2, trials)
    drop = fa - fav
    return PropertyReport(trials, int(np.sum(drop > tol)), float(max(0.0, drop.max())))
