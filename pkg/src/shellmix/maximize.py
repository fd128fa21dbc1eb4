"""Constrained maximization of set functions.

Ties are broken toward the lowest element index, and among equal-valued
subsets toward the lexicographically smallest sorted index tuple, so every
solver here is a deterministic function of its inputs.
"""
from dataclasses import dataclass, field
import heapq
import math

import numpy as np

from .core import ParameterError, SizeError

BRUTE_FORCE_CAP = 22
# a gain within this of zero counts as zero when filling the budget
ZERO_GAIN = 1e-12
_CHUNK = 1 << 15


@dataclass(frozen=True)
class BudgetConstraint:
    budget: float
    costs: tuple
    scale: float = 1.0

    def __post_init__(self):
        costs = tuple(float(c) for c in self.costs)
        if not self.budget >= 0:
            raise ParameterError(f"budget must be >= 0, got {self.budget}")
        if any(not math.isfinite(c) or c < 0 for c in costs):
            raise ParameterError("costs must be finite and nonnegative")
        if not self.scale >= 0:
            raise ParameterError(f"scale exponent must be >= 0, got {self.scale}")
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "budget", float(self.budget))
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def cardinality(cls, n, k):
        return cls(float(k), (1.0,) * n)

    def cost_of(self, S):
        return math.fsum(self.costs[i] for i in S)

    def feasible(self, S):
        return self.cost_of(S) <= self.budget


@dataclass
class MaximizationResult:
    selected: tuple
    value: float
    total_cost: float
    evaluations: int
    trace: list = field(default_factory=list)
    guaranteed: bool = True


class _Counter:
    def __init__(self, f):
        self.f = f
        self.calls = 0

    def gains(self, mask, cand):
        self.calls += len(cand)
        return self.f.gains(mask, cand)

    def values(self, masks):
        self.calls += len(masks)
        return self.f.evaluate_many(masks)


def _finish(f, counter, selected, costs, trace, guaranteed=True):
    selected = tuple(sorted(selected))
    value = f.evaluate(selected)
    counter.calls += 1
    cost = math.fsum(costs[i] for i in selected)
    return MaximizationResult(selected, value, cost, counter.calls, trace, guaranteed)


def greedy_cardinality(f, k, fill=False):
    """Pick the best-gain element ``k`` times (or until no gain is positive).

    With ``fill=True`` zero-gain elements are still taken until ``|S| = k``.
    """
    n = f.n
    k = max(0, min(int(k), n))
    counter = _Counter(f)
    mask = np.zeros(n, dtype=bool)
    selected, trace = [], []
    while len(selected) < k:
        cand = np.flatnonzero(~mask)
        g = counter.gains(mask, cand)
        i = int(np.argmax(g))
        if g[i] <= 0 and not (fill and g[i] >= -ZERO_GAIN):
            break
        v = int(cand[i])
        mask[v] = True
        selected.append(v)
        trace.append((v, float(g[i])))
    return _finish(f, counter, selected, [1.0] * n, trace, f.monotone and f.submodular)


class _Knapsack:
    """Shared state for the eager and lazy cost-scaled greedy."""

    def __init__(self, f, con, counter):
        if len(con.costs) != f.n:
            raise ParameterError(f"{len(con.costs)} costs for a ground set of {f.n}")
        if any(c <= 0 for c in con.costs):
            raise ParameterError("knapsack greedy needs strictly positive costs")
        self.f = f
        self.con = con
        self.costs = np.asarray(con.costs)
        self.scale = self.costs ** con.scale
        self.counter = counter
        self.mask = np.zeros(f.n, dtype=bool)
        self.selected = []
        self.trace = []

    def fits(self, v):
        return math.fsum([*(self.con.costs[i] for i in self.selected), self.con.costs[v]]) \
            <= self.con.budget

    def feasible(self):
        return np.array([v for v in range(self.f.n) if not self.mask[v] and self.fits(v)],
                        dtype=np.int64)

    def add(self, v, gain):
        self.mask[v] = True
        self.selected.append(int(v))
        self.trace.append((int(v), float(gain)))

    def eager(self):
        while True:
            cand = self.feasible()
            if cand.size == 0:
                return
            g = self.counter.gains(self.mask, cand)
            ratio = g / self.scale[cand]
            i = int(np.argmax(ratio))
            if ratio[i] <= 0:
                return
            self.add(cand[i], g[i])

    def lazy(self):
        cand = self.feasible()
        if cand.size == 0:
            return
        g = self.counter.gains(self.mask, cand)
        ratio = g / self.scale[cand]
        heap = [(-float(r), int(v), 0) for r, v in zip(ratio, cand)]
        heapq.heapify(heap)
        gains = dict(zip(cand.tolist(), g.tolist()))
        step = 0
        while heap:
            neg, v, stamp = heap[0]
            if not self.fits(v):
                heapq.heappop(heap)
                continue
            if stamp == step:
                if -neg <= 0:
                    return
                heapq.heappop(heap)
                self.add(v, gains[v])
                step += 1
                continue
            gv = float(self.counter.gains(self.mask, np.array([v], dtype=np.int64))[0])
            gains[v] = gv
            heapq.heapreplace(heap, (-(gv / self.scale[v]), v, step))

    def fill(self):
        """Keep spending budget on zero-gain elements, cheapest first."""
        while True:
            cand = self.feasible()
            if cand.size == 0:
                return
            g = self.counter.gains(self.mask, cand)
            ratio = g / self.scale[cand]
            i = int(np.argmax(ratio))
            if ratio[i] > 0:
                self.add(cand[i], g[i])
                continue
            top = g.max()
            if top < -ZERO_GAIN:
                return
            best = np.flatnonzero(g == top)
            j = best[np.lexsort((cand[best], self.costs[cand[best]]))[0]]
            self.add(cand[j], g[j])


def greedy_knapsack(f, con, lazy=None, fill_budget=False):
    """Cost-scaled greedy for ``max f(S)`` subject to ``sum c_i <= b``.

    Adds the feasible element with the largest ``gain / c**r`` until nothing
    fits or no scaled gain is positive, then returns the better of that set
    and the best feasible singleton. ``lazy`` (default: on for submodular f)
    re-evaluates stale gains from a priority queue and returns exactly the
    set the eager scan would.
    """
    if lazy is None:
        lazy = f.submodular
    counter = _Counter(f)
    state = _Knapsack(f, con, counter)
    if lazy and f.submodular:
        state.lazy()
    else:
        state.eager()
    if fill_budget:
        state.fill()
    guaranteed = f.monotone and f.submodular
    result = _finish(f, counter, state.selected, con.costs, state.trace, guaranteed)

    singles = np.array([v for v in range(f.n) if con.costs[v] <= con.budget], dtype=np.int64)
    if singles.size:
        masks = np.zeros((singles.size, f.n), dtype=bool)
        masks[np.arange(singles.size), singles] = True
        vals = counter.values(masks)
        i = int(np.argmax(vals))
        if vals[i] > result.value:
            v = int(singles[i])
            return MaximizationResult((v,), f.evaluate((v,)), con.costs[v], counter.calls + 1,
                                      [(v, float(vals[i]))], guaranteed)
    result.evaluations = counter.calls
    return result


def _subset_masks(n, start, stop):
    codes = np.arange(start, stop, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1).astype(bool)


def brute_force(f, con=None, max_size=None):
    """Exhaustive maximizer over all feasible subsets (``n <= 22``)."""
    n = f.n
    if n > BRUTE_FORCE_CAP:
        raise SizeError(f"brute force is capped at {BRUTE_FORCE_CAP} elements, got {n}")
    costs = np.asarray(con.costs if con is not None else [0.0] * n, dtype=np.float64)
    if len(costs) != n:
        raise ParameterError(f"{len(costs)} costs for a ground set of {n}")
    counter = _Counter(f)
    best_val, selected = -math.inf, None
    for start in range(0, 1 << n, _CHUNK):
        masks = _subset_masks(n, start, min(1 << n, start + _CHUNK))
        ok = np.ones(len(masks), dtype=bool)
        if con is not None:
            spend = masks.astype(np.float64) @ costs
            ok = spend <= con.budget
            edge = np.flatnonzero(np.abs(spend - con.budget) <= 1e-9 * max(1.0, con.budget))
            for r in edge:
                ok[r] = math.fsum(costs[masks[r]]) <= con.budget
        if max_size is not None:
            ok &= masks.sum(axis=1) <= max_size
        masks = masks[ok]
        if not len(masks):
            continue
        vals = counter.values(masks)
        top = vals.max()
        if top < best_val:
            continue
        tied = min(tuple(np.flatnonzero(masks[r]).tolist()) for r in np.flatnonzero(vals == top))
        if top > best_val or tied < selected:
            best_val, selected = top, tied
    return _finish(f, counter, selected, costs, [], True)
