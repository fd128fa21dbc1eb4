"""Large-margin learning of shell mixture weights.

Projected subgradient descent on

    (1/T) sum_t hinge_t(w) + (lambda/2) ||w||^2,   w >= 0,

    hinge_t(w) = max_y [w . f_t(y) + loss_t(y)] - w . f_t(y_t)

where the inner max (loss-augmented inference) is solved by the cost-scaled
greedy or, on small instances, by brute force.
"""
from dataclasses import asdict, dataclass, field
import hashlib
import json
import logging
import math

import numpy as np

from ._rng import stream
from .core import ConfigurationError, Mixture, ParameterError
from .maximize import BudgetConstraint, brute_force, greedy_knapsack

log = logging.getLogger(__name__)

GREEDY_RHO = 1.0 - 1.0 / math.sqrt(math.e)
SOLVERS = ("greedy", "brute")


@dataclass
class TrainConfig:
    lam: object = "auto"
    passes: int = 5
    seed: int = 0
    lai_solver: str = "greedy"
    shuffle: bool = True
    loss: str = "ell-rouge"
    loss_weight: float = 1.0
    delta: float = 0.05
    scale: float = 1.0
    fill_budget: bool = True
    rho: float = None

    def __post_init__(self):
        if self.lam != "auto":
            self.lam = float(self.lam)
            if not self.lam > 0:
                raise ConfigurationError(f"lambda must be > 0, got {self.lam}")
        if self.lai_solver not in SOLVERS:
            raise ConfigurationError(f"lai solver must be one of {SOLVERS}")
        if int(self.passes) < 1:
            raise ConfigurationError("passes must be >= 1")
        self.passes = int(self.passes)
        if not self.loss_weight >= 0:
            raise ConfigurationError("loss_weight must be >= 0")

    @property
    def auto_lambda(self):
        return self.lam == "auto"

    def solver_rho(self):
        if self.rho is not None:
            return float(self.rho)
        return 1.0 if self.lai_solver == "brute" else GREEDY_RHO

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


class TrainInstance:
    """One training example with its shells already instantiated.

    ``components`` are the M instantiated shells, ``loss`` the per-instance
    loss set function and ``target`` the gold extractive summary.
    """

    def __init__(self, instance_id, components, loss, constraint, target,
                 ground=None, features=None, references=None):
        self.instance_id = str(instance_id)
        self.components = list(components)
        self.loss = loss
        self.constraint = constraint
        self.target = tuple(sorted(int(i) for i in target))
        self.ground = ground
        self.features = features
        self.references = references
        n = loss.n
        if any(c.n != n for c in self.components):
            raise ConfigurationError(f"{self.instance_id}: components disagree on ground-set size")
        if len(constraint.costs) != n:
            raise ConfigurationError(f"{self.instance_id}: constraint has wrong length")
        self.gold = self.vector(self.target)
        self.infeasible_gold = not constraint.feasible(self.target)

    @property
    def M(self):
        return len(self.components)

    def vector(self, S):
        mask = np.zeros(self.loss.n, dtype=bool)
        mask[list(S)] = True
        return np.array([c._values(mask[None, :])[0] for c in self.components])


@dataclass
class LAIResult:
    selected: tuple
    objective: float
    guaranteed: bool


def _objective(w, inst, loss, loss_weight):
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (inst.M,):
        raise ConfigurationError(f"{inst.instance_id}: {w.size} weights for {inst.M} shells")
    return Mixture(inst.components + [loss], np.append(w, loss_weight))


def lai(w, inst, loss=None, solver="greedy", loss_weight=1.0, fill_budget=True):
    """Approximately solve ``max_y w . f(y) + loss(y)`` under the budget."""
    loss = inst.loss if loss is None else loss
    obj = _objective(w, inst, loss, loss_weight)
    if solver == "brute":
        res = brute_force(obj, inst.constraint)
        return LAIResult(res.selected, res.value, True)
    if solver != "greedy":
        raise ConfigurationError(f"unknown solver {solver!r}")
    res = greedy_knapsack(obj, inst.constraint, fill_budget=fill_budget)
    return LAIResult(res.selected, res.value, res.guaranteed)


def hinge_loss(w, inst, loss=None, solver="greedy", loss_weight=1.0, fill_budget=True):
    """Generalized hinge at ``w``; with the greedy solver it can undershoot."""
    res = lai(w, inst, loss, solver, loss_weight, fill_budget)
    return res.objective - float(np.dot(w, inst.gold))


def subgradient(w, inst, y_hat, lam):
    w = np.asarray(w, dtype=np.float64)
    return lam * w + (inst.vector(y_hat) - inst.gold)


def project_nonneg(w):
    # + 0.0 turns -0.0 into 0.0
    return np.maximum(np.asarray(w, dtype=np.float64), 0.0) + 0.0


@dataclass
class RiskBoundReport:
    M: int
    G: float
    B: float
    rho: float
    delta: float
    T: int
    bound: float
    terms: tuple
    lam: float

    def to_dict(self):
        d = asdict(self)
        d["terms"] = list(self.terms)
        return d


def auto_lambda(G, M, T):
    return (G / M) * math.sqrt(2.0 * (1.0 + math.log(T)) / T)


def risk_bound(M, G, B, rho, delta, T):
    """Additive slack of the generalization bound for rho-approximate inference.

    ``(MG/rho) sqrt(2(1 + log T)/T) + B sqrt((2/T) log(1/delta)) + ((1 - rho)/rho) M``
    """
    if not 0.0 < rho <= 1.0:
        raise ParameterError(f"rho must lie in (0, 1], got {rho}")
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    if int(T) < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    if M < 1 or G < 0 or B < 0:
        raise ParameterError("M must be >= 1 and G, B nonnegative")
    T = int(T)
    first = (M * G / rho) * math.sqrt(2.0 * (1.0 + math.log(T)) / T)
    second = B * math.sqrt((2.0 / T) * math.log(1.0 / delta))
    third = ((1.0 - rho) / rho) * M
    return RiskBoundReport(M, G, B, rho, delta, T, first + second + third,
                           (first, second, third), auto_lambda(G, M, T))


@dataclass
class Model:
    shells: tuple
    weights: tuple
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.shells = tuple(self.shells)
        self.weights = tuple(float(w) for w in self.weights)
        if len(self.shells) != len(self.weights):
            raise ConfigurationError(f"{len(self.shells)} shells but {len(self.weights)} weights")
        if any(not w >= 0 for w in self.weights):
            raise ConfigurationError("model weights must be nonnegative")


@dataclass
class TrainResult:
    model: Model
    report: RiskBoundReport
    trace: list
    weights_path: np.ndarray   # row t-1 holds w_t
    lam: float

    def pass_means(self, per_pass):
        h = np.array([r["hinge_surrogate"] for r in self.trace])
        return h.reshape(-1, per_pass).mean(axis=1)


def measure(instances, cfg):
    """Max subgradient norm and max hinge at ``w = 0`` (no updates)."""
    G = B = 0.0
    for inst in instances:
        w = np.zeros(inst.M)
        res = lai(w, inst, solver=cfg.lai_solver, loss_weight=cfg.loss_weight,
                  fill_budget=cfg.fill_budget)
        g = inst.vector(res.selected) - inst.gold
        G = max(G, float(np.linalg.norm(g)))
        B = max(B, res.objective)
    return G, B


def train(instances, shells, cfg):
    """Projected subgradient descent with averaged iterates.

    Runs ``T = passes * len(instances)`` steps with step size ``2 / (lambda t)``
    and returns the mean of ``w_1 .. w_T``.
    """
    instances = list(instances)
    if not instances:
        raise ConfigurationError("no training instances")
    M = len(shells)
    for inst in instances:
        if inst.M != M:
            raise ConfigurationError(f"{inst.instance_id}: {inst.M} components for {M} shells")
    T = cfg.passes * len(instances)

    G_obs = B_obs = 0.0
    if cfg.auto_lambda:
        G0, B0 = measure(instances, cfg)
        G_obs, B_obs = G0, B0
        lam = auto_lambda(G0, M, T)
        if lam <= 0:
            log.warning("zero subgradient at w = 0; falling back to lambda = 1")
            lam = 1.0
    else:
        lam = cfg.lam

    w = np.zeros(M)
    total = np.zeros(M)
    path = np.zeros((T, M))
    trace = []
    t = 0
    for p in range(cfg.passes):
        order = np.arange(len(instances))
        if cfg.shuffle:
            order = stream(cfg.seed, "pass", p).permutation(len(instances))
        for idx in order:
            inst = instances[int(idx)]
            t += 1
            res = lai(w, inst, solver=cfg.lai_solver, loss_weight=cfg.loss_weight,
                      fill_budget=cfg.fill_budget)
            hinge = res.objective - float(w @ inst.gold)
            g = subgradient(w, inst, res.selected, lam)
            gnorm = float(np.linalg.norm(g))
            w = project_nonneg(w - (2.0 / (lam * t)) * g)
            assert np.all(w >= 0.0), "projection left a negative weight"
            total += w
            path[t - 1] = w
            G_obs = max(G_obs, gnorm)
            B_obs = max(B_obs, hinge)
            trace.append({
                "t": t,
                "instance_id": inst.instance_id,
                "hinge_surrogate": hinge,
                "grad_norm": gnorm,
                "weights_after": w.tolist(),
                "max_weight": float(w.max()) if M else 0.0,
                "infeasible_gold": inst.infeasible_gold,
                "guaranteed": res.guaranteed,
            })
    avg = total / T
    report = risk_bound(M, G_obs, B_obs, cfg.solver_rho(), cfg.delta, T)
    provenance = {
        "config_hash": cfg.digest(),
        "seed": cfg.seed,
        "passes": cfg.passes,
        "T": T,
        "lambda": lam,
        "risk_bound": report.to_dict(),
    }
    model = Model(tuple(shells), tuple(avg.tolist()), provenance)
    return TrainResult(model, report, trace, path, lam)


def predict(w, components, constraint, fill_budget=True):
    """Summarize one instance with the learned mixture."""
    mix = Mixture(components, w)
    return greedy_knapsack(mix, constraint, fill_budget=fill_budget)
