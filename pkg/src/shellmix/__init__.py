"""Learn nonnegative mixtures of submodular shells and use them to summarize."""
from ._kernels import BACKEND
from .core import (
    GroundSet,
    Mixture,
    Modular,
    FunctionOf,
    SetFunction,
    check_monotone,
    check_submodular,
    evaluate,
    marginal_gain,
    mixture_evaluate,
)
from .shells import InstanceFeatures, ShellSpec, instantiate, setcover_from_truncations
from .maximize import BudgetConstraint, brute_force, greedy_cardinality, greedy_knapsack

__version__ = "0.1.0"
