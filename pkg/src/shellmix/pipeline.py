"""Glue between corpus instances, features, shells and the learner."""
import logging

import numpy as np

from .core import ConfigurationError, ShellmixError
from .learn import TrainInstance
from .losses import RougeN, make_loss
from .maximize import BudgetConstraint, greedy_knapsack
from .shells import instantiate_all

log = logging.getLogger(__name__)


class InstanceError(ShellmixError, ValueError):
    """One or more corpus instances cannot be used; ``ids`` lists them."""

    def __init__(self, message, ids):
        super().__init__(f"{message}: {', '.join(ids)}")
        self.ids = list(ids)


def oracle_target(table, constraint):
    """Greedy ROUGE-N extract under the budget, used when no gold indices exist."""
    res = greedy_knapsack(RougeN(table), constraint)
    return res.selected


def featurize(inst, recipe, n=None, budget=None):
    from .textproc import build_features

    ground, feats, table = build_features(inst, recipe, loss_order=n)
    b = inst.budget if budget is None else budget
    return ground, feats, table, BudgetConstraint(b, ground.costs)


def training_instances(corpus, recipe, shells, loss="ell-rouge", n=None, budget=None,
                       scale=1.0):
    recipe.check_shells(shells)
    missing = [c.instance_id for c in corpus if not c.references]
    if missing:
        raise InstanceError("instances without references", missing)
    out = []
    for inst in corpus:
        ground, feats, table, con = featurize(inst, recipe, n, budget)
        if scale != 1.0:
            con = BudgetConstraint(con.budget, con.costs, scale)
        comps = instantiate_all(shells, feats, ground)
        target = inst.target if inst.target is not None else oracle_target(table, con)
        ti = TrainInstance(inst.instance_id, comps, make_loss(loss, table), con, target,
                           ground=ground, features=feats, references=inst.references)
        if ti.infeasible_gold:
            log.warning("%s: gold summary exceeds the budget", inst.instance_id)
        out.append(ti)
    return out


def summarize_instance(inst, recipe, shells, weights, budget=None):
    if inst.budget == 0 and budget is None:
        log.warning("%s: budget 0, empty summary", inst.instance_id)
    ground, feats, table, con = featurize(inst, recipe, budget=budget)
    comps = instantiate_all(shells, feats, ground)
    if not comps:
        raise ConfigurationError("model has no shells")
    from .core import Mixture

    mix = Mixture(comps, np.asarray(weights, dtype=np.float64))
    return greedy_knapsack(mix, con, fill_budget=True), table
