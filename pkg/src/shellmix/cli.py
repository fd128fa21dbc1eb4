"""Command-line interface: ``shellmix {synth,recipe,train,summarize,evaluate,verify}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
"""
import argparse
import hashlib
import logging
import sys

import numpy as np

from . import io
from .core import ShellmixError
from .learn import TrainConfig, train
from .losses import EmptyReferenceError, rouge_n_prf, ell_rouge
from .pipeline import summarize_instance, training_instances
from .textproc import CorpusInstance, generic_ensemble, instance_ngrams, query_focused_ensemble

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("shellmix")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out(args, text=""):
    if not args.quiet:
        print(text)


def _file_digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _with_budget(corpus, budget):
    if budget is None:
        return corpus
    if budget < 0:
        raise UsageError("--budget-override must be >= 0")
    return [CorpusInstance(c.instance_id, c.sentences, c.references, budget, c.query,
                           c.costs, c.target, c.similarities) for c in corpus]


# ---------------------------------------------------------------- commands

def cmd_synth(args):
    from .synth import SynthSpec, synth_corpus

    spec = io.read_synth_spec(args.spec) if args.spec else SynthSpec()
    if args.seed is not None:
        spec.seed = args.seed
    if args.instances is not None:
        spec.instances = args.instances
    corpus = synth_corpus(spec)
    io.write_corpus(args.out, corpus)
    if args.write_recipe:
        io.write_recipe(args.write_recipe, spec.recipe, spec.planted_shells)
    _out(args, f"wrote {len(corpus)} instances to {args.out}")
    return EXIT_OK


def cmd_recipe(args):
    if args.kind == "query-focused":
        recipe, shells = query_focused_ensemble(seed=args.seed or 0)
    else:
        recipe, shells = generic_ensemble(external=tuple(args.external), seed=args.seed or 0)
    io.write_recipe(args.out, recipe, shells)
    _out(args, f"wrote {args.kind} recipe with {len(shells)} shells to {args.out}")
    return EXIT_OK


def _train_config(args):
    cfg = io.read_config(args.config).to_dict() if args.config else TrainConfig().to_dict()
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.passes is not None:
        cfg["passes"] = args.passes
    if args.auto_lambda:
        cfg["lam"] = "auto"
    elif args.lam is not None:
        cfg["lam"] = args.lam
    if args.lai is not None:
        cfg["lai_solver"] = args.lai
    if args.loss is not None:
        cfg["loss"] = args.loss
    return TrainConfig.from_dict(cfg)


def cmd_train(args):
    cfg = _train_config(args)
    recipe, shells = io.read_recipe(args.recipe)
    corpus = _with_budget(io.read_corpus(args.corpus), args.budget_override)
    if not corpus:
        raise io.DataError("no training instances")
    insts = training_instances(corpus, recipe, shells, loss=cfg.loss, n=args.n,
                               scale=cfg.scale)
    res = train(insts, shells, cfg)
    res.model.provenance["corpus_sha256"] = _file_digest(args.corpus)
    res.model.provenance["loss"] = cfg.loss
    res.model.provenance["loss_order"] = args.n or recipe.loss_order
    res.model.provenance["config"] = cfg.to_dict()
    io.write_model(args.out, res.model, recipe)
    if args.trace_out:
        io.write_jsonl(args.trace_out, res.trace)
    _out(args, f"trained on {len(insts)} instances, T = {res.report.T}, lambda = {res.lam:.6g}")
    for spec, w in zip(shells, res.model.weights):
        _out(args, f"  {w:12.6f}  {spec.label}")
    r = res.report
    _out(args, f"risk bound S(T) = {r.bound:.6g}  (terms {r.terms[0]:.6g} + {r.terms[1]:.6g}"
               f" + {r.terms[2]:.6g}; M={r.M} G={r.G:.6g} B={r.B:.6g} rho={r.rho:.6g}"
               f" delta={r.delta:g})")
    return EXIT_OK


def cmd_summarize(args):
    model, recipe = io.read_model(args.model)
    corpus = _with_budget(io.read_corpus(args.corpus), args.budget_override)
    rows = []
    for inst in corpus:
        res, _ = summarize_instance(inst, recipe, model.shells, model.weights)
        if res.total_cost > inst.budget:
            raise ShellmixError(f"{inst.instance_id}: summary exceeds the budget")
        rows.append(io.summary_row(inst, res))
    io.write_jsonl(args.out, rows)
    _out(args, f"wrote {len(rows)} summaries to {args.out}")
    return EXIT_OK


def evaluate_corpus(summaries, corpus, n):
    """Per-instance ROUGE-N recall/precision/F1 and the complement loss."""
    rows, skipped = [], []
    for inst in corpus:
        if inst.instance_id not in summaries:
            log.warning("%s: no summary, skipped", inst.instance_id)
            skipped.append({"instance_id": inst.instance_id, "reason": "no summary"})
            continue
        if not inst.references:
            log.warning("%s: no references, skipped", inst.instance_id)
            skipped.append({"instance_id": inst.instance_id, "reason": "no references"})
            continue
        table = instance_ngrams(inst, n)
        S = summaries[inst.instance_id]
        try:
            r, p, f = rouge_n_prf(S, table)
        except EmptyReferenceError:
            log.warning("%s: references have no %d-grams, skipped", inst.instance_id, n)
            skipped.append({"instance_id": inst.instance_id, "reason": "empty references"})
            continue
        rows.append({"instance_id": inst.instance_id, "recall": r, "precision": p,
                     "f1": f, "ell_rouge": ell_rouge(S, table)})
    keys = ("recall", "precision", "f1", "ell_rouge")
    mean = {k: float(np.mean([row[k] for row in rows])) if rows else 0.0 for k in keys}
    return {"n": n, "instances": rows, "mean": mean, "evaluated": len(rows),
            "skipped": skipped}


def cmd_evaluate(args):
    summaries = io.read_summaries(args.summaries)
    corpus = io.read_corpus(args.corpus)
    n = args.n or 2
    report = evaluate_corpus(summaries, corpus, n)
    if args.json:
        io.write_json(args.json, report)
    _out(args, f"{'instance':<24} {'R':>8} {'P':>8} {'F1':>8} {'ell':>8}")
    for row in report["instances"]:
        _out(args, f"{row['instance_id']:<24} {row['recall']:8.4f} {row['precision']:8.4f}"
                   f" {row['f1']:8.4f} {row['ell_rouge']:8.4f}")
    m = report["mean"]
    _out(args, f"{'mean':<24} {m['recall']:8.4f} {m['precision']:8.4f} {m['f1']:8.4f}"
               f" {m['ell_rouge']:8.4f}")
    _out(args, f"ROUGE-{n}: {report['evaluated']} evaluated, {len(report['skipped'])} skipped")
    return EXIT_OK


def cmd_verify(args):
    from .verify import SUITES, ratio_histogram, run_suites

    names = args.suite or list(SUITES)
    unknown = sorted(set(names) - set(SUITES))
    if unknown:
        raise UsageError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    results = run_suites(names, seed=args.seed or 0, quick=args.quick)
    for res in results:
        _out(args, res.line())
        for key in ("knapsack_ratios", "cardinality_ratios"):
            if key in res.detail:
                _out(args, f"  {key.replace('_', ' ')}:")
                for lo, hi, c in ratio_histogram(res.detail[key]):
                    _out(args, f"    [{lo:.4f}, {min(hi, 1.0):.4f}]  {c}")
    failed = [r.name for r in results if not r.passed]
    _out(args, "all suites passed" if not failed else f"failed: {', '.join(failed)}")
    return EXIT_VERIFY if failed else EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser():
    p = _Parser(prog="shellmix", description="Learn mixtures of submodular shells "
                                             "and summarize under a budget.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("-q", "--quiet", action="store_true", help="only print errors")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="generate a planted-truth corpus")
    s.add_argument("spec", nargs="?", help="synth spec JSON (defaults if omitted)")
    s.add_argument("-o", "--out", required=True)
    s.add_argument("--instances", type=int)
    s.add_argument("--write-recipe", metavar="PATH",
                   help="also write the recipe and planted shells")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("recipe", parents=[common], help="write a built-in ensemble recipe")
    s.add_argument("kind", choices=("query-focused", "generic"))
    s.add_argument("-o", "--out", required=True)
    s.add_argument("--external", nargs="*", default=["lsa"],
                   help="external similarity channels (generic recipe)")
    s.set_defaults(func=cmd_recipe)

    s = sub.add_parser("train", parents=[common], help="learn mixture weights")
    s.add_argument("corpus")
    s.add_argument("--recipe", required=True)
    s.add_argument("--config")
    s.add_argument("-o", "--out", required=True, help="model file")
    s.add_argument("--passes", type=int)
    lam = s.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="lam", type=float)
    lam.add_argument("--auto-lambda", action="store_true")
    s.add_argument("--lai", choices=("greedy", "brute"))
    s.add_argument("--loss", choices=("ell-rouge", "one-minus-rouge"))
    s.add_argument("--n", type=int, choices=(1, 2), help="n-gram order of the loss")
    s.add_argument("--budget-override", type=float)
    s.add_argument("--trace-out")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("summarize", parents=[common], help="extract budgeted summaries")
    s.add_argument("model")
    s.add_argument("corpus")
    s.add_argument("-o", "--out", required=True)
    s.add_argument("--budget-override", type=float)
    s.set_defaults(func=cmd_summarize)

    s = sub.add_parser("evaluate", parents=[common], help="ROUGE-N against references")
    s.add_argument("summaries")
    s.add_argument("corpus")
    s.add_argument("--n", type=int, choices=(1, 2))
    s.add_argument("--json", help="write the machine-readable report here")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("verify", parents=[common], help="run the property suites")
    s.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    s.add_argument("--quick", action="store_true", help="smaller sample sizes")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"shellmix: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ShellmixError, ValueError, OSError) as e:
        print(f"shellmix: error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
