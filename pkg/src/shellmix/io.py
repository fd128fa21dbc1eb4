"""File formats: corpus and summary JSONL, model/recipe/config/spec JSON.

All writers emit sorted keys and a trailing newline so equal inputs give
byte-identical files.
"""
import hashlib
import json
import math

from .core import ShellmixError
from .learn import Model, TrainConfig
from .shells import ShellSpec
from .textproc import CorpusInstance, FeatureRecipe

MODEL_FORMAT = 1


class DataError(ShellmixError, ValueError):
    """Malformed input file; the message names the file, line and field."""


def _dumps(obj, indent=None):
    sep = (",", ":") if indent is None else (",", ": ")
    return json.dumps(obj, sort_keys=True, indent=indent, separators=sep,
                      ensure_ascii=False, allow_nan=False)


def _where(path, lineno=None):
    return f"{path}:{lineno}" if lineno is not None else str(path)


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise DataError(f"{_where(path, e.lineno)}: invalid JSON ({e.msg})") from None
    except OSError as e:
        raise DataError(f"{path}: {e.strerror}") from None


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dumps(obj, indent=2) + "\n")


# ------------------------------------------------------------------ corpus

def _sentence_fields(raw, where):
    if isinstance(raw, str):
        return raw, None
    if isinstance(raw, dict) and isinstance(raw.get("text"), str):
        cost = raw.get("cost")
        if cost is not None and not (isinstance(cost, (int, float)) and cost > 0):
            raise DataError(f"{where}: field 'sentences': cost must be a positive number")
        return raw["text"], cost
    raise DataError(f"{where}: field 'sentences': expected a string or {{text, cost}} object")


def instance_from_dict(d, where="<corpus>"):
    if not isinstance(d, dict):
        raise DataError(f"{where}: expected an object")
    if not isinstance(d.get("instance_id"), (str, int)):
        raise DataError(f"{where}: field 'instance_id' missing or not a string")
    if not isinstance(d.get("sentences"), list):
        raise DataError(f"{where}: field 'sentences' missing or not a list")
    texts, costs = zip(*[_sentence_fields(s, where) for s in d["sentences"]]) \
        if d["sentences"] else ((), ())
    refs = d.get("references", [])
    if not isinstance(refs, list) or not all(
            isinstance(r, str) or (isinstance(r, list) and all(isinstance(x, str) for x in r))
            for r in refs):
        raise DataError(f"{where}: field 'references': expected strings or lists of strings")
    budget = d.get("budget")
    if not isinstance(budget, (int, float)) or isinstance(budget, bool) or not budget >= 0:
        raise DataError(f"{where}: field 'budget' missing or negative")
    query = d.get("query")
    if query is not None and not isinstance(query, str):
        raise DataError(f"{where}: field 'query' must be a string")
    target = d.get("target")
    if target is not None:
        if not isinstance(target, list) or not all(
                isinstance(i, int) and 0 <= i < len(texts) for i in target):
            raise DataError(f"{where}: field 'target' must list sentence indices")
    sims = d.get("similarities")
    if sims is not None and not isinstance(sims, dict):
        raise DataError(f"{where}: field 'similarities' must map channel ids to matrices")
    return CorpusInstance(
        instance_id=str(d["instance_id"]),
        sentences=list(texts),
        references=[list(r) if isinstance(r, list) else r for r in refs],
        budget=float(budget),
        query=query,
        costs=list(costs) if any(c is not None for c in costs) else None,
        target=list(target) if target is not None else None,
        similarities=sims,
    )


def instance_to_dict(inst):
    if inst.costs is None:
        sents = list(inst.sentences)
    else:
        sents = [s if c is None else {"text": s, "cost": c}
                 for s, c in zip(inst.sentences, inst.costs)]
    d = {"instance_id": inst.instance_id, "sentences": sents,
         "references": inst.references, "budget": inst.budget}
    if inst.query is not None:
        d["query"] = inst.query
    if inst.target is not None:
        d["target"] = [int(i) for i in inst.target]
    if inst.similarities:
        d["similarities"] = {k: [[float(x) for x in row] for row in m]
                             for k, m in inst.similarities.items()}
    return d


def read_corpus(path):
    out, seen = [], set()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as e:
        raise DataError(f"{path}: {e.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = _where(path, lineno)
            try:
                d = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{where}: invalid JSON ({e.msg})") from None
            try:
                inst = instance_from_dict(d, where)
            except DataError:
                raise
            except ValueError as e:
                raise DataError(f"{where}: {e}") from None
            if inst.instance_id in seen:
                raise DataError(f"{where}: duplicate instance_id {inst.instance_id!r}")
            seen.add(inst.instance_id)
            out.append(inst)
    return out


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(_dumps(row) + "\n")


def write_corpus(path, corpus):
    write_jsonl(path, (instance_to_dict(c) for c in corpus))


# ------------------------------------------------------------------- model

def _content_hash(body):
    return hashlib.sha256(_dumps(body).encode("utf-8")).hexdigest()


def _clean(x):
    # JSON has no inf; the only one we produce is a truncation threshold
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def model_to_dict(model, recipe):
    body = {
        "format_version": MODEL_FORMAT,
        "shells": [s.to_dict() for s in model.shells],
        "weights": list(model.weights),
        "recipe": recipe.to_dict(),
        "provenance": _clean(model.provenance),
    }
    body["content_hash"] = _content_hash(body)
    return body


def model_from_dict(d, where="<model>"):
    if not isinstance(d, dict):
        raise DataError(f"{where}: expected an object")
    if d.get("format_version") != MODEL_FORMAT:
        raise DataError(f"{where}: unsupported format_version {d.get('format_version')!r}")
    for key in ("shells", "weights", "recipe"):
        if key not in d:
            raise DataError(f"{where}: field {key!r} missing")
    body = {k: v for k, v in d.items() if k != "content_hash"}
    if "content_hash" in d and d["content_hash"] != _content_hash(body):
        raise DataError(f"{where}: content_hash does not match the file contents")
    try:
        shells = [ShellSpec.from_dict(s) for s in d["shells"]]
        recipe = FeatureRecipe.from_dict(d["recipe"])
        model = Model(shells, d["weights"], d.get("provenance", {}))
    except (TypeError, KeyError, ValueError) as e:
        raise DataError(f"{where}: {e}") from None
    recipe.check_shells(shells)
    return model, recipe


def write_model(path, model, recipe):
    write_json(path, model_to_dict(model, recipe))


def read_model(path):
    return model_from_dict(read_json(path), str(path))


# ------------------------------------------------------ small JSON documents

def read_recipe(path):
    """A recipe file holds ``{"recipe": {...}, "shells": [...]}``."""
    d = read_json(path)
    try:
        recipe = FeatureRecipe.from_dict(d["recipe"])
        shells = [ShellSpec.from_dict(s) for s in d["shells"]]
    except (TypeError, KeyError) as e:
        raise DataError(f"{path}: missing or malformed field {e}") from None
    except ValueError as e:
        raise DataError(f"{path}: {e}") from None
    recipe.check_shells(shells)
    return recipe, shells


def write_recipe(path, recipe, shells):
    write_json(path, {"recipe": recipe.to_dict(), "shells": [s.to_dict() for s in shells]})


def read_config(path):
    d = read_json(path)
    try:
        return TrainConfig.from_dict(d)
    except TypeError as e:
        raise DataError(f"{path}: {e}") from None
    except ValueError as e:
        raise DataError(f"{path}: {e}") from None


def read_synth_spec(path):
    from .synth import SynthSpec

    d = read_json(path)
    try:
        return SynthSpec.from_dict(d)
    except (TypeError, KeyError) as e:
        raise DataError(f"{path}: malformed synth spec ({e})") from None


def summary_row(inst, result):
    return {
        "instance_id": inst.instance_id,
        "selected": [int(i) for i in result.selected],
        "sentences": [inst.sentences[i] for i in result.selected],
        "total_cost": result.total_cost,
        "objective": result.value,
        "budget": inst.budget,
    }


def read_summaries(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                out[str(d["instance_id"])] = [int(i) for i in d["selected"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise DataError(f"{_where(path, lineno)}: bad summary row ({e})") from None
    return out
