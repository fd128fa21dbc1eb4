"""ROUGE-N as a set function, and the complement-recall loss.

All n-gram counts are integers. Ratios are formed once, at the end; the
``*_counts`` / ``*_exact`` variants return the integer numerator and
denominator (or a :class:`fractions.Fraction`) for tests that need exact
equality.
"""
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels as K
from .core import ParameterError, SetFunction, ShellmixError, canonical


class EmptyReferenceError(ShellmixError, ValueError):
    pass


def ngrams(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def count_ngrams(segments, n):
    """n-gram counts over token segments; n-grams never span two segments."""
    c = Counter()
    for seg in segments:
        c.update(ngrams(seg, n))
    return c


@dataclass(frozen=True, eq=False)
class NGramTable:
    """n-gram statistics for one instance.

    ``grams`` indexes columns: first every n-gram that occurs in the
    documents (sorted), then n-grams that only occur in references.
    ``sentence_counts[s, e]`` counts e in sentence s, ``ref_counts[k, e]``
    counts e in reference k. ``complement`` marks document n-grams absent from
    every reference.
    """

    n: int
    grams: tuple
    sentence_counts: np.ndarray
    ref_counts: np.ndarray
    complement: np.ndarray
    omega: np.ndarray

    @property
    def n_sentences(self):
        return self.sentence_counts.shape[0]

    @property
    def n_refs(self):
        return self.ref_counts.shape[0]

    @property
    def totals(self):
        """``r_e = c_e(V)``."""
        return self.sentence_counts.sum(axis=0)

    def permuted(self, order):
        """Same table with sentence ``order[i]`` relabeled as sentence ``i``."""
        return NGramTable(self.n, self.grams, self.sentence_counts[np.asarray(order)],
                          self.ref_counts, self.complement, self.omega)


def build_ngram_table(sentences, references, n=2, omega=None):
    """Build the table from tokenized text.

    ``sentences`` and ``references`` are lists whose items are lists of token
    segments (a plain token list counts as one segment). ``omega`` maps an
    n-gram tuple to a nonnegative weight; missing n-grams get weight 1.
    """
    if n < 1:
        raise ParameterError(f"n-gram order must be >= 1, got {n}")

    def segs(item):
        if item and isinstance(item[0], str):
            return [item]
        return item

    sent = [count_ngrams(segs(s), n) for s in sentences]
    refs = [count_ngrams(segs(r), n) for r in references]
    doc = sorted(set().union(*sent)) if sent else []
    in_doc = set(doc)
    ref_only = sorted(set().union(*refs) - in_doc) if refs else []
    grams = tuple(doc + ref_only)
    col = {g: i for i, g in enumerate(grams)}
    sc = np.zeros((len(sent), len(grams)), dtype=np.int64)
    for s, c in enumerate(sent):
        for g, k in c.items():
            sc[s, col[g]] = k
    rc = np.zeros((len(refs), len(grams)), dtype=np.int64)
    for r, c in enumerate(refs):
        for g, k in c.items():
            rc[r, col[g]] = k
    in_ref = set().union(*refs) if refs else set()
    comp = np.array([g in in_doc and g not in in_ref for g in grams], dtype=bool)
    w = np.ones(len(grams))
    if omega:
        for g, val in omega.items():
            if g in col:
                w[col[g]] = float(val)
    if np.any(w < 0):
        raise ParameterError("n-gram weights must be nonnegative")
    for a in (sc, rc, comp, w):
        a.setflags(write=False)
    return NGramTable(n, grams, sc, rc, comp, w)


def _mask(table, S):
    m = np.zeros(table.n_sentences, dtype=bool)
    idx = list(canonical(S))
    if idx and (idx[0] < 0 or idx[-1] >= table.n_sentences):
        raise ParameterError(f"sentence index outside 0..{table.n_sentences - 1}")
    m[idx] = True
    return m


def rouge_n_counts(S, table):
    """Integer ``(clipped matches, reference n-gram total)``."""
    den = int(table.ref_counts.sum())
    if den == 0:
        raise EmptyReferenceError("references contain no n-grams")
    mask = _mask(table, S)
    num = int(K.clipped_counts(mask[None, :], table.sentence_counts, table.ref_counts)[0])
    return num, den


def rouge_n(S, table):
    num, den = rouge_n_counts(S, table)
    return num / den


def rouge_n_prf(S, table):
    """Recall, precision and F1 of the summary S (evaluation only)."""
    num, den = rouge_n_counts(S, table)
    cand = int(table.sentence_counts[_mask(table, S)].sum())
    recall = num / den
    precision = num / (table.n_refs * cand) if cand else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return recall, precision, f1


def one_minus_rouge(S, table):
    return 1.0 - rouge_n(S, table)


def _ell_parts(table):
    w = np.where(table.complement, table.omega, 0.0)
    per_sentence = table.sentence_counts @ w
    den = float(w @ table.totals)
    return per_sentence, den


def ell_rouge(S, table):
    """Complement recall: share of non-reference n-gram mass that S covers."""
    per_sentence, den = _ell_parts(table)
    if den <= 0:
        return 0.0
    mask = _mask(table, S)
    return float(np.where(mask, per_sentence, 0.0).sum()) / den


def ell_rouge_exact(S, table):
    """``ell_rouge`` as an exact Fraction (weights are converted exactly)."""
    w = [Fraction(float(x)) if c else Fraction(0) for x, c in zip(table.omega, table.complement)]
    counts = table.sentence_counts
    den = sum(w[e] * int(t) for e, t in enumerate(table.totals) if w[e])
    if den == 0:
        return Fraction(0)
    num = Fraction(0)
    for s in canonical(S):
        row = counts[s]
        num += sum(w[e] * int(row[e]) for e in np.flatnonzero(row) if w[e])
    return num / den


class RougeN(SetFunction):
    """ROUGE-N recall; monotone submodular."""

    def __init__(self, table):
        super().__init__(table.n_sentences)
        self.table = table
        self.den = int(table.ref_counts.sum())
        if self.den == 0:
            raise EmptyReferenceError("references contain no n-grams")
        self.counts = np.ascontiguousarray(table.sentence_counts)
        self.refs = np.ascontiguousarray(table.ref_counts)
        self.label = f"rouge{table.n}"

    def _values(self, masks):
        return K.clipped_counts(masks, self.counts, self.refs) / self.den

    def _gains(self, mask, cand):
        held = np.ascontiguousarray(mask.astype(np.int64) @ self.counts)
        return K.clipped_gains(held, self.counts, self.refs, cand) / self.den


class OneMinusRouge(SetFunction):
    """``1 - ROUGE-N``: supermodular and decreasing, so no greedy guarantee."""

    monotone = False
    submodular = False

    def __init__(self, table):
        super().__init__(table.n_sentences)
        self.rouge = RougeN(table)
        self.label = f"one-minus-rouge{table.n}"

    def _values(self, masks):
        return 1.0 - self.rouge._values(masks)

    def _gains(self, mask, cand):
        return -self.rouge._gains(mask, cand)


class EllRouge(SetFunction):
    """Complement-recall loss; modular and monotone."""

    def __init__(self, table):
        super().__init__(table.n_sentences)
        self.table = table
        per_sentence, den = _ell_parts(table)
        self.degenerate = den <= 0
        self.per_sentence = per_sentence / den if den > 0 else np.zeros_like(per_sentence)
        self._raw = per_sentence
        self._den = den
        self.label = f"ell-rouge{table.n}"

    def _values(self, masks):
        if self.degenerate:
            return np.zeros(masks.shape[0])
        return np.where(masks, self._raw[None, :], 0.0).sum(axis=1) / self._den

    def _gains(self, mask, cand):
        return self.per_sentence[cand].copy()


LOSSES = {"ell-rouge": EllRouge, "one-minus-rouge": OneMinusRouge}


def make_loss(kind, table):
    try:
        return LOSSES[kind](table)
    except KeyError:
        raise ParameterError(f"unknown loss {kind!r}; choose from {sorted(LOSSES)}") from None
