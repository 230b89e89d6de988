"""Anchor-grounding and text-overlap metrics.

Tokenization here is deliberately plain: lowercase, strip punctuation,
split on whitespace. BLEU follows the clipped modified-precision
definition with a brevity penalty and no smoothing, so small cases stay
hand-checkable. The embedding-greedy F1 is a static-word-vector stand-in
for contextual BERTScore and is NOT comparable to it; reports label it
accordingly.
"""

from __future__ import annotations

import math
import string
from collections import Counter

import numpy as np

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def tokenize(text):
    """Lowercase, strip punctuation, split on whitespace."""
    return [t for t in text.lower().translate(_PUNCT_TABLE).split() if t]


def anchor_metrics(anchor_lemmas, sentence_lemmas, _m=None):
    """(hit fraction, all-grounded flag) of anchors against sentence lemmas.

    An anchor is grounded when its lemma occurs among the sentence's lemmas
    (normalized the same way as vocabulary construction). Empty anchor lists
    score (0.0, False).
    """
    if not anchor_lemmas:
        return 0.0, False
    present = set(sentence_lemmas)
    hits = sum(1 for a in anchor_lemmas if a in present)
    frac = hits / len(anchor_lemmas)
    return frac, frac == 1.0


def _ngram_counts(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def modified_precision(hyp_tokens, ref_tokens, n):
    """Clipped n-gram precision; (0, 0) counts when the hypothesis is short."""
    hyp_counts = _ngram_counts(hyp_tokens, n)
    total = sum(hyp_counts.values())
    if total == 0:
        return 0.0, 0, 0
    ref_counts = _ngram_counts(ref_tokens, n)
    clipped = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    return clipped / total, clipped, total


def bleu(hyp_tokens, ref_tokens, max_n=3, smooth_eps=None):
    """BLEU-1..max_n with brevity penalty and no smoothing by default.

    Any zero n-gram precision makes that order's score 0 unless
    `smooth_eps` replaces zero precisions for corpus-level reporting.
    Returns a dict {n: score}.
    """
    if not ref_tokens:
        raise ValueError("BLEU needs a non-empty reference")
    scores = {}
    c, r = len(hyp_tokens), len(ref_tokens)
    bp = 1.0 if c >= r else (math.exp(1.0 - r / c) if c > 0 else 0.0)
    precisions = []
    for n in range(1, max_n + 1):
        p, _, _ = modified_precision(hyp_tokens, ref_tokens, n)
        if p == 0.0 and smooth_eps is not None:
            p = smooth_eps
        precisions.append(p)
        if any(q == 0.0 for q in precisions):
            scores[n] = 0.0
        else:
            log_mean = sum(math.log(q) for q in precisions) / n
            scores[n] = bp * math.exp(log_mean)
    return scores


def rouge1_f1(hyp_tokens, ref_tokens):
    """Unigram-overlap F1 with clipped counts; 0.0 when either side is empty."""
    if not hyp_tokens or not ref_tokens:
        return 0.0
    hyp_counts = Counter(hyp_tokens)
    ref_counts = Counter(ref_tokens)
    overlap = sum(min(c, ref_counts[t]) for t, c in hyp_counts.items())
    precision = overlap / len(hyp_tokens)
    recall = overlap / len(ref_tokens)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def embedding_greedy_f1(hyp_tokens, ref_tokens, word_bank):
    """Greedy max-cosine matching F1 over static word-bank vectors.

    Precision is the mean over hypothesis tokens of the maximum cosine to
    any reference token; recall is symmetric; F1 is their harmonic mean
    (0 when the sum is not positive). Tokens absent from the bank are
    skipped and counted. Returns (f1_or_None, skipped_count); None means
    one side had no in-bank token, reported as missing upstream.
    """
    hyp_in = [t for t in hyp_tokens if t in word_bank]
    ref_in = [t for t in ref_tokens if t in word_bank]
    skipped = (len(hyp_tokens) - len(hyp_in)) + (len(ref_tokens) - len(ref_in))
    if not hyp_in or not ref_in:
        return None, skipped

    def unit_rows(tokens):
        mat = np.stack([word_bank.vector(t) for t in tokens]).astype(np.float64)
        return mat / np.linalg.norm(mat, axis=1, keepdims=True)

    sims = unit_rows(hyp_in) @ unit_rows(ref_in).T
    precision = float(np.mean(np.max(sims, axis=1)))
    recall = float(np.mean(np.max(sims, axis=0)))
    if precision + recall <= 0.0:
        return 0.0, skipped
    return 2.0 * precision * recall / (precision + recall), skipped
