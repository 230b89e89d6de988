"""Information-scale quantities for anchor targets versus full sentences.

An ordered anchor sequence of length m over a V-word vocabulary spans
V^m outcomes, i.e. m * log2(V) bits; an L-word sentence over the same
lexical alphabet needs at least L * log2(V) bits. These are target-size
proxies, not estimates of neural information content.
"""

from __future__ import annotations

import math


def anchor_entropy(vocab_size, m, with_repetition=True):
    """Bits to specify an ordered m-anchor sequence over a V-word vocabulary.

    With repetition (default): m * log2(V). Without repetition:
    log2(V * (V-1) * ... * (V-m+1)), for sensitivity comparisons.
    """
    if vocab_size < 1:
        raise ValueError(f"vocabulary size must be >= 1, got {vocab_size}")
    if m < 0:
        raise ValueError(f"anchor count must be >= 0, got {m}")
    if with_repetition:
        return m * math.log2(vocab_size)
    if m > vocab_size:
        raise ValueError(f"cannot draw {m} distinct anchors from {vocab_size} words")
    return sum(math.log2(vocab_size - i) for i in range(m))


def sentence_lower_bound(length, vocab_size):
    """Bits to specify an L-word sentence drawn from a V-word alphabet."""
    if vocab_size < 1:
        raise ValueError(f"vocabulary size must be >= 1, got {vocab_size}")
    if length < 0:
        raise ValueError(f"sentence length must be >= 0, got {length}")
    return length * math.log2(vocab_size)


def scale_table(vocab_sizes, ms, sentence_length, with_repetition=True):
    """Grid of anchor entropies plus the sentence bound, as row dicts."""
    rows = []
    for v in vocab_sizes:
        for m in ms:
            rows.append(
                {
                    "vocab_size": v,
                    "m": m,
                    "kind": "anchor",
                    "bits": round(anchor_entropy(v, m, with_repetition), 2),
                }
            )
        rows.append(
            {
                "vocab_size": v,
                "m": sentence_length,
                "kind": "sentence_lower_bound",
                "bits": round(sentence_lower_bound(sentence_length, v), 2),
            }
        )
    return rows
