"""Anchor-condition controls: random, ordered (decoded), oracle."""

from __future__ import annotations

import numpy as np

from ..corpus import CONTENT_POS

CONDITIONS = ("random", "ordered", "oracle")


def oracle_anchors(sentence, vocab_set, m):
    """First m distinct in-vocabulary content lemmas in reading order."""
    out = []
    seen = set()
    for token in sentence.tokens:
        if token.pos in CONTENT_POS and token.lemma in vocab_set and token.lemma not in seen:
            seen.add(token.lemma)
            out.append(token.lemma)
            if len(out) == m:
                break
    return out


def random_anchors(vocab_lemmas, m, seed, draw_index):
    """m distinct keywords drawn uniformly; child-seeded per draw."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, draw_index]))
    m_eff = min(m, len(vocab_lemmas))
    picks = rng.choice(len(vocab_lemmas), size=m_eff, replace=False)
    return [vocab_lemmas[i] for i in picks]


def condition_anchors(condition, *, sentence, decoded, vocab_lemmas, vocab_set, m,
                      seed=0, draw_index=0):
    """Anchor lemma list for one sentence under one condition (may be empty)."""
    if condition == "ordered":
        return list(decoded.lemmas()) if decoded is not None else []
    if condition == "oracle":
        return oracle_anchors(sentence, vocab_set, m)
    if condition == "random":
        return random_anchors(vocab_lemmas, m, seed, draw_index)
    raise ValueError(f"unknown anchor condition {condition!r}")
