"""Anchor decoding: segments -> nearest keywords -> ordered Top-m sequence."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch

from .model import encode_sequence

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnchorEntry:
    keyword_id: int
    keyword: str
    position: int
    confidence: float


@dataclass(frozen=True)
class AnchorSequence:
    sentence_id: str
    subject_id: str
    entries: tuple
    m_requested: int

    def lemmas(self):
        return [e.keyword for e in self.entries]

    def to_dict(self):
        return {
            "sentence_id": self.sentence_id,
            "subject_id": self.subject_id,
            "m_requested": self.m_requested,
            "entries": [
                {
                    "keyword_id": e.keyword_id,
                    "keyword": e.keyword,
                    "position": e.position,
                    "confidence": e.confidence,
                }
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(
            sentence_id=obj["sentence_id"],
            subject_id=obj["subject_id"],
            m_requested=obj["m_requested"],
            entries=tuple(
                AnchorEntry(
                    keyword_id=e["keyword_id"],
                    keyword=e["keyword"],
                    position=e["position"],
                    confidence=e["confidence"],
                )
                for e in obj["entries"]
            ),
        )


def select_top_m(scored, m):
    """Top-m by confidence, dedup keywords, re-sort by source position.

    `scored` is a list of (keyword_id, position, confidence). Ranking is by
    confidence descending with earlier positions breaking ties; duplicates
    of one keyword keep the highest-confidence (then earliest) occurrence.
    """
    ranked = sorted(scored, key=lambda t: (-t[2], t[1]))[:m]
    kept = {}
    for kw_id, pos, conf in ranked:
        if kw_id not in kept:
            kept[kw_id] = (pos, conf)
    entries = [(kw_id, pos, conf) for kw_id, (pos, conf) in kept.items()]
    entries.sort(key=lambda t: t[1])
    return entries


def decode_anchors(model, sample, vocab_lemmas, bank, m) -> AnchorSequence:
    """Decode one sample into its ordered Top-m anchor sequence.

    Each segment is matched to the nearest keyword by cosine similarity
    (confidence). A sample with no segments decodes to an empty sequence
    with a warning. Sequences shorter than m stay truncated.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not sample.segments:
        log.warning("sample %s/%s has no segments; empty anchor sequence",
                    sample.sentence_id, sample.subject_id)
        return AnchorSequence(sample.sentence_id, sample.subject_id, (), m)

    features = np.stack([vec for _, vec in sample.segments])
    positions = [pos for pos, _ in sample.segments]
    outputs = encode_sequence(model, features)
    sims = (outputs @ bank.T).cpu().numpy()  # (L, V)

    scored = []
    for row, pos in enumerate(positions):
        kw_id = int(np.argmax(sims[row]))
        scored.append((kw_id, pos, float(sims[row, kw_id])))

    entries = tuple(
        AnchorEntry(kw_id, vocab_lemmas[kw_id], pos, conf)
        for kw_id, pos, conf in select_top_m(scored, m)
    )
    return AnchorSequence(sample.sentence_id, sample.subject_id, entries, m)


def segment_predictions(model, sample, bank):
    """Per-segment similarity matrix (L, V) for accuracy evaluations."""
    features = np.stack([vec for _, vec in sample.segments])
    outputs = encode_sequence(model, features)
    with torch.no_grad():
        return (outputs @ bank.T).cpu().numpy()
