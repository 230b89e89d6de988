"""TF-IDF retrieval over the task-specific sentence pool.

Documents are content-word lemma bags (NOUN/PROPN/VERB/ADJ minus stop
words). tf is the raw in-sentence count (sublinear variant behind a flag),
idf = ln((1+N)/(1+df)) + 1 computed over the pool only. Queries are anchor
lemma bags scored by cosine; ties resolve by pool order so rankings are
stable and reproducible.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .corpus import CONTENT_POS
from .errors import ValidationError


def content_lemmas(sentence, stopwords=frozenset()):
    """Content-POS lemmas of a sentence, stop words removed, order kept."""
    return [
        t.lemma
        for t in sentence.tokens
        if t.pos in CONTENT_POS and t.lemma not in stopwords
    ]


@dataclass
class RetrievalIndex:
    sentence_ids: list
    texts: list
    idf: dict
    vectors: list  # sparse lemma -> weight dicts, one per pool sentence
    norms: list
    sublinear_tf: bool = False
    stopwords: frozenset = field(default_factory=frozenset)

    def __len__(self):
        return len(self.sentence_ids)

    def index_of(self, sentence_id):
        return self.sentence_ids.index(sentence_id)


def _tf(count, sublinear):
    return 1.0 + math.log(count) if sublinear else float(count)


def _vectorize(lemmas, idf, n_docs, sublinear):
    vec = {}
    for lemma, count in Counter(lemmas).items():
        # unseen query lemmas get the df=0 idf under the same smoothing
        weight = _tf(count, sublinear) * idf.get(lemma, math.log((1 + n_docs) / 1.0) + 1.0)
        vec[lemma] = weight
    return vec


def build_index(pool, stopwords=frozenset(), sublinear_tf=False) -> RetrievalIndex:
    """Index a sentence pool (AnnotatedSentence list) for TF-IDF retrieval."""
    if not pool:
        raise ValidationError("retrieval pool must be non-empty")
    seen = set()
    for sent in pool:
        if sent.sentence_id in seen:
            raise ValidationError(f"duplicate pool sentence {sent.sentence_id!r}")
        seen.add(sent.sentence_id)

    bags = [content_lemmas(s, stopwords) for s in pool]
    n = len(pool)
    df = Counter()
    for bag in bags:
        df.update(set(bag))
    idf = {lemma: math.log((1 + n) / (1 + d)) + 1.0 for lemma, d in df.items()}

    vectors = [_vectorize(bag, idf, n, sublinear_tf) for bag in bags]
    norms = [math.sqrt(sum(w * w for w in vec.values())) for vec in vectors]
    return RetrievalIndex(
        sentence_ids=[s.sentence_id for s in pool],
        texts=[s.text for s in pool],
        idf=idf,
        vectors=vectors,
        norms=norms,
        sublinear_tf=sublinear_tf,
        stopwords=stopwords,
    )


def score_pool(index: RetrievalIndex, anchors):
    """Cosine similarity of the anchor bag against every pool sentence."""
    query = _vectorize(anchors, index.idf, len(index), index.sublinear_tf)
    qnorm = math.sqrt(sum(w * w for w in query.values()))
    scores = []
    for vec, norm in zip(index.vectors, index.norms):
        if qnorm == 0.0 or norm == 0.0:
            scores.append(0.0)
            continue
        dot = sum(w * vec[l] for l, w in query.items() if l in vec)
        scores.append(dot / (qnorm * norm))
    return scores


def retrieve(index: RetrievalIndex, anchors, k):
    """Top-k pool entries for an anchor bag as (sentence_id, text, score).

    Descending score, ties by pool order, at most min(k, pool size) rows.
    """
    if k < 0:
        raise ValidationError(f"k must be >= 0, got {k}")
    if k == 0:
        return []
    scores = score_pool(index, anchors)
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return [
        (index.sentence_ids[i], index.texts[i], scores[i]) for i in order[:k]
    ]
