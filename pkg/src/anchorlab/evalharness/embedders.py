"""Sentence embedders for retrieval-based evaluation.

The default is the offline IDF-weighted word-bank mean; a sentence-bank
lookup and a remote embedding endpoint are opt-in alternatives. All
embedders return unit vectors (or zero vectors for texts they cannot
represent, which then rank at the bottom).
"""

from __future__ import annotations

import math
from collections import Counter

import numpy as np
import requests

from ..errors import ConfigError, EndpointError, ValidationError
from .metrics import tokenize


class IdfMeanEmbedder:
    """IDF-weighted mean of static word-bank vectors over plain tokens.

    IDF is fit on the pool's token sets with the same smoothing as the
    retrieval index; tokens outside the bank are skipped.
    """

    name = "idf-word-bank-mean"

    def __init__(self, word_bank, pool_texts):
        self.bank = word_bank
        n = len(pool_texts)
        if n == 0:
            raise ValidationError("cannot fit an embedder on an empty pool")
        df = Counter()
        for text in pool_texts:
            df.update(set(tokenize(text)))
        self._default_idf = math.log((1 + n) / 1.0) + 1.0
        self.idf = {t: math.log((1 + n) / (1 + d)) + 1.0 for t, d in df.items()}

    def embed(self, text):
        acc = np.zeros(self.bank.dim, dtype=np.float64)
        for token in tokenize(text):
            if token in self.bank:
                acc += self.idf.get(token, self._default_idf) * self.bank.vector(token)
        norm = np.linalg.norm(acc)
        return acc / norm if norm > 0 else acc


class SentenceBankEmbedder:
    """Looks sentences up in a precomputed sentence bank.

    Pool sentences are keyed by sentence id; free text is resolved through
    its exact normalized form, so this embedder only suits reconstructions
    that are themselves pool sentences (e.g. the retrieval fallback).
    """

    name = "sentence-bank"

    def __init__(self, sentence_bank, pool_ids, pool_texts):
        self.bank = sentence_bank
        for sid in pool_ids:
            if sid not in sentence_bank:
                raise ValidationError(f"sentence bank is missing pool sentence {sid!r}")
        self._by_text = {}
        for sid, text in zip(pool_ids, pool_texts):
            self._by_text.setdefault(self._norm(text), sid)

    @staticmethod
    def _norm(text):
        return " ".join(tokenize(text))

    def embed_id(self, sentence_id):
        vec = self.bank.vector(sentence_id).astype(np.float64)
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec

    def embed(self, text):
        sid = self._by_text.get(self._norm(text))
        if sid is None:
            raise ValidationError(
                "sentence-bank embedder only embeds texts matching a pool sentence; "
                "use the idf-mean embedder for free text"
            )
        return self.embed_id(sid)


class RemoteEmbedder:
    """OpenAI-compatible /embeddings endpoint client (opt-in, networked)."""

    name = "remote"

    def __init__(self, url, model, api_key=None, timeout=60.0, session=None):
        if not url:
            raise ConfigError("remote embedder needs an endpoint URL")
        self.url = url
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.session = session or requests.Session()

    def embed(self, text):
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self.session.post(
                self.url,
                json={"model": self.model, "input": [text]},
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise EndpointError(f"embedding endpoint failed: {exc!r}")
        if resp.status_code != 200:
            raise EndpointError(
                f"embedding endpoint returned HTTP {resp.status_code}",
                status=resp.status_code,
            )
        vec = np.asarray(resp.json()["data"][0]["embedding"], dtype=np.float64)
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


def embed_pool(embedder, pool_ids, pool_texts):
    """Unit-vector matrix for the whole pool, id-keyed where possible."""
    rows = []
    for sid, text in zip(pool_ids, pool_texts):
        if isinstance(embedder, SentenceBankEmbedder):
            rows.append(embedder.embed_id(sid))
        else:
            vec = embedder.embed(text)
            if np.linalg.norm(vec) == 0:
                raise ValidationError(f"embedder produced a zero vector for pool sentence {sid!r}")
            rows.append(vec)
    return np.stack(rows)
