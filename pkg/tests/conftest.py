import os

import numpy as np
import pytest

from anchorlab.corpus import AnnotatedSentence, AnnotatedToken, EegWordSequence
from anchorlab.embeddings import EmbeddingBank

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def toy_dataset_path():
    return os.path.join(FIXTURES, "toy_dataset.jsonl")


@pytest.fixture(scope="session")
def vocab_corpus_path():
    return os.path.join(FIXTURES, "vocab_corpus.jsonl")


@pytest.fixture(scope="session")
def vocab_bank_path():
    return os.path.join(FIXTURES, "vocab_word_bank.embk")


def make_token(lemma, pos="NOUN", position=0, entity="NONE", surface=None):
    return AnnotatedToken(surface or lemma, lemma, pos, entity, position)


def make_sentence(sid, lemma_pos_pairs, task="NR1", text=None):
    tokens = tuple(
        make_token(lemma, pos, i) for i, (lemma, pos) in enumerate(lemma_pos_pairs)
    )
    return AnnotatedSentence(
        sentence_id=sid,
        task=task,
        text=text if text is not None else " ".join(t.surface for t in tokens),
        tokens=tokens,
    )


def make_sample(sid, subject, n_positions, dim=8, seed=0, positions=None):
    rng = np.random.default_rng(seed)
    if positions is None:
        positions = range(n_positions)
    segments = tuple((p, rng.normal(size=dim)) for p in positions)
    return EegWordSequence(sentence_id=sid, subject_id=subject, segments=segments)


def unit_bank(vector_map):
    tokens = list(vector_map)
    mat = np.array([vector_map[t] for t in tokens], dtype=np.float64)
    mat = mat / np.linalg.norm(mat, axis=1, keepdims=True)
    return EmbeddingBank(tokens, mat.astype(np.float32))
