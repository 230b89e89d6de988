"""Top-k sentence retrieval accuracy over embedding cosine rankings."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .permutation import rank_positions


def rank_of_ground_truth(pool_matrix, pool_ids, query_vec, gt_id):
    """1-based rank of the ground-truth sentence for one query embedding."""
    try:
        gt_index = pool_ids.index(gt_id)
    except ValueError:
        raise ValidationError(f"ground-truth sentence {gt_id!r} not in pool") from None
    scores = pool_matrix @ np.asarray(query_vec, dtype=np.float64)
    return int(rank_positions(scores, len(pool_ids))[gt_index])


def retrieval_accuracy(records, pool_ids, pool_matrix, embedder, ks, gt_ids=None):
    """Per-k Top-k accuracy for reconstruction records against the pool.

    Success at k means the ground truth (the record's sentence by default)
    ranks <= k under cosine between unit embeddings, ties by pool order.
    Returns ({k: accuracy}, ranks) with one rank per record.
    """
    if gt_ids is None:
        gt_ids = [rec.sentence_id for rec in records]
    ranks = []
    for rec, gt in zip(records, gt_ids):
        query = embedder.embed(rec.output)
        ranks.append(rank_of_ground_truth(pool_matrix, pool_ids, query, gt))
    ranks = np.asarray(ranks)
    accuracy = {k: float(np.mean(ranks <= k)) for k in ks}
    return accuracy, ranks


def assert_monotone(accuracy_by_k):
    ks = sorted(accuracy_by_k)
    values = [accuracy_by_k[k] for k in ks]
    for lo, hi in zip(values, values[1:]):
        if hi < lo - 1e-12:
            raise AssertionError(f"Top-k accuracy not monotone in k: {accuracy_by_k}")
