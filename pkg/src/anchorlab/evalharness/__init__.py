from .metrics import (
    anchor_metrics,
    bleu,
    embedding_greedy_f1,
    modified_precision,
    rouge1_f1,
    tokenize,
)
from .stats import TestResult, bonferroni, paired_t, rm_anova, within_subject_2x2
from .permutation import PermutationResult, permutation_test, rank_positions
from .embedders import IdfMeanEmbedder, RemoteEmbedder, SentenceBankEmbedder, embed_pool
from .retrieval_eval import rank_of_ground_truth, retrieval_accuracy
from .conditions import CONDITIONS, condition_anchors, oracle_anchors, random_anchors
from .report import (
    SuiteConfig,
    run_condition_suite,
    score_external_records,
    write_report,
)

__all__ = [
    "anchor_metrics",
    "bleu",
    "embedding_greedy_f1",
    "modified_precision",
    "rouge1_f1",
    "tokenize",
    "TestResult",
    "bonferroni",
    "paired_t",
    "rm_anova",
    "within_subject_2x2",
    "PermutationResult",
    "permutation_test",
    "rank_positions",
    "IdfMeanEmbedder",
    "RemoteEmbedder",
    "SentenceBankEmbedder",
    "embed_pool",
    "rank_of_ground_truth",
    "retrieval_accuracy",
    "CONDITIONS",
    "condition_anchors",
    "oracle_anchors",
    "random_anchors",
    "SuiteConfig",
    "run_condition_suite",
    "score_external_records",
    "write_report",
]
