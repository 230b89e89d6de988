from .model import (
    EncoderConfig,
    EegEncoder,
    alignment_loss,
    bank_tensor,
    build_model,
    encode_sequence,
)
from .train import TrainConfig, make_examples, train, evaluate, write_history
from .decode import AnchorEntry, AnchorSequence, decode_anchors, segment_predictions, select_top_m
from .checkpoint import load_checkpoint, save_checkpoint, vocab_hash

__all__ = [
    "EncoderConfig",
    "EegEncoder",
    "alignment_loss",
    "bank_tensor",
    "build_model",
    "encode_sequence",
    "TrainConfig",
    "make_examples",
    "train",
    "evaluate",
    "write_history",
    "AnchorEntry",
    "AnchorSequence",
    "decode_anchors",
    "segment_predictions",
    "select_top_m",
    "load_checkpoint",
    "save_checkpoint",
    "vocab_hash",
]
