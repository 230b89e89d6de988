"""Binary model checkpoints.

Layout: magic ``BCLM``, u32 LE format version, u32 LE header length, JSON
header (encoder config, vocabulary hash, temperature), then one record per
named parameter tensor: u16 LE name length, UTF-8 name, u32 LE rank,
u32 LE dims, f32 LE row-major data. Tensors serialize in state_dict order
so identical models produce identical files.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np
import torch

from ..errors import ValidationError
from .model import EegEncoder, EncoderConfig

MAGIC = b"BCLM"
VERSION = 1


def vocab_hash(lemmas):
    return hashlib.sha256("\n".join(lemmas).encode("utf-8")).hexdigest()


def save_checkpoint(path, model: EegEncoder, vocab_lemmas, tau):
    header = json.dumps(
        {
            "config": model.config.to_dict(),
            "vocab_hash": vocab_hash(vocab_lemmas),
            "vocab_size": len(vocab_lemmas),
            "tau": float(tau),
        },
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header)))
        fh.write(header)
        for name, tensor in model.state_dict().items():
            raw_name = name.encode("utf-8")
            data = tensor.detach().cpu().to(torch.float32).numpy()
            fh.write(struct.pack("<H", len(raw_name)))
            fh.write(raw_name)
            fh.write(struct.pack("<I", data.ndim))
            fh.write(struct.pack(f"<{data.ndim}I", *data.shape))
            fh.write(np.ascontiguousarray(data, dtype="<f4").tobytes())


def load_checkpoint(path, expected_vocab=None):
    """Rebuild (model, header dict). Verifies the vocab hash when given."""
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValidationError(f"{path}: not a BCLM checkpoint")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise ValidationError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        tensors = {}
        while True:
            prefix = fh.read(2)
            if not prefix:
                break
            (name_len,) = struct.unpack("<H", prefix)
            name = fh.read(name_len).decode("utf-8")
            (rank,) = struct.unpack("<I", fh.read(4))
            dims = struct.unpack(f"<{rank}I", fh.read(4 * rank))
            count = int(np.prod(dims)) if rank else 1
            data = fh.read(4 * count)
            if len(data) != 4 * count:
                raise ValidationError(f"{path}: truncated tensor {name!r}")
            tensors[name] = torch.from_numpy(
                np.frombuffer(data, dtype="<f4").reshape(dims).copy()
            )

    if expected_vocab is not None and vocab_hash(expected_vocab) != header["vocab_hash"]:
        raise ValidationError(
            f"{path}: checkpoint was trained against a different vocabulary"
        )
    config = EncoderConfig.from_dict(header["config"])
    model = EegEncoder(config)
    model.load_state_dict(tensors, strict=True)
    model.eval()
    return model, header
