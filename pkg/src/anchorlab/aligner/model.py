"""EEG-segment encoder and the keyword-bank alignment loss.

The encoder maps an ordered sequence of word-aligned feature vectors into
unit vectors in the keyword-bank space: MLP input projection, learnable
positional embeddings, a stack of post-norm transformer blocks, and an MLP
output head followed by L2 normalization. Supervised positions are scored
against every row of the frozen bank with a temperature-scaled softmax
cross-entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import torch
from torch import nn

from ..errors import ConfigError, ValidationError


@dataclass(frozen=True)
class EncoderConfig:
    input_dim: int = 840
    model_dim: int = 768
    layers: int = 3
    heads: int = 8
    ffn_dim: int = 2048
    max_positions: int = 64
    output_dim: int = 768
    dropout: float = 0.1
    profile: str = "paper"

    def __post_init__(self):
        if self.model_dim % self.heads != 0:
            raise ConfigError(
                f"model_dim {self.model_dim} not divisible by heads {self.heads}"
            )

    @classmethod
    def paper(cls, **overrides):
        return cls(profile="paper", **overrides)

    @classmethod
    def compact(cls, **overrides):
        """Shrunken profile for tests and desk-scale synthetic runs."""
        base = dict(
            input_dim=32,
            model_dim=32,
            layers=2,
            heads=4,
            ffn_dim=64,
            max_positions=32,
            output_dim=32,
            dropout=0.0,
            profile="compact",
        )
        base.update(overrides)
        return cls(**base)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, obj):
        return cls(**obj)


class SelfAttention(nn.Module):
    def __init__(self, dim, heads, dropout):
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.out = nn.Linear(dim, dim)
        self.drop = nn.Dropout(dropout)

    def forward(self, x, padding_mask=None):
        # x: (B, L, D); padding_mask: (B, L) True at padded positions
        bsz, length, dim = x.shape
        qkv = self.qkv(x).reshape(bsz, length, 3, self.heads, self.head_dim)
        q, k, v = qkv.permute(2, 0, 3, 1, 4)  # each (B, H, L, Dh)
        scores = (q @ k.transpose(-2, -1)) / math.sqrt(self.head_dim)
        if padding_mask is not None:
            scores = scores.masked_fill(padding_mask[:, None, None, :], float("-inf"))
        attn = self.drop(torch.softmax(scores, dim=-1))
        ctx = (attn @ v).transpose(1, 2).reshape(bsz, length, dim)
        return self.out(ctx)


class TransformerBlock(nn.Module):
    def __init__(self, dim, heads, ffn_dim, dropout):
        super().__init__()
        self.attn = SelfAttention(dim, heads, dropout)
        self.norm1 = nn.LayerNorm(dim)
        self.ffn = nn.Sequential(
            nn.Linear(dim, ffn_dim), nn.GELU(), nn.Linear(ffn_dim, dim)
        )
        self.norm2 = nn.LayerNorm(dim)
        self.drop = nn.Dropout(dropout)

    def forward(self, x, padding_mask=None):
        x = self.norm1(x + self.drop(self.attn(x, padding_mask)))
        return self.norm2(x + self.drop(self.ffn(x)))


class EegEncoder(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        d = config.model_dim
        self.input_proj = nn.Sequential(
            nn.Linear(config.input_dim, d), nn.GELU(), nn.Linear(d, d)
        )
        self.pos_embedding = nn.Parameter(torch.zeros(config.max_positions, d))
        self.blocks = nn.ModuleList(
            TransformerBlock(d, config.heads, config.ffn_dim, config.dropout)
            for _ in range(config.layers)
        )
        self.output_proj = nn.Sequential(
            nn.Linear(d, d), nn.GELU(), nn.Linear(d, config.output_dim)
        )
        nn.init.normal_(self.pos_embedding, std=0.02)

    def forward(self, features, padding_mask=None):
        # features: (B, L, input_dim) -> unit vectors (B, L, output_dim)
        length = features.shape[1]
        if length > self.config.max_positions:
            raise ValidationError(
                f"sequence length {length} exceeds max_positions "
                f"{self.config.max_positions}"
            )
        h = self.input_proj(features) + self.pos_embedding[:length]
        for block in self.blocks:
            h = block(h, padding_mask)
        out = self.output_proj(h)
        return torch.nn.functional.normalize(out, dim=-1)

    def parameter_count(self):
        return sum(p.numel() for p in self.parameters())


def build_model(config: EncoderConfig, seed=0) -> EegEncoder:
    """Seeded construction so identical seeds give identical weights."""
    torch.manual_seed(seed)
    return EegEncoder(config)


def bank_tensor(bank, dtype=torch.float32):
    """Frozen unit-row tensor for an EmbeddingBank (rows must be unit norm)."""
    if bank.max_row_norm_error() > 1e-4:
        raise ValidationError("keyword bank rows must be unit-normalized")
    t = torch.from_numpy(bank.matrix.copy()).to(dtype)
    t.requires_grad_(False)
    return t


def alignment_loss(outputs, target_ids, bank, tau):
    """Mean softmax cross-entropy of unit outputs against the whole bank.

    outputs: (N, D) normalized encoder outputs at supervised positions;
    target_ids: (N,) bank row indices; bank: (V, D) unit rows; tau > 0.
    """
    if outputs.ndim != 2 or outputs.shape[0] == 0:
        raise ValidationError("alignment loss needs a non-empty batch of outputs")
    if torch.any(target_ids < 0) or torch.any(target_ids >= bank.shape[0]):
        raise ValidationError("alignment target outside keyword bank")
    if float(tau) <= 0:
        raise ConfigError(f"temperature must be positive, got {tau}")
    logits = outputs @ bank.T / tau
    return torch.nn.functional.cross_entropy(logits, target_ids)


def encode_sequence(model: EegEncoder, features):
    """Encode one (L, input_dim) array to (L, output_dim) unit vectors."""
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            param = next(model.parameters())
            x = torch.as_tensor(features, dtype=param.dtype).unsqueeze(0)
            if not torch.all(torch.isfinite(x)):
                raise ValidationError("non-finite value in input features")
            return model(x).squeeze(0)
    finally:
        if was_training:
            model.train()
