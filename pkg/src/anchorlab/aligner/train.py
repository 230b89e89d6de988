"""Training loop for the EEG-to-keyword aligner.

Supervision covers exactly the segment positions whose lemma belongs to
the keyword vocabulary; everything else is excluded from the alignment
objective. Model selection is by best validation loss. An optional
instance-discrimination term between clean and noise-perturbed views of
each supervised segment can be enabled with aux_weight > 0; it is a
stand-in regularizer and defaults to off.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import ConfigError, ValidationError
from .model import EegEncoder, alignment_loss

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    weight_decay: float = 0.0
    batch_size: int = 32
    epochs: int = 50
    tau: float = 0.07
    learnable_tau: bool = False
    aux_weight: float = 0.0
    aux_noise_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if self.aux_weight < 0:
            raise ConfigError(f"aux_weight must be >= 0, got {self.aux_weight}")
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")


@dataclass
class SupervisedExample:
    """One sample's features with vocabulary-supervised positions marked."""

    features: np.ndarray  # (L, input_dim)
    supervised_rows: np.ndarray  # indices into the L rows
    targets: np.ndarray  # bank row per supervised row


def make_examples(samples, sentences, vocab_lemmas):
    """Attach vocabulary targets to every sample; drop none.

    Samples whose sentence has no in-vocabulary segment still appear (with
    an empty supervised set) so batches can skip them explicitly.
    """
    vocab_index = {lemma: i for i, lemma in enumerate(vocab_lemmas)}
    examples = []
    for sample in samples:
        sent = sentences.get(sample.sentence_id)
        if sent is None:
            raise ValidationError(
                f"sample references unknown sentence_id {sample.sentence_id!r}"
            )
        feats = np.stack([vec for _, vec in sample.segments]) if sample.segments else (
            np.zeros((0, 1))
        )
        rows, targets = [], []
        for row, (pos, _) in enumerate(sample.segments):
            lemma = sent.tokens[pos].lemma
            if lemma in vocab_index:
                rows.append(row)
                targets.append(vocab_index[lemma])
        examples.append(
            SupervisedExample(
                features=feats,
                supervised_rows=np.asarray(rows, dtype=np.int64),
                targets=np.asarray(targets, dtype=np.int64),
            )
        )
    return examples


def _batches(examples, batch_size, rng=None):
    order = np.arange(len(examples))
    if rng is not None:
        rng.shuffle(order)
    for start in range(0, len(order), batch_size):
        batch = [examples[i] for i in order[start : start + batch_size]]
        batch = [ex for ex in batch if len(ex.supervised_rows)]
        if batch:
            yield batch


def _collate(batch, dtype):
    max_len = max(ex.features.shape[0] for ex in batch)
    dim = batch[0].features.shape[1]
    feats = torch.zeros(len(batch), max_len, dim, dtype=dtype)
    mask = torch.ones(len(batch), max_len, dtype=torch.bool)
    rows, cols, targets = [], [], []
    for i, ex in enumerate(batch):
        length = ex.features.shape[0]
        feats[i, :length] = torch.as_tensor(ex.features, dtype=dtype)
        mask[i, :length] = False
        rows.extend([i] * len(ex.supervised_rows))
        cols.extend(ex.supervised_rows.tolist())
        targets.extend(ex.targets.tolist())
    return feats, mask, torch.as_tensor(rows), torch.as_tensor(cols), torch.as_tensor(targets)


def _forward_loss(model, bank, tau, batch, config, generator=None):
    dtype = bank.dtype
    feats, mask, rows, cols, targets = _collate(batch, dtype)
    outputs = model(feats, mask)
    supervised = outputs[rows, cols]
    loss = alignment_loss(supervised, targets, bank, tau)
    if config.aux_weight > 0:
        scale = float(feats.std()) * config.aux_noise_scale
        noise = torch.randn(feats.shape, dtype=dtype, generator=generator) * scale
        perturbed = model(feats + noise, mask)[rows, cols]
        logits = supervised @ perturbed.T / tau
        aux_targets = torch.arange(supervised.shape[0])
        aux = torch.nn.functional.cross_entropy(logits, aux_targets)
        loss = loss + config.aux_weight * aux
    return loss, supervised.shape[0]


@torch.no_grad()
def evaluate(model, examples, bank, tau, batch_size=64):
    """(mean loss, top1, top5) over all supervised positions."""
    model.eval()
    total_loss, total_n = 0.0, 0
    top1, top5 = 0, 0
    for batch in _batches(examples, batch_size):
        feats, mask, rows, cols, targets = _collate(batch, bank.dtype)
        outputs = model(feats, mask)
        supervised = outputs[rows, cols]
        loss = alignment_loss(supervised, targets, bank, tau)
        n = supervised.shape[0]
        total_loss += float(loss) * n
        total_n += n
        sims = supervised @ bank.T
        ranks = sims.argsort(dim=1, descending=True)
        top1 += int((ranks[:, 0] == targets).sum())
        k = min(5, bank.shape[0])
        top5 += int((ranks[:, :k] == targets[:, None]).any(dim=1).sum())
    if total_n == 0:
        raise ValidationError("no supervised positions in evaluation set")
    return total_loss / total_n, top1 / total_n, top5 / total_n


def train(model: EegEncoder, train_examples, val_examples, bank, config: TrainConfig):
    """Fit the aligner; returns (model restored to best-val epoch, history).

    History rows carry epoch, train_loss, val_loss, val_top1, val_top5.
    Raises on divergence (non-finite training loss) with diagnostics.
    """
    if not any(len(ex.supervised_rows) for ex in train_examples):
        raise ValidationError("training split has no supervised positions")
    torch.manual_seed(config.seed)
    generator = torch.Generator().manual_seed(config.seed + 1)
    rng = np.random.default_rng(config.seed)

    tau_param = None
    params = list(model.parameters())
    if config.learnable_tau:
        tau_param = torch.nn.Parameter(torch.tensor(math.log(config.tau)))
        params.append(tau_param)
    optimizer = torch.optim.Adam(params, lr=config.lr, weight_decay=config.weight_decay)

    def current_tau():
        return float(torch.exp(tau_param)) if tau_param is not None else config.tau

    history = []
    best = {"val_loss": math.inf, "state": None, "epoch": -1}
    for epoch in range(1, config.epochs + 1):
        model.train()
        epoch_loss, epoch_n = 0.0, 0
        for batch in _batches(train_examples, config.batch_size, rng):
            optimizer.zero_grad()
            loss, n = _forward_loss(model, bank, current_tau(), batch, config, generator)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"training diverged at epoch {epoch}: loss={float(loss)!r}, "
                    f"lr={config.lr}, tau={current_tau():.4g}"
                )
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * n
            epoch_n += n
        val_loss, val_top1, val_top5 = evaluate(model, val_examples, bank, current_tau())
        row = {
            "epoch": epoch,
            "train_loss": epoch_loss / max(epoch_n, 1),
            "val_loss": val_loss,
            "val_top1": val_top1,
            "val_top5": val_top5,
        }
        history.append(row)
        if val_loss < best["val_loss"]:
            best = {
                "val_loss": val_loss,
                "state": {k: v.detach().clone() for k, v in model.state_dict().items()},
                "epoch": epoch,
            }
        log.debug("epoch %d: train %.4f val %.4f top1 %.3f", epoch, row["train_loss"],
                  val_loss, val_top1)

    if best["state"] is not None:
        model.load_state_dict(best["state"])
    model.eval()
    return model, history, current_tau()


def write_history(path, history):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["epoch", "train_loss", "val_loss", "val_top1", "val_top5"]
        )
        writer.writeheader()
        writer.writerows(history)
