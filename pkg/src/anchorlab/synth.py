"""Synthetic word-aligned feature datasets with controllable SNR.

Each in-vocabulary word position receives features M @ t_y + sigma * eps,
where t_y is the keyword's bank vector, M a seeded full-rank mixing matrix
and sigma set from the requested SNR relative to mean signal power.
Filler positions (reserved ``__out__`` lemma, non-content POS) receive
pure noise at the signal power scale so supervised-position filtering is
exercised. Per-(sentence, subject) child seeds keep output deterministic
and independent of generation order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .corpus import AnnotatedSentence, AnnotatedToken, EegWordSequence
from .embeddings import EmbeddingBank, random_unit_bank
from .errors import ConfigError

OUT_LEMMA = "__out__"
_CONTENT_POS_CHOICES = ("NOUN", "VERB", "ADJ")
_MAX_MATRIX_RETRIES = 5


@dataclass(frozen=True)
class SynthSpec:
    vocab_size: int = 50
    bank_dim: int = 768
    feature_dim: int = 840
    snr_db: float = math.inf  # -inf gives pure noise
    filler_rate: float = 0.2
    sentences: int = 100
    words_min: int = 5
    words_max: int = 12
    subjects: int = 1
    task: str = "NR1"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.filler_rate < 1.0:
            raise ConfigError(f"filler_rate must be in [0, 1), got {self.filler_rate}")
        if self.words_min < 1 or self.words_max < self.words_min:
            raise ConfigError("invalid words-per-sentence range")
        if self.vocab_size < 2:
            raise ConfigError("synthetic vocabulary needs >= 2 keywords")

    def to_dict(self):
        d = asdict(self)
        d["snr_db"] = _json_float(self.snr_db)
        return d

    def vocab_lemmas(self):
        width = len(str(self.vocab_size - 1))
        return [f"kw{i:0{width}d}" for i in range(self.vocab_size)]


def _json_float(x):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def mixing_matrix(spec: SynthSpec):
    """Seeded Gaussian mixing matrix with rank min(feature_dim, bank_dim)."""
    for attempt in range(_MAX_MATRIX_RETRIES):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 7919, attempt]))
        mat = rng.standard_normal((spec.feature_dim, spec.bank_dim)) / math.sqrt(spec.bank_dim)
        if np.linalg.matrix_rank(mat) == min(mat.shape):
            return mat
    raise ConfigError("mixing matrix rank-deficient after retries; change the seed")


def keyword_bank(spec: SynthSpec) -> EmbeddingBank:
    return random_unit_bank(spec.vocab_lemmas(), spec.bank_dim, np.random.SeedSequence([spec.seed, 13]))


@dataclass
class SynthDataset:
    spec: SynthSpec
    sentences: list
    samples: list
    bank: EmbeddingBank
    mixer: np.ndarray
    signal_power: float = field(default=0.0)


def generate(spec: SynthSpec) -> SynthDataset:
    bank = keyword_bank(spec)
    mixer = mixing_matrix(spec)
    signals = bank.matrix.astype(np.float64) @ mixer.T  # (V, feature_dim)
    signal_power = float(np.mean(np.sum(signals**2, axis=1)))
    sigma = _noise_sigma(spec, signal_power)
    # fillers and -inf SNR noise are scaled to typical signal magnitude
    filler_sigma = math.sqrt(signal_power / spec.feature_dim)

    lemmas = spec.vocab_lemmas()
    sentences = []
    samples = []
    id_width = len(str(max(spec.sentences - 1, 1)))
    for si in range(spec.sentences):
        struct_rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1, si]))
        n_words = int(struct_rng.integers(spec.words_min, spec.words_max + 1))
        labels = []
        tokens = []
        for pos in range(n_words):
            if struct_rng.random() < spec.filler_rate:
                labels.append(-1)
                tokens.append(
                    AnnotatedToken(OUT_LEMMA, OUT_LEMMA, "OTHER", "NONE", pos)
                )
            else:
                y = int(struct_rng.integers(spec.vocab_size))
                labels.append(y)
                pos_tag = _CONTENT_POS_CHOICES[int(struct_rng.integers(3))]
                tokens.append(
                    AnnotatedToken(lemmas[y], lemmas[y], pos_tag, "NONE", pos)
                )
        sid = f"syn-{si:0{id_width}d}"
        sentences.append(
            AnnotatedSentence(
                sentence_id=sid,
                task=spec.task,
                text=" ".join(t.surface for t in tokens),
                tokens=tuple(tokens),
            )
        )
        for subj in range(spec.subjects):
            noise_rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 2, si, subj]))
            segments = []
            for pos, y in enumerate(labels):
                if y < 0:
                    vec = filler_sigma * noise_rng.standard_normal(spec.feature_dim)
                elif math.isinf(spec.snr_db) and spec.snr_db < 0:
                    vec = filler_sigma * noise_rng.standard_normal(spec.feature_dim)
                else:
                    vec = signals[y].copy()
                    if sigma > 0:
                        vec += sigma * noise_rng.standard_normal(spec.feature_dim)
                segments.append((pos, vec))
            samples.append(
                EegWordSequence(
                    sentence_id=sid,
                    subject_id=f"S{subj + 1:02d}",
                    segments=tuple(segments),
                )
            )
    return SynthDataset(
        spec=spec,
        sentences=sentences,
        samples=samples,
        bank=bank,
        mixer=mixer,
        signal_power=signal_power,
    )


def _noise_sigma(spec: SynthSpec, signal_power):
    if math.isinf(spec.snr_db):
        return 0.0  # +inf handled here; -inf replaces the signal entirely
    snr_linear = 10.0 ** (spec.snr_db / 10.0)
    return math.sqrt(signal_power / (spec.feature_dim * snr_linear))


def labels_for(dataset: SynthDataset, sample: EegWordSequence):
    """Bank row per segment, -1 at filler positions (from the sentence)."""
    sent = next(s for s in dataset.sentences if s.sentence_id == sample.sentence_id)
    index = {lemma: i for i, lemma in enumerate(dataset.spec.vocab_lemmas())}
    return [index.get(sent.tokens[pos].lemma, -1) for pos, _ in sample.segments]


def snr_report(dataset: SynthDataset):
    """Measured SNR in dB from regenerated clean signals.

    Requested +inf reports +inf. Finite requests compare total signal power
    against total residual-noise power over all non-filler segments.
    """
    spec = dataset.spec
    if math.isinf(spec.snr_db):
        return spec.snr_db
    signals = dataset.bank.matrix.astype(np.float64) @ dataset.mixer.T
    index = {lemma: i for i, lemma in enumerate(spec.vocab_lemmas())}
    sent_by_id = {s.sentence_id: s for s in dataset.sentences}
    signal_sq, noise_sq = 0.0, 0.0
    for sample in dataset.samples:
        sent = sent_by_id[sample.sentence_id]
        for pos, vec in sample.segments:
            y = index.get(sent.tokens[pos].lemma, -1)
            if y < 0:
                continue
            clean = signals[y]
            signal_sq += float(np.sum(clean**2))
            noise_sq += float(np.sum((vec - clean) ** 2))
    if noise_sq == 0.0:
        return math.inf
    return 10.0 * math.log10(signal_sq / noise_sq)


def write_dataset(dataset: SynthDataset, dataset_path, spec_path=None):
    from .corpus import save_dataset

    save_dataset(dataset_path, dataset.sentences, dataset.samples)
    if spec_path is not None:
        with open(spec_path, "w", encoding="utf-8") as fh:
            payload = dataset.spec.to_dict()
            payload["signal_power"] = dataset.signal_power
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
