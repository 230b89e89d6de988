"""Annotated reading corpora with word-aligned feature vectors.

A corpus is a set of AnnotatedSentence records plus EegWordSequence samples
(one sample = one reading of one sentence by one subject). Both kinds live
in a single JSON Lines file: lines carrying ``tokens`` are sentences, lines
carrying ``segments`` are samples. Loaded corpora are immutable; all
mutation happens before construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ValidationError

TASKS = ("SR1", "NR1", "NR2", "TSR1")
POS_TAGS = ("NOUN", "PROPN", "VERB", "ADJ", "OTHER")
ENTITY_TAGS = ("PERSON", "NONPERSON_ENTITY", "NONE")
CONTENT_POS = ("NOUN", "PROPN", "VERB", "ADJ")

DEFAULT_FEATURE_DIM = 840


@dataclass(frozen=True)
class AnnotatedToken:
    surface: str
    lemma: str
    pos: str
    entity: str
    position: int

    def validate(self, where=""):
        if not self.lemma or self.lemma != self.lemma.lower():
            raise ValidationError(f"{where}: lemma must be non-empty lowercase, got {self.lemma!r}")
        if self.pos not in POS_TAGS:
            raise ValidationError(f"{where}: unknown pos tag {self.pos!r}")
        if self.entity not in ENTITY_TAGS:
            raise ValidationError(f"{where}: unknown entity tag {self.entity!r}")
        if self.position < 0:
            raise ValidationError(f"{where}: negative token position {self.position}")


@dataclass(frozen=True)
class AnnotatedSentence:
    sentence_id: str
    task: str
    text: str
    tokens: tuple

    def validate(self, where=""):
        if self.task not in TASKS:
            raise ValidationError(f"{where}: unknown task {self.task!r}")
        positions = [t.position for t in self.tokens]
        if positions != list(range(len(self.tokens))):
            raise ValidationError(
                f"{where}: token positions must be contiguous 0..n-1, got {positions}"
            )
        for tok in self.tokens:
            tok.validate(where)

    @property
    def word_count(self):
        return len(self.tokens)

    def content_lemmas(self):
        """Lemmas of content-POS tokens in reading order."""
        return [t.lemma for t in self.tokens if t.pos in CONTENT_POS]


@dataclass(frozen=True)
class EegWordSequence:
    sentence_id: str
    subject_id: str
    segments: tuple  # of (position, np.ndarray)

    def validate(self, sentence=None, feature_dim=DEFAULT_FEATURE_DIM, where=""):
        last = -1
        for pos, vec in self.segments:
            if pos <= last:
                raise ValidationError(f"{where}: segment positions must be strictly increasing")
            last = pos
            if vec.shape != (feature_dim,):
                raise ValidationError(
                    f"{where}: feature vector has {vec.shape[0]} entries, expected {feature_dim}"
                )
            if not np.all(np.isfinite(vec)):
                raise ValidationError(f"{where}: non-finite feature value at position {pos}")
            if sentence is not None and pos >= sentence.word_count:
                raise ValidationError(
                    f"{where}: segment position {pos} outside sentence of "
                    f"{sentence.word_count} tokens"
                )

    @property
    def segment_count(self):
        return len(self.segments)


@dataclass(frozen=True)
class SplitSpec:
    mode: str = "by-sentence"  # or "leave-one-subject-out"
    ratios: tuple = (0.8, 0.1, 0.1)
    seed: int = 0
    held_out_subject: str | None = None
    val_subject: str | None = None

    def validate(self):
        if self.mode not in ("by-sentence", "leave-one-subject-out"):
            raise ConfigError(f"unknown split mode {self.mode!r}")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must sum to 1, got {self.ratios}")

    def to_dict(self):
        return {
            "mode": self.mode,
            "ratios": list(self.ratios),
            "seed": self.seed,
            "held_out_subject": self.held_out_subject,
            "val_subject": self.val_subject,
        }


@dataclass(frozen=True)
class SplitResult:
    """Sentence-id sets per side, plus the subject fold for LOSO mode."""

    spec: SplitSpec
    train: frozenset
    val: frozenset
    test: frozenset
    train_subjects: frozenset = frozenset()
    val_subject: str | None = None
    test_subject: str | None = None

    def select(self, samples):
        """Partition samples into (train, val, test) lists per this split."""
        if self.spec.mode == "by-sentence":
            buckets = {"train": [], "val": [], "test": []}
            for s in samples:
                if s.sentence_id in self.train:
                    buckets["train"].append(s)
                elif s.sentence_id in self.val:
                    buckets["val"].append(s)
                elif s.sentence_id in self.test:
                    buckets["test"].append(s)
            return buckets["train"], buckets["val"], buckets["test"]
        train = [s for s in samples if s.subject_id in self.train_subjects]
        val = [s for s in samples if s.subject_id == self.val_subject]
        test = [s for s in samples if s.subject_id == self.test_subject]
        return train, val, test

    def manifest(self):
        out = {
            "train": sorted(self.train),
            "val": sorted(self.val),
            "test": sorted(self.test),
            "spec": self.spec.to_dict(),
        }
        if self.spec.mode == "leave-one-subject-out":
            out["train_subjects"] = sorted(self.train_subjects)
            out["val_subject"] = self.val_subject
            out["test_subject"] = self.test_subject
        return out


@dataclass(frozen=True)
class Corpus:
    sentences: dict = field(default_factory=dict)  # sentence_id -> AnnotatedSentence
    samples: tuple = ()

    def subjects(self):
        return sorted({s.subject_id for s in self.samples})

    def sentence_ids(self):
        return list(self.sentences)


def _token_from_obj(obj, where):
    try:
        return AnnotatedToken(
            surface=obj["surface"],
            lemma=obj["lemma"],
            pos=obj["pos"],
            entity=obj["entity"],
            position=int(obj["position"]),
        )
    except KeyError as exc:
        raise ValidationError(f"{where}: token missing key {exc}") from None


def _sentence_from_obj(obj, where):
    tokens = tuple(_token_from_obj(t, where) for t in obj["tokens"])
    sent = AnnotatedSentence(
        sentence_id=obj["sentence_id"],
        task=obj["task"],
        text=obj["text"],
        tokens=tokens,
    )
    sent.validate(where)
    return sent


def _sample_from_obj(obj, where, feature_dim):
    segments = []
    for seg in obj["segments"]:
        vec = np.asarray(seg["features"], dtype=np.float64)
        segments.append((int(seg["position"]), vec))
    sample = EegWordSequence(
        sentence_id=obj["sentence_id"],
        subject_id=obj["subject_id"],
        segments=tuple(segments),
    )
    # structural checks that do not need the sentence
    sample.validate(sentence=None, feature_dim=feature_dim, where=where)
    return sample


def load_dataset(*paths, feature_dim=DEFAULT_FEATURE_DIM):
    """Load sentences and samples from one or more JSONL dataset files.

    Lines with a ``tokens`` key are sentences; lines with a ``segments`` key
    are samples. Samples are validated against their sentence (which may be
    defined in any of the given files). Returns a Corpus.
    """
    sentences = {}
    samples = []
    sample_locs = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                where = f"{path}:{lineno}"
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValidationError(f"{where}: malformed JSON ({exc.msg})") from None
                try:
                    if "tokens" in obj:
                        sent = _sentence_from_obj(obj, where)
                        if sent.sentence_id in sentences:
                            raise ValidationError(
                                f"{where}: duplicate sentence_id {sent.sentence_id!r}"
                            )
                        sentences[sent.sentence_id] = sent
                    elif "segments" in obj:
                        samples.append(_sample_from_obj(obj, where, feature_dim))
                        sample_locs.append(where)
                    else:
                        raise ValidationError(f"{where}: line is neither sentence nor sample")
                except KeyError as exc:
                    raise ValidationError(f"{where}: missing key {exc}") from None
    for sample, where in zip(samples, sample_locs):
        sent = sentences.get(sample.sentence_id)
        if sent is None:
            raise ValidationError(
                f"{where}: sample references unknown sentence_id {sample.sentence_id!r}"
            )
        sample.validate(sentence=sent, feature_dim=feature_dim, where=where)
    return Corpus(sentences=sentences, samples=tuple(samples))


def sentence_to_obj(sent: AnnotatedSentence):
    return {
        "sentence_id": sent.sentence_id,
        "task": sent.task,
        "text": sent.text,
        "tokens": [
            {
                "surface": t.surface,
                "lemma": t.lemma,
                "pos": t.pos,
                "entity": t.entity,
                "position": t.position,
            }
            for t in sent.tokens
        ],
    }


def sample_to_obj(sample: EegWordSequence):
    return {
        "sentence_id": sample.sentence_id,
        "subject_id": sample.subject_id,
        "segments": [
            {"position": pos, "features": [float(v) for v in vec]}
            for pos, vec in sample.segments
        ],
    }


def save_dataset(path, sentences, samples=()):
    """Write sentences then samples as JSONL. Deterministic byte output."""
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            fh.write(json.dumps(sentence_to_obj(sent), ensure_ascii=False) + "\n")
        for sample in samples:
            fh.write(json.dumps(sample_to_obj(sample), ensure_ascii=False) + "\n")


def filter_samples(samples, sentences):
    """Drop samples with fewer segments than half the sentence word count.

    A sample is retained iff segment_count >= ceil(word_count / 2). Order is
    preserved and the operation is idempotent.
    """
    kept = []
    for sample in samples:
        sent = sentences.get(sample.sentence_id)
        if sent is None:
            raise ValidationError(
                f"sample references unknown sentence_id {sample.sentence_id!r}"
            )
        if sample.segment_count >= math.ceil(sent.word_count / 2):
            kept.append(sample)
    return kept


def split(corpus: Corpus, spec: SplitSpec) -> SplitResult:
    """Partition a corpus per SplitSpec.

    by-sentence: seeded shuffle of unique sentence ids, then contiguous
    train/val/test slices (floor sizes for train and val, remainder to test).
    leave-one-subject-out: the held-out subject is the test fold, one more
    subject is the validation fold, everyone else trains; sentence-id sets
    then reflect which sentences each side's samples cover.
    """
    spec.validate()
    if spec.mode == "by-sentence":
        ids = sorted(corpus.sentences)
        if len(ids) < 10:
            raise ConfigError(f"by-sentence split needs >=10 sentences, got {len(ids)}")
        rng = np.random.default_rng(spec.seed)
        order = [ids[i] for i in rng.permutation(len(ids))]
        n_train = int(len(ids) * spec.ratios[0])
        n_val = int(len(ids) * spec.ratios[1])
        train = frozenset(order[:n_train])
        val = frozenset(order[n_train : n_train + n_val])
        test = frozenset(order[n_train + n_val :])
        return SplitResult(spec=spec, train=train, val=val, test=test)

    subjects = corpus.subjects()
    if len(subjects) < 3:
        raise ConfigError(f"leave-one-subject-out needs >=3 subjects, got {len(subjects)}")
    test_subject = spec.held_out_subject
    if test_subject is None:
        raise ConfigError("leave-one-subject-out requires held_out_subject")
    if test_subject not in subjects:
        raise ConfigError(f"held_out_subject {test_subject!r} not in corpus")
    val_subject = spec.val_subject
    if val_subject is None:
        # deterministic default: next subject after the held-out one, wrapping
        idx = subjects.index(test_subject)
        val_subject = subjects[(idx + 1) % len(subjects)]
    if val_subject == test_subject:
        raise ConfigError("validation subject must differ from held-out subject")
    if val_subject not in subjects:
        raise ConfigError(f"val_subject {val_subject!r} not in corpus")
    train_subjects = frozenset(s for s in subjects if s not in (test_subject, val_subject))

    def covered(subject_set):
        return frozenset(
            s.sentence_id for s in corpus.samples if s.subject_id in subject_set
        )

    return SplitResult(
        spec=SplitSpec(
            mode=spec.mode,
            ratios=spec.ratios,
            seed=spec.seed,
            held_out_subject=test_subject,
            val_subject=val_subject,
        ),
        train=covered(train_subjects),
        val=covered({val_subject}),
        test=covered({test_subject}),
        train_subjects=train_subjects,
        val_subject=val_subject,
        test_subject=test_subject,
    )


def loso_folds(corpus: Corpus, seed=0):
    """One SplitResult per subject, each holding that subject out for test."""
    return [
        split(corpus, SplitSpec(mode="leave-one-subject-out", seed=seed, held_out_subject=subj))
        for subj in corpus.subjects()
    ]
