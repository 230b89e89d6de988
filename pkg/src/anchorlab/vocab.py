"""Fixed keyword vocabulary construction.

Pipeline: candidate pool (content words minus exclusions) -> frequency
threshold -> diversity-aware core via greedy farthest-point sampling ->
sentence coverage audit with a global refinement queue -> budget pruning
that never breaks coverage. The result is written as a line-per-keyword
text file plus a JSON audit sidecar; identical inputs produce byte-identical
files.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .corpus import CONTENT_POS
from .errors import ConfigError, ValidationError

log = logging.getLogger(__name__)

# Strict Roman-numeral shape. A handful of real English words match it
# ("mix" = M + IX); those are exempted.
_ROMAN_RE = re.compile(r"^m{0,3}(cm|cd|d?c{0,3})(xc|xl|l?x{0,3})(ix|iv|v?i{0,3})$")
_ROMAN_ALLOWLIST = {"mix", "mm", "cc"}

_EXCLUSION_FILES = {
    "stopwords": "stopwords.txt",
    "months": "months.txt",
    "temporal": "temporal.txt",
    "numerals_written": "numerals_written.txt",
    "ordinals": "ordinals.txt",
    "quantificational": "quantificational.txt",
    "generational_suffixes": "generational_suffixes.txt",
}


def load_lemma_list(path):
    """Read a one-lemma-per-line UTF-8 word list (blank lines and # ignored)."""
    out = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip().lower()
            if word and not word.startswith("#"):
                out.add(word)
    return out


def _packaged_list(name):
    ref = resources.files("anchorlab").joinpath("data", "exclusion", name)
    return {
        w.strip().lower()
        for w in ref.read_text(encoding="utf-8").splitlines()
        if w.strip() and not w.startswith("#")
    }


@dataclass(frozen=True)
class ExclusionRules:
    stopwords: frozenset
    months: frozenset
    temporal: frozenset
    numerals_written: frozenset
    ordinals: frozenset
    quantificational: frozenset
    generational_suffixes: frozenset
    min_token_len: int = 3
    exclude_person_entities: bool = True

    @classmethod
    def default(cls, **overrides):
        sets = {key: frozenset(_packaged_list(fname)) for key, fname in _EXCLUSION_FILES.items()}
        sets.update(overrides)
        return cls(**sets)

    def excluded_lemmas(self):
        return (
            self.stopwords
            | self.months
            | self.temporal
            | self.numerals_written
            | self.ordinals
            | self.quantificational
            | self.generational_suffixes
        )


def is_roman_numeral(lemma):
    return (
        len(lemma) >= 2
        and lemma not in _ROMAN_ALLOWLIST
        and bool(_ROMAN_RE.fullmatch(lemma))
    )


def _is_eligible(token, rules: ExclusionRules, excluded):
    if token.pos not in CONTENT_POS:
        return False
    lemma = token.lemma
    if any(ch.isdigit() for ch in lemma):
        return False
    if lemma in excluded:
        return False
    if is_roman_numeral(lemma):
        return False
    if rules.exclude_person_entities and token.entity == "PERSON":
        return False
    if token.pos == "PROPN" and len(lemma) < rules.min_token_len:
        return False
    return True


def eligible_lemmas(sentence, rules: ExclusionRules, excluded=None):
    """Ordered distinct eligible content lemmas of one sentence."""
    if excluded is None:
        excluded = rules.excluded_lemmas()
    seen = set()
    out = []
    for token in sentence.tokens:
        if _is_eligible(token, rules, excluded) and token.lemma not in seen:
            seen.add(token.lemma)
            out.append(token.lemma)
    return out


def build_candidate_pool(corpus, rules: ExclusionRules):
    """Lemma -> sentence frequency over eligible content words.

    Sentence-internal repeats of one lemma count once; a lemma's frequency is
    the number of sentences it occurs in.
    """
    if not corpus.sentences:
        raise ValidationError("cannot build a candidate pool from an empty corpus")
    excluded = rules.excluded_lemmas()
    pool = {}
    for sent in corpus.sentences.values():
        for lemma in eligible_lemmas(sent, rules, excluded):
            pool[lemma] = pool.get(lemma, 0) + 1
    return pool


def farthest_point_sample(vectors, k, frequencies=None, start_lemma=None):
    """Greedy farthest-point sampling over unit vectors with cosine distance.

    The first pick is `start_lemma` if given, otherwise the lemma with the
    highest frequency (ties broken by lexicographic order). Every later pick
    maximizes the minimum cosine distance to the already-selected set; exact
    distance ties also fall back to lexicographic order, so the output is
    fully deterministic.
    """
    lemmas = sorted(vectors)
    if k > len(lemmas):
        raise ConfigError(f"farthest-point sampling asked for k={k} from {len(lemmas)} vectors")
    if k == 0:
        return []
    dims = {np.asarray(vectors[l]).shape for l in lemmas}
    if len(dims) > 1:
        raise ValidationError(f"vectors have mixed dimensions: {sorted(dims)}")
    mat = np.stack([np.asarray(vectors[l], dtype=np.float64) for l in lemmas])
    norms = np.linalg.norm(mat, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-4):
        bad = lemmas[int(np.argmax(np.abs(norms - 1.0)))]
        raise ValidationError(f"farthest-point sampling requires unit vectors ({bad!r} is not)")

    if start_lemma is not None:
        if start_lemma not in vectors:
            raise ConfigError(f"start lemma {start_lemma!r} not among vectors")
        first = lemmas.index(start_lemma)
    else:
        if frequencies is None:
            raise ConfigError("default start rule needs frequencies")
        first = min(range(len(lemmas)), key=lambda i: (-frequencies.get(lemmas[i], 0), lemmas[i]))

    selected = [first]
    # min cosine distance from each candidate to the selected set
    min_dist = 1.0 - mat @ mat[first]
    min_dist[first] = -np.inf
    for _ in range(1, k):
        best = min(range(len(lemmas)), key=lambda i: (-min_dist[i], lemmas[i]))
        selected.append(best)
        min_dist = np.minimum(min_dist, 1.0 - mat @ mat[best])
        min_dist[best] = -np.inf
    return [lemmas[i] for i in selected]


@dataclass
class KeywordVocabulary:
    size_target: int
    keywords: list  # of dicts {lemma, frequency, origin}
    seed: int
    min_freq: int
    reserve: int
    audit: dict = field(default_factory=dict)  # sentence_id -> {eligible, covered}
    overflow: bool = False
    start_rule: str = "highest-frequency"

    def lemmas(self):
        return [kw["lemma"] for kw in self.keywords]

    def lemma_set(self):
        return {kw["lemma"] for kw in self.keywords}

    def __len__(self):
        return len(self.keywords)

    def write(self, path, audit_path=None):
        lines = [
            "# anchorlab keyword vocabulary",
            f"# V={self.size_target} seed={self.seed} min_freq={self.min_freq} "
            f"reserve={self.reserve} keywords={len(self.keywords)} overflow={int(self.overflow)}",
            f"# start_rule={self.start_rule}",
        ]
        lines += [kw["lemma"] for kw in self.keywords]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        if audit_path is not None:
            payload = {
                "size_target": self.size_target,
                "seed": self.seed,
                "min_freq": self.min_freq,
                "reserve": self.reserve,
                "overflow": self.overflow,
                "start_rule": self.start_rule,
                "keywords": self.keywords,
                "sentences": self.audit,
            }
            with open(audit_path, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")

    @classmethod
    def read(cls, path):
        lemmas = []
        meta = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("#"):
                    for part in line[1:].split():
                        if "=" in part:
                            key, val = part.split("=", 1)
                            meta[key] = val
                elif line:
                    lemmas.append(line)
        if len(set(lemmas)) != len(lemmas):
            raise ValidationError(f"{path}: duplicate keywords in vocabulary file")
        return cls(
            size_target=int(meta.get("V", len(lemmas))),
            keywords=[{"lemma": l, "frequency": 0, "origin": "core"} for l in lemmas],
            seed=int(meta.get("seed", 0)),
            min_freq=int(meta.get("min_freq", 0)),
            reserve=int(meta.get("reserve", 0)),
            overflow=bool(int(meta.get("overflow", 0))),
            start_rule=meta.get("start_rule", "highest-frequency"),
        )


def _coverage_counts(corpus, rules, vocab_set):
    excluded = rules.excluded_lemmas()
    counts = {}
    for sid, sent in corpus.sentences.items():
        eligible = eligible_lemmas(sent, rules, excluded)
        covered = [l for l in eligible if l in vocab_set]
        counts[sid] = {"eligible": len(eligible), "covered": len(covered)}
    return counts


def _coverage_ok(eligible_per_sentence, vocab_set):
    """Every sentence keeps min(2, eligible) covered keywords."""
    for eligible in eligible_per_sentence.values():
        need = min(2, len(eligible))
        if need and sum(1 for l in eligible if l in vocab_set) < need:
            return False
    return True


def audit_and_refine(core, corpus, budget, rules, pool=None, vectors=None):
    """Audit sentence coverage of `core`, refine, and prune to `budget`.

    Sentences with no covered eligible word contribute their earliest two
    eligible words to a global refinement queue; sentences with exactly one
    covered word contribute their earliest uncovered eligible word; sentences
    with fewer than two eligible words keep whatever they have. If the merged
    vocabulary exceeds the budget, entries are pruned lowest-frequency-first
    (ties: smallest min cosine distance to the retained set) but only when
    removal keeps every sentence at min(2, eligible) covered keywords. If no
    further entry can be removed safely the overflow is kept and flagged.
    """
    if pool is None:
        pool = build_candidate_pool(corpus, rules)
    excluded = rules.excluded_lemmas()
    per_sentence = {
        sid: eligible_lemmas(sent, rules, excluded) for sid, sent in corpus.sentences.items()
    }

    core_set = set(core)
    queue = []
    queued = set(core_set)
    for sid in corpus.sentences:
        eligible = per_sentence[sid]
        covered = [l for l in eligible if l in core_set]
        if len(eligible) < 2:
            wanted = eligible
        elif not covered:
            wanted = eligible[:2]
        elif len(covered) == 1:
            wanted = [l for l in eligible if l not in core_set][:1]
        else:
            wanted = []
        for lemma in wanted:
            if lemma not in queued:
                queued.add(lemma)
                queue.append(lemma)

    entries = [{"lemma": l, "frequency": pool.get(l, 0), "origin": "core"} for l in core]
    entries += [{"lemma": l, "frequency": pool.get(l, 0), "origin": "refinement"} for l in queue]

    overflow = False
    if len(entries) > budget:
        entries, overflow = _prune(entries, budget, per_sentence, vectors or {})

    vocab_set = {e["lemma"] for e in entries}
    audit = _coverage_counts(corpus, rules, vocab_set)
    return entries, audit, overflow


def _min_cos_distance(lemma, retained, vectors):
    if lemma not in vectors:
        return math.inf
    v = np.asarray(vectors[lemma], dtype=np.float64)
    dists = [
        1.0 - float(v @ np.asarray(vectors[r], dtype=np.float64))
        for r in retained
        if r != lemma and r in vectors
    ]
    return min(dists) if dists else math.inf


def _prune(entries, budget, per_sentence, vectors):
    entries = list(entries)
    while len(entries) > budget:
        retained = [e["lemma"] for e in entries]
        order = sorted(
            entries,
            key=lambda e: (
                e["frequency"],
                _min_cos_distance(e["lemma"], retained, vectors),
                e["lemma"],
            ),
        )
        removed = False
        for cand in order:
            trial = {l for l in retained if l != cand["lemma"]}
            if _coverage_ok(per_sentence, trial):
                entries = [e for e in entries if e["lemma"] != cand["lemma"]]
                removed = True
                break
        if not removed:
            return entries, True  # nothing removable without breaking coverage
    return entries, False


def build_vocabulary(
    corpus,
    word_bank,
    size_target,
    rules=None,
    min_freq=5,
    reserve_frac=0.2,
    seed=0,
    root_map=None,
):
    """Construct the fixed keyword vocabulary (pool -> FPS core -> refine).

    `word_bank` supplies the diversity embeddings for farthest-point
    sampling; its rows are unit-normalized here. Lemmas missing from the
    bank are dropped from sampling with a warning but may still enter via
    the refinement queue. `root_map` optionally maps lemmas to shared
    lexical roots; only the most frequent form per root survives the core.
    """
    if size_target < 2:
        raise ConfigError(f"vocabulary size must be >= 2, got {size_target}")
    if rules is None:
        rules = ExclusionRules.default()

    pool = build_candidate_pool(corpus, rules)
    thresholded = {l: f for l, f in pool.items() if f >= min_freq}
    if len(thresholded) < size_target:
        raise ConfigError(
            f"candidate pool has {len(thresholded)} lemmas with frequency >= {min_freq} "
            f"but V={size_target}; lower min_freq"
        )

    bank = word_bank.unit_normalized()
    in_bank = [l for l in thresholded if l in bank]
    missing = sorted(set(thresholded) - set(in_bank))
    if missing:
        log.warning(
            "%d/%d pool lemmas missing from the word bank (dropped from sampling): %s",
            len(missing),
            len(thresholded),
            ", ".join(missing[:10]) + ("..." if len(missing) > 10 else ""),
        )
    if len(in_bank) < 0.9 * len(thresholded):
        raise ConfigError(
            f"word bank covers only {len(in_bank)}/{len(thresholded)} pool lemmas (<90%)"
        )

    reserve = int(math.ceil(size_target * reserve_frac))
    core_size = size_target - reserve
    if core_size < 1:
        raise ConfigError(f"reserve {reserve} leaves no room for a core (V={size_target})")
    if len(in_bank) < core_size:
        raise ConfigError(
            f"only {len(in_bank)} bank-covered lemmas for a core of {core_size}; lower min_freq"
        )

    vectors = {l: bank.vector(l) for l in in_bank}
    core = farthest_point_sample(vectors, core_size, frequencies=thresholded)

    if root_map:
        core = _dedup_by_root(core, root_map, pool)

    entries, audit, overflow = audit_and_refine(
        core, corpus, size_target, rules, pool=pool, vectors=vectors
    )
    return KeywordVocabulary(
        size_target=size_target,
        keywords=entries,
        seed=seed,
        min_freq=min_freq,
        reserve=reserve,
        audit=audit,
        overflow=overflow,
    )


def _dedup_by_root(core, root_map, pool):
    best = {}
    for lemma in core:
        root = root_map.get(lemma, lemma)
        cur = best.get(root)
        if cur is None or pool.get(lemma, 0) > pool.get(cur, 0):
            best[root] = lemma
    keep = set(best.values())
    return [l for l in core if l in keep]


def min_pairwise_cosine_distance(vectors, lemmas):
    """Smallest pairwise cosine distance among `lemmas` (monotonicity checks)."""
    mat = np.stack([np.asarray(vectors[l], dtype=np.float64) for l in lemmas])
    sims = mat @ mat.T
    np.fill_diagonal(sims, -np.inf)
    return float(1.0 - np.max(sims))
