"""Condition-suite evaluation and report serialization.

The suite evaluates {random, ordered, oracle} anchors under each prompt
mode and anchor depth, scoring anchor grounding, Top-k retrieval, and
text-overlap metrics per cell, pooled and per subject. Reports serialize
to versioned JSON plus flat CSV tables, with optional plot-data CSVs and
rendered figures.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from .conditions import CONDITIONS, condition_anchors
from .metrics import anchor_metrics, bleu, embedding_greedy_f1, rouge1_f1, tokenize
from .retrieval_eval import rank_of_ground_truth
from .stats import bonferroni, paired_t, rm_anova, within_subject_2x2

SCHEMA_VERSION = 1

TEXT_METRIC_NAMES = ("bleu1", "bleu2", "bleu3", "rouge1_f1", "greedy_f1")


@dataclass(frozen=True)
class SuiteConfig:
    ks: tuple = (5, 10, 15, 20, 25)
    ms: tuple = (3, 5, 7)
    modes: tuple = ("naive", "rag", "cot", "cot_rag")
    conditions: tuple = CONDITIONS
    primary_k: int = 5
    primary_m: int = 5
    primary_mode: str = "cot_rag"
    random_seed: int = 0


@dataclass
class CellResult:
    condition: str
    mode: str
    m: int
    n: int = 0
    gaps: dict = field(default_factory=dict)
    pooled: dict = field(default_factory=dict)
    per_subject: dict = field(default_factory=dict)
    mean_sd: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "condition": self.condition,
            "mode": self.mode,
            "m": self.m,
            "n": self.n,
            "gaps": self.gaps,
            "pooled": self.pooled,
            "per_subject": self.per_subject,
            "mean_sd": self.mean_sd,
        }


def _aggregate(rows, ks):
    """Pool metric rows (one per evaluated sample) into a summary dict."""
    out = {
        "anchor_hit": float(np.mean([r["anchor_hit"] for r in rows])),
        "sentence_anchor_all": float(np.mean([r["anchor_all"] for r in rows])),
        "top_k": {str(k): float(np.mean([r["rank"] <= k for r in rows])) for k in ks},
    }
    for name in TEXT_METRIC_NAMES:
        values = [r[name] for r in rows if r[name] is not None]
        out[name] = float(np.mean(values)) if values else None
    out["greedy_f1_missing"] = sum(1 for r in rows if r["greedy_f1"] is None)
    return out


def evaluate_cell(condition, mode, m, sample_keys, sentences, decoded, vocab_lemmas,
                  vocab_set, reconstructor, pool_ids, pool_matrix, embedder,
                  word_bank, ks, random_seed):
    """Evaluate one (condition, mode, m) cell over the given sample keys."""
    rows = []
    skipped = 0
    for draw_index, (sid, subject) in enumerate(sample_keys):
        sentence = sentences[sid]
        anchors = condition_anchors(
            condition,
            sentence=sentence,
            decoded=decoded.get((sid, subject)),
            vocab_lemmas=vocab_lemmas,
            vocab_set=vocab_set,
            m=m,
            seed=random_seed,
            draw_index=draw_index,
        )
        if not anchors:
            skipped += 1
            continue
        record = reconstructor.reconstruct(sid, anchors, mode)
        sentence_lemmas = [t.lemma for t in sentence.tokens]
        hit, all_grounded = anchor_metrics(anchors, sentence_lemmas)
        hyp = tokenize(record.output)
        ref = tokenize(sentence.text)
        bleu_scores = bleu(hyp, ref, max_n=3)
        greedy, _ = embedding_greedy_f1(hyp, ref, word_bank)
        rank = rank_of_ground_truth(pool_matrix, pool_ids, embedder.embed(record.output), sid)
        rows.append(
            {
                "subject": subject,
                "anchor_hit": hit,
                "anchor_all": all_grounded,
                "rank": rank,
                "bleu1": bleu_scores[1],
                "bleu2": bleu_scores[2],
                "bleu3": bleu_scores[3],
                "rouge1_f1": rouge1_f1(hyp, ref),
                "greedy_f1": greedy,
            }
        )

    cell = CellResult(condition=condition, mode=mode, m=m, n=len(rows))
    if skipped:
        cell.gaps["empty_anchor_sets"] = skipped
    if not rows:
        cell.gaps["no_evaluable_samples"] = True
        return cell
    cell.pooled = _aggregate(rows, ks)
    subjects = sorted({r["subject"] for r in rows})
    for subject in subjects:
        cell.per_subject[subject] = _aggregate([r for r in rows if r["subject"] == subject], ks)
    if len(subjects) > 1:
        for k in ks:
            vals = [cell.per_subject[s]["top_k"][str(k)] for s in subjects]
            cell.mean_sd[f"top_{k}"] = {
                "mean": float(np.mean(vals)),
                "sd": float(np.std(vals, ddof=1)),
            }
    return cell


def run_condition_suite(sample_keys, sentences, decoded_by_m, vocab_lemmas,
                        reconstructor, pool_ids, pool_matrix, embedder, word_bank,
                        config: SuiteConfig, extra_config=None):
    """Full condition x mode x m evaluation; returns the EvalReport dict."""
    vocab_set = set(vocab_lemmas)
    missing_ms = [m for m in config.ms if m not in decoded_by_m]
    if missing_ms:
        raise ValidationError(f"no decoded anchors for m={missing_ms}; run decode first")

    cells = []
    for condition in config.conditions:
        for mode in config.modes:
            for m in config.ms:
                cells.append(
                    evaluate_cell(
                        condition, mode, m, sample_keys, sentences, decoded_by_m[m],
                        vocab_lemmas, vocab_set, reconstructor, pool_ids, pool_matrix,
                        embedder, word_bank, config.ks, config.random_seed,
                    )
                )

    report = {
        "schema_version": SCHEMA_VERSION,
        "config": {
            "ks": list(config.ks),
            "ms": list(config.ms),
            "modes": list(config.modes),
            "conditions": list(config.conditions),
            "primary": {
                "k": config.primary_k,
                "m": config.primary_m,
                "mode": config.primary_mode,
            },
            "random_seed": config.random_seed,
            "vocab_size": len(vocab_lemmas),
            "embedder": getattr(embedder, "name", type(embedder).__name__),
            "greedy_f1_note": "static word-bank greedy match; not contextual BERTScore",
            **(extra_config or {}),
        },
        "pool": {
            "size": len(pool_ids),
            "chance_top_k": {str(k): k / len(pool_ids) for k in config.ks},
        },
        "cells": [c.to_dict() for c in cells],
    }
    report["derived"] = _derived_tables(report, config)
    report["statistics"] = _statistics(report, config)
    return report


def _cell(report, condition, mode, m):
    for cell in report["cells"]:
        if (cell["condition"], cell["mode"], cell["m"]) == (condition, mode, m):
            return cell
    return None


def _top_k(cell, k):
    if not cell or not cell.get("pooled"):
        return None
    return cell["pooled"]["top_k"].get(str(k))


def _derived_tables(report, config: SuiteConfig):
    """Recovery-versus-oracle rows for every (mode, m)."""
    rows = []
    for mode in config.modes:
        for m in config.ms:
            ordered = _top_k(_cell(report, "ordered", mode, m), config.primary_k)
            oracle = _top_k(_cell(report, "oracle", mode, m), config.primary_k)
            random_ = _top_k(_cell(report, "random", mode, m), config.primary_k)
            if ordered is None or oracle is None:
                continue
            rows.append(
                {
                    "mode": mode,
                    "m": m,
                    "k": config.primary_k,
                    "random": random_,
                    "ordered": ordered,
                    "oracle": oracle,
                    "delta_from_oracle": ordered - oracle,
                    "recovery_ratio": (ordered / oracle) if oracle > 0 else None,
                }
            )
    return {"recovery": rows}


def _per_subject_vector(cell, k):
    subjects = sorted(cell["per_subject"])
    return subjects, [cell["per_subject"][s]["top_k"][str(k)] for s in subjects]


def _statistics(report, config: SuiteConfig):
    """Paired-t condition contrasts, mode RM-ANOVA, and the 2x2 CoT x RAG design.

    Needs >= 2 subjects with complete cells; otherwise a note is recorded.
    """
    out = []
    mode, m, k = config.primary_mode, config.primary_m, config.primary_k
    cells = {cond: _cell(report, cond, mode, m) for cond in ("random", "ordered", "oracle")}
    if any(c is None or not c.get("per_subject") for c in cells.values()):
        return [{"note": "statistics skipped: missing condition cells"}]
    subject_sets = [tuple(sorted(c["per_subject"])) for c in cells.values()]
    if len(set(subject_sets)) != 1 or len(subject_sets[0]) < 2:
        return [{"note": "statistics skipped: needs >= 2 subjects with complete cells"}]

    vectors = {cond: _per_subject_vector(cells[cond], k)[1] for cond in cells}
    comparisons = [("ordered", "random"), ("ordered", "oracle")]
    raw = []
    for a, b in comparisons:
        res = paired_t(vectors[a], vectors[b])
        raw.append((f"top{k} {a} vs {b} ({mode}, m={m})", res))
    corrected = bonferroni([r.p for _, r in raw])
    for (label, res), p_corr in zip(raw, corrected):
        row = res.to_dict()
        row.update({"comparison": label, "correction": "bonferroni", "p_corrected": p_corr})
        out.append(row)

    mode_cells = {md: _cell(report, "ordered", md, m) for md in config.modes}
    if len(config.modes) >= 2 and all(c and c.get("per_subject") for c in mode_cells.values()):
        subject_lists = [tuple(sorted(c["per_subject"])) for c in mode_cells.values()]
        if len(set(subject_lists)) == 1:
            subjects = list(subject_lists[0])
            matrix = [
                [mode_cells[md]["per_subject"][s]["top_k"][str(k)] for md in config.modes]
                for s in subjects
            ]
            res = rm_anova(matrix)
            row = res.to_dict()
            row["comparison"] = f"top{k} across modes (ordered, m={m})"
            out.append(row)
            grid = {"naive": (0, 0), "cot": (1, 0), "rag": (0, 1), "cot_rag": (1, 1)}
            if set(grid) <= set(config.modes):
                cells_2x2 = {
                    grid[md]: [mode_cells[md]["per_subject"][s]["top_k"][str(k)] for s in subjects]
                    for md in grid
                }
                for name, res in within_subject_2x2(cells_2x2).items():
                    row = res.to_dict()
                    label = {"main_a": "CoT main effect", "main_b": "RAG main effect",
                             "interaction": "CoT x RAG interaction"}[name]
                    row["comparison"] = f"{label} (ordered, m={m}, top{k})"
                    out.append(row)
    return out


def write_report(report, out_dir, emit_plot_data=False, figures=True):
    """Write report.json plus flat CSV tables (and figures) under out_dir."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    with open(os.path.join(out_dir, "retrieval.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition", "mode", "m", "k", "accuracy", "n"])
        for cell in report["cells"]:
            if not cell.get("pooled"):
                continue
            for k, acc in sorted(cell["pooled"]["top_k"].items(), key=lambda kv: int(kv[0])):
                writer.writerow([cell["condition"], cell["mode"], cell["m"], k, acc, cell["n"]])

    with open(os.path.join(out_dir, "anchors.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition", "mode", "m", "anchor_hit", "sentence_anchor_all", "n"])
        for cell in report["cells"]:
            if not cell.get("pooled"):
                continue
            writer.writerow(
                [cell["condition"], cell["mode"], cell["m"],
                 cell["pooled"]["anchor_hit"], cell["pooled"]["sentence_anchor_all"], cell["n"]]
            )

    with open(os.path.join(out_dir, "text_metrics.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition", "mode", "m", *TEXT_METRIC_NAMES, "n"])
        for cell in report["cells"]:
            if not cell.get("pooled"):
                continue
            writer.writerow(
                [cell["condition"], cell["mode"], cell["m"],
                 *[cell["pooled"][name] for name in TEXT_METRIC_NAMES], cell["n"]]
            )

    with open(os.path.join(out_dir, "statistics.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["comparison", "name", "statistic", "df", "p", "p_corrected"])
        for row in report.get("statistics", []):
            if "note" in row:
                writer.writerow([row["note"], "", "", "", "", ""])
            else:
                writer.writerow(
                    [row.get("comparison", ""), row["name"], row["statistic"],
                     "x".join(str(d) for d in row["df"]), row["p"], row.get("p_corrected", "")]
                )

    if emit_plot_data:
        _write_plot_data(report, out_dir)
    if figures:
        from .plots import render_figures

        render_figures(report, out_dir)


def _write_plot_data(report, out_dir):
    """Figure-style curves as CSV: accuracy vs k and accuracy vs m."""
    import os

    primary_m = report["config"]["primary"]["m"]
    with open(os.path.join(out_dir, "curve_accuracy_vs_k.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition", "mode", "k", "accuracy"])
        for cell in report["cells"]:
            if cell["m"] != primary_m or not cell.get("pooled"):
                continue
            for k, acc in sorted(cell["pooled"]["top_k"].items(), key=lambda kv: int(kv[0])):
                writer.writerow([cell["condition"], cell["mode"], k, acc])

    primary_k = str(report["config"]["primary"]["k"])
    with open(os.path.join(out_dir, "curve_accuracy_vs_m.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition", "mode", "m", "accuracy"])
        for cell in report["cells"]:
            if not cell.get("pooled"):
                continue
            writer.writerow(
                [cell["condition"], cell["mode"], cell["m"], cell["pooled"]["top_k"][primary_k]]
            )


def score_external_records(records, sentences, pool_ids, pool_matrix, embedder,
                           word_bank, ks):
    """Score externally produced reconstruction files (baseline support)."""
    rows = []
    for rec in records:
        sentence = sentences.get(rec.sentence_id)
        if sentence is None:
            raise ValidationError(f"reconstruction references unknown sentence {rec.sentence_id!r}")
        hyp = tokenize(rec.output)
        ref = tokenize(sentence.text)
        bleu_scores = bleu(hyp, ref, max_n=3)
        greedy, _ = embedding_greedy_f1(hyp, ref, word_bank)
        anchors = rec.anchors or []
        hit, all_g = anchor_metrics(anchors, [t.lemma for t in sentence.tokens])
        rank = rank_of_ground_truth(pool_matrix, pool_ids, embedder.embed(rec.output),
                                    rec.sentence_id)
        rows.append(
            {
                "subject": "external",
                "anchor_hit": hit,
                "anchor_all": all_g,
                "rank": rank,
                "bleu1": bleu_scores[1],
                "bleu2": bleu_scores[2],
                "bleu3": bleu_scores[3],
                "rouge1_f1": rouge1_f1(hyp, ref),
                "greedy_f1": greedy,
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "n": len(rows),
        "pool": {"size": len(pool_ids), "chance_top_k": {str(k): k / len(pool_ids) for k in ks}},
        "metrics": _aggregate(rows, ks) if rows else {},
    }
