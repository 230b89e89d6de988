"""Command-line entry point wiring the full pipeline.

Subcommands: build-vocab, synth-gen, train, decode, reconstruct, evaluate,
entropy, permute, report. Exit codes: 0 success, 1 validation or
configuration error (including bad flags), 2 runtime/endpoint failure.
Every run writes its resolved configuration next to its outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import config as cfgmod
from .errors import ConfigError, EndpointError, ValidationError

ENV_URL = "ANCHORLAB_LLM_URL"
ENV_KEY = "ANCHORLAB_LLM_KEY"


class CliParser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors, per the CLI contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _outdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _snapshot(out, name, resolved):
    cfgmod.write_snapshot(os.path.join(out, "run_config.ini"), name, resolved)


def _parse_snr(value):
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip().lower()
    if text in ("inf", "+inf", "infinity"):
        return math.inf
    if text == "-inf":
        return -math.inf
    return float(text)


def _load_vocab_and_bank(vocab_path, bank_path):
    from .aligner import bank_tensor
    from .embeddings import read_bank
    from .vocab import KeywordVocabulary

    vocab = KeywordVocabulary.read(vocab_path)
    lemmas = vocab.lemmas()
    bank = read_bank(bank_path)
    missing = [l for l in lemmas if l not in bank]
    if missing:
        raise ValidationError(
            f"keyword bank missing {len(missing)} vocabulary entries "
            f"(first: {missing[:5]})"
        )
    sub = bank.subset(lemmas).unit_normalized()
    return vocab, lemmas, bank_tensor(sub)


def _read_anchor_file(path):
    from .aligner import AnchorSequence

    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            seq = AnchorSequence.from_dict(json.loads(line))
            out[(seq.sentence_id, seq.subject_id)] = seq
    return out


# ----------------------------------------------------------------------
# subcommand handlers
# ----------------------------------------------------------------------


def cmd_entropy(args, filecfg):
    from .infoscale import scale_table

    defaults = {"V": [100], "m": [3, 5, 7], "L": 20, "without_repetition": False,
                "format": "csv", "out": None}
    res = cfgmod.resolve(vars(args), filecfg, "entropy", defaults)
    rows = scale_table(res["V"], res["m"], res["L"], not res["without_repetition"])
    if res["format"] == "json":
        text = json.dumps(rows, indent=2)
    else:
        lines = ["vocab_size,m,kind,bits"]
        lines += [f'{r["vocab_size"]},{r["m"]},{r["kind"]},{r["bits"]:.2f}' for r in rows]
        text = "\n".join(lines)
    print(text)
    if res["out"]:
        out = _outdir(res["out"])
        ext = "json" if res["format"] == "json" else "csv"
        with open(os.path.join(out, f"entropy.{ext}"), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        _snapshot(out, "entropy", res)
    return 0


def cmd_synth_gen(args, filecfg):
    from .synth import SynthSpec, generate, snr_report, write_dataset
    from .embeddings import write_bank
    from .vocab import KeywordVocabulary

    defaults = {
        "out": None, "vocab_size": 50, "bank_dim": 768, "feature_dim": 840,
        "snr_db": "inf", "filler_rate": 0.2, "sentences": 100, "words_min": 5,
        "words_max": 12, "subjects": 1, "seed": 0,
    }
    res = cfgmod.resolve(vars(args), filecfg, "synth-gen", defaults)
    if not res["out"]:
        raise ConfigError("synth-gen requires --out")
    spec = SynthSpec(
        vocab_size=res["vocab_size"],
        bank_dim=res["bank_dim"],
        feature_dim=res["feature_dim"],
        snr_db=_parse_snr(res["snr_db"]),
        filler_rate=res["filler_rate"],
        sentences=res["sentences"],
        words_min=res["words_min"],
        words_max=res["words_max"],
        subjects=res["subjects"],
        seed=res["seed"],
    )
    dataset = generate(spec)
    out = _outdir(res["out"])
    write_dataset(dataset, os.path.join(out, "dataset.jsonl"),
                  os.path.join(out, "synth_spec.json"))
    write_bank(dataset.bank, os.path.join(out, "keyword_bank.embk"))
    freq = {}
    for sent in dataset.sentences:
        for lemma in {t.lemma for t in sent.tokens if t.lemma != "__out__"}:
            freq[lemma] = freq.get(lemma, 0) + 1
    vocab = KeywordVocabulary(
        size_target=spec.vocab_size,
        keywords=[{"lemma": l, "frequency": freq.get(l, 0), "origin": "core"}
                  for l in spec.vocab_lemmas()],
        seed=spec.seed, min_freq=0, reserve=0,
    )
    vocab.write(os.path.join(out, "vocab.txt"), os.path.join(out, "vocab_audit.json"))
    measured = snr_report(dataset)
    print(f"generated {len(dataset.sentences)} sentences / {len(dataset.samples)} samples; "
          f"measured SNR {measured if math.isfinite(measured) else measured} dB")
    _snapshot(out, "synth-gen", res)
    return 0


def cmd_build_vocab(args, filecfg):
    from .corpus import load_dataset
    from .embeddings import read_bank
    from .vocab import ExclusionRules, build_vocabulary, load_lemma_list

    defaults = {
        "dataset": None, "word_bank": None, "size": 100, "min_freq": 5,
        "reserve_frac": 0.2, "seed": 0, "out": None, "feature_dim": 840,
        "root_map": None,
        "stopwords": None, "months": None, "temporal": None, "numerals": None,
        "ordinals": None, "quantificational": None, "generational": None,
        "min_token_len": 3, "keep_person_entities": False,
    }
    res = cfgmod.resolve(vars(args), filecfg, "build-vocab", defaults)
    if not res["dataset"] or not res["out"] or not res["word_bank"]:
        raise ConfigError("build-vocab requires --dataset, --word-bank and --out")
    overrides = {}
    for key, attr in [("stopwords", "stopwords"), ("months", "months"),
                      ("temporal", "temporal"), ("numerals", "numerals_written"),
                      ("ordinals", "ordinals"), ("quantificational", "quantificational"),
                      ("generational", "generational_suffixes")]:
        if res[key]:
            overrides[attr] = frozenset(load_lemma_list(res[key]))
    rules = ExclusionRules.default(**overrides)
    if res["min_token_len"] != 3 or res["keep_person_entities"]:
        rules = ExclusionRules(
            stopwords=rules.stopwords, months=rules.months, temporal=rules.temporal,
            numerals_written=rules.numerals_written, ordinals=rules.ordinals,
            quantificational=rules.quantificational,
            generational_suffixes=rules.generational_suffixes,
            min_token_len=res["min_token_len"],
            exclude_person_entities=not res["keep_person_entities"],
        )
    corpus = load_dataset(res["dataset"], feature_dim=res["feature_dim"])
    bank = read_bank(res["word_bank"])
    root_map = None
    if res["root_map"]:
        with open(res["root_map"], encoding="utf-8") as fh:
            root_map = json.load(fh)
    vocab = build_vocabulary(
        corpus, bank, res["size"], rules=rules, min_freq=res["min_freq"],
        reserve_frac=res["reserve_frac"], seed=res["seed"], root_map=root_map,
    )
    out = _outdir(res["out"])
    vocab.write(os.path.join(out, "vocab.txt"), os.path.join(out, "vocab_audit.json"))
    print(f"vocabulary: {len(vocab)} keywords (target {vocab.size_target}, "
          f"overflow={vocab.overflow})")
    _snapshot(out, "build-vocab", res)
    return 0


def cmd_train(args, filecfg):
    import torch

    from .aligner import (EncoderConfig, TrainConfig, build_model, make_examples,
                          save_checkpoint, train, write_history)
    from .corpus import SplitSpec, filter_samples, load_dataset, split

    defaults = {
        "dataset": None, "vocab": None, "keyword_bank": None, "out": None,
        "profile": "paper", "feature_dim": 840, "max_positions": 64,
        "ratios": [0.8, 0.1, 0.1], "lr": 1e-4, "batch_size": 32, "epochs": 50,
        "tau": 0.07, "learnable_tau": False, "aux_weight": 0.0, "seed": 0,
        "model_dim": None, "layers": None, "heads": None, "ffn_dim": None,
    }
    res = cfgmod.resolve(vars(args), filecfg, "train", defaults)
    for need in ("dataset", "vocab", "keyword_bank", "out"):
        if not res[need]:
            raise ConfigError(f"train requires --{need.replace('_', '-')}")
    torch.manual_seed(res["seed"])
    corpus = load_dataset(res["dataset"], feature_dim=res["feature_dim"])
    samples = filter_samples(list(corpus.samples), corpus.sentences)
    result = split(corpus, SplitSpec(mode="by-sentence", ratios=tuple(res["ratios"]),
                                     seed=res["seed"]))
    train_samples, val_samples, _ = result.select(samples)

    vocab, lemmas, bank = _load_vocab_and_bank(res["vocab"], res["keyword_bank"])
    profile = EncoderConfig.compact if res["profile"] == "compact" else EncoderConfig.paper
    overrides = {"input_dim": res["feature_dim"], "output_dim": bank.shape[1],
                 "max_positions": res["max_positions"]}
    for key in ("model_dim", "layers", "heads", "ffn_dim"):
        if res[key] is not None:
            overrides[key] = int(res[key])
    enc_config = profile(**overrides)
    model = build_model(enc_config, seed=res["seed"])
    tcfg = TrainConfig(lr=res["lr"], batch_size=res["batch_size"], epochs=res["epochs"],
                       tau=res["tau"], learnable_tau=res["learnable_tau"],
                       aux_weight=res["aux_weight"], seed=res["seed"])
    train_ex = make_examples(train_samples, corpus.sentences, lemmas)
    val_ex = make_examples(val_samples, corpus.sentences, lemmas)
    model, history, tau = train(model, train_ex, val_ex, bank, tcfg)

    out = _outdir(res["out"])
    save_checkpoint(os.path.join(out, "checkpoint.bclm"), model, lemmas, tau)
    write_history(os.path.join(out, "training_log.csv"), history)
    with open(os.path.join(out, "split.json"), "w", encoding="utf-8") as fh:
        json.dump(result.manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    best = min(history, key=lambda r: r["val_loss"])
    print(f"trained {len(history)} epochs; best val_loss {best['val_loss']:.4f} "
          f"(epoch {best['epoch']}), val_top1 {best['val_top1']:.3f}")
    _snapshot(out, "train", res)
    return 0


def _select_subset(samples, manifest_path, subset):
    if manifest_path is None or subset == "all":
        return samples
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    wanted = set(manifest[subset])
    return [s for s in samples if s.sentence_id in wanted]


def cmd_decode(args, filecfg):
    from .aligner import decode_anchors, load_checkpoint
    from .corpus import filter_samples, load_dataset

    defaults = {
        "dataset": None, "vocab": None, "keyword_bank": None, "checkpoint": None,
        "out": None, "m": [3, 5, 7], "feature_dim": 840, "split": None,
        "subset": "test",
    }
    res = cfgmod.resolve(vars(args), filecfg, "decode", defaults)
    for need in ("dataset", "vocab", "keyword_bank", "checkpoint", "out"):
        if not res[need]:
            raise ConfigError(f"decode requires --{need.replace('_', '-')}")
    corpus = load_dataset(res["dataset"], feature_dim=res["feature_dim"])
    samples = filter_samples(list(corpus.samples), corpus.sentences)
    samples = _select_subset(samples, res["split"], res["subset"])
    if not samples:
        raise ValidationError("no samples to decode after subset selection")
    vocab, lemmas, bank = _load_vocab_and_bank(res["vocab"], res["keyword_bank"])
    model, header = load_checkpoint(res["checkpoint"], expected_vocab=lemmas)
    out = _outdir(res["out"])
    for m in res["m"]:
        path = os.path.join(out, f"anchors_m{m}.jsonl")
        with open(path, "w", encoding="utf-8") as fh:
            for sample in samples:
                seq = decode_anchors(model, sample, lemmas, bank, m)
                fh.write(json.dumps(seq.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
        print(f"decoded {len(samples)} samples at m={m} -> {path}")
    _snapshot(out, "decode", res)
    return 0


def _make_reconstructor(res, pool_sentences):
    from .reconstruct import ChatCompletionClient, GenerationParams, Reconstructor
    from .retrieval import build_index
    from .vocab import ExclusionRules

    stop = ExclusionRules.default().stopwords
    index = build_index(pool_sentences, stopwords=stop)
    params = GenerationParams(
        temperature=res.get("temperature", 0.7),
        top_p=res.get("top_p", 0.9),
        repetition_penalty=res.get("repetition_penalty", 1.2),
        max_tokens=res.get("max_tokens", 100),
    )
    client = None
    if res.get("remote"):
        url = res.get("endpoint") or os.environ.get(ENV_URL)
        key = os.environ.get(ENV_KEY)
        client = ChatCompletionClient(url, model=res.get("model", "llama-2-7b-chat"),
                                      api_key=key)
    return Reconstructor(index=index, client=client, params=params, k=res.get("k", 5))


def cmd_reconstruct(args, filecfg):
    from .corpus import load_dataset
    from .reconstruct import write_records

    defaults = {
        "anchors": None, "dataset": None, "out": None, "mode": "cot_rag", "k": 5,
        "feature_dim": 840, "remote": False, "endpoint": None,
        "model": "llama-2-7b-chat", "temperature": 0.7, "top_p": 0.9,
        "repetition_penalty": 1.2, "max_tokens": 100, "concurrency": 1,
    }
    res = cfgmod.resolve(vars(args), filecfg, "reconstruct", defaults)
    for need in ("anchors", "dataset", "out"):
        if not res[need]:
            raise ConfigError(f"reconstruct requires --{need}")
    corpus = load_dataset(res["dataset"], feature_dim=res["feature_dim"])
    pool = list(corpus.sentences.values())
    reconstructor = _make_reconstructor(res, pool)
    anchors = _read_anchor_file(res["anchors"])
    items = [(sid, seq.lemmas()) for (sid, _), seq in sorted(anchors.items())
             if seq.lemmas()]
    records = reconstructor.reconstruct_many(items, res["mode"],
                                             concurrency=res["concurrency"])
    out = _outdir(res["out"])
    path = os.path.join(out, "reconstructions.jsonl")
    write_records(path, records)
    print(f"reconstructed {len(records)} sentences ({res['mode']}, "
          f"{'remote' if res['remote'] else 'fallback'}) -> {path}")
    _snapshot(out, "reconstruct", res)
    return 0


def cmd_evaluate(args, filecfg):
    from .corpus import load_dataset
    from .embeddings import read_bank
    from .evalharness import (IdfMeanEmbedder, SuiteConfig, embed_pool,
                              run_condition_suite, score_external_records,
                              write_report)
    from .reconstruct import read_records

    defaults = {
        "dataset": None, "vocab": None, "keyword_bank": None, "word_bank": None,
        "anchors_dir": None, "reconstructions": None, "out": None,
        "feature_dim": 840, "k": 5, "ks": [5, 10, 15, 20, 25], "ms": [3, 5, 7],
        "modes": ["naive", "rag", "cot", "cot_rag"], "primary_m": 5,
        "primary_mode": "cot_rag", "seed": 0, "emit_plot_data": False,
        "no_figures": False, "remote": False, "endpoint": None,
        "model": "llama-2-7b-chat", "temperature": 0.7, "top_p": 0.9,
        "repetition_penalty": 1.2, "max_tokens": 100,
    }
    res = cfgmod.resolve(vars(args), filecfg, "evaluate", defaults)
    if not res["dataset"] or not res["out"]:
        raise ConfigError("evaluate requires --dataset and --out")
    corpus = load_dataset(res["dataset"], feature_dim=res["feature_dim"])
    pool = list(corpus.sentences.values())
    pool_ids = [s.sentence_id for s in pool]
    pool_texts = [s.text for s in pool]
    bank_path = res["word_bank"] or res["keyword_bank"]
    if not bank_path:
        raise ConfigError("evaluate needs --word-bank (or --keyword-bank) for embeddings")
    word_bank = read_bank(bank_path)
    embedder = IdfMeanEmbedder(word_bank, pool_texts)
    pool_matrix = embed_pool(embedder, pool_ids, pool_texts)
    out = _outdir(res["out"])

    if res["reconstructions"]:
        records = read_records(res["reconstructions"])
        report = score_external_records(records, corpus.sentences, pool_ids, pool_matrix,
                                        embedder, word_bank, res["ks"])
        with open(os.path.join(out, "report.json"), "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"scored {report['n']} external reconstructions -> {out}/report.json")
        _snapshot(out, "evaluate", res)
        return 0

    if not res["vocab"] or not res["anchors_dir"]:
        raise ConfigError("evaluate requires --vocab and --anchors-dir (or --reconstructions)")
    vocab, lemmas, _ = _load_vocab_and_bank(res["vocab"],
                                            res["keyword_bank"] or bank_path)
    decoded_by_m = {}
    for m in res["ms"]:
        path = os.path.join(res["anchors_dir"], f"anchors_m{m}.jsonl")
        if not os.path.exists(path):
            raise ValidationError(f"missing decoded anchors for m={m}: {path}")
        decoded_by_m[m] = _read_anchor_file(path)
    keys = sorted(set.intersection(*(set(d) for d in decoded_by_m.values())))
    reconstructor = _make_reconstructor(res, pool)
    suite = SuiteConfig(ks=tuple(res["ks"]), ms=tuple(res["ms"]),
                        modes=tuple(res["modes"]), primary_k=res["k"],
                        primary_m=res["primary_m"], primary_mode=res["primary_mode"],
                        random_seed=res["seed"])
    report = run_condition_suite(
        keys, corpus.sentences, decoded_by_m, lemmas, reconstructor, pool_ids,
        pool_matrix, embedder, word_bank, suite,
        extra_config={"retrieval_k": res["k"],
                      "reconstructor": "remote" if res["remote"] else "fallback",
                      "template_version": "v1"},
    )
    write_report(report, out, emit_plot_data=res["emit_plot_data"],
                 figures=not res["no_figures"])
    print(f"evaluated {len(keys)} samples x {len(res['modes'])} modes x "
          f"{len(res['ms'])} depths -> {out}/report.json")
    _snapshot(out, "evaluate", res)
    return 0


def cmd_permute(args, filecfg):
    from .corpus import load_dataset
    from .embeddings import read_bank
    from .evalharness import IdfMeanEmbedder, embed_pool, permutation_test

    defaults = {
        "anchors": None, "dataset": None, "out": None, "word_bank": None,
        "keyword_bank": None, "mode": "cot_rag", "k": 5, "n_perm": 500,
        "seed": 0, "feature_dim": 840, "retrieval_k": 5,
    }
    res = cfgmod.resolve(vars(args), filecfg, "permute", defaults)
    for need in ("anchors", "dataset", "out"):
        if not res[need]:
            raise ConfigError(f"permute requires --{need}")
    corpus = load_dataset(res["dataset"], feature_dim=res["feature_dim"])
    pool = list(corpus.sentences.values())
    pool_ids = [s.sentence_id for s in pool]
    bank_path = res["word_bank"] or res["keyword_bank"]
    if not bank_path:
        raise ConfigError("permute needs --word-bank (or --keyword-bank)")
    word_bank = read_bank(bank_path)
    embedder = IdfMeanEmbedder(word_bank, [s.text for s in pool])
    pool_matrix = embed_pool(embedder, pool_ids, [s.text for s in pool])
    reconstructor = _make_reconstructor({**res, "k": res["retrieval_k"]}, pool)

    anchors = _read_anchor_file(res["anchors"])
    items = [(key, seq.lemmas()) for key, seq in sorted(anchors.items()) if seq.lemmas()]
    pool_pos = {sid: i for i, sid in enumerate(pool_ids)}
    gt_idx = [pool_pos[sid] for (sid, _), _ in items]

    def pipeline(anchor_lemmas, _mode=res["mode"]):
        rec = reconstructor.reconstruct("query", anchor_lemmas, _mode)
        return pool_matrix @ embedder.embed(rec.output)

    result = permutation_test([a for _, a in items], gt_idx, pipeline, len(pool_ids),
                              n_perm=res["n_perm"], seed=res["seed"], k=res["k"])
    out = _outdir(res["out"])
    with open(os.path.join(out, "permutation.json"), "w", encoding="utf-8") as fh:
        json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"permutation test: observed top-{res['k']} {result.observed:.4f}, "
          f"p = {result.p:.6f} ({res['n_perm']} permutations)")
    _snapshot(out, "permute", res)
    return 0


def cmd_report(args, filecfg):
    from .evalharness.report import _write_plot_data
    from .evalharness.plots import render_figures

    defaults = {"report": None, "out": None, "emit_plot_data": True}
    res = cfgmod.resolve(vars(args), filecfg, "report", defaults)
    if not res["report"] or not res["out"]:
        raise ConfigError("report requires --report and --out")
    with open(res["report"], encoding="utf-8") as fh:
        report = json.load(fh)
    out = _outdir(res["out"])
    render_figures(report, out)
    if res["emit_plot_data"]:
        _write_plot_data(report, out)
    print(f"re-rendered figures -> {out}")
    _snapshot(out, "report", res)
    return 0


# ----------------------------------------------------------------------
# parser wiring
# ----------------------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--config", default=None, help="INI config file")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--seed", type=int, default=None)


def build_parser():
    parser = CliParser(prog="anchorlab",
                       description="EEG-to-text anchor decoding pipeline")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("entropy", parents=[], help="information-scale table")
    _add_common(p)
    p.add_argument("--V", type=int, nargs="+", default=None)
    p.add_argument("--m", type=int, nargs="+", default=None)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--without-repetition", action="store_true", default=None)
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.set_defaults(func=cmd_entropy)

    p = subs.add_parser("synth-gen", help="generate a synthetic dataset")
    _add_common(p)
    p.add_argument("--vocab-size", type=int, default=None)
    p.add_argument("--bank-dim", type=int, default=None)
    p.add_argument("--feature-dim", type=int, default=None)
    p.add_argument("--snr-db", default=None)
    p.add_argument("--filler-rate", type=float, default=None)
    p.add_argument("--sentences", type=int, default=None)
    p.add_argument("--words-min", type=int, default=None)
    p.add_argument("--words-max", type=int, default=None)
    p.add_argument("--subjects", type=int, default=None)
    p.set_defaults(func=cmd_synth_gen)

    p = subs.add_parser("build-vocab", help="build the keyword vocabulary")
    _add_common(p)
    p.add_argument("--dataset", default=None)
    p.add_argument("--word-bank", default=None)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--min-freq", type=int, default=None)
    p.add_argument("--reserve-frac", type=float, default=None)
    p.add_argument("--feature-dim", type=int, default=None)
    p.add_argument("--root-map", default=None)
    p.add_argument("--stopwords", default=None)
    p.add_argument("--months", default=None)
    p.add_argument("--temporal", default=None)
    p.add_argument("--numerals", default=None)
    p.add_argument("--ordinals", default=None)
    p.add_argument("--quantificational", default=None)
    p.add_argument("--generational", default=None)
    p.add_argument("--min-token-len", type=int, default=None)
    p.add_argument("--keep-person-entities", action="store_true", default=None)
    p.set_defaults(func=cmd_build_vocab)

    p = subs.add_parser("train", help="train the EEG-to-keyword aligner")
    _add_common(p)
    p.add_argument("--dataset", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--keyword-bank", default=None)
    p.add_argument("--profile", choices=["paper", "compact"], default=None)
    p.add_argument("--feature-dim", type=int, default=None)
    p.add_argument("--max-positions", type=int, default=None)
    p.add_argument("--ratios", type=float, nargs=3, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--learnable-tau", action="store_true", default=None)
    p.add_argument("--aux-weight", type=float, default=None)
    p.add_argument("--model-dim", type=int, default=None)
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--heads", type=int, default=None)
    p.add_argument("--ffn-dim", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("decode", help="decode ordered anchor sequences")
    _add_common(p)
    p.add_argument("--dataset", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--keyword-bank", default=None)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--m", type=int, nargs="+", default=None)
    p.add_argument("--feature-dim", type=int, default=None)
    p.add_argument("--split", default=None, help="split manifest JSON")
    p.add_argument("--subset", choices=["train", "val", "test", "all"], default=None)
    p.set_defaults(func=cmd_decode)

    p = subs.add_parser("reconstruct", help="anchors -> sentences")
    _add_common(p)
    p.add_argument("--anchors", default=None)
    p.add_argument("--dataset", default=None)
    p.add_argument("--mode", choices=["naive", "cot", "rag", "cot_rag"], default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--feature-dim", type=int, default=None)
    p.add_argument("--remote", action="store_true", default=None)
    p.add_argument("--fallback", dest="remote", action="store_false", default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--top-p", type=float, default=None)
    p.add_argument("--repetition-penalty", type=float, default=None)
    p.add_argument("--max-tokens", type=int, default=None)
    p.add_argument("--concurrency", type=int, default=None)
    p.set_defaults(func=cmd_reconstruct)

    p = subs.add_parser("evaluate", help="condition suite or external scoring")
    _add_common(p)
    p.add_argument("--dataset", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--keyword-bank", default=None)
    p.add_argument("--word-bank", default=None)
    p.add_argument("--anchors-dir", default=None)
    p.add_argument("--reconstructions", default=None)
    p.add_argument("--feature-dim", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--ks", type=int, nargs="+", default=None)
    p.add_argument("--ms", type=int, nargs="+", default=None)
    p.add_argument("--modes", nargs="+", default=None)
    p.add_argument("--primary-m", type=int, default=None)
    p.add_argument("--primary-mode", default=None)
    p.add_argument("--emit-plot-data", action="store_true", default=None)
    p.add_argument("--no-figures", action="store_true", default=None)
    p.add_argument("--remote", action="store_true", default=None)
    p.add_argument("--fallback", dest="remote", action="store_false", default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--model", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("permute", help="anchor-assignment permutation test")
    _add_common(p)
    p.add_argument("--anchors", default=None)
    p.add_argument("--dataset", default=None)
    p.add_argument("--word-bank", default=None)
    p.add_argument("--keyword-bank", default=None)
    p.add_argument("--mode", choices=["naive", "cot", "rag", "cot_rag"], default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--n-perm", type=int, default=None)
    p.add_argument("--feature-dim", type=int, default=None)
    p.add_argument("--retrieval-k", type=int, default=None)
    p.set_defaults(func=cmd_permute)

    p = subs.add_parser("report", help="re-render figures from a report")
    _add_common(p)
    p.add_argument("--report", default=None)
    p.add_argument("--emit-plot-data", action="store_true", default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 1
    try:
        filecfg = cfgmod.load_config(args.config)
        return args.func(args, filecfg)
    except (ValidationError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EndpointError as exc:
        print(f"endpoint error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
