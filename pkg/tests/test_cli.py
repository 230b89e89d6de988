import json
import os

import pytest

from anchorlab.cli import main


def run(args):
    return main(args)


def test_entropy_table_values(capsys):
    assert run(["entropy", "--V", "100", "--m", "3", "5", "7", "--L", "20"]) == 0
    out = capsys.readouterr().out
    for value in ("19.93", "33.22", "46.51", "132.88"):
        assert value in out


def test_unknown_flag_exits_one(capsys):
    assert run(["entropy", "--nonsense"]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand_exits_one():
    assert run(["frobnicate"]) == 1


def test_missing_required_inputs_exit_one(tmp_path):
    assert run(["build-vocab", "--out", str(tmp_path)]) == 1


def test_missing_dataset_file_exit_one(tmp_path):
    code = run(["build-vocab", "--dataset", str(tmp_path / "nope.jsonl"),
                "--word-bank", str(tmp_path / "nope.embk"),
                "--out", str(tmp_path)])
    assert code == 1


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """synth-gen -> train -> decode, shared by downstream CLI tests."""
    root = tmp_path_factory.mktemp("cli_pipeline")
    data = os.path.join(root, "data")
    assert run(["synth-gen", "--out", data, "--vocab-size", "8", "--bank-dim", "16",
                "--feature-dim", "12", "--sentences", "40", "--words-min", "4",
                "--words-max", "7", "--snr-db", "inf", "--seed", "0"]) == 0
    train_dir = os.path.join(root, "train")
    assert run(["train", "--dataset", f"{data}/dataset.jsonl",
                "--vocab", f"{data}/vocab.txt",
                "--keyword-bank", f"{data}/keyword_bank.embk",
                "--out", train_dir, "--profile", "compact", "--feature-dim", "12",
                "--model-dim", "16", "--heads", "2", "--ffn-dim", "24",
                "--epochs", "8", "--lr", "2e-3", "--batch-size", "8",
                "--seed", "0"]) == 0
    decode_dir = os.path.join(root, "decode")
    assert run(["decode", "--dataset", f"{data}/dataset.jsonl",
                "--vocab", f"{data}/vocab.txt",
                "--keyword-bank", f"{data}/keyword_bank.embk",
                "--checkpoint", f"{train_dir}/checkpoint.bclm",
                "--m", "3", "5", "--feature-dim", "12",
                "--split", f"{train_dir}/split.json", "--subset", "test",
                "--out", decode_dir]) == 0
    decode_all = os.path.join(root, "decode_all")
    assert run(["decode", "--dataset", f"{data}/dataset.jsonl",
                "--vocab", f"{data}/vocab.txt",
                "--keyword-bank", f"{data}/keyword_bank.embk",
                "--checkpoint", f"{train_dir}/checkpoint.bclm",
                "--m", "5", "--feature-dim", "12", "--subset", "all",
                "--out", decode_all]) == 0
    return {"root": root, "data": data, "train": train_dir, "decode": decode_dir,
            "decode_all": decode_all}


def test_synth_gen_outputs(pipeline_dir):
    data = pipeline_dir["data"]
    for name in ("dataset.jsonl", "synth_spec.json", "keyword_bank.embk",
                 "vocab.txt", "run_config.ini"):
        assert os.path.exists(os.path.join(data, name)), name


def test_train_outputs(pipeline_dir):
    train_dir = pipeline_dir["train"]
    for name in ("checkpoint.bclm", "training_log.csv", "split.json", "run_config.ini"):
        assert os.path.exists(os.path.join(train_dir, name)), name
    header = open(os.path.join(train_dir, "training_log.csv")).readline().strip()
    assert header == "epoch,train_loss,val_loss,val_top1,val_top5"


def test_decode_outputs_and_determinism(pipeline_dir, tmp_path):
    decode_dir = pipeline_dir["decode"]
    a3 = os.path.join(decode_dir, "anchors_m3.jsonl")
    assert os.path.exists(a3)
    first = json.loads(open(a3).readline())
    assert first["m_requested"] == 3
    assert len(first["entries"]) <= 3
    # rerun into a fresh directory: byte-identical decode output
    rerun = str(tmp_path / "decode2")
    assert run(["decode", "--dataset", f"{pipeline_dir['data']}/dataset.jsonl",
                "--vocab", f"{pipeline_dir['data']}/vocab.txt",
                "--keyword-bank", f"{pipeline_dir['data']}/keyword_bank.embk",
                "--checkpoint", f"{pipeline_dir['train']}/checkpoint.bclm",
                "--m", "3", "--feature-dim", "12",
                "--split", f"{pipeline_dir['train']}/split.json", "--subset", "test",
                "--out", rerun]) == 0
    assert open(a3, "rb").read() == open(os.path.join(rerun, "anchors_m3.jsonl"), "rb").read()


def test_reconstruct_fallback(pipeline_dir, tmp_path):
    out = str(tmp_path / "recon")
    assert run(["reconstruct", "--anchors",
                f"{pipeline_dir['decode']}/anchors_m5.jsonl",
                "--dataset", f"{pipeline_dir['data']}/dataset.jsonl",
                "--feature-dim", "12", "--mode", "cot_rag", "--out", out]) == 0
    lines = open(os.path.join(out, "reconstructions.jsonl")).read().splitlines()
    assert lines
    rec = json.loads(lines[0])
    assert rec["provenance"] == "fallback"
    assert rec["mode"] == "cot_rag"


def test_evaluate_suite_and_reports(pipeline_dir, tmp_path):
    out = str(tmp_path / "eval")
    assert run(["evaluate", "--dataset", f"{pipeline_dir['data']}/dataset.jsonl",
                "--vocab", f"{pipeline_dir['data']}/vocab.txt",
                "--keyword-bank", f"{pipeline_dir['data']}/keyword_bank.embk",
                "--anchors-dir", pipeline_dir["decode"], "--ms", "3", "5",
                "--ks", "5", "10", "--primary-m", "5", "--feature-dim", "12",
                "--emit-plot-data", "--out", out]) == 0
    report = json.load(open(os.path.join(out, "report.json")))
    assert report["schema_version"] == 1
    for cell in report["cells"]:
        if cell["pooled"]:
            ks = sorted(int(k) for k in cell["pooled"]["top_k"])
            accs = [cell["pooled"]["top_k"][str(k)] for k in ks]
            assert accs == sorted(accs)
    for name in ("fig_retrieval_vs_k.png", "curve_accuracy_vs_k.csv", "retrieval.csv"):
        assert os.path.exists(os.path.join(out, name))


def test_evaluate_external_records(pipeline_dir, tmp_path):
    corpus_lines = open(f"{pipeline_dir['data']}/dataset.jsonl").read().splitlines()
    sentences = [json.loads(l) for l in corpus_lines if "tokens" in json.loads(l)]
    recs = tmp_path / "external.jsonl"
    with open(recs, "w") as fh:
        for s in sentences[:6]:
            fh.write(json.dumps({"sentence_id": s["sentence_id"], "output": s["text"]}) + "\n")
    out = str(tmp_path / "ext")
    assert run(["evaluate", "--dataset", f"{pipeline_dir['data']}/dataset.jsonl",
                "--keyword-bank", f"{pipeline_dir['data']}/keyword_bank.embk",
                "--reconstructions", str(recs), "--feature-dim", "12",
                "--out", out]) == 0
    report = json.load(open(os.path.join(out, "report.json")))
    assert report["n"] == 6
    assert report["metrics"]["top_k"]["5"] == 1.0


def test_permute_subcommand(pipeline_dir, tmp_path):
    out = str(tmp_path / "perm")
    assert run(["permute", "--anchors", f"{pipeline_dir['decode_all']}/anchors_m5.jsonl",
                "--dataset", f"{pipeline_dir['data']}/dataset.jsonl",
                "--keyword-bank", f"{pipeline_dir['data']}/keyword_bank.embk",
                "--feature-dim", "12", "--n-perm", "120", "--k", "5",
                "--out", out]) == 0
    result = json.load(open(os.path.join(out, "permutation.json")))
    assert 0 < result["p"] <= 1
    assert result["n_perm"] == 120


def test_build_vocab_on_fixture(tmp_path, vocab_corpus_path, vocab_bank_path):
    out = str(tmp_path / "vocab")
    assert run(["build-vocab", "--dataset", vocab_corpus_path,
                "--word-bank", vocab_bank_path, "--size", "5", "--min-freq", "2",
                "--out", out]) == 0
    lines = open(os.path.join(out, "vocab.txt")).read().splitlines()
    assert lines[-5:] == ["film", "director", "story", "ocean", "whale"]
    assert os.path.exists(os.path.join(out, "vocab_audit.json"))


def test_config_file_supplies_flags(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[entropy]\nV = 100\nm = 3 5 7\nL = 20\n", encoding="utf-8")
    out = str(tmp_path / "ent")
    assert run(["entropy", "--config", str(cfg), "--out", out]) == 0
    text = open(os.path.join(out, "entropy.csv")).read()
    assert "19.93" in text and "132.88" in text
    snapshot = open(os.path.join(out, "run_config.ini")).read()
    assert "[entropy]" in snapshot


def test_report_rerender(pipeline_dir, tmp_path):
    # render an evaluation first
    eval_out = str(tmp_path / "eval")
    assert run(["evaluate", "--dataset", f"{pipeline_dir['data']}/dataset.jsonl",
                "--vocab", f"{pipeline_dir['data']}/vocab.txt",
                "--keyword-bank", f"{pipeline_dir['data']}/keyword_bank.embk",
                "--anchors-dir", pipeline_dir["decode"], "--ms", "3", "5",
                "--ks", "5", "10", "--primary-m", "5", "--feature-dim", "12",
                "--no-figures", "--out", eval_out]) == 0
    assert not os.path.exists(os.path.join(eval_out, "fig_retrieval_vs_k.png"))
    re_out = str(tmp_path / "figs")
    assert run(["report", "--report", os.path.join(eval_out, "report.json"),
                "--out", re_out]) == 0
    assert os.path.exists(os.path.join(re_out, "fig_retrieval_vs_k.png"))
    assert os.path.exists(os.path.join(re_out, "curve_accuracy_vs_m.csv"))
