import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from anchorlab.errors import ConfigError, EndpointError, ValidationError
from anchorlab.reconstruct import (
    ChatCompletionClient,
    GenerationParams,
    PromptSpec,
    Reconstructor,
    build_prompt,
    first_sentence,
    read_records,
    write_records,
)
from anchorlab.retrieval import build_index, content_lemmas

from conftest import make_sentence


@pytest.fixture()
def pool():
    return [
        make_sentence("p1", [("athlete", "NOUN"), ("win", "VERB"), ("medal", "NOUN")],
                      text="The athlete wins a gold medal."),
        make_sentence("p2", [("president", "NOUN"), ("serve", "VERB"), ("term", "NOUN")],
                      text="The president serves a second term."),
        make_sentence("p3", [("whale", "NOUN"), ("swim", "VERB"), ("ocean", "NOUN")],
                      text="A whale swims across the ocean."),
    ]


@pytest.fixture()
def index(pool):
    return build_index(pool)


class TestPrompts:
    def test_anchor_fidelity_and_order(self):
        anchors = ("win", "medal", "president")
        for mode, refs in [("naive", ()), ("cot", ()), ("rag", ("Ref one.",)),
                           ("cot_rag", ("Ref one.",))]:
            text, _ = build_prompt(PromptSpec(mode=mode, anchors=anchors, references=refs))
            last = -1
            for anchor in anchors:
                idx = text.find(anchor, last + 1)
                assert idx > last, f"{anchor} missing or out of order in {mode}"
                last = idx

    def test_single_sentence_instruction_everywhere(self):
        for mode, refs in [("naive", ()), ("cot", ()), ("rag", ("r",)), ("cot_rag", ("r",))]:
            text, _ = build_prompt(PromptSpec(mode=mode, anchors=("a",), references=refs))
            assert "exactly one sentence" in text

    def test_cot_rag_numbered_references_and_plan(self):
        refs = ("First ref.", "Second ref.", "Third ref.")
        text, template_id = build_prompt(
            PromptSpec(mode="cot_rag", anchors=("x",), references=refs)
        )
        for i, ref in enumerate(refs, start=1):
            assert f"{i}. {ref}" in text
        assert "plan" in text.lower()
        assert template_id == "cot_rag_v1"

    def test_naive_with_references_rejected(self):
        with pytest.raises(ConfigError, match="must not carry references"):
            build_prompt(PromptSpec(mode="naive", anchors=("a",), references=("r",)))

    def test_empty_anchors_rejected(self):
        with pytest.raises(ValidationError, match="empty anchor"):
            build_prompt(PromptSpec(mode="naive", anchors=()))


class TestFirstSentence:
    def test_multi_sentence_truncated(self):
        assert first_sentence("A. B.") == "A."

    def test_quotes_stripped(self):
        assert first_sentence('"The whale swims." And more.') == "The whale swims."

    def test_no_terminator_passthrough(self):
        assert first_sentence("  no punctuation here  ") == "no punctuation here"

    def test_exclamation_and_question(self):
        assert first_sentence("Really? Yes.") == "Really?"
        assert first_sentence("Wow! Indeed.") == "Wow!"


class TestFallback:
    def test_cot_rag_returns_top_retrieved(self, pool, index):
        rec = Reconstructor(index=index).reconstruct(
            "p3", content_lemmas(pool[2]), "cot_rag"
        )
        assert rec.output == "A whale swims across the ocean."
        assert rec.provenance == "fallback"
        assert rec.retrieved_ids[0] == "p3"

    def test_naive_joins_anchors(self, index):
        rec = Reconstructor(index=index).reconstruct("x", ["win", "medal"], "naive")
        assert rec.output == "The sentence mentions win and medal."
        assert rec.retrieved_ids == []

    def test_identical_inputs_identical_bytes(self, tmp_path, index):
        recs1 = [Reconstructor(index=index).reconstruct("p1", ["athlete", "win"], "rag")]
        recs2 = [Reconstructor(index=index).reconstruct("p1", ["athlete", "win"], "rag")]
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_records(a, recs1)
        write_records(b, recs2)
        assert a.read_bytes() == b.read_bytes()

    def test_empty_anchors_error(self, index):
        with pytest.raises(ValidationError, match="empty anchor"):
            Reconstructor(index=index).reconstruct("p1", [], "naive")

    def test_retrieval_mode_without_index(self):
        with pytest.raises(ConfigError, match="retrieval index"):
            Reconstructor(index=None).reconstruct("p1", ["a"], "rag")

    def test_records_round_trip(self, tmp_path, index):
        recs = [
            Reconstructor(index=index).reconstruct("p1", ["athlete"], "cot"),
            Reconstructor(index=index).reconstruct("p2", ["president"], "cot_rag"),
        ]
        path = tmp_path / "r.jsonl"
        write_records(path, recs)
        loaded = read_records(path)
        assert [r.to_dict() for r in loaded] == [r.to_dict() for r in recs]

    def test_reconstruct_many_order_stable(self, pool, index):
        items = [(s.sentence_id, content_lemmas(s)) for s in pool]
        seq = Reconstructor(index=index).reconstruct_many(items, "rag", concurrency=1)
        par = Reconstructor(index=index).reconstruct_many(items, "rag", concurrency=4)
        assert [r.to_dict() for r in seq] == [r.to_dict() for r in par]


class _RecordingHandler(BaseHTTPRequestHandler):
    requests = []
    reply = {"choices": [{"message": {"content": "One sentence. Two sentences."}}]}
    status = 200

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        _RecordingHandler.requests.append(
            {"path": self.path, "body": body, "auth": self.headers.get("Authorization")}
        )
        payload = json.dumps(self.reply).encode()
        self.send_response(self.status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def mock_endpoint():
    _RecordingHandler.requests = []
    _RecordingHandler.status = 200
    server = HTTPServer(("127.0.0.1", 0), _RecordingHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions", _RecordingHandler
    server.shutdown()


class TestRemote:
    def test_protocol_fidelity(self, index, mock_endpoint):
        url, handler = mock_endpoint
        client = ChatCompletionClient(url, model="llama-2-7b-chat", api_key="secret")
        rec = Reconstructor(index=index, client=client).reconstruct(
            "p1", ["athlete", "win", "medal"], "cot_rag"
        )
        assert len(handler.requests) == 1
        body = handler.requests[0]["body"]
        assert body["temperature"] == 0.7
        assert body["top_p"] == 0.9
        assert body["repetition_penalty"] == 1.2
        assert body["max_tokens"] == 100
        assert body["model"] == "llama-2-7b-chat"
        assert body["messages"][0]["role"] == "user"
        assert "athlete" in body["messages"][0]["content"]
        assert handler.requests[0]["auth"] == "Bearer secret"
        assert rec.output == "One sentence."
        assert rec.provenance == "remote"
        assert rec.raw_response is not None

    def test_repetition_penalty_dropped_when_unsupported(self, index, mock_endpoint):
        url, handler = mock_endpoint
        client = ChatCompletionClient(url, supports_repetition_penalty=False)
        Reconstructor(index=index, client=client).reconstruct("p1", ["athlete"], "naive")
        assert "repetition_penalty" not in handler.requests[0]["body"]

    def test_endpoint_failure_carries_status(self, index, mock_endpoint):
        url, handler = mock_endpoint
        handler.status = 503
        client = ChatCompletionClient(url, max_retries=2, backoff=0.0)
        with pytest.raises(EndpointError) as excinfo:
            Reconstructor(index=index, client=client).reconstruct("p1", ["a"], "naive")
        assert excinfo.value.status == 503
        assert len(handler.requests) == 2

    def test_missing_url_is_config_error(self):
        with pytest.raises(ConfigError, match="endpoint URL"):
            ChatCompletionClient(None)


def test_generation_params_defaults_match_protocol():
    params = GenerationParams()
    assert params.to_dict() == {
        "temperature": 0.7,
        "top_p": 0.9,
        "repetition_penalty": 1.2,
        "max_tokens": 100,
    }
