"""Anchor-to-sentence reconstruction via a chat endpoint or offline fallback.

Prompts come from versioned template files with {anchors} and {references}
placeholders; every template demands anchor fidelity, minimal unsupported
additions, and a single-sentence answer. The remote path talks to any
OpenAI-compatible chat-completion endpoint; the fallback path is fully
deterministic and needs no network: it returns the top retrieved sentence
for retrieval modes and a fixed template sentence otherwise.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import requests

from .errors import ConfigError, EndpointError, ValidationError
from .retrieval import retrieve

log = logging.getLogger(__name__)

MODES = ("naive", "cot", "rag", "cot_rag")
RETRIEVAL_MODES = ("rag", "cot_rag")

ENV_URL = "ANCHORLAB_LLM_URL"
ENV_KEY = "ANCHORLAB_LLM_KEY"

_SENTENCE_TERMINATORS = ".!?"


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.7
    top_p: float = 0.9
    repetition_penalty: float = 1.2
    max_tokens: int = 100

    def to_dict(self):
        return {
            "temperature": self.temperature,
            "top_p": self.top_p,
            "repetition_penalty": self.repetition_penalty,
            "max_tokens": self.max_tokens,
        }


@dataclass(frozen=True)
class PromptSpec:
    mode: str
    anchors: tuple
    references: tuple = ()
    template_id: str = ""

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown reconstruction mode {self.mode!r}")
        if self.mode not in RETRIEVAL_MODES and self.references:
            raise ConfigError(f"mode {self.mode!r} must not carry references")
        if not self.anchors:
            raise ValidationError("cannot build a prompt from an empty anchor list")


@dataclass
class ReconstructionRecord:
    sentence_id: str
    mode: str
    anchors: list
    retrieved_ids: list
    output: str
    provenance: str  # "remote" | "fallback"
    template_id: str
    raw_response: str | None = None

    def to_dict(self):
        return {
            "sentence_id": self.sentence_id,
            "mode": self.mode,
            "anchors": self.anchors,
            "retrieved_ids": self.retrieved_ids,
            "output": self.output,
            "provenance": self.provenance,
            "template_id": self.template_id,
            "raw_response": self.raw_response,
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(
            sentence_id=obj["sentence_id"],
            mode=obj.get("mode", "external"),
            anchors=list(obj.get("anchors", [])),
            retrieved_ids=list(obj.get("retrieved_ids", [])),
            output=obj["output"],
            provenance=obj.get("provenance", "external"),
            template_id=obj.get("template_id", ""),
            raw_response=obj.get("raw_response"),
        )


def write_records(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def read_records(path):
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(ReconstructionRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad reconstruction record ({exc})")
    return records


def default_template_dir():
    return resources.files("anchorlab").joinpath("data", "templates")


def load_template(mode, template_dir=None, version="v1"):
    name = f"{mode}_{version}.txt"
    if template_dir is None:
        text = default_template_dir().joinpath(name).read_text(encoding="utf-8")
    else:
        with open(f"{template_dir}/{name}", encoding="utf-8") as fh:
            text = fh.read()
    return text, f"{mode}_{version}"


def build_prompt(spec: PromptSpec, template_dir=None, version="v1"):
    """Render the prompt for one anchor sequence; returns (text, template_id)."""
    spec.validate()
    template, template_id = load_template(spec.mode, template_dir, version)
    anchors_line = ", ".join(spec.anchors)
    references_block = "\n".join(
        f"{i}. {text}" for i, text in enumerate(spec.references, start=1)
    )
    text = template.replace("{anchors}", anchors_line).replace(
        "{references}", references_block
    )
    return text, template_id


def first_sentence(text):
    """Trim, strip wrapping quotes, and cut at the first sentence terminator."""
    cleaned = text.strip().strip('"“”‘’' + "'").strip()
    for i, ch in enumerate(cleaned):
        if ch in _SENTENCE_TERMINATORS:
            return cleaned[: i + 1]
    return cleaned


class ChatCompletionClient:
    """Minimal OpenAI-compatible chat-completion client with bounded retries."""

    def __init__(self, url, model="llama-2-7b-chat", api_key=None, max_retries=3,
                 backoff=0.5, timeout=60.0, supports_repetition_penalty=True,
                 session=None):
        if not url:
            raise ConfigError(f"no endpoint URL; set {ENV_URL} or pass --endpoint")
        self.url = url
        self.model = model
        self.api_key = api_key
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self.supports_repetition_penalty = supports_repetition_penalty
        self.session = session or requests.Session()

    def complete(self, prompt, params: GenerationParams):
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
        }
        if self.supports_repetition_penalty:
            body["repetition_penalty"] = params.repetition_penalty
        else:
            log.warning("endpoint does not support repetition_penalty; dropping it")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_status = None
        last_err = None
        for attempt in range(self.max_retries):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = self.session.post(
                    self.url, json=body, headers=headers, timeout=self.timeout
                )
                last_status = resp.status_code
                if resp.status_code == 200:
                    payload = resp.json()
                    return payload["choices"][0]["message"]["content"], resp.text
                last_err = f"HTTP {resp.status_code}: {resp.text[:200]}"
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_err = repr(exc)
        raise EndpointError(
            f"chat endpoint failed after {self.max_retries} attempts: {last_err}",
            status=last_status,
        )


@dataclass
class Reconstructor:
    """Turns anchor sequences into single-sentence reconstructions.

    With `client=None` the deterministic offline fallback is used:
    retrieval modes return the top-1 retrieved pool sentence, other modes
    join the anchors into a fixed template sentence.
    """

    index: object = None  # RetrievalIndex, required for rag/cot_rag
    client: ChatCompletionClient | None = None
    params: GenerationParams = field(default_factory=GenerationParams)
    k: int = 5
    template_dir: str | None = None
    template_version: str = "v1"

    def reconstruct(self, sentence_id, anchors, mode) -> ReconstructionRecord:
        if not anchors:
            raise ValidationError(f"{sentence_id}: empty anchor list")
        if mode not in MODES:
            raise ConfigError(f"unknown reconstruction mode {mode!r}")

        retrieved_ids, references = [], []
        if mode in RETRIEVAL_MODES:
            if self.index is None:
                raise ConfigError(f"mode {mode!r} needs a retrieval index")
            hits = retrieve(self.index, list(anchors), self.k)
            retrieved_ids = [sid for sid, _, _ in hits]
            references = [text for _, text, _ in hits]

        spec = PromptSpec(
            mode=mode, anchors=tuple(anchors), references=tuple(references)
        )
        if self.client is None:
            spec.validate()
            _, template_id = load_template(mode, self.template_dir, self.template_version)
            if mode in RETRIEVAL_MODES:
                if not references:
                    raise ValidationError(f"{sentence_id}: retrieval returned nothing")
                output = references[0]
            else:
                output = _template_sentence(anchors)
            return ReconstructionRecord(
                sentence_id=sentence_id,
                mode=mode,
                anchors=list(anchors),
                retrieved_ids=retrieved_ids,
                output=output,
                provenance="fallback",
                template_id=template_id,
            )

        prompt, template_id = build_prompt(spec, self.template_dir, self.template_version)
        content, raw = self.client.complete(prompt, self.params)
        return ReconstructionRecord(
            sentence_id=sentence_id,
            mode=mode,
            anchors=list(anchors),
            retrieved_ids=retrieved_ids,
            output=first_sentence(content),
            provenance="remote",
            template_id=template_id,
            raw_response=raw,
        )

    def reconstruct_many(self, items, mode, concurrency=1):
        """Reconstruct (sentence_id, anchors) pairs; output order == input order."""
        if concurrency <= 1:
            return [self.reconstruct(sid, anchors, mode) for sid, anchors in items]
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            futures = [
                pool.submit(self.reconstruct, sid, anchors, mode) for sid, anchors in items
            ]
            return [f.result() for f in futures]


def _template_sentence(anchors):
    anchors = list(anchors)
    if len(anchors) == 1:
        body = anchors[0]
    else:
        body = ", ".join(anchors[:-1]) + " and " + anchors[-1]
    return f"The sentence mentions {body}."
