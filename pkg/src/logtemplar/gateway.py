"""Prompt construction, the chat-completion client, and a deterministic mock.

The model must answer with exactly two tagged lines:

    TEMPLATE: [DATE] [IP] <GET> [RESOURCE] [STATUS] [LATENCY]
    WORDS: 2024-11-14 192.168.1.1 GET /index.html 200 123ms

TEMPLATE carries the prediction, WORDS the echoed input; the echo is what
makes the consistency check meaningful. The mock gateway answers from a
ground-truth table and injects the two hallucination classes seen in
practice: dropping words from the echo (generation error) and leaving a
variable unlabeled in the template (word error).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
import re
import threading
import time
from dataclasses import dataclass

from .confidence import Prediction
from .demonstration import DemoSet
from .embedding import SimilarityContext
from .errors import GatewayError, ResponseParseError
from .model import (
    LogRecord,
    Template,
    TokenKind,
    TypeCatalog,
    keyword,
    parse_template,
)

_TEMPLATE_LINE = re.compile(r"^\s*TEMPLATE\s*:\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE)
_WORDS_LINE = re.compile(r"^\s*WORDS\s*:\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE)


@dataclass(frozen=True)
class PromptBundle:
    """Instruction, demonstrations, and the query log, in that order."""

    instruction: str
    demonstrations: tuple[tuple[str, str], ...]
    query_log: str
    uncovered_note: tuple[str, ...] = ()
    target_id: int = -1

    def render(self) -> str:
        parts = [self.instruction, ""]
        for log_text, template_text in self.demonstrations:
            parts.append(f"LOG: {log_text}")
            parts.append(f"TEMPLATE: {template_text}")
            parts.append(f"WORDS: {log_text}")
            parts.append("")
        if self.uncovered_note:
            listed = ", ".join(self.uncovered_note)
            parts.append(f"Note: no example covers these words: {listed}. Label them with care.")
            parts.append("")
        parts.append(f"LOG: {self.query_log}")
        return "\n".join(parts)

    def token_count(self) -> int:
        return len(self.render().split())


@dataclass
class FaultProfile:
    """Deterministic hallucination injection for the mock gateway.

    generation_error_rate: chance the echoed words are mangled.
    word_error_rate: chance an unseen variable stays raw in the template.
    unseen_keyword_prob_penalty: probability assigned to tokens whose word
    never appears (even approximately) in the demonstrations.
    All behavior is a pure function of (seed, log id).
    """

    generation_error_rate: float = 0.0
    word_error_rate: float = 0.0
    unseen_keyword_prob_penalty: float = 0.5
    seed: int = 0

    def rng_for(self, log_id: int) -> random.Random:
        digest = hashlib.blake2b(
            f"{self.seed}:{log_id}".encode("utf-8"), digest_size=8
        ).digest()
        return random.Random(int.from_bytes(digest, "big"))


@dataclass
class GatewayConfig:
    """Wire settings for a remote gateway, or the mock switch."""

    kind: str = "mock"  # "mock" | "remote"
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    want_logprobs: bool = True
    max_retries: int = 3
    retry_backoff: float = 0.5
    concurrency: int = 8
    api_key_env: str = "LLM_API_KEY"
    transcript_path: str | None = None
    replay: bool = False
    timeout: float = 60.0


def build_prompt(target: LogRecord, demos: DemoSet, catalog: TypeCatalog) -> PromptBundle:
    """Render the instruction, the demos in selection order, and the query."""
    types = ", ".join(f"[{t}]" for t in sorted(catalog.types))
    instruction = (
        "You convert raw system logs into templates. For each word of the log, "
        f"output either a word type from this list: {types}, or the word itself "
        "as a keyword in angle brackets, e.g. <POST>.\n"
        "Answer with exactly two lines:\n"
        "TEMPLATE: the template, one token per input word\n"
        "WORDS: the input words, space separated, unchanged"
    )
    rendered = tuple(
        (log.text, tmpl.render()) for log, tmpl in demos.demos
    )
    return PromptBundle(
        instruction=instruction,
        demonstrations=rendered,
        query_log=target.text,
        uncovered_note=tuple(sorted(demos.uncovered)),
        target_id=target.id,
    )


def parse_response(text: str, catalog: TypeCatalog) -> tuple[Template, tuple[str, ...]]:
    """Extract the TEMPLATE and WORDS lines; surrounding prose is ignored."""
    tmpl_match = _TEMPLATE_LINE.search(text)
    words_match = _WORDS_LINE.search(text)
    if tmpl_match is None:
        raise ResponseParseError("missing TEMPLATE line")
    if words_match is None:
        raise ResponseParseError("missing WORDS line")
    try:
        template = parse_template(tmpl_match.group(1), catalog)
    except Exception as exc:
        raise ResponseParseError(f"bad template: {exc}") from exc
    words = tuple(words_match.group(1).split())
    return template, words


class MockGateway:
    """Answers from ground truth, with seeded fault injection.

    Token probability is 1.0 for words that appear (or have a similar word)
    in the demonstrations and the configured penalty otherwise, mimicking a
    model that is unsure about words it has never seen labeled.
    """

    def __init__(
        self,
        ground_truth: dict[int, Template],
        catalog: TypeCatalog,
        ctx: SimilarityContext,
        profile: FaultProfile | None = None,
    ):
        self.ground_truth = ground_truth
        self.catalog = catalog
        self.ctx = ctx
        self.profile = profile or FaultProfile()
        self.total_prompt_tokens = 0
        self.call_count = 0

    def _word_seen(self, word: str, demo_words: set[str]) -> bool:
        if word in demo_words:
            return True
        return any(self.ctx.similar(word, dw) for dw in demo_words)

    def infer(self, prompt: PromptBundle, round_index: int = 0) -> Prediction:
        del round_index  # mock answers do not depend on the round
        log_id = prompt.target_id
        truth = self.ground_truth.get(log_id)
        if truth is None:
            raise GatewayError(f"mock has no ground truth for log {log_id}")
        self.total_prompt_tokens += prompt.token_count()
        self.call_count += 1

        words = tuple(prompt.query_log.split())
        demo_words: set[str] = set()
        for log_text, _tmpl in prompt.demonstrations:
            demo_words.update(log_text.split())

        rng = self.profile.rng_for(log_id)
        # Fixed draw order keeps each fault decision stable across rounds.
        gen_fires = rng.random() < self.profile.generation_error_rate
        word_fires = rng.random() < self.profile.word_error_rate
        drop_len = rng.randint(1, 2)

        tokens = list(truth.tokens)
        seen = [self._word_seen(w, demo_words) for w in words]
        probs = [1.0 if s else self.profile.unseen_keyword_prob_penalty for s in seen]

        if word_fires:
            for i, tok in enumerate(tokens):
                if tok.kind is TokenKind.PLACEHOLDER and i < len(seen) and not seen[i]:
                    tokens[i] = keyword(words[i])
                    break

        out_words = list(words)
        if gen_fires:
            if len(out_words) >= 2:
                cut = len(out_words) - min(drop_len, len(out_words) - 1)
                out_words = out_words[:cut]
                tokens = tokens[:cut]
                probs = probs[:cut]
            else:
                out_words = out_words + [out_words[0]]

        template = Template(tokens=tuple(tokens))
        response = f"TEMPLATE: {template.render()}\nWORDS: {' '.join(out_words)}"
        parsed_template, parsed_words = parse_response(response, self.catalog)
        return Prediction(
            log_id=log_id,
            template=parsed_template,
            regenerated_words=parsed_words,
            word_probs=tuple(probs),
            raw_response=response,
        )


class TranscriptStore:
    """JSON-lines record/replay of remote exchanges, keyed by (log id, round)."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()

    def record(self, log_id: int, round_index: int, request: dict, response: dict) -> None:
        line = json.dumps(
            {"log_id": log_id, "round": round_index, "request": request, "response": response},
            sort_keys=True,
        )
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def load(self) -> dict[tuple[int, int], dict]:
        table: dict[tuple[int, int], dict] = {}
        with open(self.path, encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw:
                    continue
                entry = json.loads(raw)
                table[(entry["log_id"], entry["round"])] = entry["response"]
        return table


def aggregate_word_probs(
    content: str, logprob_items: list[dict]
) -> tuple[float, ...] | None:
    """Fold sub-token log-probabilities into one probability per TEMPLATE word.

    Sub-tokens are aligned to the template line by character span; each
    word's probability is the geometric mean of its overlapping sub-tokens.
    Returns None when alignment fails (caller treats probabilities as absent).
    """
    match = _TEMPLATE_LINE.search(content)
    if match is None or not logprob_items:
        return None
    line_start, line_end = match.start(1), match.end(1)

    spans: list[tuple[int, int, float]] = []
    offset = 0
    for item in logprob_items:
        token = item.get("token", "")
        logprob = float(item.get("logprob", 0.0))
        spans.append((offset, offset + len(token), logprob))
        offset += len(token)

    probs: list[float] = []
    cursor = line_start
    for word in match.group(1).split():
        w_start = content.find(word, cursor, line_end)
        if w_start < 0:
            return None
        w_end = w_start + len(word)
        cursor = w_end
        overlapping = [lp for (s, e, lp) in spans if s < w_end and e > w_start]
        if not overlapping:
            return None
        probs.append(math.exp(sum(overlapping) / len(overlapping)))
    return tuple(probs)


class RemoteGateway:
    """OpenAI-compatible chat-completions client with transcript capture.

    In replay mode no network is touched: responses come from the transcript
    file, so recorded runs reproduce bit-exactly in CI.
    """

    def __init__(self, config: GatewayConfig, catalog: TypeCatalog):
        self.config = config
        self.catalog = catalog
        self.total_prompt_tokens = 0
        self.call_count = 0
        self._store = TranscriptStore(config.transcript_path) if config.transcript_path else None
        self._replay_table: dict[tuple[int, int], dict] | None = None
        if config.replay:
            if self._store is None:
                raise GatewayError("replay requested without a transcript path")
            self._replay_table = self._store.load()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _request_body(self, prompt: PromptBundle) -> dict:
        return {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt.render()}],
            "temperature": self.config.temperature,
            "logprobs": self.config.want_logprobs,
        }

    def _post(self, body: dict) -> dict:
        import requests

        last_error: Exception | None = None
        for attempt in range(self.config.max_retries):
            try:
                resp = requests.post(
                    f"{self.config.endpoint.rstrip('/')}/chat/completions",
                    json=body,
                    headers=self._headers(),
                    timeout=self.config.timeout,
                )
                resp.raise_for_status()
                return resp.json()
            except Exception as exc:  # noqa: BLE001
                last_error = exc
                if attempt + 1 < self.config.max_retries:
                    time.sleep(self.config.retry_backoff * (2**attempt))
        raise GatewayError(f"chat completion failed: {last_error}")

    def infer(self, prompt: PromptBundle, round_index: int = 0) -> Prediction:
        self.total_prompt_tokens += prompt.token_count()
        self.call_count += 1
        body = self._request_body(prompt)
        if self._replay_table is not None:
            response = self._replay_table.get((prompt.target_id, round_index))
            if response is None:
                raise GatewayError(
                    f"transcript has no entry for log {prompt.target_id} round {round_index}"
                )
        else:
            response = self._post(body)
            if self._store is not None:
                self._store.record(prompt.target_id, round_index, body, response)
        return self._prediction_from_response(prompt.target_id, response)

    def _prediction_from_response(self, log_id: int, response: dict) -> Prediction:
        try:
            choice = response["choices"][0]
            content = choice["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise GatewayError(f"malformed completion payload: {exc}") from exc
        try:
            template, words = parse_response(content, self.catalog)
        except ResponseParseError:
            return Prediction(
                log_id=log_id,
                template=None,
                regenerated_words=(),
                word_probs=None,
                raw_response=content,
            )
        logprob_content = ((choice.get("logprobs") or {}).get("content")) or []
        probs = aggregate_word_probs(content, logprob_content)
        if probs is not None and len(probs) != len(template.tokens):
            probs = None
        return Prediction(
            log_id=log_id,
            template=template,
            regenerated_words=words,
            word_probs=probs,
            raw_response=content,
        )


Gateway = MockGateway | RemoteGateway


def failed_prediction(log_id: int, reason: str) -> Prediction:
    """Placeholder for a log whose gateway call failed outright."""
    return Prediction(
        log_id=log_id,
        template=None,
        regenerated_words=(),
        word_probs=None,
        raw_response=f"<gateway error: {reason}>",
    )
