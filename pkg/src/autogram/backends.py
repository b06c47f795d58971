"""Model backends: the abstract contract, a deterministic scripted backend
for tests and offline runs, and an HTTP chat-completions backend.

``classify`` restricts answers hard: whatever the backend produces, the
returned index is always within [0, num_choices); out-of-range or garbage
answers map to 0 with a logged warning.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass

from .errors import (
    BackendUnavailable,
    HttpError,
    MalformedResponse,
    RequestTimeout,
    ScriptExhausted,
    TooManyChoices,
)
from .model import MAX_CHOICES, BackendSettings
from .prompts import LETTERS, ChatPrompt, ClassifierPrompt

log = logging.getLogger(__name__)


class LlmBackend:
    """Contract: deterministic for scripted implementations; ``classify`` may
    return a raw out-of-range index, callers clamp it."""

    def generate(self, prompt: ChatPrompt) -> str:
        raise NotImplementedError

    def classify(self, prompt: ClassifierPrompt) -> int:
        raise NotImplementedError


@dataclass
class GeneratedReply:
    text: str  # user-visible
    recorded: str  # stored in the turn record


def generate(backend: LlmBackend, prompt: ChatPrompt) -> GeneratedReply:
    raw = backend.generate(prompt)
    if prompt.start_type == "prefix" and prompt.reply_start:
        return GeneratedReply(text=raw, recorded=f"{prompt.reply_start} {raw}")
    return GeneratedReply(text=raw, recorded=raw)


def classify(backend: LlmBackend, history: str, mc: str, num_choices: int) -> int:
    if num_choices < 2:
        raise ValueError("classification needs at least two choices")
    if num_choices > MAX_CHOICES:
        raise TooManyChoices(
            f"{num_choices} choices; the classifier supports at most {MAX_CHOICES}"
        )
    prompt = ClassifierPrompt(history_text=history, mc_text=mc, num_choices=num_choices)
    raw = backend.classify(prompt)
    if not isinstance(raw, int) or not (0 <= raw < num_choices):
        log.warning(
            "classifier answer %r out of range for %d choices; using choice 0",
            raw,
            num_choices,
        )
        return 0
    return raw


def parse_answer_letter(answer: str) -> int:
    """Map a raw textual answer to an index; -1 when unparseable."""
    text = answer.strip()
    if not text:
        return -1
    first = text[0].upper()
    if first in LETTERS:
        return LETTERS.index(first)
    return -1


class ScriptedBackend(LlmBackend):
    """Replays queued responses and answers in order. Pattern rules, when
    given, take precedence and do not consume the queues: the first rule
    whose regex matches the rendered prompt wins."""

    def __init__(
        self,
        responses: list[str] | None = None,
        answers: list | None = None,
        rules: list[tuple[str, str]] | None = None,
        answer_rules: list[tuple[str, str]] | None = None,
        strict: bool = True,
    ):
        self.responses = list(responses or [])
        self.answers = list(answers or [])
        self.rules = list(rules or [])
        self.answer_rules = list(answer_rules or [])
        self.strict = strict

    @classmethod
    def from_fixture(cls, doc: dict) -> "ScriptedBackend":
        return cls(
            responses=list(doc.get("responses", [])),
            answers=list(doc.get("answers", [])),
            rules=[tuple(r) for r in doc.get("rules", [])],
            answer_rules=[tuple(r) for r in doc.get("answer_rules", [])],
            strict=bool(doc.get("strict", True)),
        )

    def generate(self, prompt: ChatPrompt) -> str:
        # rules see only the current turn's input, not the whole history,
        # so one fixture line maps to one instruction
        text = prompt.inputs[-1] if prompt.inputs else prompt.render_text()
        for pattern, response in self.rules:
            if re.search(pattern, text):
                return response
        if self.responses:
            return self.responses.pop(0)
        if self.strict:
            raise ScriptExhausted(f"no scripted response left for prompt: {text[-120:]!r}")
        return ""

    def classify(self, prompt: ClassifierPrompt) -> int:
        text = prompt.mc_text
        answer = None
        for pattern, scripted in self.answer_rules:
            if re.search(pattern, text):
                answer = scripted
                break
        if answer is None:
            if self.answers:
                answer = self.answers.pop(0)
            elif self.strict:
                raise ScriptExhausted(
                    f"no scripted answer left for prompt: {text[-120:]!r}"
                )
            else:
                return 0
        if isinstance(answer, bool):
            return int(answer)
        if isinstance(answer, int):
            return answer
        return parse_answer_letter(str(answer))


# --------------------------------------------------------------------- http


def _post_json(url: str, headers: dict, payload: dict, timeout: float) -> dict:
    import requests

    try:
        response = requests.post(url, headers=headers, json=payload, timeout=timeout)
    except requests.Timeout as exc:
        raise RequestTimeout(f"backend timed out after {timeout}s") from exc
    except requests.ConnectionError as exc:
        raise BackendUnavailable(str(exc)) from exc
    if response.status_code >= 400:
        raise HttpError(response.status_code, response.text[:500])
    try:
        return response.json()
    except ValueError as exc:
        raise MalformedResponse("backend response is not JSON") from exc


def _headers(settings: BackendSettings) -> dict:
    headers = {"Content-Type": "application/json"}
    if settings.credential_env:
        credential = os.environ.get(settings.credential_env, "")
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
    return headers


def chat_messages(prompt: ChatPrompt) -> list[dict]:
    """Alternating user/assistant messages. In suffix mode the reply start is
    appended to the last input; in prefix mode it is sent as the beginning of
    the assistant turn."""
    msgs: list[dict] = []
    last = len(prompt.inputs) - 1
    for i, inp in enumerate(prompt.inputs):
        content = inp
        if i == last and prompt.start_type == "suffix" and prompt.reply_start:
            content = f"{inp}\n{prompt.reply_start}"
        msgs.append({"role": "user", "content": content})
        if i < len(prompt.outputs):
            msgs.append({"role": "assistant", "content": prompt.outputs[i]})
    if prompt.start_type == "prefix" and prompt.reply_start:
        msgs.append({"role": "assistant", "content": prompt.reply_start})
    return msgs


def http_chat_request(settings: BackendSettings, prompt: ChatPrompt) -> dict:
    payload = {"model": settings.model, "messages": chat_messages(prompt)}
    return _post_json(settings.endpoint, _headers(settings), payload, settings.timeout)


def _letter_bias(settings: BackendSettings, num_choices: int) -> dict:
    """Logit bias restricting the next token to the answer letters. Keys are
    letter strings unless a token-map file supplies token ids."""
    letters = LETTERS[:num_choices]
    if settings.token_map:
        with open(settings.token_map, encoding="utf-8") as fh:
            token_map = json.load(fh)
        return {str(token_map[letter]): 100 for letter in letters}
    return {letter: 100 for letter in letters}


def http_classify_request(settings: BackendSettings, prompt: ClassifierPrompt) -> dict:
    payload = {
        "model": settings.model,
        "messages": [{"role": "user", "content": prompt.render_text()}],
        "max_tokens": 1,
        "logit_bias": _letter_bias(settings, prompt.num_choices),
    }
    return _post_json(settings.endpoint, _headers(settings), payload, settings.timeout)


def _extract_content(data: dict) -> str:
    try:
        return data["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"unexpected response shape: {exc}") from exc


class HttpBackend(LlmBackend):
    def __init__(self, settings: BackendSettings):
        self.settings = settings

    def generate(self, prompt: ChatPrompt) -> str:
        return _extract_content(http_chat_request(self.settings, prompt))

    def classify(self, prompt: ClassifierPrompt) -> int:
        data = http_classify_request(self.settings, prompt)
        return parse_answer_letter(_extract_content(data))


def backend_from_settings(settings: BackendSettings, fixture: dict | None = None) -> LlmBackend:
    if settings.mode == "http":
        return HttpBackend(settings)
    if fixture is not None:
        return ScriptedBackend.from_fixture(fixture)
    return ScriptedBackend()
