"""Minimal completion-API client with deterministic record/replay transport.

The wire protocol is a bare chat-completion JSON POST carrying a system
and a user message and returning ``{"text": ...}``. Transcripts are
JSONL keyed by a stable content hash of the prompt, so a recorded run
replays byte-identically on any machine with zero network activity.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass

from specmut.errors import (
    AuthMissingError,
    ClientTimeoutError,
    HttpError,
    ReplayMissError,
)

log = logging.getLogger(__name__)

_transcript_lock = threading.Lock()


def request_hash(system: str, user: str) -> str:
    canonical = json.dumps(
        {"system": system, "user": user}, sort_keys=True, ensure_ascii=True
    ).encode("utf-8")
    return hashlib.sha256(canonical).hexdigest()


@dataclass(frozen=True)
class PromptRequest:
    request_id: str
    system: str
    user: str
    max_output_chars: int = 4096
    temperature_hint: float = 0.0

    @classmethod
    def build(
        cls,
        system: str,
        user: str,
        max_output_chars: int = 4096,
        temperature_hint: float = 0.0,
    ) -> "PromptRequest":
        if not user:
            raise ValueError("user prompt must be non-empty")
        return cls(request_hash(system, user), system, user,
                   max_output_chars, temperature_hint)


class TransportMode(enum.Enum):
    LIVE = "LIVE"
    RECORD = "RECORD"
    REPLAY = "REPLAY"


@dataclass
class Transport:
    mode: TransportMode
    endpoint: str = ""
    transcript_path: str = ""
    auth_env_var: str = "SPECMUT_API_TOKEN"
    timeout_s: float = 60.0
    max_in_flight: int = 4


def _http_post(url: str, payload: dict, timeout_s: float, token: str) -> str:
    """Single POST; isolated so tests can fence off all network activity."""
    body = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(
        url,
        data=body,
        headers={
            "Content-Type": "application/json",
            "Authorization": f"Bearer {token}",
        },
        method="POST",
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout_s) as response:
            return response.read().decode("utf-8")
    except urllib.error.HTTPError as exc:
        raise HttpError(exc.code) from exc
    except TimeoutError as exc:
        raise ClientTimeoutError("request timed out") from exc
    except urllib.error.URLError as exc:
        if isinstance(exc.reason, TimeoutError):
            raise ClientTimeoutError("request timed out") from exc
        raise HttpError(0, f"connection failed: {exc.reason}") from exc


def _load_transcript(path: str) -> dict:
    entries = {}
    with open(path, encoding="utf-8") as handle:
        for raw in handle:
            raw = raw.strip()
            if not raw:
                continue
            record = json.loads(raw)
            entries[record["id"]] = record["response"]
    return entries


def _append_transcript(path: str, req: PromptRequest, response: str) -> None:
    record = {
        "id": req.request_id,
        "request": {"system": req.system, "user": req.user},
        "response": response,
    }
    with _transcript_lock:
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def complete(req: PromptRequest, transport: Transport) -> str:
    """Resolve one prompt through the configured transport.

    REPLAY is a pure transcript lookup and never touches the network;
    RECORD performs the live call, then persists (request_id, response).
    """
    if transport.mode is TransportMode.REPLAY:
        entries = _load_transcript(transport.transcript_path)
        if req.request_id not in entries:
            raise ReplayMissError(req.request_id)
        return entries[req.request_id]

    token = os.environ.get(transport.auth_env_var, "")
    if not token:
        raise AuthMissingError(
            f"environment variable {transport.auth_env_var!r} is not set"
        )
    payload = {
        "messages": [
            {"role": "system", "content": req.system},
            {"role": "user", "content": req.user},
        ],
        "max_output_chars": req.max_output_chars,
        "temperature": req.temperature_hint,
    }
    body = _http_post(transport.endpoint, payload, transport.timeout_s, token)
    try:
        text = json.loads(body)["text"]
    except (json.JSONDecodeError, KeyError) as exc:
        raise HttpError(0, f"malformed completion response: {body[:200]!r}") from exc
    if transport.mode is TransportMode.RECORD:
        _append_transcript(transport.transcript_path, req, text)
    return text


def complete_with_retry(
    req: PromptRequest,
    transport: Transport,
    attempts: int = 3,
    backoff_ms: int = 500,
    sleep=time.sleep,
) -> str:
    """Retry only 5xx and timeout failures, doubling the backoff each time."""
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    delay_ms = backoff_ms
    last: Exception | None = None
    for attempt in range(attempts):
        try:
            return complete(req, transport)
        except (HttpError, ClientTimeoutError) as exc:
            retryable = isinstance(exc, ClientTimeoutError) or (
                isinstance(exc, HttpError) and 500 <= exc.status < 600
            )
            if not retryable:
                raise
            last = exc
            if attempt + 1 < attempts:
                sleep(delay_ms / 1000.0)
                delay_ms *= 2
    assert last is not None
    raise last


DRAFTING_SYSTEM = (
    "You write postconditions for one method of a small imperative program. "
    "Propose boolean conditions over the parameters, the value `result`, and "
    "`old(...)` pre-state snapshots that hold for the original implementation "
    "but fail for the defective variants shown as diffs. Put each condition "
    "in its own fenced code block."
)


def draft_postconditions(method, mutant_diffs: list[str], transport: Transport):
    """Draft one candidate postcondition set from the method and mutant diffs.

    Each fenced block of the response becomes one condition; blocks that
    are empty or span multiple lines are skipped with a warning. An
    empty result is permitted.
    """
    from specmut.harness import Postcondition, PostconditionSet

    user = "\n\n".join(
        [f"signature: {method.signature}", f"doc: {method.doc_comment}"]
        + [f"mutant diff:\n{diff}" for diff in mutant_diffs]
    )
    response = complete(PromptRequest.build(DRAFTING_SYSTEM, user), transport)
    conditions = []
    for block in _fenced_blocks(response):
        lines = [line for line in block.splitlines() if line.strip()]
        if len(lines) != 1:
            log.warning(
                "skipping malformed condition block (%d non-blank lines)", len(lines)
            )
            continue
        conditions.append(
            Postcondition(
                cond_id=f"pc{len(conditions) + 1}",
                source_text=lines[0].strip(),
                old_exprs=[],
            )
        )
    if not conditions:
        log.warning("drafting response contained no usable fenced blocks")
        return []
    return [PostconditionSet(set_id=f"draft-{method.method_id}", conditions=conditions)]


def _fenced_blocks(text: str) -> list[str]:
    blocks = []
    lines = text.splitlines()
    inside = False
    current: list[str] = []
    for line in lines:
        if line.strip().startswith("```"):
            if inside:
                blocks.append("\n".join(current))
                current = []
            inside = not inside
            continue
        if inside:
            current.append(line)
    # an unterminated fence is malformed; its content is dropped
    return blocks
