"""OpenAI-compatible chat client with transcript record and replay."""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from collections import defaultdict, deque
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import httpx

API_KEY_ENV = "QUERYPLAN_API_KEY"
DEFAULT_TEMPERATURE = 0.7
BACKOFF_BASE = 1.0
BACKOFF_FACTOR = 2.0
JITTER = 0.2


class EndpointError(Exception):
    """Transport or HTTP failure that survived every retry."""


class AuthError(EndpointError):
    pass


class RateLimited(EndpointError):
    pass


class ReplayMiss(LookupError):
    """Replay mode was asked for an exchange that is not in the transcript."""


@dataclass
class LlmConfig:
    model: str = "gpt-4-turbo"
    base_url: str = "https://api.openai.com/v1"
    temperature: float = DEFAULT_TEMPERATURE
    max_retries: int = 3
    timeout: float = 60.0
    api_key_env: str = API_KEY_ENV
    examples: str | None = None  # optional in-context example block

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must lie in [0, 2]")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")

    @property
    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env)

    @property
    def endpoint(self) -> str:
        return self.base_url.rstrip("/") + "/chat/completions"


def request_fingerprint(system: str, user: str, model: str, temperature: float) -> str:
    payload = json.dumps([system, user, model, float(temperature)], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class ChatExchange:
    system: str
    user: str
    response: str
    prompt_tokens: int
    completion_tokens: int
    fingerprint: str
    run_id: str = ""
    seq: int = 0

    def to_json(self) -> str:
        d = asdict(self)
        order = ("run_id", "seq", "fingerprint", "system", "user", "response", "prompt_tokens", "completion_tokens")
        return json.dumps({k: d[k] for k in order}, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "ChatExchange":
        d = json.loads(line)
        return cls(d["system"], d["user"], d["response"], int(d["prompt_tokens"]), int(d["completion_tokens"]),
                   d["fingerprint"], d.get("run_id", ""), int(d.get("seq", 0)))


class Transcript:
    """Append-only JSONL store of exchanges.

    Lookups are by run id and fingerprint; repeated identical requests are
    served in the order they were recorded.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.exchanges: list[ChatExchange] = []
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                self.exchanges = [ChatExchange.from_json(line) for line in fh if line.strip()]

    def append(self, ex: ChatExchange) -> None:
        with self._lock:
            self.exchanges.append(ex)
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(ex.to_json() + "\n")

    def queues(self) -> dict[tuple[str, str], deque[ChatExchange]]:
        out: dict[tuple[str, str], deque[ChatExchange]] = defaultdict(deque)
        for ex in self.exchanges:
            out[(ex.run_id, ex.fingerprint)].append(ex)
        return out


class ChatClient:
    """Sends chat completions in one of three modes.

    ``live`` calls the endpoint, ``record`` calls it and appends every
    exchange to the transcript, ``replay`` only reads the transcript and
    never touches the network.
    """

    MODES = ("live", "record", "replay")

    def __init__(self, config: LlmConfig | None = None, mode: str = "live", transcript: Transcript | None = None,
                 transport: httpx.BaseTransport | None = None, sleep: Callable[[float], None] = time.sleep,
                 seed: int | None = None):
        if mode not in self.MODES:
            raise ValueError(f"mode must be one of {self.MODES}")
        if mode in ("record", "replay") and transcript is None:
            raise ValueError(f"{mode} mode needs a transcript")
        self.config = config or LlmConfig()
        self.mode = mode
        self.transcript = transcript
        self._transport = transport
        self._http: httpx.Client | None = None
        self._sleep = sleep
        self._rng = random.Random(seed)
        self._replay = transcript.queues() if mode == "replay" else None
        self._seq: dict[str, int] = defaultdict(int)
        self._lock = threading.Lock()
        self.network_calls = 0
        self.retries = 0

    def _client(self) -> httpx.Client:
        if self._http is None:
            self._http = httpx.Client(transport=self._transport, timeout=self.config.timeout)
        return self._http

    def close(self) -> None:
        if self._http is not None:
            self._http.close()
            self._http = None

    def _next_seq(self, run_id: str) -> int:
        with self._lock:
            self._seq[run_id] += 1
            return self._seq[run_id]

    def complete(self, system: str, user: str, run_id: str = "") -> ChatExchange:
        cfg = self.config
        fp = request_fingerprint(system, user, cfg.model, cfg.temperature)
        if self.mode == "replay":
            with self._lock:
                queue = self._replay.get((run_id, fp))
                if not queue:
                    raise ReplayMiss(f"no recorded exchange for run {run_id!r}, fingerprint {fp[:12]}")
                rec = queue.popleft()
            return ChatExchange(system, user, rec.response, rec.prompt_tokens, rec.completion_tokens, fp,
                                run_id, self._next_seq(run_id))
        text, pt, ct = self._post(system, user)
        ex = ChatExchange(system, user, text, pt, ct, fp, run_id, self._next_seq(run_id))
        if self.mode == "record":
            self.transcript.append(ex)
        return ex

    def _backoff(self, attempt: int) -> float:
        base = BACKOFF_BASE * BACKOFF_FACTOR ** attempt
        return base * self._rng.uniform(1 - JITTER, 1 + JITTER)

    def _post(self, system: str, user: str) -> tuple[str, int, int]:
        cfg = self.config
        body = {
            "model": cfg.model,
            "messages": [{"role": "system", "content": system}, {"role": "user", "content": user}],
            "temperature": cfg.temperature,
        }
        headers = {"Content-Type": "application/json"}
        if cfg.api_key:
            headers["Authorization"] = f"Bearer {cfg.api_key}"
        last: EndpointError | None = None
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                self.retries += 1
                self._sleep(self._backoff(attempt - 1))
            try:
                self.network_calls += 1
                resp = self._client().post(cfg.endpoint, json=body, headers=headers)
            except httpx.HTTPError as exc:
                last = EndpointError(f"transport error: {exc}")
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
            if resp.status_code == 429:
                last = RateLimited("rate limited (HTTP 429)")
                continue
            if resp.status_code >= 500:
                last = EndpointError(f"server error (HTTP {resp.status_code})")
                continue
            if resp.status_code >= 400:
                raise EndpointError(f"request failed (HTTP {resp.status_code}): {resp.text[:200]}")
            try:
                data = resp.json()
                text = data["choices"][0]["message"]["content"] or ""
                usage = data.get("usage") or {}
                return text, int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0))
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise EndpointError(f"malformed completion payload: {exc}") from exc
        raise last
