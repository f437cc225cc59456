"""Provider-agnostic chat and embedding access.

Live providers are configured via environment variables; tests use the
scripted provider (digest- or rule-keyed replies) or a replay transcript.
Every exchange is recorded verbatim so a run can be replayed bit-identically.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
import urllib.request
from dataclasses import dataclass, field, asdict
from typing import Callable, Iterable


class GatewayError(Exception):
    pass


class ProviderError(GatewayError):
    pass


class RateLimited(GatewayError):
    pass


@dataclass(frozen=True)
class DecodingParams:
    temperature: float = 0.7
    top_p: float = 0.95
    max_tokens: int = 2048
    stop_sequences: tuple[str, ...] = ("\n\n", "Q:")

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not (0 < self.top_p <= 1):
            raise ValueError("top_p must be in (0, 1]")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


#: Decoding defaults for live runs; deterministic test mode forces temperature 0.
LIVE_DEFAULTS = DecodingParams()
DETERMINISTIC_DEFAULTS = DecodingParams(temperature=0.0)


@dataclass
class ChatExchange:
    system_prompt: str
    user_prompt: str
    params: DecodingParams
    reply: str
    latency_ms: int
    provider_tag: str

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["params"]["stop_sequences"] = list(self.params.stop_sequences)
        return rec


def prompt_digest(system: str, user: str) -> str:
    return hashlib.sha256(
        system.encode("utf-8") + b"\x00" + user.encode("utf-8")
    ).hexdigest()


class Gateway:
    """Base gateway: retries, in-flight limiting, transcript recording."""

    provider_tag = "base"

    def __init__(
        self,
        max_in_flight: int = 4,
        max_retries: int = 2,
        backoff_s: float = 0.05,
        transcript_path: str | None = None,
    ) -> None:
        self._limiter = threading.BoundedSemaphore(max_in_flight)
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self._transcript_lock = threading.Lock()
        self.transcript: list[ChatExchange] = []
        self.transcript_path = transcript_path

    # -- provider hooks -----------------------------------------------------
    def _complete(self, system: str, user: str, params: DecodingParams) -> str:
        raise NotImplementedError

    def _embed(self, text: str) -> list[float]:
        return trigram_embedding(text)

    # -- public surface -----------------------------------------------------
    def complete(
        self, system: str, user: str, params: DecodingParams | None = None
    ) -> str:
        if not system or not user:
            raise ValueError("prompts must be non-empty")
        params = params or DETERMINISTIC_DEFAULTS
        start = time.monotonic()
        with self._limiter:
            last_err: Exception | None = None
            for attempt in range(self.max_retries + 1):
                try:
                    reply = self._complete(system, user, params)
                    break
                except GatewayError as err:
                    last_err = err
                    if attempt < self.max_retries:
                        time.sleep(self.backoff_s * (2**attempt))
            else:
                raise ProviderError(
                    f"provider failed after {self.max_retries + 1} attempts: {last_err}"
                )
        latency_ms = int((time.monotonic() - start) * 1000)
        exchange = ChatExchange(system, user, params, reply, latency_ms, self.provider_tag)
        with self._transcript_lock:
            self.transcript.append(exchange)
            if self.transcript_path:
                with open(self.transcript_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(exchange.to_record(), sort_keys=True) + "\n")
        return reply

    def embed(self, text: str) -> list[float]:
        return self._embed(text)


# ---------------------------------------------------------------------------
# Offline embedding fallback: L2-normalized character trigram counts
# ---------------------------------------------------------------------------

def trigram_embedding(text: str, dim: int = 512) -> list[float]:
    vec = [0.0] * dim
    padded = f"  {text.lower()} "
    for i in range(len(padded) - 2):
        tri = padded[i : i + 3]
        h = int(hashlib.md5(tri.encode("utf-8")).hexdigest()[:8], 16)
        vec[h % dim] += 1.0
    norm = math.sqrt(sum(v * v for v in vec))
    if norm > 0:
        vec = [v / norm for v in vec]
    return vec


def cosine(a: Iterable[float], b: Iterable[float]) -> float:
    a, b = list(a), list(b)
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


# ---------------------------------------------------------------------------
# Test providers
# ---------------------------------------------------------------------------

class ScriptedGateway(Gateway):
    """Deterministic provider for tests.

    Replies resolve in order: exact prompt-digest script, then substring
    rules, then the default reply (error if none matches and no default).
    """

    provider_tag = "scripted"

    def __init__(
        self,
        by_digest: dict[str, str] | None = None,
        rules: list[tuple[str, str]] | None = None,
        default: str | None = None,
        reply_fn: Callable[[str, str], str] | None = None,
        inject_latency_s: float = 0.0,
        **kwargs,
    ) -> None:
        super().__init__(**kwargs)
        self.by_digest = dict(by_digest or {})
        self.rules = list(rules or [])
        self.default = default
        self.reply_fn = reply_fn
        self.inject_latency_s = inject_latency_s
        self.call_count = 0

    def script(self, system: str, user: str, reply: str) -> None:
        self.by_digest[prompt_digest(system, user)] = reply

    def _complete(self, system: str, user: str, params: DecodingParams) -> str:
        self.call_count += 1
        if self.inject_latency_s:
            time.sleep(self.inject_latency_s)
        digest = prompt_digest(system, user)
        if digest in self.by_digest:
            return self.by_digest[digest]
        for needle, reply in self.rules:
            if needle in system or needle in user:
                return reply
        if self.reply_fn is not None:
            return self.reply_fn(system, user)
        if self.default is not None:
            return self.default
        raise ProviderError(f"no scripted reply for digest {digest[:12]}")


class FlakyGateway(ScriptedGateway):
    """Scripted provider that fails the first ``fail_times`` calls."""

    def __init__(self, fail_times: int, **kwargs) -> None:
        super().__init__(**kwargs)
        self.fail_times = fail_times
        self.attempts = 0

    def _complete(self, system: str, user: str, params: DecodingParams) -> str:
        self.attempts += 1
        if self.attempts <= self.fail_times:
            raise ProviderError("injected failure")
        return super()._complete(system, user, params)


class ReplayGateway(Gateway):
    """Replays a recorded transcript keyed by prompt digest."""

    provider_tag = "replay"

    def __init__(self, source_path: str, **kwargs) -> None:
        super().__init__(**kwargs)
        self._replies: dict[str, str] = {}
        with open(source_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._replies[
                    prompt_digest(rec["system_prompt"], rec["user_prompt"])
                ] = rec["reply"]

    def _complete(self, system: str, user: str, params: DecodingParams) -> str:
        digest = prompt_digest(system, user)
        if digest not in self._replies:
            raise ProviderError(f"transcript has no reply for digest {digest[:12]}")
        return self._replies[digest]


class HttpChatGateway(Gateway):
    """Minimal OpenAI-style chat-completions client.

    Endpoint, credentials, and model come from the environment:
    HUNTBENCH_ENDPOINT, HUNTBENCH_API_KEY, HUNTBENCH_MODEL.
    """

    provider_tag = "http"

    def __init__(self, timeout_s: float = 60.0, **kwargs) -> None:
        super().__init__(**kwargs)
        self.endpoint = os.environ.get("HUNTBENCH_ENDPOINT", "")
        self.api_key = os.environ.get("HUNTBENCH_API_KEY", "")
        self.model = os.environ.get("HUNTBENCH_MODEL", "")
        self.timeout_s = timeout_s
        if not self.endpoint:
            raise GatewayError("HUNTBENCH_ENDPOINT is not set")

    def _complete(self, system: str, user: str, params: DecodingParams) -> str:
        body = json.dumps(
            {
                "model": self.model,
                "messages": [
                    {"role": "system", "content": system},
                    {"role": "user", "content": user},
                ],
                "temperature": params.temperature,
                "top_p": params.top_p,
                "max_tokens": params.max_tokens,
                "stop": list(params.stop_sequences) or None,
            }
        ).encode("utf-8")
        req = urllib.request.Request(
            self.endpoint,
            data=body,
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self.api_key}",
            },
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except Exception as err:  # urllib raises a zoo of error types
            raise ProviderError(str(err)) from err
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError) as err:
            raise ProviderError(f"malformed provider response: {err}") from err
