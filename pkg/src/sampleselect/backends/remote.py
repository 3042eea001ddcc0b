"""Wire-protocol client for remote completion servers.

Protocol: HTTP POST {base_url}/v1/completions with JSON
{"prompt", "max_tokens", "top_p", "temperature", "seed"?, "logprobs"} and a
200 response of {"text", "finish_reason": "stop"|"length", "token_logprobs"?}.
finish_reason "stop" maps to ended=True. Transport failures and non-200
statuses are retried with exponential backoff up to the configured count and
then surface as RunError; an uninterpretable 200 payload is a RunError
immediately. Credentials come only from the environment
(SAMPLESELECT_BACKEND_TOKEN, sent as a bearer token).
"""

from __future__ import annotations

import os
import threading
import time
from typing import Callable

import requests

from sampleselect.backends.base import CompletionRequest, CompletionResult, SamplingBackend
from sampleselect.errors import RetryableError, RunError

__all__ = ["RemoteCompletionBackend"]


class RemoteCompletionBackend(SamplingBackend):
    """Client for OpenAI-style completion endpoints. Thread-safe: sessions are
    per-thread, so a decoder may issue a round's n requests concurrently."""

    def __init__(
        self,
        base_url: str,
        *,
        timeout: float = 60.0,
        retries: int = 3,
        backoff: float = 0.5,
        supports_logprobs: bool = True,
        name: str | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.supports_logprobs = supports_logprobs
        self.name = name or f"remote({self.base_url})"
        self._sleep = sleep
        self._local = threading.local()

    def _session(self) -> requests.Session:
        session = getattr(self._local, "session", None)
        if session is None:
            session = requests.Session()
            token = os.environ.get("SAMPLESELECT_BACKEND_TOKEN")
            if token:
                session.headers["Authorization"] = f"Bearer {token}"
            self._local.session = session
        return session

    def complete(self, request: CompletionRequest) -> CompletionResult:
        payload: dict[str, object] = {
            "prompt": request.prompt,
            "max_tokens": request.max_tokens,
            "top_p": request.top_p,
            "temperature": request.temperature,
            "logprobs": request.want_logprobs,
        }
        if request.seed is not None:
            payload["seed"] = request.seed
        url = f"{self.base_url}/v1/completions"
        last_error: RetryableError | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                response = self._session().post(url, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = RetryableError(f"completion request failed: {exc}")
                continue
            if response.status_code != 200:
                last_error = RetryableError(f"completion server returned HTTP {response.status_code}")
                continue
            return self._interpret(response, request)
        raise RunError(
            f"completion request failed after {self.retries + 1} attempts: {last_error}"
        )

    @staticmethod
    def _interpret(response: requests.Response, request: CompletionRequest) -> CompletionResult:
        try:
            body = response.json()
            text = body["text"]
            finish_reason = body["finish_reason"]
        except (ValueError, KeyError, TypeError) as exc:
            raise RunError(f"malformed completion payload: {exc}") from exc
        if not isinstance(text, str) or finish_reason not in ("stop", "length"):
            raise RunError(
                f"malformed completion payload: text={type(text).__name__}, "
                f"finish_reason={finish_reason!r}"
            )
        logprobs = body.get("token_logprobs")
        if request.want_logprobs and logprobs is None:
            raise RunError("server omitted token_logprobs although they were requested")
        return CompletionResult(
            text=text,
            ended=finish_reason == "stop",
            token_logprobs=tuple(logprobs) if logprobs is not None else None,
        )
