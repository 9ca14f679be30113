"""Completion backends with token, latency, and dollar-cost accounting.

Two interchangeable backends sit behind one `complete` contract: a remote
chat-completion API for live runs, and a deterministic scripted backend that
replays fixture files so evaluations and tests never touch the network.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .prompts import RenderedPrompt

logger = logging.getLogger(__name__)


class GatewayError(RuntimeError):
    pass


class Timeout(GatewayError):
    pass


class BackendUnavailable(GatewayError):
    pass


class RateLimited(GatewayError):
    pass


class FixtureMiss(GatewayError):
    """Strict scripted backend saw a prompt no rule matches."""


class Cancelled(GatewayError):
    pass


class UnknownScheme(LookupError):
    pass


@dataclass(frozen=True)
class GenerationParams:
    model_name: str = "scripted"
    temperature: float = 0.0  # evaluation default: deterministic decoding
    max_output_tokens: int = 1024

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class UsageRecord:
    input_tokens: int
    output_tokens: int
    latency: float
    estimated_cost: float = 0.0


@dataclass(frozen=True)
class Completion:
    text: str
    usage: UsageRecord


class CancelToken:
    """Cooperative cancellation flag shared between an issuer and a call."""

    def __init__(self):
        self._event = threading.Event()

    def cancel(self) -> None:
        self._event.set()

    def cancelled(self) -> bool:
        return self._event.is_set()


# ---------------------------------------------------------------------------
# Token counting and cost

_TOKENIZERS: dict[str, Callable[[str], int]] = {}


def register_tokenizer(scheme: str, fn: Callable[[str], int]) -> None:
    _TOKENIZERS[scheme] = fn


def count_tokens(text: str, scheme: str = "whitespace") -> int:
    """Count tokens under a registered scheme.

    Which encoding applies is a backend property, so schemes are pluggable.
    The fallback schemes here are approximations, not any vendor's encoding.
    """
    try:
        fn = _TOKENIZERS[scheme]
    except KeyError:
        raise UnknownScheme(f"no tokenizer scheme {scheme!r}") from None
    return fn(text)


register_tokenizer("whitespace", lambda text: len(text.split()))
# Rough character heuristic: one token per 4 characters, rounded up.
register_tokenizer("chars4", lambda text: (len(text) + 3) // 4)


@dataclass(frozen=True)
class CostRates:
    """Per-1000-token prices, split by direction."""

    input_per_1k: float = 0.0
    output_per_1k: float = 0.0

    def __post_init__(self):
        if self.input_per_1k < 0 or self.output_per_1k < 0:
            raise ValueError("rates must be non-negative")


def cost_of(input_tokens: int, output_tokens: int, rates: CostRates) -> float:
    return (
        input_tokens * rates.input_per_1k / 1000
        + output_tokens * rates.output_per_1k / 1000
    )


def estimate_cost(usage: UsageRecord, rates: CostRates) -> float:
    """Linear token cost of one call under the given rates."""
    return cost_of(usage.input_tokens, usage.output_tokens, rates)


def normalize_command(text: str) -> str:
    return " ".join(text.lower().split())


# ---------------------------------------------------------------------------
# Backends


class Backend(Protocol):
    def complete(
        self,
        prompt: RenderedPrompt,
        params: GenerationParams,
        cancel: CancelToken | None = None,
    ) -> Completion: ...


@dataclass(frozen=True)
class FixtureRule:
    """One scripted response. Unset match fields match anything.

    command is a regex fragment searched in the normalized match subject
    (command text plus any dialogue context, " :: "-joined).
    """

    response: str
    kind: str | None = None
    home: str | None = None
    command: str | None = None


class ScriptedBackend:
    """Deterministic backend replaying ordered first-match fixture rules."""

    def __init__(
        self,
        rules: list[FixtureRule],
        strict: bool = True,
        default_response: str = "{}",
        token_scheme: str = "whitespace",
        rates: CostRates = CostRates(),
    ):
        self.rules = list(rules)
        self.strict = strict
        self.default_response = default_response
        self.token_scheme = token_scheme
        self.rates = rates
        self.call_count = 0
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> ScriptedBackend:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        rules = []
        for row in doc.get("rules", []):
            response = row["response"]
            if not isinstance(response, str):
                response = json.dumps(response)
            rules.append(
                FixtureRule(
                    response=response,
                    kind=row.get("kind"),
                    home=row.get("home"),
                    command=row.get("command"),
                )
            )
        kwargs = {"strict": doc.get("strict", True)}
        if "default_response" in doc:
            kwargs["default_response"] = doc["default_response"]
        kwargs.update(overrides)
        return cls(rules, **kwargs)

    def complete(
        self,
        prompt: RenderedPrompt,
        params: GenerationParams,
        cancel: CancelToken | None = None,
    ) -> Completion:
        if cancel is not None and cancel.cancelled():
            raise Cancelled("call cancelled")
        with self._lock:
            self.call_count += 1
        subject = normalize_command(prompt.match_subject())
        for rule in self.rules:
            if rule.kind is not None and rule.kind != prompt.kind.value:
                continue
            if rule.home is not None and rule.home != prompt.home_id:
                continue
            if rule.command is not None and not re.search(rule.command, subject):
                continue
            return self._completion(prompt, rule.response)
        if self.strict:
            raise FixtureMiss(
                f"no rule for kind={prompt.kind.value} home={prompt.home_id} "
                f"subject={subject!r}"
            )
        return self._completion(prompt, self.default_response)

    def _completion(self, prompt: RenderedPrompt, text: str) -> Completion:
        usage = UsageRecord(
            input_tokens=count_tokens(prompt.text, self.token_scheme),
            output_tokens=count_tokens(text, self.token_scheme),
            latency=0.0,
            estimated_cost=cost_of(
                count_tokens(prompt.text, self.token_scheme),
                count_tokens(text, self.token_scheme),
                self.rates,
            ),
        )
        return Completion(text=text, usage=usage)


class HttpBackend:
    """Remote chat-completion backend (OpenAI-compatible request shape)."""

    def __init__(
        self,
        base_url: str,
        model: str,
        rates: CostRates = CostRates(),
        api_key_env: str = "LLM_API_KEY",
        timeout: float = 180.0,
        max_retries: int = 3,
        backoff_base: float = 1.0,
        token_scheme: str = "whitespace",
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.rates = rates
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.token_scheme = token_scheme
        self._client = client or httpx.Client()
        self._sleep = sleep
        self.call_count = 0
        self._lock = threading.Lock()

    def complete(
        self,
        prompt: RenderedPrompt,
        params: GenerationParams,
        cancel: CancelToken | None = None,
    ) -> Completion:
        api_key = os.environ.get(self.api_key_env)
        if not api_key:
            raise BackendUnavailable(f"set {self.api_key_env} to use the HTTP backend")
        with self._lock:
            self.call_count += 1
        body = {
            "model": params.model_name if params.model_name != "scripted" else self.model,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        }
        headers = {"Authorization": f"Bearer {api_key}"}
        last_error: GatewayError | None = None
        start = time.monotonic()
        for attempt in range(self.max_retries + 1):
            if cancel is not None and cancel.cancelled():
                raise Cancelled("call cancelled")
            if attempt:
                self._sleep(self.backoff_base * 2 ** (attempt - 1))
            try:
                resp = self._client.post(
                    f"{self.base_url}/chat/completions",
                    json=body,
                    headers=headers,
                    timeout=self.timeout,
                )
            except httpx.TimeoutException as exc:
                raise Timeout(f"no completion within {self.timeout}s") from exc
            except httpx.HTTPError as exc:
                last_error = BackendUnavailable(str(exc))
                continue
            if resp.status_code == 429:
                last_error = RateLimited("rate limited by backend")
                continue
            if resp.status_code >= 500:
                last_error = BackendUnavailable(f"backend returned {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise BackendUnavailable(
                    f"backend returned {resp.status_code}: {resp.text[:200]}"
                )
            return self._parse(prompt, resp.json(), time.monotonic() - start)
        assert last_error is not None
        raise last_error

    def _parse(self, prompt: RenderedPrompt, doc, latency: float) -> Completion:
        try:
            text = doc["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"unexpected response shape: {exc}") from exc
        if not isinstance(text, str) or not text:
            raise BackendUnavailable("backend returned an empty completion")
        usage = doc.get("usage") or {}
        input_tokens = usage.get("prompt_tokens")
        output_tokens = usage.get("completion_tokens")
        if input_tokens is None:
            input_tokens = count_tokens(prompt.text, self.token_scheme)
        if output_tokens is None:
            output_tokens = count_tokens(text, self.token_scheme)
        return Completion(
            text=text,
            usage=UsageRecord(
                input_tokens=input_tokens,
                output_tokens=output_tokens,
                latency=latency,
                estimated_cost=cost_of(input_tokens, output_tokens, self.rates),
            ),
        )


def load_http_backend(config_path: str | Path) -> HttpBackend:
    """Build an HttpBackend from a JSON config file."""
    doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
    rates = doc.get("rates", {})
    return HttpBackend(
        base_url=doc["base_url"],
        model=doc["model"],
        rates=CostRates(
            input_per_1k=rates.get("input_per_1k", 0.0),
            output_per_1k=rates.get("output_per_1k", 0.0),
        ),
        timeout=doc.get("timeout", 180.0),
        token_scheme=doc.get("token_scheme", "whitespace"),
    )
