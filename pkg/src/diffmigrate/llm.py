"""Chat-completion client: wire protocol, retries, rate budgeting,
usage accounting, and reply cleanup.

The wire format is the widely copied chat-completions JSON API, so any
compatible endpoint works. Tests never touch the network: providers are
swappable, and the HTTP provider accepts an injectable transport.
"""

from __future__ import annotations

import json
import logging
import math
import re
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol, Sequence

import httpx

from .errors import (
    AuthError,
    ContextOverflow,
    LlmError,
    RateLimited,
    ServerError,
    Timeout,
    UnknownModel,
)
from .tokens import HEURISTIC, TokenizerSpec, count_tokens

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChatRequest:
    """One chat call: prompts plus sampling and accounting knobs."""

    model: str
    system: str
    user: str
    temperature: float = 1.0
    max_output_tokens: int = 4096
    want_token_probs: bool = False

    def __post_init__(self):
        if not self.model:
            raise ValueError("model must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class ChatResponse:
    """The reply text plus token usage and optional answer-token probs."""

    text: str
    prompt_tokens: int
    completion_tokens: int
    token_probs: tuple[tuple[str, float], ...] | None = None

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts cannot be negative")
        if self.token_probs is not None:
            object.__setattr__(self, "token_probs", tuple(self.token_probs))
            for token, prob in self.token_probs:
                if not 0.0 <= prob <= 1.0:
                    raise ValueError(f"probability out of range for {token!r}: {prob}")


@dataclass(frozen=True)
class UsageRecord:
    """One completed call's accounting row."""

    model: str
    case: str
    method: str
    prompt_tokens: int
    completion_tokens: int
    cost_usd: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "model": self.model,
                "case": self.case,
                "method": self.method,
                "prompt_tokens": self.prompt_tokens,
                "completion_tokens": self.completion_tokens,
                "cost_usd": self.cost_usd,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "UsageRecord":
        raw = json.loads(line)
        return cls(
            model=raw["model"],
            case=raw["case"],
            method=raw["method"],
            prompt_tokens=int(raw["prompt_tokens"]),
            completion_tokens=int(raw["completion_tokens"]),
            cost_usd=float(raw["cost_usd"]),
        )


class CostTable:
    """Per-token prices by model name."""

    def __init__(self, rates: Mapping[str, tuple[float, float]] | None = None):
        self._rates: dict[str, tuple[float, float]] = dict(rates or {})

    @classmethod
    def from_per_million(cls, rates: Mapping[str, tuple[float, float]]) -> "CostTable":
        """Build from the usual dollars-per-million-token price sheets."""
        return cls(
            {m: (i / 1e6, o / 1e6) for m, (i, o) in rates.items()}
        )

    def for_model(self, model: str) -> tuple[float, float]:
        try:
            return self._rates[model]
        except KeyError:
            raise UnknownModel(f"no cost rates configured for {model!r}") from None

    def knows(self, model: str) -> bool:
        return model in self._rates

    @property
    def models(self) -> tuple[str, ...]:
        return tuple(sorted(self._rates))


def estimate_cost(
    prompt_tokens: int,
    completion_tokens: int,
    model: str,
    table: CostTable,
) -> float:
    """Dollar cost of one call under the table's per-token rates."""
    if prompt_tokens < 0 or completion_tokens < 0:
        raise ValueError("token counts cannot be negative")
    rate_in, rate_out = table.for_model(model)
    return prompt_tokens * rate_in + completion_tokens * rate_out


class UsageLedger:
    """Append-only record of every call's usage and cost."""

    def __init__(self):
        self._records: list[UsageRecord] = []
        self._lock = threading.Lock()

    def add(self, record: UsageRecord) -> None:
        with self._lock:
            self._records.append(record)

    @property
    def records(self) -> tuple[UsageRecord, ...]:
        with self._lock:
            return tuple(self._records)

    def total_cost(self) -> float:
        return sum(r.cost_usd for r in self.records)

    def total_tokens(self) -> tuple[int, int]:
        records = self.records
        return (
            sum(r.prompt_tokens for r in records),
            sum(r.completion_tokens for r in records),
        )

    def grouped(self, key: str) -> dict[str, tuple[int, int, float]]:
        """(prompt tokens, completion tokens, cost) grouped by a field."""
        if key not in ("model", "case", "method"):
            raise ValueError(f"cannot group by {key!r}")
        out: dict[str, tuple[int, int, float]] = {}
        for r in self.records:
            k = getattr(r, key)
            pt, ct, cost = out.get(k, (0, 0, 0.0))
            out[k] = (pt + r.prompt_tokens, ct + r.completion_tokens, cost + r.cost_usd)
        return out

    def save_jsonl(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for record in self.records:
                fh.write(record.to_json() + "\n")

    @classmethod
    def load_jsonl(cls, path: Path) -> "UsageLedger":
        ledger = cls()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                ledger.add(UsageRecord.from_json(line))
        return ledger


class Provider(Protocol):
    """A single-attempt chat backend; retrying is the client's job."""

    def send(self, request: ChatRequest) -> ChatResponse: ...


class MockProvider:
    """Deterministic in-process provider for tests and dry rehearsals.

    Replies come from a fixed string or a request -> text function. A
    queue of exceptions can make the first calls fail, to exercise the
    retry path. All requests are recorded on .calls.
    """

    def __init__(
        self,
        reply: str = "",
        *,
        reply_fn: Callable[[ChatRequest], str] | None = None,
        failures: Iterable[Exception] = (),
        token_probs: tuple[tuple[str, float], ...] | None = None,
    ):
        self._reply = reply
        self._reply_fn = reply_fn
        self._failures = deque(failures)
        self._token_probs = token_probs
        self.calls: list[ChatRequest] = []

    def send(self, request: ChatRequest) -> ChatResponse:
        self.calls.append(request)
        if self._failures:
            raise self._failures.popleft()
        text = self._reply_fn(request) if self._reply_fn else self._reply
        return ChatResponse(
            text=text,
            prompt_tokens=count_tokens(request.system + request.user),
            completion_tokens=count_tokens(text),
            token_probs=self._token_probs,
        )


class HttpProvider:
    """Chat-completions endpoint speaking the common JSON wire format."""

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        *,
        timeout: float = 120.0,
        transport: httpx.BaseTransport | None = None,
    ):
        headers = {}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"),
            headers=headers,
            timeout=timeout,
            transport=transport,
        )

    def close(self) -> None:
        self._client.close()

    def send(self, request: ChatRequest) -> ChatResponse:
        messages = []
        if request.system:
            messages.append({"role": "system", "content": request.system})
        messages.append({"role": "user", "content": request.user})
        payload: dict = {
            "model": request.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        if request.want_token_probs:
            payload["logprobs"] = True
            payload["top_logprobs"] = 20
        try:
            response = self._client.post("/chat/completions", json=payload)
        except httpx.TimeoutException as exc:
            raise Timeout(f"provider call timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise ServerError(f"transport failure: {exc}") from exc
        return self._interpret(response)

    @staticmethod
    def _interpret(response: httpx.Response) -> ChatResponse:
        status = response.status_code
        if status in (401, 403):
            raise AuthError(f"provider rejected credentials (HTTP {status})")
        if status == 429:
            raise RateLimited("provider throttled the request (HTTP 429)")
        if status >= 500:
            raise ServerError(f"provider failed (HTTP {status})")
        if status >= 400:
            detail = ""
            try:
                detail = response.json().get("error", {}).get("message", "")
            except (json.JSONDecodeError, AttributeError):
                detail = response.text[:200]
            if "context" in detail.lower() and (
                "length" in detail.lower() or "window" in detail.lower()
            ):
                raise ContextOverflow(detail)
            raise LlmError(f"provider error (HTTP {status}): {detail}")
        body = response.json()
        try:
            choice = body["choices"][0]
            text = choice["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise LlmError(f"malformed provider response: {exc}") from exc
        usage = body.get("usage") or {}
        prompt_tokens = int(usage.get("prompt_tokens", 0))
        completion_tokens = int(usage.get("completion_tokens", 0))
        token_probs = None
        logprobs = choice.get("logprobs")
        if logprobs and logprobs.get("content"):
            first = logprobs["content"][0]
            candidates = first.get("top_logprobs") or [first]
            token_probs = tuple(
                (c["token"], min(1.0, math.exp(c["logprob"]))) for c in candidates
            )
        return ChatResponse(
            text=text,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            token_probs=token_probs,
        )


@dataclass(frozen=True)
class RetryPolicy:
    """Exponential backoff for transient failures."""

    max_retries: int = 3
    base_delay: float = 1.0
    max_delay: float = 30.0

    def delay(self, attempt: int) -> float:
        return min(self.max_delay, self.base_delay * (2**attempt))


class TokenBudget:
    """Client-side tokens-per-minute throttle.

    Providers enforce their own per-minute budgets server-side; spending
    more than that just converts requests into throttle errors, so the
    client waits locally instead. Clock and sleep are injectable so tests
    run instantly.
    """

    WINDOW_S = 60.0

    def __init__(
        self,
        tokens_per_minute: int,
        *,
        time_fn: Callable[[], float] = time.monotonic,
        sleep_fn: Callable[[float], None] = time.sleep,
    ):
        if tokens_per_minute <= 0:
            raise ValueError("tokens_per_minute must be positive")
        self.tokens_per_minute = tokens_per_minute
        self._time = time_fn
        self._sleep = sleep_fn
        self._spent: deque[tuple[float, int]] = deque()
        self._lock = threading.Lock()
        self.waits: list[float] = []

    def _prune(self, now: float) -> None:
        while self._spent and now - self._spent[0][0] >= self.WINDOW_S:
            self._spent.popleft()

    def reserve(self, tokens: int) -> None:
        """Block until spending this many tokens fits the budget."""
        # a single request larger than the whole budget must not deadlock
        tokens = min(tokens, self.tokens_per_minute)
        while True:
            with self._lock:
                now = self._time()
                self._prune(now)
                used = sum(n for _, n in self._spent)
                if used + tokens <= self.tokens_per_minute:
                    self._spent.append((now, tokens))
                    return
                wait = self.WINDOW_S - (now - self._spent[0][0])
            wait = max(wait, 0.01)
            self.waits.append(wait)
            logger.debug("token budget full; sleeping %.2fs", wait)
            self._sleep(wait)


@dataclass
class RequestLog:
    """Telemetry for one logical call, including retry count."""

    request: ChatRequest
    retries: int = 0
    response: ChatResponse | None = None
    error: str | None = None


_TRANSIENT = (RateLimited, ServerError, Timeout)


class LlmClient:
    """Completion front door: budgeting, retries, and usage accounting."""

    def __init__(
        self,
        provider: Provider,
        *,
        ledger: UsageLedger | None = None,
        retry: RetryPolicy = RetryPolicy(),
        budget: TokenBudget | None = None,
        cost_table: CostTable | None = None,
        tokenizer: TokenizerSpec = HEURISTIC,
        sleep_fn: Callable[[float], None] = time.sleep,
    ):
        self._provider = provider
        self.ledger = ledger if ledger is not None else UsageLedger()
        self._retry = retry
        self._budget = budget
        self._cost_table = cost_table
        self._tokenizer = tokenizer
        self._sleep = sleep_fn
        self.request_log: list[RequestLog] = []
        self._log_lock = threading.Lock()

    def complete(
        self, request: ChatRequest, *, case: str = "", method: str = ""
    ) -> ChatResponse:
        """Send one request, retrying transient failures with backoff.

        Auth failures and context overflows are never retried. Every
        successful call lands in the ledger with its cost.
        """
        if self._budget is not None:
            estimate = count_tokens(request.system + request.user, self._tokenizer)
            self._budget.reserve(estimate + request.max_output_tokens)
        entry = RequestLog(request=request)
        last_error: Exception | None = None
        for attempt in range(self._retry.max_retries + 1):
            if attempt:
                delay = self._retry.delay(attempt - 1)
                logger.debug("retry %d after %.1fs", attempt, delay)
                self._sleep(delay)
                entry.retries = attempt
            try:
                response = self._provider.send(request)
            except _TRANSIENT as exc:
                last_error = exc
                logger.warning("transient provider failure: %s", exc)
                continue
            except LlmError as exc:
                entry.error = str(exc)
                with self._log_lock:
                    self.request_log.append(entry)
                raise
            entry.response = response
            with self._log_lock:
                self.request_log.append(entry)
            self._account(request, response, case, method)
            return response
        entry.error = str(last_error)
        with self._log_lock:
            self.request_log.append(entry)
        assert last_error is not None
        raise last_error

    def _account(
        self, request: ChatRequest, response: ChatResponse, case: str, method: str
    ) -> None:
        cost = 0.0
        if self._cost_table is not None and self._cost_table.knows(request.model):
            cost = estimate_cost(
                response.prompt_tokens,
                response.completion_tokens,
                request.model,
                self._cost_table,
            )
        self.ledger.add(
            UsageRecord(
                model=request.model,
                case=case,
                method=method,
                prompt_tokens=response.prompt_tokens,
                completion_tokens=response.completion_tokens,
                cost_usd=cost,
            )
        )


_FENCE_RE = re.compile(r"^```[^\n]*\n(.*?)^```\s*$", re.DOTALL | re.MULTILINE)

_CODE_LINE_RE = re.compile(
    r"^(?:"
    r"\s*(?:import|from|def|class|if|for|while|try|with|return|async)\b"
    r"|\s*[@#]"
    r"|\s*(?:'''|\"\"\")"
    r"|\s*[A-Za-z_][\w.]*(?:\[[^\]]*\])?\s*(?:=(?!=)|\()"
    r")"
)


def sanitize_code_reply(text: str) -> str:
    """Extract the code from a chat reply.

    One fenced block: its interior. Several: the longest. None: strip
    leading prose up to the first line that looks like code. The result
    carries no trailing newline; writers add exactly one.
    """
    blocks = _FENCE_RE.findall(text)
    if blocks:
        best = max(blocks, key=lambda b: b.count("\n"))
        return best.rstrip("\n")
    lines = text.split("\n")
    start = 0
    for idx, line in enumerate(lines):
        if _CODE_LINE_RE.match(line):
            start = idx
            break
    return "\n".join(lines[start:]).strip("\n")
