"""Scoring-model abstraction.

Two capabilities: causal sequence log-likelihood (sentence ranking)
and masked-position token probabilities (PMI estimation). Both are
served by a deterministic lookup backend for tests, a remote HTTP
client for real models, and a persistent append-only cache that wraps
either. Probabilities travel as natural logs everywhere to dodge
underflow.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

import httpx

from .errors import (
    LengthError,
    MissingEntryError,
    QueryError,
    TransportError,
)

#: Mask placeholder, shared with the wire protocol.
MASK = "[MASK]"

#: Default backend token cap; longer sentences are a hard error.
MAX_TOKENS = 128


@dataclass(frozen=True)
class MaskedQuery:
    """A word sequence with masked slots and the tokens to score there.

    Positions not listed in targets may also be masked (the marginal
    estimate masks the whole other span); those slots are context, not
    queries.
    """

    tokens: tuple[str, ...]
    targets: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if not self.targets:
            raise ValueError("query needs at least one target")
        for position, token in self.targets:
            if not 0 <= position < len(self.tokens):
                raise ValueError(f"target position {position} out of bounds for {len(self.tokens)} tokens")
            if self.tokens[position] != MASK:
                raise ValueError(f"target position {position} holds {self.tokens[position]!r}, not {MASK}")
            if not token:
                raise ValueError("target token must be non-empty")

    @property
    def context_text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class TokenProbability:
    """Backend's probability mass on one candidate token at one slot."""

    position: int
    token: str
    logprob: float

    def __post_init__(self):
        if math.isnan(self.logprob) or self.logprob > 0.0 or math.isinf(self.logprob):
            raise ValueError(f"logprob must be finite and <= 0, got {self.logprob}")

    @property
    def prob(self) -> float:
        return math.exp(self.logprob)


@dataclass(frozen=True)
class BackendDescriptor:
    """How a run refers to a backend; model_tag lands in every export."""

    kind: str
    model_tag: str
    endpoint: str | None = None

    def __post_init__(self):
        if self.kind not in ("lookup", "remote"):
            raise ValueError(f"backend kind must be lookup or remote, got {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote backend requires an endpoint")


class MaskedScorer(Protocol):
    model_tag: str

    def masked_probabilities(self, query: MaskedQuery) -> list[TokenProbability]: ...


class CausalScorer(Protocol):
    model_tag: str

    def causal_log_likelihood(self, sentence: Sequence[str]) -> float: ...


def _check_length(tokens: Sequence[str], cap: int):
    if len(tokens) > cap:
        raise LengthError(f"sentence has {len(tokens)} tokens, backend cap is {cap}")


class LookupBackend:
    """Answers exactly from tables; the workhorse of the test suite.

    Masked entries are matched most-specific first:
      (context text, position, token) -> (position, token) -> token
    A table keyed by token alone is context-free: the probability of a
    token never depends on what else is masked.
    """

    def __init__(
        self,
        causal_table: dict | None = None,
        masked_table: dict | None = None,
        default: float | None = None,
        model_tag: str = "lookup",
        max_tokens: int = MAX_TOKENS,
    ):
        if default is not None:
            _validate_prob(default, "default")
        self.model_tag = model_tag
        self.max_tokens = max_tokens
        self._default = default
        self._causal = {}
        for sentence, loglik in (causal_table or {}).items():
            key = sentence if isinstance(sentence, str) else " ".join(sentence)
            if not math.isfinite(loglik):
                raise ValueError(f"causal loglik for {key!r} must be finite")
            self._causal[key] = float(loglik)
        self._by_context: dict[tuple[str, int, str], float] = {}
        self._by_position: dict[tuple[int, str], float] = {}
        self._by_token: dict[str, float] = {}
        for key, prob in (masked_table or {}).items():
            _validate_prob(prob, f"masked entry {key!r}")
            if isinstance(key, str):
                self._by_token[key] = prob
            elif len(key) == 2:
                self._by_position[(int(key[0]), key[1])] = prob
            elif len(key) == 3:
                context = key[0] if isinstance(key[0], str) else " ".join(key[0])
                self._by_context[(context, int(key[1]), key[2])] = prob
            else:
                raise ValueError(f"masked table key {key!r} must be token, (pos, token) or (context, pos, token)")

    def masked_probabilities(self, query: MaskedQuery) -> list[TokenProbability]:
        _check_length(query.tokens, self.max_tokens)
        context = query.context_text
        out = []
        for position, token in query.targets:
            prob = self._by_context.get((context, position, token))
            if prob is None:
                prob = self._by_position.get((position, token))
            if prob is None:
                prob = self._by_token.get(token)
            if prob is None:
                prob = self._default
            if prob is None:
                raise MissingEntryError(
                    f"no masked entry for token {token!r} at position {position} in {context!r}"
                )
            out.append(TokenProbability(position, token, math.log(prob)))
        return out

    def causal_log_likelihood(self, sentence: Sequence[str]) -> float:
        if not sentence:
            raise ValueError("sentence must be non-empty")
        _check_length(sentence, self.max_tokens)
        text = " ".join(sentence)
        if text in self._causal:
            return self._causal[text]
        if self._default is not None:
            # uniform-model reading of the default: per-token probability
            return len(sentence) * math.log(self._default)
        raise MissingEntryError(f"no causal entry for {text!r}")


def _validate_prob(prob: float, label: str):
    if not (0.0 < prob <= 1.0):
        raise ValueError(f"{label}: probability must be in (0, 1], got {prob}")


def make_lookup_backend(
    causal_table: dict | None = None,
    masked_table: dict | None = None,
    default: float | None = None,
    model_tag: str = "lookup",
) -> LookupBackend:
    """Construct a table-driven backend, validating probabilities up front."""
    return LookupBackend(causal_table, masked_table, default, model_tag)


def cache_key(item: MaskedQuery | Sequence[str], model_tag: str) -> str:
    """Stable content digest for a query under a given model.

    Identical inputs give identical keys across runs and platforms;
    the model tag is part of the identity so caches never bleed
    between models.
    """
    if isinstance(item, MaskedQuery):
        payload = {
            "kind": "masked",
            "tokens": list(item.tokens),
            "targets": [[p, t] for p, t in item.targets],
            "tag": model_tag,
        }
    else:
        payload = {"kind": "causal", "tokens": list(item), "tag": model_tag}
    blob = json.dumps(payload, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class ScoreCache:
    """Append-only digest -> value store, loaded into memory at startup.

    Values survive the JSON round trip bit-identically (floats are
    serialized via repr). Writes are serialized and write-once per key,
    so an idempotent retry never appends a second record.
    """

    def __init__(self, path):
        self._path = os.fspath(path)
        self._lock = threading.Lock()
        self._entries: dict[str, object] = {}
        if os.path.exists(self._path):
            with open(self._path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    self._entries[record["key"]] = record["value"]
        else:
            os.makedirs(os.path.dirname(self._path) or ".", exist_ok=True)

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str):
        return self._entries.get(key)

    def put(self, key: str, value):
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = value
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"key": key, "value": value}) + "\n")


class CachingBackend:
    """Memoizing wrapper; delegates to the inner backend on cache miss."""

    def __init__(self, inner, cache: ScoreCache):
        self._inner = inner
        self._cache = cache

    @property
    def model_tag(self) -> str:
        return self._inner.model_tag

    @property
    def max_tokens(self) -> int:
        return getattr(self._inner, "max_tokens", MAX_TOKENS)

    def masked_probabilities(self, query: MaskedQuery) -> list[TokenProbability]:
        key = cache_key(query, self.model_tag)
        logprobs = self._cache.get(key)
        if logprobs is None:
            result = self._inner.masked_probabilities(query)
            self._cache.put(key, [tp.logprob for tp in result])
            return result
        return [
            TokenProbability(position, token, logprob)
            for (position, token), logprob in zip(query.targets, logprobs)
        ]

    def causal_log_likelihood(self, sentence: Sequence[str]) -> float:
        key = cache_key(tuple(sentence), self.model_tag)
        loglik = self._cache.get(key)
        if loglik is None:
            loglik = self._inner.causal_log_likelihood(sentence)
            self._cache.put(key, loglik)
        return loglik


class RemoteBackend:
    """HTTP client for the wire protocol (POST /causal, /masked, /info).

    Requests are multiplexed up to ``max_in_flight``; transient failures
    (transport errors, 503 while the model loads) are retried with
    backoff. A 400 means the query itself is bad and is never retried.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff: float = 0.5,
        max_in_flight: int = 8,
        client: httpx.Client | None = None,
    ):
        self._endpoint = endpoint.rstrip("/")
        self._retries = max_retries
        self._backoff = backoff
        self._semaphore = threading.Semaphore(max_in_flight)
        self._client = client or httpx.Client(timeout=timeout)
        self._info: dict | None = None
        self._info_lock = threading.Lock()

    def _post(self, path: str, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self._retries + 1):
            try:
                with self._semaphore:
                    response = self._client.post(self._endpoint + path, json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
            else:
                if response.status_code == 200:
                    return response.json()
                if response.status_code == 400:
                    raise QueryError(_error_message(response))
                last_error = TransportError(
                    f"{path} returned {response.status_code}: {_error_message(response)}"
                )
            if attempt < self._retries:
                time.sleep(self._backoff * (2**attempt))
        raise TransportError(f"{self._endpoint}{path} unavailable after {self._retries + 1} attempts") from last_error

    def info(self) -> dict:
        with self._info_lock:
            if self._info is None:
                self._info = self._post("/info", {})
            return self._info

    @property
    def model_tag(self) -> str:
        return self.info()["model_tag"]

    @property
    def max_tokens(self) -> int:
        return int(self.info().get("max_tokens", MAX_TOKENS))

    def masked_probabilities(self, query: MaskedQuery) -> list[TokenProbability]:
        payload = {
            "tokens": list(query.tokens),
            "targets": [{"pos": position, "token": token} for position, token in query.targets],
        }
        logprobs = self._post("/masked", payload)["logprobs"]
        if len(logprobs) != len(query.targets):
            raise TransportError(
                f"backend returned {len(logprobs)} logprobs for {len(query.targets)} targets"
            )
        return [
            TokenProbability(position, token, float(logprob))
            for (position, token), logprob in zip(query.targets, logprobs)
        ]

    def causal_log_likelihood(self, sentence: Sequence[str]) -> float:
        if not sentence:
            raise ValueError("sentence must be non-empty")
        return float(self._post("/causal", {"tokens": list(sentence)})["loglik"])

    def close(self):
        self._client.close()


def _error_message(response: httpx.Response) -> str:
    try:
        return response.json().get("error", response.text)
    except ValueError:
        return response.text


def build_backend(descriptor: BackendDescriptor, cache: ScoreCache | None = None):
    """Resolve a descriptor into a live backend, optionally cached."""
    if descriptor.kind == "remote":
        backend = RemoteBackend(descriptor.endpoint)
    else:
        backend = LookupBackend(model_tag=descriptor.model_tag)
    if cache is not None:
        return CachingBackend(backend, cache)
    return backend
