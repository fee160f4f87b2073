"""FastAPI service speaking the scoring wire protocol.

POST /causal {"tokens": [...]}                      -> {"loglik": float}
POST /masked {"tokens": [...], "targets": [...]}    -> {"logprobs": [...]}
POST /info                                          -> {"model_tag", "max_tokens"}

Malformed queries get HTTP 400 with {"error": ...}; until both models
are loaded every endpoint answers 503.
"""

from __future__ import annotations

import json
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .scoring import BridgeError, CausalScorer, MaskedWordScorer


class ServiceState:
    def __init__(self, model_tag: str, max_tokens: int):
        self.model_tag = model_tag
        self.max_tokens = max_tokens
        self.masked: MaskedWordScorer | None = None
        self.causal: CausalScorer | None = None

    @property
    def ready(self) -> bool:
        return self.masked is not None and self.causal is not None


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


async def _read_json(request: Request) -> dict:
    body = await request.body()
    if not body:
        return {}
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise BridgeError(f"request body is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise BridgeError("request body must be a JSON object")
    return payload


def _string_list(payload: dict, key: str) -> list[str]:
    value = payload.get(key)
    if not isinstance(value, list) or not value or not all(isinstance(v, str) for v in value):
        raise BridgeError(f"{key!r} must be a non-empty list of strings")
    return value


def create_app(
    masked: MaskedWordScorer | str | None,
    causal: CausalScorer | str | None,
    model_tag: str | None = None,
    max_tokens: int = 128,
) -> FastAPI:
    """Build the service.

    Scorers may be passed ready-made (tests) or as pretrained model
    names, in which case loading happens at startup and the service
    answers 503 until both finish.
    """
    tag = model_tag or f"{_name_of(masked)}+{_name_of(causal)}"
    state = ServiceState(tag, max_tokens)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if state.masked is None and isinstance(masked, str):
            state.masked = MaskedWordScorer.from_pretrained(masked, max_tokens)
        if state.causal is None and isinstance(causal, str):
            state.causal = CausalScorer.from_pretrained(causal, max_tokens)
        yield

    app = FastAPI(title="triplemine-bridge", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.service = state

    if isinstance(masked, MaskedWordScorer):
        state.masked = masked
    if isinstance(causal, CausalScorer):
        state.causal = causal

    @app.post("/info")
    async def info():
        if not state.ready:
            return _error(503, "models not loaded")
        return {"model_tag": state.model_tag, "max_tokens": state.max_tokens}

    @app.post("/causal")
    async def causal_endpoint(request: Request):
        if not state.ready:
            return _error(503, "models not loaded")
        try:
            payload = await _read_json(request)
            tokens = _string_list(payload, "tokens")
            return {"loglik": state.causal.sentence_loglik(tokens)}
        except BridgeError as exc:
            return _error(400, str(exc))

    @app.post("/masked")
    async def masked_endpoint(request: Request):
        if not state.ready:
            return _error(503, "models not loaded")
        try:
            payload = await _read_json(request)
            tokens = _string_list(payload, "tokens")
            raw_targets = payload.get("targets")
            if not isinstance(raw_targets, list) or not raw_targets:
                raise BridgeError("'targets' must be a non-empty list")
            targets = []
            for item in raw_targets:
                if not isinstance(item, dict) or "pos" not in item or "token" not in item:
                    raise BridgeError("each target needs 'pos' and 'token'")
                targets.append((item["pos"], item["token"]))
            return {"logprobs": state.masked.word_logprobs(tokens, targets)}
        except BridgeError as exc:
            return _error(400, str(exc))

    return app


def _name_of(scorer) -> str:
    if isinstance(scorer, str):
        return scorer
    if scorer is None:
        return "none"
    return getattr(getattr(scorer, "model", None), "name_or_path", None) or type(scorer).__name__
