"""Uniform client layer for the four external model roles.

Every call goes through a content-addressed record/replay cache keyed by the
canonical request serialization (see ``t2ieval.protocol``), so a populated
cache makes whole pipeline runs deterministic and offline. Network calls get
per-endpoint rate limiting, bounded retries, and schema validation.
"""

from __future__ import annotations

import base64
import io
import json
import os
import threading
import time
import warnings
from collections import deque
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Protocol

from PIL import Image

from . import protocol
from .errors import (
    BackendContractViolation,
    BackendUnavailable,
    CacheMiss,
    ClampWarning,
    MalformedBackendReply,
    PromptTooLong,
)

DEFAULT_MAX_PROMPT_CHARS = 100_000

CACHE_MODES = ("off", "record", "replay")


@dataclass(frozen=True)
class BackendEndpoint:
    """Connection settings for one model role on one server."""

    role: str
    base_url: str
    model_id: str
    timeout: float = 30.0
    max_retries: int = 2
    requests_per_minute: int = 60
    name: str | None = None
    # dense_caption knobs; the backend is never asked to filter
    min_confidence: float = 0.5
    max_regions: int | None = None

    def __post_init__(self):
        if self.role not in protocol.ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.requests_per_minute < 1:
            raise ValueError("requests_per_minute must be >= 1")

    @property
    def url(self) -> str:
        return self.base_url.rstrip("/") + protocol.ROLE_PATHS[self.role]

    def api_key(self) -> str | None:
        env = f"{(self.name or self.role).upper()}_API_KEY"
        return os.environ.get(env)


@dataclass(frozen=True)
class ChatRequest:
    system_text: str = ""
    user_text: str = ""
    temperature: float = 0.7
    max_tokens: int = 512
    decode_mode: str = "greedy"

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.decode_mode not in ("greedy", "sampled"):
            raise ValueError(f"unknown decode_mode {self.decode_mode!r}")

    def messages(self) -> list[dict[str, str]]:
        msgs = []
        if self.system_text:
            msgs.append({"role": "system", "content": self.system_text})
        msgs.append({"role": "user", "content": self.user_text})
        return msgs


@dataclass(frozen=True)
class ChatReply:
    """Raw completion text plus a flag for hitting the max_tokens ceiling."""

    text: str
    truncated: bool = False


@dataclass(frozen=True)
class RegionProposal:
    object_label: str
    dense_caption: str
    bbox: tuple[int, int, int, int]
    confidence: float

    def __post_init__(self):
        if not self.object_label or not self.dense_caption:
            raise ValueError("object_label and dense_caption must be non-empty")
        x0, y0, x1, y1 = self.bbox
        if x0 > x1 or y0 > y1:
            raise ValueError(f"inverted bbox {self.bbox}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")


@dataclass(frozen=True)
class ImageInput:
    """Image file bytes plus decoded pixel dimensions."""

    data: bytes
    width: int
    height: int

    @classmethod
    def from_bytes(cls, data: bytes) -> "ImageInput":
        try:
            with Image.open(io.BytesIO(data)) as im:
                width, height = im.size
        except Exception as exc:
            raise ValueError(f"image is not decodable: {exc}") from exc
        return cls(data=data, width=width, height=height)

    @classmethod
    def from_file(cls, path: str | Path) -> "ImageInput":
        return cls.from_bytes(Path(path).read_bytes())

    @property
    def b64(self) -> str:
        return base64.b64encode(self.data).decode("ascii")


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class ResponseCache:
    """Directory of hash-named fixture files, one per backend exchange.

    Layout is ``<root>/<role>/<request key>.json`` as documented in
    PROTOCOL.md. Writes are atomic (temp file + rename), so concurrent
    writers of the same key settle on one complete file; the content is
    identical by construction anyway.
    """

    def __init__(self, root: str | Path | None, mode: str = "off",
                 clock: Callable[[], str] = _utc_now_iso):
        if mode not in CACHE_MODES:
            raise ValueError(f"unknown cache mode {mode!r}")
        if mode != "off" and root is None:
            raise ValueError(f"cache mode {mode!r} needs a cache directory")
        self.root = Path(root) if root is not None else None
        self.mode = mode
        self.clock = clock
        self._write_lock = threading.Lock()

    def path(self, role: str, key: str) -> Path:
        assert self.root is not None
        return self.root / role / f"{key}.json"

    def lookup(self, role: str, key: str) -> str | None:
        """Return the recorded raw response body, or None."""
        if self.mode == "off":
            return None
        path = self.path(role, key)
        if not path.exists():
            return None
        entry = json.loads(path.read_text("utf-8"))
        return entry["response"]

    def store(self, role: str, key: str, request_payload: dict, response_text: str) -> None:
        if self.mode != "record":
            return
        path = self.path(role, key)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {
            "request": request_payload,
            "response": response_text,
            "created_at": self.clock(),
        }
        with self._write_lock:
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(entry, sort_keys=True, indent=2, ensure_ascii=False),
                           encoding="utf-8")
            tmp.replace(path)

    def entries(self):
        """Yield (role, key, path) for every recorded exchange."""
        if self.root is None or not self.root.exists():
            return
        for role_dir in sorted(self.root.iterdir()):
            if not role_dir.is_dir():
                continue
            for f in sorted(role_dir.glob("*.json")):
                yield role_dir.name, f.stem, f


class TransportFailure(Exception):
    """Network-level failure; retried by the gateway up to max_retries."""


class Transport(Protocol):
    def post(self, url: str, payload: dict, headers: dict[str, str],
             timeout: float) -> tuple[int, str]: ...


class HttpTransport:
    """Thin httpx-based transport. One POST per call, no connection reuse."""

    def post(self, url: str, payload: dict, headers: dict[str, str],
             timeout: float) -> tuple[int, str]:
        import httpx

        try:
            resp = httpx.post(url, json=payload, headers=headers, timeout=timeout)
        except httpx.HTTPError as exc:
            raise TransportFailure(str(exc)) from exc
        return resp.status_code, resp.text


class RateLimiter:
    """Sliding-window limiter: at most ``rpm`` acquisitions per 60 seconds."""

    def __init__(self, rpm: int, time_source: Callable[[], float],
                 sleeper: Callable[[float], None]):
        self.rpm = rpm
        self.time_source = time_source
        self.sleeper = sleeper
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.time_source()
                while self._stamps and now - self._stamps[0] >= 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self.rpm:
                    self._stamps.append(now)
                    return
                wait = self._stamps[0] + 60.0 - now
            self.sleeper(max(wait, 0.0))


class ModelGateway:
    """Issues caption/dense/embed/chat calls with caching, retries, limits."""

    def __init__(self, cache: ResponseCache | None = None,
                 transport: Transport | None = None,
                 time_source: Callable[[], float] = time.monotonic,
                 sleeper: Callable[[float], None] = time.sleep,
                 max_in_flight: int = 8,
                 max_prompt_chars: int = DEFAULT_MAX_PROMPT_CHARS,
                 retry_backoff: float = 0.25):
        self.cache = cache if cache is not None else ResponseCache(None, "off")
        self._transport = transport
        self.time_source = time_source
        self.sleeper = sleeper
        self.max_in_flight = max_in_flight
        self.max_prompt_chars = max_prompt_chars
        self.retry_backoff = retry_backoff
        self._limiters: dict[tuple, RateLimiter] = {}
        self._slots: dict[tuple, threading.BoundedSemaphore] = {}
        self._embed_dims: dict[str, int] = {}
        self._lock = threading.Lock()

    @property
    def transport(self) -> Transport:
        if self._transport is None:
            self._transport = HttpTransport()
        return self._transport

    def _limiter(self, endpoint: BackendEndpoint) -> RateLimiter:
        key = (endpoint.role, endpoint.base_url, endpoint.model_id)
        with self._lock:
            if key not in self._limiters:
                self._limiters[key] = RateLimiter(endpoint.requests_per_minute,
                                                  self.time_source, self.sleeper)
            return self._limiters[key]

    def _slot(self, endpoint: BackendEndpoint) -> threading.BoundedSemaphore:
        key = (endpoint.role, endpoint.base_url, endpoint.model_id)
        with self._lock:
            if key not in self._slots:
                self._slots[key] = threading.BoundedSemaphore(self.max_in_flight)
            return self._slots[key]

    # -- core request path -------------------------------------------------

    def _execute(self, endpoint: BackendEndpoint, payload: dict) -> dict:
        key = protocol.request_key(endpoint.role, endpoint.model_id, payload)

        cached = self.cache.lookup(endpoint.role, key)
        if cached is not None:
            return self._decode(endpoint.role, cached)
        if self.cache.mode == "replay":
            raise CacheMiss(
                f"replay cache has no entry for {endpoint.role} request {key}",
                key=key, role=endpoint.role)

        headers = {}
        api_key = endpoint.api_key()
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        attempts = endpoint.max_retries + 1
        body: str | None = None
        last_failure: str | None = None
        with self._slot(endpoint):
            for attempt in range(attempts):
                self._limiter(endpoint).acquire()
                try:
                    status, text = self.transport.post(endpoint.url, payload,
                                                       headers, endpoint.timeout)
                except TransportFailure as exc:
                    last_failure = str(exc)
                    status = None
                if status is None or status >= 500:
                    if status is not None:
                        last_failure = f"server error {status}"
                    if attempt + 1 < attempts:
                        self.sleeper(self.retry_backoff * (2 ** attempt))
                    continue
                if status != 200:
                    raise BackendUnavailable(
                        f"{endpoint.role} backend answered {status}: {text[:200]}",
                        attempts=attempt + 1)
                body = text
                break
            else:
                raise BackendUnavailable(
                    f"{endpoint.role} backend unreachable after {attempts} attempts: "
                    f"{last_failure}", attempts=attempts)

        assert body is not None
        parsed = self._decode(endpoint.role, body)
        self.cache.store(endpoint.role, key, payload, body)
        return parsed

    def _decode(self, role: str, body: str) -> dict:
        try:
            parsed = json.loads(body)
        except json.JSONDecodeError as exc:
            raise MalformedBackendReply(f"{role} reply is not JSON: {exc}") from exc
        violations = protocol.validate_response(role, parsed)
        if violations:
            raise MalformedBackendReply(
                f"{role} reply violates the protocol: {violations[0]}")
        return parsed

    # -- role operations ----------------------------------------------------

    def caption(self, image: ImageInput, endpoint: BackendEndpoint) -> str:
        self._require_role(endpoint, "caption")
        payload = {"model": endpoint.model_id, "image_b64": image.b64}
        reply = self._execute(endpoint, payload)
        caption = " ".join(reply["caption"].split())
        if not caption:
            raise MalformedBackendReply("caption backend returned an empty caption")
        return caption

    def dense_regions(self, image: ImageInput,
                      endpoint: BackendEndpoint) -> list[RegionProposal]:
        self._require_role(endpoint, "dense_caption")
        payload = {"model": endpoint.model_id, "image_b64": image.b64}
        reply = self._execute(endpoint, payload)
        proposals = []
        for raw in reply["regions"]:
            bbox = self._clamp_bbox(raw["bbox"], image.width, image.height)
            proposal = RegionProposal(object_label=raw["label"],
                                      dense_caption=raw["caption"],
                                      bbox=bbox, confidence=raw["confidence"])
            if proposal.confidence < endpoint.min_confidence:
                continue
            proposals.append(proposal)
        if endpoint.max_regions is not None:
            proposals = proposals[:endpoint.max_regions]
        return proposals

    @staticmethod
    def _clamp_bbox(bbox: list[float], width: int, height: int) -> tuple[int, int, int, int]:
        x0, y0, x1, y1 = bbox
        if x0 > x1 or y0 > y1:
            raise MalformedBackendReply(f"inverted bbox {bbox}")
        clamped = (min(max(x0, 0), width), min(max(y0, 0), height),
                   min(max(x1, 0), width), min(max(y1, 0), height))
        if tuple(bbox) != clamped:
            warnings.warn(
                f"bbox {bbox} clamped to image bounds {width}x{height}",
                ClampWarning, stacklevel=3)
        return tuple(int(round(v)) for v in clamped)

    def embed(self, text_or_image: str | ImageInput,
              endpoint: BackendEndpoint) -> list[float]:
        if isinstance(text_or_image, str):
            self._require_role(endpoint, "embed_text")
            payload = {"model": endpoint.model_id, "text": text_or_image}
        else:
            self._require_role(endpoint, "embed_image")
            payload = {"model": endpoint.model_id, "image_b64": text_or_image.b64}
        reply = self._execute(endpoint, payload)
        vector = [float(v) for v in reply["embedding"]]
        with self._lock:
            dim = self._embed_dims.setdefault(endpoint.model_id, len(vector))
        if dim != len(vector):
            raise BackendContractViolation(
                f"model {endpoint.model_id} returned {len(vector)}-d embedding, "
                f"expected {dim}-d")
        return vector

    def chat(self, request: ChatRequest, endpoint: BackendEndpoint) -> ChatReply:
        self._require_role(endpoint, "chat")
        prompt_chars = len(request.system_text) + len(request.user_text)
        if prompt_chars > self.max_prompt_chars:
            raise PromptTooLong(
                f"prompt of {prompt_chars} chars exceeds budget {self.max_prompt_chars}",
                length=prompt_chars, budget=self.max_prompt_chars)
        payload = {
            "model": endpoint.model_id,
            "messages": request.messages(),
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        reply = self._execute(endpoint, payload)
        choice = reply["choices"][0]
        return ChatReply(text=choice["message"]["content"],
                         truncated=choice.get("finish_reason") == "length")

    @staticmethod
    def _require_role(endpoint: BackendEndpoint, expected: str) -> None:
        if endpoint.role != expected:
            raise ValueError(
                f"operation needs a {expected!r} endpoint, got {endpoint.role!r}")
