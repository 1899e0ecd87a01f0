from __future__ import annotations

import io
from pathlib import Path

import pytest
from PIL import Image

from t2ieval.gateway import (
    BackendEndpoint,
    ChatReply,
    ImageInput,
    ModelGateway,
    ResponseCache,
)
from t2ieval.testing import InProcessTransport, SyntheticBackend


class ScriptedChatGateway:
    """Chat-only gateway double replaying a script of replies or exceptions."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.requests = []
        self.max_prompt_chars = 100_000

    def chat(self, request, endpoint):
        self.requests.append(request)
        item = self.replies.pop(0)
        if isinstance(item, Exception):
            raise item
        if isinstance(item, ChatReply):
            return item
        return ChatReply(text=item)

FIXTURES = Path(__file__).parent / "fixtures"


def make_png(width: int = 64, height: int = 48,
             color: tuple[int, int, int] = (200, 30, 30)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", (width, height), color).save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture
def png_bytes() -> bytes:
    return make_png()


@pytest.fixture
def image_input(png_bytes) -> ImageInput:
    return ImageInput.from_bytes(png_bytes)


@pytest.fixture
def synthetic_transport() -> InProcessTransport:
    return InProcessTransport(SyntheticBackend())


@pytest.fixture
def synthetic_gateway(synthetic_transport) -> ModelGateway:
    return ModelGateway(cache=ResponseCache(None, "off"),
                        transport=synthetic_transport,
                        sleeper=lambda s: None)


@pytest.fixture
def endpoints() -> dict[str, BackendEndpoint]:
    base = "http://backend.test"

    def mk(role: str, model: str) -> BackendEndpoint:
        return BackendEndpoint(role=role, base_url=base, model_id=model)

    return {
        "caption": mk("caption", "cap-1"),
        "dense_caption": mk("dense_caption", "dense-1"),
        "embed_text": mk("embed_text", "embed-1"),
        "embed_image": mk("embed_image", "embed-1"),
        "chat": mk("chat", "chat-1"),
    }
