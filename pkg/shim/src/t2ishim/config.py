from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_REAL_BINDINGS = {
    "caption": "Salesforce/blip-image-captioning-base",
    "dense_caption": "facebook/detr-resnet-50",
    "embed": "sentence-transformers/clip-ViT-B-32",
    "chat": "Qwen/Qwen2.5-0.5B-Instruct",
}


@dataclass
class ShimConfig:
    """Server settings; mock mode needs a fixture directory, real mode models."""

    mode: str = "mock"
    fixture_dir: str | Path | None = None
    port: int = 8099
    host: str = "127.0.0.1"
    bindings: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("mock", "real"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "mock":
            if self.fixture_dir is None:
                raise ValueError("mock mode needs a fixture_dir")
            self.fixture_dir = Path(self.fixture_dir)
        if self.mode == "real":
            merged = dict(DEFAULT_REAL_BINDINGS)
            merged.update(self.bindings)
            self.bindings = merged
