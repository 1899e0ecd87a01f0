"""Build the multi-granularity visual description of a generated image.

A global caption plus image meta-information and a formatted line per
detected region are assembled into one prompt; a chat model fuses them into
an object-centric description covering counts, attributes, locations, and
inter-object relations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import HarnessError, PromptTooLong
from .gateway import (
    DEFAULT_MAX_PROMPT_CHARS,
    BackendEndpoint,
    ChatRequest,
    ModelGateway,
    RegionProposal,
)

DESCRIPTION_INSTRUCTION = (
    "Based on the above information of the image, generate the object-centric "
    "visual description regarding the numerical counting, shape, color, size, "
    "location, materials of the object and the spatial and interaction "
    "relationships among the objects."
)

NO_REGIONS_SENTINEL = "No regions detected."

_REGION_LINE = re.compile(
    r"^(?P<label>[^:]+): (?P<caption>.+): \[(?P<x0>-?\d+), (?P<y0>-?\d+), "
    r"(?P<x1>-?\d+), (?P<y1>-?\d+)\]$"
)


@dataclass(frozen=True)
class GlobalDescription:
    caption: str
    width: int
    height: int

    def __post_init__(self):
        if not self.caption:
            raise ValueError("caption must be non-empty")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")


@dataclass(frozen=True)
class LocalDescription:
    regions: tuple[RegionProposal, ...]

    @classmethod
    def of(cls, regions) -> "LocalDescription":
        return cls(regions=tuple(regions))


@dataclass(frozen=True)
class ObjectCentricDescription:
    text: str
    source_global: GlobalDescription
    source_local: LocalDescription
    descriptor_model_id: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("description text must be non-empty")


def format_global(g: GlobalDescription) -> str:
    """"Image caption: <caption>. Image resolution: <w>x<h>." (one period)."""
    caption = g.caption.rstrip(".")
    return f"Image caption: {caption}. Image resolution: {g.width}x{g.height}."


def format_region(r: RegionProposal) -> str:
    """One region line: "<label>: <caption>: [x0, y0, x1, y1]"."""
    x0, y0, x1, y1 = r.bbox
    return f"{r.object_label}: {r.dense_caption}: [{x0}, {y0}, {x1}, {y1}]"


def parse_region_line(line: str) -> tuple[str, str, tuple[int, int, int, int]] | None:
    """Best-effort inverse of :func:`format_region`.

    Labels containing ": " cannot be recovered unambiguously (fields are
    position-delimited, not escaped); for such lines the split is greedy on
    the first ": ".
    """
    m = _REGION_LINE.match(line)
    if not m:
        return None
    bbox = tuple(int(m.group(k)) for k in ("x0", "y0", "x1", "y1"))
    return m.group("label"), m.group("caption"), bbox  # type: ignore[return-value]


def compose_description_prompt(g: GlobalDescription, l: LocalDescription,
                               max_chars: int = DEFAULT_MAX_PROMPT_CHARS,
                               max_tokens: int = 512) -> ChatRequest:
    """Deterministically assemble the description-fusion prompt.

    Layout: global block, one line per region (input order, sentinel when
    empty), then the fusion instruction. Pure function of its inputs.
    """
    lines = [format_global(g)]
    if l.regions:
        lines.extend(format_region(r) for r in l.regions)
    else:
        lines.append(NO_REGIONS_SENTINEL)
    lines.append(DESCRIPTION_INSTRUCTION)
    user_text = "\n".join(lines)
    if len(user_text) > max_chars:
        raise PromptTooLong(
            f"description prompt of {len(user_text)} chars over budget "
            f"{max_chars} ({len(l.regions)} regions)",
            length=len(user_text), budget=max_chars, region_count=len(l.regions))
    return ChatRequest(user_text=user_text, max_tokens=max_tokens)


def synthesize_description(g: GlobalDescription, l: LocalDescription,
                           gateway: ModelGateway,
                           endpoint: BackendEndpoint) -> ObjectCentricDescription:
    """Fuse global and local descriptions through the chat backend.

    A truncated completion triggers one automatic re-ask at twice the token
    budget; if that is still truncated, the truncated text is kept.
    """
    request = compose_description_prompt(g, l, max_chars=gateway.max_prompt_chars)
    try:
        reply = gateway.chat(request, endpoint)
        if reply.truncated:
            retry = ChatRequest(user_text=request.user_text,
                                temperature=request.temperature,
                                max_tokens=request.max_tokens * 2,
                                decode_mode=request.decode_mode)
            reply = gateway.chat(retry, endpoint)
    except HarnessError as exc:
        if exc.stage is None:
            exc.stage = "descriptor"
        raise
    return ObjectCentricDescription(text=reply.text, source_global=g,
                                    source_local=l,
                                    descriptor_model_id=endpoint.model_id)
