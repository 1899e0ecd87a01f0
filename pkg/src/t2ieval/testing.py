"""Deterministic in-process backend for offline runs and tests.

``SyntheticBackend`` answers all four wire roles as a pure function of the
request payload: identical requests always get identical, schema-valid
responses, with content varied by the request hash. ``InProcessTransport``
plugs it into a :class:`~t2ieval.gateway.ModelGateway` without any sockets,
which is how the committed replay fixtures were recorded.
"""

from __future__ import annotations

import base64
import hashlib
import io
import re
from urllib.parse import urlparse

from PIL import Image

from . import protocol
from .descriptor import DESCRIPTION_INSTRUCTION, parse_region_line

_NOUNS = ("car", "sheep", "book", "vase", "dog", "boat", "lamp", "tree")
_ADJECTIVES = ("red", "white", "yellow", "blue", "green", "small", "large", "wooden")

_SCALE_RE = re.compile(r"between 1 and (\d+)")


def _digest(payload: dict) -> bytes:
    return hashlib.sha256(protocol.canonical_json(payload).encode("utf-8")).digest()


def _pick(seq, byte: int):
    return seq[byte % len(seq)]


class SyntheticBackend:
    """Schema-conformant stand-in for caption/dense/embed/chat servers."""

    def __init__(self, embed_dim: int = 16):
        self.embed_dim = embed_dim

    def respond(self, path: str, payload: dict) -> dict:
        role = protocol.infer_role(path, payload)
        violations = protocol.validate_request(role, payload)
        if violations:
            raise ValueError(f"synthetic backend got a bad request: {violations[0]}")
        if role == "caption":
            return {"caption": self._caption_text(payload)}
        if role == "dense_caption":
            return {"regions": self._regions(payload)}
        if role in ("embed_text", "embed_image"):
            return {"embedding": self._embedding(payload)}
        return {"choices": [{"message": {"content": self._chat_text(payload)},
                             "finish_reason": "stop"}]}

    # -- per-role content ----------------------------------------------------

    def _caption_text(self, payload: dict) -> str:
        d = _digest(payload)
        return (f"a {_pick(_ADJECTIVES, d[0])} {_pick(_NOUNS, d[1])} and "
                f"a {_pick(_ADJECTIVES, d[2])} {_pick(_NOUNS, d[3])}")

    def _regions(self, payload: dict) -> list[dict]:
        d = _digest(payload)
        with Image.open(io.BytesIO(base64.b64decode(payload["image_b64"]))) as im:
            w, h = im.size
        first = _pick(_NOUNS, d[4])
        second = _pick(_NOUNS, d[5])
        return [
            {"label": first,
             "caption": f"a {_pick(_ADJECTIVES, d[6])} {first}",
             "bbox": [0, 0, max(w // 2, 1), max(h // 2, 1)],
             "confidence": 0.9},
            {"label": second,
             "caption": f"a {_pick(_ADJECTIVES, d[7])} {second}",
             "bbox": [w // 4, h // 4, w, h],
             "confidence": 0.8},
        ]

    def _embedding(self, payload: dict) -> list[float]:
        seed = _digest(payload)
        values = []
        counter = 0
        material = seed
        while len(values) < self.embed_dim:
            for b in material:
                values.append(b / 127.5 - 1.0)
                if len(values) == self.embed_dim:
                    break
            counter += 1
            material = hashlib.sha256(seed + bytes([counter])).digest()
        return values

    def _chat_text(self, payload: dict) -> str:
        user_text = ""
        for message in payload["messages"]:
            if message["role"] == "user":
                user_text = message["content"]
        d = _digest(payload)

        if DESCRIPTION_INSTRUCTION in user_text:
            return self._fused_description(user_text)
        if 'Respond with a line "SCORE:' in user_text:
            m = _SCALE_RE.search(user_text)
            n = int(m.group(1)) if m else 100
            return f"SCORE: {1 + d[8] % n}"
        if 'Respond with a line "ERRORS:' in user_text:
            return f"ERRORS: {d[9] % 7}"
        if '"X1: <integer>"' in user_text:
            x1 = 1 + d[10] % 3
            y1 = 1 + d[11] % 3
            return (f"X1: {x1}\nX2: {d[12] % (x1 + 1)}\n"
                    f"Y1: {y1}\nY2: {d[13] % (y1 + 1)}")
        if "Explain the overall rating" in user_text:
            return ("The rating reflects how closely the described objects and "
                    "their attributes follow the text prompt, weighed against "
                    f"mismatches observed in the description (case {d[14]:02x}).")
        if "Explain the error counting" in user_text:
            return ("Each counted error corresponds to an object or attribute "
                    "from the text prompt that the description contradicts or "
                    f"omits (case {d[15]:02x}).")
        return user_text

    @staticmethod
    def _fused_description(user_text: str) -> str:
        resolution = ""
        mentions = []
        for line in user_text.splitlines():
            if line.startswith("Image caption:"):
                resolution = line
            parsed = parse_region_line(line)
            if parsed:
                label, caption, bbox = parsed
                mentions.append(f"one {label} ({caption}) near {list(bbox)}")
        if not mentions:
            return f"The image contains no distinct objects. {resolution}"
        return f"The image shows {'; '.join(mentions)}. {resolution}"


class InProcessTransport:
    """Routes gateway POSTs straight into a backend object; never a socket."""

    def __init__(self, backend: SyntheticBackend):
        self.backend = backend
        self.calls: list[tuple[str, dict]] = []

    def post(self, url: str, payload: dict, headers: dict[str, str],
             timeout: float) -> tuple[int, str]:
        path = urlparse(url).path
        self.calls.append((path, payload))
        response = self.backend.respond(path, payload)
        return 200, protocol.canonical_json(response)
