"""Turn free-form LLM completions into typed values.

Two layers: a strict tagged format that every evaluation prompt asks for
("SCORE: 87", "X1: 2", ...), and a lenient prose fallback that fishes the
first plausible integer out of an untagged reply.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field

from .errors import DuplicateTagWarning

TAG_NAMES = ("SCORE", "ERRORS", "X1", "X2", "Y1", "Y2", "RATIONALE")

_TAG_LINE = re.compile(
    r"^\s*(?P<tag>" + "|".join(TAG_NAMES) + r")\s*:\s*(?P<value>.*?)\s*$",
    re.IGNORECASE,
)

_NUMBER_TOKEN = re.compile(r"(?<![\w.])(\d+(?:\.\d+)?)(?![\w.])")
_KEYWORD = re.compile(r"\b(scores?|scored|ratings?|rated?|errors?)\b", re.IGNORECASE)
# a period between digits is a decimal point, not a sentence boundary
_SENTENCE_SPLIT = re.compile(r"(?:[!?\n]|\.(?!\d))+")


_LEADING_NUMBER = re.compile(r"^[+-]?\d+(?:\.\d+)?")


@dataclass
class TaggedReply:
    """Tag -> raw string value, tags canonicalized to uppercase."""

    fields: dict[str, str] = field(default_factory=dict)

    def get_int(self, tag: str) -> int | None:
        """Integer value of a tag; tolerates decimals and trailing prose.

        "87" -> 87, "1.9" -> 2 (half away from zero), "2 objects" -> 2,
        "two" -> None.
        """
        raw = self.fields.get(tag.upper())
        if raw is None:
            return None
        raw = raw.strip()
        try:
            return int(raw)
        except ValueError:
            pass
        m = _LEADING_NUMBER.match(raw)
        if m is None:
            return None
        return _round_half_away(float(m.group(0)))


def parse_tagged(reply: str) -> TaggedReply:
    """Scan ``reply`` line by line for "TAG: value" entries.

    Tag matching is case- and whitespace-insensitive. A repeated tag keeps
    its first value and emits a :class:`DuplicateTagWarning`; absent tags are
    simply missing from the result.
    """
    fields: dict[str, str] = {}
    for line in reply.splitlines():
        m = _TAG_LINE.match(line)
        if not m:
            continue
        tag = m.group("tag").upper()
        if tag in fields:
            warnings.warn(f"duplicate tag {tag}; keeping the first occurrence",
                          DuplicateTagWarning, stacklevel=2)
            continue
        fields[tag] = m.group("value")
    return TaggedReply(fields)


def render_tagged(reply: TaggedReply) -> str:
    """Inverse of :func:`parse_tagged` for newline-free values."""
    return "\n".join(f"{tag}: {value}" for tag, value in reply.fields.items())


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def parse_integer_fallback(reply: str, lo: int, hi: int) -> int | None:
    """Return the first standalone integer in ``[lo, hi]`` found in prose.

    Decimal tokens are rounded half-away-from-zero before the range check.
    When several candidates exist, one sharing a sentence with "score",
    "rating", or "errors" wins, nearest such keyword first. Returns None when
    nothing in range is found.
    """
    if lo > hi:
        raise ValueError("lo must not exceed hi")

    candidates: list[tuple[int, int, int]] = []  # (position, value, keyword_distance)
    for sentence_match in _iter_sentences(reply):
        sentence, offset = sentence_match
        keyword_positions = [m.start() for m in _KEYWORD.finditer(sentence)]
        for m in _NUMBER_TOKEN.finditer(sentence):
            value = _round_half_away(float(m.group(1)))
            if not lo <= value <= hi:
                continue
            if keyword_positions:
                distance = min(abs(m.start() - k) for k in keyword_positions)
            else:
                distance = -1
            candidates.append((offset + m.start(), value, distance))

    if not candidates:
        return None
    keyword_hits = [c for c in candidates if c[2] >= 0]
    if keyword_hits:
        keyword_hits.sort(key=lambda c: (c[2], c[0]))
        return keyword_hits[0][1]
    return min(candidates)[1]


def _iter_sentences(text: str):
    pos = 0
    for m in _SENTENCE_SPLIT.finditer(text):
        yield text[pos:m.start()], pos
        pos = m.end()
    if pos < len(text):
        yield text[pos:], pos


def parse_atomic(reply: str) -> tuple[int, int, int, int] | None:
    """Extract (x1, x2, y1, y2) from a tagged reply; None unless all four parse."""
    tagged = parse_tagged(reply)
    values = []
    for tag in ("X1", "X2", "Y1", "Y2"):
        v = tagged.get_int(tag)
        if v is None or v < 0:
            return None
        values.append(v)
    return tuple(values)  # type: ignore[return-value]
