"""LLM-as-judge scoring of text/image alignment.

Two rating routes share one prompt layout: instruction-following rating asks
for an integer on a wide 1-N scale and divides by N, which forces decimal
resolution out of a model that only emits discrete tokens; rule-enhanced
rating asks four atomic counting questions (objects and attributes, specified
vs. matched) and combines them with a fixed formula. Every score can carry a
one-paragraph rationale from a follow-up ask.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .descriptor import ObjectCentricDescription
from .errors import (
    AtomicParseFailure,
    ClampWarning,
    HarnessError,
    PromptTooLong,
    RatingParseFailure,
)
from .gateway import (
    DEFAULT_MAX_PROMPT_CHARS,
    BackendEndpoint,
    ChatRequest,
    ModelGateway,
)
from .parsing import parse_atomic, parse_integer_fallback, parse_tagged

OVERALL_INSTRUCTION = (
    "Rate the overall quality of the image in terms of matching the text prompt."
)
ERROR_COUNTING_INSTRUCTION = (
    "Provide the number of compositional errors in the image compared to the "
    "text prompt."
)
ERROR_TYPE_GUIDANCE = (
    "The error type is defined as the object-level difference. For example, a "
    "counting, shape, color, or size difference between the image and the text "
    "prompt should be counted as one error."
)
ERROR_TAXONOMY = (
    "Count these error types: 1) compositional errors: wrong attributes (color, "
    "spatial position, shape, size, material) of the objects or wrong "
    "relationships among objects; 2) missing object errors: objects mentioned "
    "in the text prompt are not present in the image; 3) over-specification "
    "errors: the image contains irrelevant objects that are not specified in "
    "the text prompt."
)
ATOMIC_INSTRUCTION = (
    "Answer the following atomic tasks about the match between the text prompt "
    "and the image. X1: the number of objects specified in the text prompt. "
    "X2: the number of those objects matched in the image. Y1: the number of "
    "attributes specified in the text prompt. Y2: the number of those "
    "attributes matched in the image."
)

# The 0-9 annotation scale caps how many errors can count against an image.
ERROR_CAP = 9

OBJECTIVE_KINDS = ("overall", "error_counting", "custom")
MODES = ("instruction_following", "rule_enhanced", "baseline")


@dataclass(frozen=True)
class Objective:
    kind: str
    instruction_text: str

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise ValueError(f"unknown objective kind {self.kind!r}")
        expected = {"overall": OVERALL_INSTRUCTION,
                    "error_counting": ERROR_COUNTING_INSTRUCTION}.get(self.kind)
        if expected is not None and self.instruction_text != expected:
            raise ValueError(f"{self.kind} objective must use its fixed instruction")
        if not self.instruction_text:
            raise ValueError("instruction_text must be non-empty")

    @classmethod
    def overall(cls) -> "Objective":
        return cls("overall", OVERALL_INSTRUCTION)

    @classmethod
    def error_counting(cls) -> "Objective":
        return cls("error_counting", ERROR_COUNTING_INSTRUCTION)

    @classmethod
    def custom(cls, instruction_text: str) -> "Objective":
        return cls("custom", instruction_text)

    @classmethod
    def of(cls, kind: str) -> "Objective":
        if kind == "overall":
            return cls.overall()
        if kind == "error_counting":
            return cls.error_counting()
        raise ValueError("custom objectives need an instruction text")


@dataclass(frozen=True)
class RatingScale:
    n: int = 100

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("rating scale needs n >= 2")


@dataclass(frozen=True)
class AtomicCounts:
    x1: int  # objects specified in the prompt
    x2: int  # objects matched in the image
    y1: int  # attributes specified in the prompt
    y2: int  # attributes matched in the image

    def __post_init__(self):
        for name, v in (("x1", self.x1), ("x2", self.x2),
                        ("y1", self.y1), ("y2", self.y2)):
            if v < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.x2 > self.x1 or self.y2 > self.y1:
            raise ValueError("matched counts cannot exceed specified counts")

    @classmethod
    def from_raw(cls, x1: int, x2: int, y1: int, y2: int) -> "AtomicCounts":
        """Build counts from model output, clamping over-reported matches."""
        if x2 > x1:
            warnings.warn(f"X2={x2} exceeds X1={x1}; clamped", ClampWarning,
                          stacklevel=2)
            x2 = x1
        if y2 > y1:
            warnings.warn(f"Y2={y2} exceeds Y1={y1}; clamped", ClampWarning,
                          stacklevel=2)
            y2 = y1
        return cls(x1, x2, y1, y2)


@dataclass
class ScoreRecord:
    """One scored (pair, objective) unit, in any of the three modes."""

    pair_id: str
    objective: Objective | None
    mode: str
    raw_value: float
    normalized_score: float
    rationale: str = ""
    atomic_counts: AtomicCounts | None = None
    variant: str | None = None  # baseline metric name, e.g. "CapCLIP"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0.0 <= self.normalized_score <= 1.0:
            raise ValueError("normalized_score must lie in [0, 1]")
        if self.mode == "rule_enhanced" and self.atomic_counts is None:
            raise ValueError("rule_enhanced records must carry atomic counts")

    def to_dict(self) -> dict:
        out = {
            "pair_id": self.pair_id,
            "objective": self.objective.kind if self.objective else None,
            "mode": self.mode,
            "raw_value": self.raw_value,
            "normalized_score": self.normalized_score,
            "rationale": self.rationale,
        }
        if self.atomic_counts is not None:
            c = self.atomic_counts
            out["atomic_counts"] = {"x1": c.x1, "x2": c.x2, "y1": c.y1, "y2": c.y2}
        if self.variant is not None:
            out["variant"] = self.variant
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreRecord":
        counts = d.get("atomic_counts")
        objective = Objective.of(d["objective"]) if d.get("objective") else None
        return cls(
            pair_id=d["pair_id"], objective=objective, mode=d["mode"],
            raw_value=d["raw_value"], normalized_score=d["normalized_score"],
            rationale=d.get("rationale", ""),
            atomic_counts=AtomicCounts(**counts) if counts else None,
            variant=d.get("variant"),
        )


# -- prompt assembly ---------------------------------------------------------


def _context_block(prompt_text: str, description: ObjectCentricDescription) -> list[str]:
    return [f'Text prompt: "{prompt_text}"',
            f"Visual description: {description.text}"]


def build_eval_prompt(prompt_text: str, description: ObjectCentricDescription,
                      obj: Objective, scale: RatingScale,
                      max_chars: int = DEFAULT_MAX_PROMPT_CHARS) -> ChatRequest:
    """Assemble the rating prompt; byte-identical for identical inputs."""
    lines = _context_block(prompt_text, description)
    if obj.kind == "error_counting":
        lines.append(obj.instruction_text)
        lines.append(ERROR_TYPE_GUIDANCE)
        lines.append(ERROR_TAXONOMY)
        lines.append('Respond with a line "ERRORS: <integer>".')
    else:
        lines.append(f"{obj.instruction_text} Rate on a scale of "
                     f"1-{scale.n} (integer only).")
        lines.append(ERROR_TYPE_GUIDANCE)
        lines.append(f'Respond with a line "SCORE: <integer between 1 and {scale.n}>".')
    return _to_request("\n".join(lines), max_chars)


def build_atomic_prompt(prompt_text: str, description: ObjectCentricDescription,
                        max_chars: int = DEFAULT_MAX_PROMPT_CHARS) -> ChatRequest:
    lines = _context_block(prompt_text, description)
    lines.append(ATOMIC_INSTRUCTION)
    lines.append('Respond with four lines: "X1: <integer>", "X2: <integer>", '
                 '"Y1: <integer>", "Y2: <integer>".')
    return _to_request("\n".join(lines), max_chars)


def _to_request(user_text: str, max_chars: int) -> ChatRequest:
    if len(user_text) > max_chars:
        raise PromptTooLong(f"evaluation prompt of {len(user_text)} chars over "
                            f"budget {max_chars}",
                            length=len(user_text), budget=max_chars)
    return ChatRequest(user_text=user_text, max_tokens=256)


def _repair_request(original: ChatRequest, directive: str) -> ChatRequest:
    return ChatRequest(user_text=f"{original.user_text}\n{directive}",
                       temperature=original.temperature,
                       max_tokens=original.max_tokens,
                       decode_mode=original.decode_mode)


# -- scoring -----------------------------------------------------------------


def instruction_following_rate(prompt_text: str,
                               description: ObjectCentricDescription,
                               obj: Objective, scale: RatingScale,
                               gateway: ModelGateway, endpoint: BackendEndpoint,
                               *, pair_id: str = "") -> ScoreRecord:
    """Rate on the wide integer scale and downscale to [0, 1] by dividing by N."""
    if obj.kind not in ("overall", "custom"):
        raise ValueError("instruction-following rating covers overall/custom only")
    request = build_eval_prompt(prompt_text, description, obj, scale,
                                max_chars=gateway.max_prompt_chars)
    replies = [gateway.chat(request, endpoint).text]
    value = _extract_score(replies[0], scale.n)
    if value is None:
        repair = _repair_request(
            request, "Your previous reply could not be parsed. Respond with a "
                     f'single line "SCORE: <integer between 1 and {scale.n}>".')
        replies.append(gateway.chat(repair, endpoint).text)
        value = _extract_score(replies[1], scale.n)
    if value is None:
        raise RatingParseFailure(f"no integer rating found for pair {pair_id!r}",
                                 replies=tuple(replies))
    value = _clamp_int(value, 1, scale.n, what="rating")
    return ScoreRecord(pair_id=pair_id, objective=obj,
                       mode="instruction_following", raw_value=float(value),
                       normalized_score=value / scale.n)


def _extract_score(text: str, n: int) -> int | None:
    tagged = parse_tagged(text).get_int("SCORE")
    if tagged is not None:
        return tagged
    return parse_integer_fallback(text, 1, n)


def _clamp_int(value: int, lo: int, hi: int, *, what: str) -> int:
    if value < lo or value > hi:
        warnings.warn(f"{what} {value} outside [{lo}, {hi}]; clamped",
                      ClampWarning, stacklevel=3)
        return min(max(value, lo), hi)
    return value


def extract_atomic_counts(prompt_text: str,
                          description: ObjectCentricDescription,
                          gateway: ModelGateway, endpoint: BackendEndpoint,
                          *, pair_id: str = "") -> AtomicCounts:
    """Ask the four atomic counting questions and parse the tagged answer."""
    request = build_atomic_prompt(prompt_text, description,
                                  max_chars=gateway.max_prompt_chars)
    replies = [gateway.chat(request, endpoint).text]
    counts = parse_atomic(replies[0])
    if counts is None:
        repair = _repair_request(
            request, "Your previous reply could not be parsed. Respond with "
                     'exactly four lines: "X1: <integer>", "X2: <integer>", '
                     '"Y1: <integer>", "Y2: <integer>".')
        replies.append(gateway.chat(repair, endpoint).text)
        counts = parse_atomic(replies[1])
    if counts is None:
        raise AtomicParseFailure(f"no atomic counts found for pair {pair_id!r}",
                                 replies=tuple(replies))
    return AtomicCounts.from_raw(*counts)


def rule_enhanced_score(c: AtomicCounts) -> float:
    """Combine atomic counts: half weight to objects, half to attributes.

    An empty requirement is vacuously satisfied: when the prompt specifies no
    objects (or no attributes), that term contributes its full half weight
    rather than zeroing the score.
    """
    object_term = 0.5 if c.x1 == 0 else (c.x2 / c.x1) / 2
    attribute_term = 0.5 if c.y1 == 0 else (c.y2 / c.y1) / 2
    return object_term + attribute_term


def error_quality(error_count: int) -> float:
    """Map an error count to a quality score: 0 errors -> 1.0, >= 9 -> 0.0."""
    return 1.0 - min(error_count, ERROR_CAP) / ERROR_CAP


def error_count_rate(prompt_text: str, description: ObjectCentricDescription,
                     gateway: ModelGateway, endpoint: BackendEndpoint,
                     *, pair_id: str = "") -> ScoreRecord:
    """Count compositional errors and map to a quality score (higher = better)."""
    obj = Objective.error_counting()
    request = build_eval_prompt(prompt_text, description, obj, RatingScale(),
                                max_chars=gateway.max_prompt_chars)
    replies = [gateway.chat(request, endpoint).text]
    count = _extract_errors(replies[0])
    if count is None:
        repair = _repair_request(
            request, "Your previous reply could not be parsed. Respond with a "
                     'single line "ERRORS: <integer>".')
        replies.append(gateway.chat(repair, endpoint).text)
        count = _extract_errors(replies[1])
    if count is None:
        raise RatingParseFailure(f"no error count found for pair {pair_id!r}",
                                 replies=tuple(replies))
    if count < 0:
        count = _clamp_int(count, 0, ERROR_CAP, what="error count")
    return ScoreRecord(pair_id=pair_id, objective=obj,
                       mode="instruction_following", raw_value=float(count),
                       normalized_score=error_quality(count))


def _extract_errors(text: str) -> int | None:
    tagged = parse_tagged(text).get_int("ERRORS")
    if tagged is not None:
        return tagged
    return parse_integer_fallback(text, 0, ERROR_CAP)


def generate_rationale(score_or_count: float, obj: Objective,
                       prompt_text: str, description: ObjectCentricDescription,
                       gateway: ModelGateway, endpoint: BackendEndpoint) -> str:
    """Ask for a one-paragraph explanation; failures degrade to an empty string."""
    lines = _context_block(prompt_text, description)
    if obj.kind == "error_counting":
        lines.append("Explain the error counting within one paragraph.")
    else:
        lines.append(f"Explain the overall rating {_render_value(score_or_count)} "
                     "within one paragraph.")
    request = ChatRequest(user_text="\n".join(lines), max_tokens=512)
    try:
        return gateway.chat(request, endpoint).text.strip()
    except HarnessError:
        return ""


def _render_value(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return f"{value:.4f}".rstrip("0")


def score_pair(pair_id: str, prompt_text: str,
               description: ObjectCentricDescription, obj: Objective,
               mode: str, scale: RatingScale, gateway: ModelGateway,
               endpoint: BackendEndpoint, *,
               with_rationale: bool = True) -> ScoreRecord:
    """Produce one complete ScoreRecord for a (pair, objective, mode) cell.

    The error-counting objective has a single scoring route, so ``mode`` only
    selects between the two routes for overall/custom objectives.
    """
    if obj.kind == "error_counting":
        record = error_count_rate(prompt_text, description, gateway, endpoint,
                                  pair_id=pair_id)
    elif mode == "rule_enhanced":
        counts = extract_atomic_counts(prompt_text, description, gateway,
                                       endpoint, pair_id=pair_id)
        score = rule_enhanced_score(counts)
        record = ScoreRecord(pair_id=pair_id, objective=obj, mode="rule_enhanced",
                             raw_value=score, normalized_score=score,
                             atomic_counts=counts)
    elif mode == "instruction_following":
        record = instruction_following_rate(prompt_text, description, obj, scale,
                                            gateway, endpoint, pair_id=pair_id)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    if with_rationale:
        record.rationale = generate_rationale(record.raw_value, obj, prompt_text,
                                              description, gateway, endpoint)
    return record
