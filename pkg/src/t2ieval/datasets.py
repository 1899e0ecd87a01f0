"""Ingest and join experiment inputs: prompts, image manifests, human ratings.

All three files are JSONL, validated line by line with the offending line
number attached to every error. Joining aggregates the annotators per pair
(arithmetic mean) and produces the normalized human series that correlation
consumes: overall on a 1-10 scale mapped to [0, 1], error counts mapped
through the quality orientation 1 - min(e, 9)/9 and then averaged.
"""

from __future__ import annotations

import json
import random
import warnings
from dataclasses import asdict, dataclass, is_dataclass
from pathlib import Path

from PIL import Image

from .errors import (
    DuplicateKey,
    InsufficientRecords,
    IntegrityError,
    SkippedWarning,
    ValidationError,
)
from .evaluator import error_quality
from .stats import normalize

DATASET_NAMES = ("coco2014", "coco2017", "drawbench", "paintskills",
                 "concept_conjunction", "attribute_binding", "custom")
COMPOSITIONAL_DATASETS = frozenset({"concept_conjunction", "attribute_binding"})

OVERALL_SCALE = (1, 10)
ERROR_SCALE = (0, 9)


def bench_of(dataset: str) -> str:
    return "compositional" if dataset in COMPOSITIONAL_DATASETS else "general"


@dataclass(frozen=True)
class PromptRecord:
    prompt_id: str
    dataset: str
    text: str

    @property
    def bench(self) -> str:
        return bench_of(self.dataset)


@dataclass(frozen=True)
class ImageManifestRecord:
    pair_id: str
    prompt_id: str
    generator: str
    image_path: str
    width: int
    height: int


@dataclass(frozen=True)
class HumanRatingRecord:
    pair_id: str
    annotator_id: str
    overall: int
    error_count: int


@dataclass(frozen=True)
class JoinedPair:
    """One evaluation unit with its aggregated human scores (or None)."""

    pair_id: str
    prompt: PromptRecord
    generator: str
    image_path: str
    width: int
    height: int
    human_overall: float | None  # mean of annotators, normalized to [0, 1]
    human_error_quality: float | None  # mean of per-annotator 1 - min(e,9)/9
    n_annotators: int


def _iter_jsonl(path: str | Path):
    path = Path(path)
    with path.open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"not valid JSON: {exc}", line=line_no) from exc
            if not isinstance(record, dict):
                raise ValidationError("line is not a JSON object", line=line_no)
            yield line_no, record


def _require(record: dict, field: str, kind, line: int):
    if field not in record:
        raise ValidationError(f"missing field {field!r}", line=line, field=field)
    value = record[field]
    if kind is int and isinstance(value, bool):
        raise ValidationError(f"field {field!r} must be an integer", line=line,
                              field=field)
    if not isinstance(value, kind):
        raise ValidationError(
            f"field {field!r} must be {getattr(kind, '__name__', kind)}",
            line=line, field=field)
    return value


def load_prompts(path: str | Path) -> list[PromptRecord]:
    records = []
    seen: set[str] = set()
    for line_no, raw in _iter_jsonl(path):
        prompt_id = _require(raw, "prompt_id", str, line_no)
        dataset = _require(raw, "dataset", str, line_no)
        text = _require(raw, "text", str, line_no)
        if dataset not in DATASET_NAMES:
            raise ValidationError(f"unknown dataset {dataset!r}", line=line_no,
                                  field="dataset")
        if not text:
            raise ValidationError("text must be non-empty", line=line_no,
                                  field="text")
        if prompt_id in seen:
            raise DuplicateKey(f"prompt_id {prompt_id!r} repeated (line {line_no})")
        seen.add(prompt_id)
        records.append(PromptRecord(prompt_id, dataset, text))
    return records


def load_manifest(path: str | Path, *, check_images: bool = True) -> list[ImageManifestRecord]:
    """Load manifest rows; image paths resolve relative to the manifest file."""
    base = Path(path).parent
    records = []
    seen: set[str] = set()
    for line_no, raw in _iter_jsonl(path):
        pair_id = _require(raw, "pair_id", str, line_no)
        prompt_id = _require(raw, "prompt_id", str, line_no)
        generator = _require(raw, "generator", str, line_no)
        image_path = _require(raw, "image_path", str, line_no)
        width = _require(raw, "width", int, line_no)
        height = _require(raw, "height", int, line_no)
        if width <= 0 or height <= 0:
            raise ValidationError("width/height must be positive", line=line_no,
                                  field="width")
        if pair_id in seen:
            raise DuplicateKey(f"pair_id {pair_id!r} repeated (line {line_no})")
        seen.add(pair_id)
        resolved = base / image_path
        if check_images:
            if not resolved.exists():
                raise ValidationError(f"image file {image_path!r} does not exist",
                                      line=line_no, field="image_path")
            try:
                with Image.open(resolved) as im:
                    actual = im.size
            except Exception as exc:
                raise ValidationError(f"image {image_path!r} does not decode: {exc}",
                                      line=line_no, field="image_path") from exc
            if actual != (width, height):
                raise ValidationError(
                    f"image {image_path!r} is {actual[0]}x{actual[1]}, manifest "
                    f"says {width}x{height}", line=line_no, field="width")
        records.append(ImageManifestRecord(pair_id, prompt_id, generator,
                                           str(resolved), width, height))
    return records


def load_ratings(path: str | Path) -> list[HumanRatingRecord]:
    records = []
    seen: set[tuple[str, str]] = set()
    for line_no, raw in _iter_jsonl(path):
        pair_id = _require(raw, "pair_id", str, line_no)
        annotator_id = _require(raw, "annotator_id", str, line_no)
        overall = _require(raw, "overall", int, line_no)
        error_count = _require(raw, "error_count", int, line_no)
        if not OVERALL_SCALE[0] <= overall <= OVERALL_SCALE[1]:
            raise ValidationError(
                f"overall={overall} outside the 1-10 rating scale",
                line=line_no, field="overall")
        if not ERROR_SCALE[0] <= error_count <= ERROR_SCALE[1]:
            raise ValidationError(
                f"error_count={error_count} outside the 0-9 scale",
                line=line_no, field="error_count")
        key = (pair_id, annotator_id)
        if key in seen:
            raise DuplicateKey(
                f"annotator {annotator_id!r} rated pair {pair_id!r} twice "
                f"(line {line_no})")
        seen.add(key)
        records.append(HumanRatingRecord(pair_id, annotator_id, overall, error_count))
    return records


def join_pairs(prompts: list[PromptRecord], manifest: list[ImageManifestRecord],
               ratings: list[HumanRatingRecord], *,
               require_ratings: bool = True) -> list[JoinedPair]:
    """Join the three inputs on prompt_id/pair_id with referential checks."""
    prompt_by_id = {p.prompt_id: p for p in prompts}
    manifest_ids = {m.pair_id for m in manifest}

    ratings_by_pair: dict[str, list[HumanRatingRecord]] = {}
    for r in ratings:
        if r.pair_id not in manifest_ids:
            raise IntegrityError(f"rating references unknown pair_id {r.pair_id!r}")
        ratings_by_pair.setdefault(r.pair_id, []).append(r)

    joined = []
    for m in manifest:
        prompt = prompt_by_id.get(m.prompt_id)
        if prompt is None:
            raise IntegrityError(f"manifest references unknown prompt_id "
                                 f"{m.prompt_id!r}")
        pair_ratings = ratings_by_pair.get(m.pair_id, [])
        if not pair_ratings:
            if require_ratings:
                warnings.warn(f"pair {m.pair_id!r} has no human ratings; excluded",
                              SkippedWarning, stacklevel=2)
                continue
            overall = error_q = None
        else:
            if len(pair_ratings) == 1:
                warnings.warn(f"pair {m.pair_id!r} rated by a single annotator",
                              SkippedWarning, stacklevel=2)
            mean_overall = sum(r.overall for r in pair_ratings) / len(pair_ratings)
            overall = normalize([mean_overall], *OVERALL_SCALE)[0]
            error_q = sum(error_quality(r.error_count)
                          for r in pair_ratings) / len(pair_ratings)
        joined.append(JoinedPair(pair_id=m.pair_id, prompt=prompt,
                                 generator=m.generator, image_path=m.image_path,
                                 width=m.width, height=m.height,
                                 human_overall=overall,
                                 human_error_quality=error_q,
                                 n_annotators=len(pair_ratings)))
    return joined


def sample_prompts(records: list[PromptRecord], k: int,
                   seed: int) -> list[PromptRecord]:
    """Deterministic sample without replacement (Mersenne Twister, seeded)."""
    if k > len(records):
        raise InsufficientRecords(f"cannot sample {k} of {len(records)} records")
    return random.Random(seed).sample(records, k)


# -- canonical re-serialization (round-trip support) ---------------------------


def dump_jsonl(records, path: str | Path) -> None:
    """Write records (dataclasses or dicts) as canonical JSONL."""
    with Path(path).open("w", encoding="utf-8") as f:
        for r in records:
            d = asdict(r) if is_dataclass(r) else dict(r)
            f.write(json.dumps(d, sort_keys=True, ensure_ascii=False) + "\n")
