"""Stage orchestration: describe, score, baseline, and correlation prep.

Stages communicate through JSONL files so that partial runs resume cheaply
and every intermediate is auditable. Within a stage, pairs are processed in
manifest order (optionally in parallel) and written in manifest order, which
keeps artifacts byte-identical run to run.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .baselines import VARIANTS, MeteorParams, SimilaritySource, sentence_match_score
from .datasets import JoinedPair
from .descriptor import (
    GlobalDescription,
    LocalDescription,
    ObjectCentricDescription,
    synthesize_description,
)
from .errors import HarnessError, ParseFailure
from .evaluator import Objective, RatingScale, ScoreRecord, score_pair
from .gateway import BackendEndpoint, ImageInput, ModelGateway, RegionProposal
from .stats import RatingSeries

log = logging.getLogger(__name__)

BASELINE_VARIANTS = ("CLIP", "CapCLIP", "CapMETEOR", "DescCLIP", "DescMETEOR")


@dataclass
class StageResult:
    processed: int = 0
    skipped: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def read_jsonl(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        return []
    records = []
    with path.open(encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def append_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n")


def _map_pairs(work: Callable, items: list, parallelism: int) -> list:
    """Apply ``work`` over items, preserving input order in the results."""
    if parallelism <= 1 or len(items) <= 1:
        return [work(item) for item in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(work, items))


# -- describe ------------------------------------------------------------------


def run_describe(gateway: ModelGateway, endpoints: dict[str, BackendEndpoint],
                 pairs: list[JoinedPair], out_path: str | Path, *,
                 parallelism: int = 1) -> StageResult:
    """Produce one object-centric description record per pair (resumable)."""
    result = StageResult()
    existing = {r["pair_id"] for r in read_jsonl(out_path)}
    todo = []
    for pair in pairs:
        if pair.pair_id in existing:
            result.skipped += 1
        else:
            todo.append(pair)

    def describe_one(pair: JoinedPair):
        try:
            image = ImageInput.from_file(pair.image_path)
            caption = gateway.caption(image, endpoints["caption"])
            regions = gateway.dense_regions(image, endpoints["dense_caption"])
            fused = synthesize_description(
                GlobalDescription(caption, image.width, image.height),
                LocalDescription.of(regions), gateway, endpoints["chat"])
            return pair.pair_id, description_to_dict(pair.pair_id, fused), None
        except (HarnessError, OSError, ValueError) as exc:
            return pair.pair_id, None, f"{type(exc).__name__}: {exc}"

    for pair_id, record, error in _map_pairs(describe_one, todo, parallelism):
        if error is not None:
            log.error("describe failed for %s: %s", pair_id, error)
            result.failures.append((pair_id, error))
            continue
        append_jsonl(out_path, [record])
        result.processed += 1
    return result


def description_to_dict(pair_id: str, d: ObjectCentricDescription) -> dict:
    return {
        "pair_id": pair_id,
        "fused_text": d.text,
        "global": {"caption": d.source_global.caption,
                   "width": d.source_global.width,
                   "height": d.source_global.height},
        "regions": [{"label": r.object_label, "caption": r.dense_caption,
                     "bbox": list(r.bbox), "confidence": r.confidence}
                    for r in d.source_local.regions],
        "descriptor_model_id": d.descriptor_model_id,
    }


def description_from_dict(record: dict) -> ObjectCentricDescription:
    g = record["global"]
    regions = tuple(
        RegionProposal(object_label=r["label"], dense_caption=r["caption"],
                       bbox=tuple(r["bbox"]), confidence=r["confidence"])
        for r in record["regions"])
    return ObjectCentricDescription(
        text=record["fused_text"],
        source_global=GlobalDescription(g["caption"], g["width"], g["height"]),
        source_local=LocalDescription(regions),
        descriptor_model_id=record["descriptor_model_id"])


def load_descriptions(path: str | Path) -> dict[str, ObjectCentricDescription]:
    return {r["pair_id"]: description_from_dict(r) for r in read_jsonl(path)}


# -- score ---------------------------------------------------------------------


def run_score(gateway: ModelGateway, endpoints: dict[str, BackendEndpoint],
              pairs: list[JoinedPair],
              descriptions: dict[str, ObjectCentricDescription],
              out_path: str | Path, *, objectives: Iterable[str],
              mode: str = "instruction_following", scale_n: int = 100,
              parallelism: int = 1, with_rationale: bool = True) -> StageResult:
    """Score every (pair, objective) cell in the configured mode (resumable)."""
    result = StageResult()
    scale = RatingScale(scale_n)
    existing = {(r["pair_id"], r["objective"], r["mode"])
                for r in read_jsonl(out_path)}

    tasks = []
    for pair in pairs:
        for objective_kind in objectives:
            obj = Objective.of(objective_kind)
            effective_mode = mode if obj.kind != "error_counting" else "instruction_following"
            if (pair.pair_id, obj.kind, effective_mode) in existing:
                result.skipped += 1
                continue
            tasks.append((pair, obj))

    def score_one(task):
        pair, obj = task
        description = descriptions.get(pair.pair_id)
        if description is None:
            return pair.pair_id, None, "missing description"
        try:
            record = score_pair(pair.pair_id, pair.prompt.text, description, obj,
                                mode, scale, gateway, endpoints["chat"],
                                with_rationale=with_rationale)
            return pair.pair_id, record.to_dict(), None
        except (HarnessError, ValueError) as exc:
            return pair.pair_id, None, f"{type(exc).__name__}: {exc}"

    for pair_id, record, error in _map_pairs(score_one, tasks, parallelism):
        if error is not None:
            log.error("score failed for %s: %s", pair_id, error)
            result.failures.append((pair_id, error))
            continue
        append_jsonl(out_path, [record])
        result.processed += 1
    return result


# -- baselines -------------------------------------------------------------------


def run_baseline(gateway: ModelGateway, endpoints: dict[str, BackendEndpoint],
                 pairs: list[JoinedPair],
                 descriptions: dict[str, ObjectCentricDescription],
                 out_path: str | Path, *,
                 variants: Iterable[str] = BASELINE_VARIANTS,
                 parallelism: int = 1,
                 meteor_params: MeteorParams = MeteorParams()) -> StageResult:
    """Emit baseline ScoreRecords for every requested (pair, variant)."""
    result = StageResult()
    existing = {(r["pair_id"], r.get("variant")) for r in read_jsonl(out_path)}
    by_name = {name: key for key, name in VARIANTS.items()}

    runnable = []
    for variant in variants:
        if variant not in by_name:
            raise ValueError(f"unknown baseline variant {variant!r}")
        kind, method = by_name[variant]
        needs = {"embed_text"} if method == "embed_cosine" else set()
        if variant == "CLIP":
            needs.add("embed_image")
        missing = needs - set(endpoints)
        if missing:
            log.warning("skipping %s: no %s endpoint configured",
                        variant, ", ".join(sorted(missing)))
            continue
        runnable.append((variant, kind, method))

    tasks = [(pair, spec) for pair in pairs for spec in runnable
             if (pair.pair_id, spec[0]) not in existing]
    result.skipped = len(pairs) * len(runnable) - len(tasks)

    def baseline_one(task):
        pair, (variant, kind, method) = task
        description = descriptions.get(pair.pair_id)
        try:
            if kind == "image":
                source = SimilaritySource(kind="image")
                image = ImageInput.from_file(pair.image_path)
            else:
                if description is None:
                    return pair.pair_id, None, "missing description"
                text = (description.source_global.caption if kind == "caption"
                        else description.text)
                source = SimilaritySource(kind=kind, text=text)
                image = None
            record = sentence_match_score(source, pair.prompt.text, method,
                                          gateway, endpoints, pair_id=pair.pair_id,
                                          image=image, meteor_params=meteor_params)
            return pair.pair_id, record.to_dict(), None
        except (HarnessError, OSError, ValueError) as exc:
            return pair.pair_id, None, f"{variant}: {type(exc).__name__}: {exc}"

    for pair_id, record, error in _map_pairs(baseline_one, tasks, parallelism):
        if error is not None:
            log.error("baseline failed for %s: %s", pair_id, error)
            result.failures.append((pair_id, error))
            continue
        append_jsonl(out_path, [record])
        result.processed += 1
    return result


# -- correlation prep ------------------------------------------------------------


def metric_name(record: ScoreRecord | dict) -> str:
    """Reported metric label: baseline variant name or the judge mode."""
    if isinstance(record, ScoreRecord):
        record = record.to_dict()
    if record["mode"] == "baseline":
        return record["variant"]
    return record["mode"]


def collect_series(joined: list[JoinedPair], score_records: list[dict],
                   objective: str) -> dict[tuple[str, str, str], RatingSeries]:
    """Group scores into per-(dataset, generator, metric) rating series.

    Pairs lacking a human rating or a metric value drop out of the series;
    the caller can compute the drop count per cell from the returned sizes.
    """
    human_attr = ("human_overall" if objective == "overall"
                  else "human_error_quality")
    by_pair = {p.pair_id: p for p in joined}

    buckets: dict[tuple[str, str, str], list[tuple[str, float, float]]] = {}
    for record in score_records:
        if record["mode"] != "baseline" and record["objective"] != objective:
            continue
        pair = by_pair.get(record["pair_id"])
        if pair is None:
            continue
        human = getattr(pair, human_attr)
        if human is None:
            continue
        key = (pair.prompt.dataset, pair.generator, metric_name(record))
        buckets.setdefault(key, []).append(
            (pair.pair_id, record["normalized_score"], human))

    series = {}
    for key, rows in buckets.items():
        if len(rows) < 2:
            continue
        rows.sort(key=lambda r: r[0])
        series[key] = RatingSeries(pair_ids=[r[0] for r in rows],
                                   metric_scores=[r[1] for r in rows],
                                   human_scores=[r[2] for r in rows])
    return series
