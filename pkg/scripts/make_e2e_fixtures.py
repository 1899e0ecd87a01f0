#!/usr/bin/env python3
"""Regenerate the committed end-to-end fixtures under tests/fixtures/e2e/.

Builds the 8-pair corpus (prompts, images, manifest, two annotators' ratings)
and records the replay cache by running every pipeline stage, in both rating
modes, against the deterministic synthetic backend. Outputs are byte-stable:
the cache clock is pinned and the synthetic backend is a pure function of the
request.
"""

from __future__ import annotations

import json
import shutil
import sys
import tempfile
from pathlib import Path

from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parent.parent
E2E = ROOT / "tests" / "fixtures" / "e2e"

sys.path.insert(0, str(ROOT / "src"))

from t2ieval.config import RunConfig, make_gateway  # noqa: E402
from t2ieval.datasets import join_pairs, load_manifest, load_prompts, load_ratings  # noqa: E402
from t2ieval.gateway import BackendEndpoint  # noqa: E402
from t2ieval.pipeline import load_descriptions, run_baseline, run_describe, run_score  # noqa: E402
from t2ieval.testing import InProcessTransport, SyntheticBackend  # noqa: E402

PROMPTS = [
    ("cc-000", "concept_conjunction", "a red book and a yellow vase"),
    ("cc-001", "concept_conjunction", "a red car and a white sheep"),
    ("cc-002", "concept_conjunction", "a green apple and a black bowl"),
    ("cc-003", "concept_conjunction", "a blue bench and a pink bicycle"),
    ("coco-000", "coco2014", "a man riding a wave on top of a surfboard"),
    ("coco-001", "coco2014", "two dogs playing with a frisbee in a park"),
    ("coco-002", "coco2014", "a plate of food with broccoli and rice"),
    ("coco-003", "coco2014", "several boats docked at a busy harbor"),
]

# (annotator r1, annotator r2) x (overall 1-10, error_count 0-9) per pair
RATINGS = [
    ((8, 1), (7, 2)),
    ((6, 3), (6, 3)),
    ((9, 0), (8, 1)),
    ((3, 6), (4, 5)),
    ((7, 2), (6, 2)),
    ((5, 4), (5, 4)),
    ((4, 5), (5, 4)),
    ((8, 1), (7, 0)),
]

COLORS = [(200, 30, 30), (30, 160, 60), (40, 60, 200), (220, 200, 40),
          (140, 40, 180), (20, 180, 180), (120, 120, 120), (240, 140, 20)]


def write_jsonl(path: Path, records) -> None:
    with path.open("w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n")


def make_image(path: Path, color, index: int) -> None:
    im = Image.new("RGB", (64, 48), color)
    draw = ImageDraw.Draw(im)
    draw.rectangle([8 + index * 2, 8, 28 + index * 2, 28],
                   fill=(255 - color[0], 255 - color[1], 255 - color[2]))
    im.save(path, format="PNG")


def endpoints() -> dict[str, BackendEndpoint]:
    base = "http://backend.test"
    return {
        "caption": BackendEndpoint("caption", base, "cap-1"),
        "dense_caption": BackendEndpoint("dense_caption", base, "dense-1"),
        "embed_text": BackendEndpoint("embed_text", base, "embed-1"),
        "embed_image": BackendEndpoint("embed_image", base, "embed-1"),
        "chat": BackendEndpoint("chat", base, "chat-1"),
    }


def main() -> None:
    if E2E.exists():
        shutil.rmtree(E2E)
    (E2E / "images").mkdir(parents=True)
    (E2E / "cache").mkdir()

    write_jsonl(E2E / "prompts.jsonl",
                [{"prompt_id": pid, "dataset": ds, "text": text}
                 for pid, ds, text in PROMPTS])

    manifest_rows = []
    for i, (pid, _, _) in enumerate(PROMPTS):
        name = f"pair-{i:02d}"
        make_image(E2E / "images" / f"{name}.png", COLORS[i], i)
        manifest_rows.append({"pair_id": name, "prompt_id": pid,
                              "generator": "diffmock-1",
                              "image_path": f"images/{name}.png",
                              "width": 64, "height": 48})
    write_jsonl(E2E / "manifest.jsonl", manifest_rows)

    rating_rows = []
    for i, ((o1, e1), (o2, e2)) in enumerate(RATINGS):
        name = f"pair-{i:02d}"
        rating_rows.append({"pair_id": name, "annotator_id": "r1",
                            "overall": o1, "error_count": e1})
        rating_rows.append({"pair_id": name, "annotator_id": "r2",
                            "overall": o2, "error_count": e2})
    write_jsonl(E2E / "ratings.jsonl", rating_rows)

    # record the cache by running every stage against the synthetic backend
    config = RunConfig(endpoints=endpoints(), cache_dir=str(E2E / "cache"),
                       cache_mode="record", parallelism=1)
    gateway = make_gateway(config,
                           transport=InProcessTransport(SyntheticBackend()),
                           clock=lambda: "2025-01-01T00:00:00Z")

    prompts = load_prompts(E2E / "prompts.jsonl")
    manifest = load_manifest(E2E / "manifest.jsonl")
    pairs = join_pairs(prompts, manifest, [], require_ratings=False)

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        result = run_describe(gateway, config.endpoints, manifest,
                              out / "descriptions.jsonl")
        assert result.ok, result.failures
        descriptions = load_descriptions(out / "descriptions.jsonl")
        for mode in ("instruction_following", "rule_enhanced"):
            result = run_score(gateway, config.endpoints, pairs, descriptions,
                               out / f"scores-{mode}.jsonl",
                               objectives=("overall", "error_counting"),
                               mode=mode)
            assert result.ok, result.failures
        result = run_baseline(gateway, config.endpoints, pairs, descriptions,
                              out / "baseline.jsonl")
        assert result.ok, result.failures

    n_entries = sum(1 for _ in (E2E / "cache").rglob("*.json"))
    print(f"fixtures written to {E2E} ({n_entries} cache entries)")


if __name__ == "__main__":
    main()
