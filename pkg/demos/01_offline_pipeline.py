#!/usr/bin/env python3
"""End-to-end pipeline, fully offline.

Builds a tiny two-pair corpus on the fly, runs describe -> score -> baseline
-> correlate against the bundled deterministic synthetic backend while
recording every exchange, then replays the cache to show that a second run
needs no backend at all and reproduces the artifacts byte for byte.
"""

import json
import tempfile
from pathlib import Path

from PIL import Image

from t2ieval.config import RunConfig, make_gateway
from t2ieval.datasets import join_pairs, load_manifest, load_prompts, load_ratings
from t2ieval.gateway import BackendEndpoint
from t2ieval.pipeline import (
    load_descriptions,
    read_jsonl,
    run_baseline,
    run_describe,
    run_score,
)
from t2ieval.report import build_report, render_csv
from t2ieval.testing import InProcessTransport, SyntheticBackend

work = Path(tempfile.mkdtemp(prefix="t2ieval-demo-"))
print(f"working in {work}")

# --- a miniature corpus: two prompts, two generated images, two annotators ---

(work / "images").mkdir()
Image.new("RGB", (64, 48), (200, 40, 40)).save(work / "images" / "a.png")
Image.new("RGB", (64, 48), (40, 40, 200)).save(work / "images" / "b.png")

rows = {
    "prompts.jsonl": [
        {"prompt_id": "p1", "dataset": "concept_conjunction",
         "text": "a red book and a yellow vase"},
        {"prompt_id": "p2", "dataset": "concept_conjunction",
         "text": "a red car and a white sheep"},
    ],
    "manifest.jsonl": [
        {"pair_id": "demo-a", "prompt_id": "p1", "generator": "demo-gen",
         "image_path": "images/a.png", "width": 64, "height": 48},
        {"pair_id": "demo-b", "prompt_id": "p2", "generator": "demo-gen",
         "image_path": "images/b.png", "width": 64, "height": 48},
    ],
    "ratings.jsonl": [
        {"pair_id": "demo-a", "annotator_id": "r1", "overall": 8, "error_count": 1},
        {"pair_id": "demo-a", "annotator_id": "r2", "overall": 7, "error_count": 2},
        {"pair_id": "demo-b", "annotator_id": "r1", "overall": 4, "error_count": 5},
        {"pair_id": "demo-b", "annotator_id": "r2", "overall": 5, "error_count": 4},
    ],
}
for name, records in rows.items():
    with (work / name).open("w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")

endpoints = {
    role: BackendEndpoint(role, "http://backend.test", f"{role}-model")
    for role in ("caption", "dense_caption", "embed_text", "embed_image", "chat")
}

# --- first run: record every backend exchange into a cache directory ---

config = RunConfig(endpoints=endpoints, cache_dir=str(work / "cache"),
                   cache_mode="record")
gateway = make_gateway(config, transport=InProcessTransport(SyntheticBackend()))

prompts = load_prompts(work / "prompts.jsonl")
manifest = load_manifest(work / "manifest.jsonl")
pairs = join_pairs(prompts, manifest, [], require_ratings=False)

out1 = work / "run1"
run_describe(gateway, endpoints, manifest, out1 / "descriptions.jsonl")
descriptions = load_descriptions(out1 / "descriptions.jsonl")
run_score(gateway, endpoints, pairs, descriptions, out1 / "scores.jsonl",
          objectives=("overall", "error_counting"), mode="rule_enhanced")
run_baseline(gateway, endpoints, pairs, descriptions, out1 / "scores.jsonl")

n_cached = sum(1 for _ in (work / "cache").rglob("*.json"))
print(f"recorded {n_cached} backend exchanges")

# --- second run: replay only; no transport is even constructed ---

config_replay = RunConfig(endpoints=endpoints, cache_dir=str(work / "cache"),
                          cache_mode="replay")
replay_gateway = make_gateway(config_replay)  # no transport passed on purpose

out2 = work / "run2"
run_describe(replay_gateway, endpoints, manifest, out2 / "descriptions.jsonl")
run_score(replay_gateway, endpoints, pairs,
          load_descriptions(out2 / "descriptions.jsonl"), out2 / "scores.jsonl",
          objectives=("overall", "error_counting"), mode="rule_enhanced")
run_baseline(replay_gateway, endpoints, pairs,
             load_descriptions(out2 / "descriptions.jsonl"), out2 / "scores.jsonl")

for name in ("descriptions.jsonl", "scores.jsonl"):
    identical = (out1 / name).read_bytes() == (out2 / name).read_bytes()
    print(f"{name}: replay byte-identical = {identical}")

# --- correlate the recorded scores against the human ratings ---

joined = join_pairs(prompts, manifest, load_ratings(work / "ratings.jsonl"))
rows_, aggregates = build_report(joined, read_jsonl(out2 / "scores.jsonl"))
print()
print(render_csv(rows_, aggregates))
