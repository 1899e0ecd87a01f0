#!/usr/bin/env python3
"""Dataset files, validation, seeded sampling, and the human-rating join.

The harness reads three JSONL files: prompts, an image manifest, and per
annotator ratings. Every record is validated with line-level errors; joining
aggregates annotators per pair and produces the normalized human series that
correlation consumes.
"""

import json
import tempfile
from pathlib import Path

from PIL import Image

from t2ieval.datasets import (
    join_pairs,
    load_manifest,
    load_prompts,
    load_ratings,
    sample_prompts,
)
from t2ieval.errors import ValidationError

work = Path(tempfile.mkdtemp(prefix="t2ieval-data-"))
(work / "images").mkdir()
Image.new("RGB", (64, 48), (90, 120, 200)).save(work / "images" / "x.png")


def write(name, records):
    path = work / name
    with path.open("w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")
    return path


prompts_path = write("prompts.jsonl", [
    {"prompt_id": f"cc-{i}", "dataset": "concept_conjunction",
     "text": f"a red thing number {i}"} for i in range(6)
])
manifest_path = write("manifest.jsonl", [
    {"pair_id": "pair-x", "prompt_id": "cc-0", "generator": "gen",
     "image_path": "images/x.png", "width": 64, "height": 48},
])
ratings_path = write("ratings.jsonl", [
    {"pair_id": "pair-x", "annotator_id": "r1", "overall": 7, "error_count": 0},
    {"pair_id": "pair-x", "annotator_id": "r2", "overall": 9, "error_count": 3},
])

prompts = load_prompts(prompts_path)
print(f"loaded {len(prompts)} prompts; bench of {prompts[0].dataset!r} "
      f"is {prompts[0].bench!r}")

# validation errors carry the line number and field
try:
    load_ratings(write("bad.jsonl", [
        {"pair_id": "pair-x", "annotator_id": "r1", "overall": 11,
         "error_count": 0}]))
except ValidationError as exc:
    print("rejected:", exc)

# sampling is seeded and platform-stable (Mersenne Twister)
sample = sample_prompts(prompts, 3, seed=42)
print("seeded sample:", [p.prompt_id for p in sample])
assert sample == sample_prompts(prompts, 3, seed=42)

# joining aggregates the two annotators per pair
joined = join_pairs(prompts, load_manifest(manifest_path),
                    load_ratings(ratings_path))
pair = joined[0]
print(f"\npair {pair.pair_id}: annotators rate overall 7 and 9")
print(f"  mean 8 on the 1-10 scale -> normalized {pair.human_overall:.4f}")
print(f"  errors 0 and 3 -> qualities 1.0 and 0.6667 "
      f"-> mean {pair.human_error_quality:.4f}")
