#!/usr/bin/env python3
"""The three scoring routes: wide-scale rating, rule formula, error counting.

A language model only emits discrete tokens, so asking it for "0.87" is
unreliable. Instruction-following rating asks for an integer on a wide 1-N
scale and divides by N. Rule-enhanced rating goes further: it decomposes the
judgment into four atomic counts and combines them with a fixed formula.
Error counting asks for the number of compositional mistakes and maps it to
a quality score.
"""

from t2ieval.descriptor import (
    GlobalDescription,
    LocalDescription,
    ObjectCentricDescription,
)
from t2ieval.evaluator import (
    AtomicCounts,
    Objective,
    RatingScale,
    build_eval_prompt,
    error_quality,
    rule_enhanced_score,
)

description = ObjectCentricDescription(
    text=("The image shows one red book on a table and one vase that is blue "
          "rather than yellow."),
    source_global=GlobalDescription("a book and a vase", 512, 512),
    source_local=LocalDescription(()),
    descriptor_model_id="demo-chat")

# --- the rating prompt, exactly as the judge sees it ---

request = build_eval_prompt("a red book and a yellow vase", description,
                            Objective.overall(), RatingScale(100))
print("--- overall rating prompt ---")
print(request.user_text)

# an integer reply r on 1-100 becomes r/100: 87 -> 0.87

# --- the rule formula on the four atomic counts ---

print("\n--- rule-enhanced combinations ---")
cases = [
    ("everything matches", AtomicCounts(x1=2, x2=2, y1=2, y2=2)),
    ("half the objects and attributes", AtomicCounts(2, 1, 2, 1)),
    ("objects fine, 3 of 4 attributes", AtomicCounts(2, 2, 4, 3)),
    ("prompt names no objects", AtomicCounts(0, 0, 2, 1)),
]
for label, counts in cases:
    print(f"{label:35s} -> {rule_enhanced_score(counts):.3f}")

# --- error counts oriented as quality (higher is better) ---

print("\n--- error counting ---")
for errors in (0, 1, 3, 9, 12):
    print(f"{errors:2d} errors -> quality {error_quality(errors):.4f}")
