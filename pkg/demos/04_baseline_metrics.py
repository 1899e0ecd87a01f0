#!/usr/bin/env python3
"""The comparison metrics: embedding cosine and from-scratch METEOR.

The cosine route scores embeddings of (image, prompt) or (generated text,
prompt), clamped below at zero. The sentence route aligns unigrams between a
generated caption/description and the prompt, rewarding coverage through a
recall-weighted harmonic mean and penalizing scattered matches through the
chunk penalty.
"""

import numpy as np

from t2ieval.baselines import MeteorParams, align_unigrams, clip_style_score, meteor, tokenize

# --- cosine scoring ---

rng = np.random.default_rng(0)
v = rng.normal(size=8)
print("cos(v, v)      =", clip_style_score(v, v))
print("cos(e1, e2)    =", clip_style_score([1, 0, 0], [0, 1, 0]))
print("cos(v, -v)     =", clip_style_score(v, -v), "(negative similarity clamps to 0)")

# --- METEOR, step by step ---

candidate = "a sheep stands near a red car"
reference = "a red car and a white sheep"
cand_tokens = tokenize(candidate)
ref_tokens = tokenize(reference)
matches, chunks = align_unigrams(cand_tokens, ref_tokens)

print(f"\ncandidate tokens: {cand_tokens}")
print(f"reference tokens: {ref_tokens}")
print(f"matched unigrams m = {matches}, chunks = {chunks}")

precision = matches / len(cand_tokens)
recall = matches / len(ref_tokens)
fmean = 10 * precision * recall / (recall + 9 * precision)
penalty = 0.5 * (chunks / matches) ** 3
print(f"P = {precision:.4f}  R = {recall:.4f}  Fmean = {fmean:.4f}")
print(f"penalty = 0.5 * (chunks/m)^3 = {penalty:.4f}")
print(f"meteor  = {meteor(candidate, reference):.4f}")

# word order matters only through the chunk penalty
print("\nsame words, different order:")
for cand in ("a red book", "red book a", "book a red"):
    print(f"  meteor({cand!r}, 'a red book') = {meteor(cand, 'a red book'):.4f}")

# optional stemming stage matches inflected forms
params = MeteorParams(matcher="exact_plus_stem")
print("\nwith stemming:",
      f"meteor('two running dogs', 'two dogs run') = "
      f"{meteor('two running dogs', 'two dogs run', params):.4f}")
