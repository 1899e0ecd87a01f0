"""Comparison metrics: embedding-cosine matching and sentence matching.

The cosine route scores an image embedding (or the embedding of a generated
caption/description) against the text prompt embedding, clamped below at
zero. The sentence route scores generated text against the prompt with a
from-scratch METEOR: unigram alignment that maximizes matches and then
minimizes contiguous chunks, harmonic mean weighted 9:1 toward recall, and a
fragmentation penalty.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import _porter
from .errors import DegenerateEmbedding, EmptyText
from .evaluator import ScoreRecord
from .gateway import BackendEndpoint, ImageInput, ModelGateway

# (source kind, method) -> reported variant name
VARIANTS = {
    ("image", "embed_cosine"): "CLIP",
    ("caption", "embed_cosine"): "CapCLIP",
    ("caption", "meteor"): "CapMETEOR",
    ("description", "embed_cosine"): "DescCLIP",
    ("description", "meteor"): "DescMETEOR",
}

# Past this many explored alignment states the search keeps its best found;
# caption-length inputs never get near it.
_ALIGNMENT_NODE_CAP = 200_000


@dataclass(frozen=True)
class SimilaritySource:
    """What stands in for the image on the candidate side of the match."""

    kind: str  # image | caption | description
    text: str | None = None

    def __post_init__(self):
        if self.kind not in ("image", "caption", "description"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "image" and self.text is not None:
            raise ValueError("image sources carry no text")
        if self.kind != "image" and not self.text:
            raise ValueError(f"{self.kind} sources need non-empty text")


@dataclass(frozen=True)
class MeteorParams:
    penalty_gamma: float = 0.5
    penalty_power: float = 3.0
    matcher: str = "exact"  # exact | exact_plus_stem

    def __post_init__(self):
        if not 0.0 <= self.penalty_gamma <= 1.0:
            raise ValueError("penalty_gamma must be in [0, 1]")
        if self.penalty_power <= 0:
            raise ValueError("penalty_power must be positive")
        if self.matcher not in ("exact", "exact_plus_stem"):
            raise ValueError(f"unknown matcher {self.matcher!r}")


def clip_style_score(image_vec, text_vec) -> float:
    """Cosine similarity clamped below at zero (anti-aligned pairs score 0)."""
    u = np.asarray(image_vec, dtype=float)
    v = np.asarray(text_vec, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("embeddings must be 1-d and equal-dimensional")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateEmbedding("cannot score an all-zero embedding")
    cos = float(np.dot(u, v) / (nu * nv))
    return min(max(cos, 0.0), 1.0)


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip flanking punctuation per token."""
    tokens = []
    for raw in text.lower().split():
        token = raw.strip(string.punctuation)
        if token:
            tokens.append(token)
    return tokens


def _match_keys(tokens: list[str], matcher: str) -> list[str]:
    if matcher == "exact_plus_stem":
        return [_porter.stem(t) for t in tokens]
    return list(tokens)


def align_unigrams(candidate_keys: list[str],
                   reference_keys: list[str]) -> tuple[int, int]:
    """Best unigram alignment: returns (matches, chunks).

    Among alignments with the maximum number of matched token pairs, picks
    one with the fewest chunks (maximal runs contiguous in both strings),
    preferring the leftmost assignment on ties. Exhaustive with
    branch-and-bound; a deterministic node cap guards pathological inputs.
    """
    cand_count = Counter(candidate_keys)
    ref_count = Counter(reference_keys)
    quota = {k: min(c, ref_count.get(k, 0)) for k, c in cand_count.items()}
    total = sum(quota.values())
    if total == 0:
        return 0, 0

    ref_positions: dict[str, list[int]] = {}
    for j, key in enumerate(reference_keys):
        ref_positions.setdefault(key, []).append(j)

    # remaining candidate occurrences of each key at/after position i
    remaining = [dict(cand_count)]
    for key in candidate_keys:
        nxt = dict(remaining[-1])
        nxt[key] -= 1
        remaining.append(nxt)

    best_chunks = total + 1
    nodes = 0

    def search(i: int, needed: dict[str, int], used: set[int],
               last: tuple[int, int] | None, chunks: int, matched: int) -> None:
        nonlocal best_chunks, nodes
        if chunks >= best_chunks:
            return
        if nodes > _ALIGNMENT_NODE_CAP:
            return
        nodes += 1
        if matched == total:
            best_chunks = chunks
            return
        if i >= len(candidate_keys):
            return
        key = candidate_keys[i]
        need = needed.get(key, 0)
        if need > 0:
            for j in ref_positions[key]:
                if j in used:
                    continue
                contiguous = last is not None and last == (i - 1, j - 1)
                needed[key] = need - 1
                used.add(j)
                search(i + 1, needed, used, (i, j),
                       chunks if contiguous else chunks + 1, matched + 1)
                used.discard(j)
                needed[key] = need
        # skipping is only legal while enough later occurrences remain
        if remaining[i + 1].get(key, 0) >= need:
            search(i + 1, needed, used, last, chunks, matched)

    search(0, dict(quota), set(), None, 0, 0)
    return total, best_chunks


def meteor(candidate: str, reference: str,
           params: MeteorParams = MeteorParams()) -> float:
    """METEOR-style unigram similarity of ``candidate`` against ``reference``.

    Fmean = 10PR / (R + 9P) over matched unigrams, discounted by
    gamma * (chunks / matches) ** power. Returns 0.0 when nothing matches.
    """
    cand_tokens = tokenize(candidate)
    ref_tokens = tokenize(reference)
    if not cand_tokens or not ref_tokens:
        raise EmptyText("both texts must keep at least one token")

    matches, chunks = align_unigrams(_match_keys(cand_tokens, params.matcher),
                                     _match_keys(ref_tokens, params.matcher))
    if matches == 0:
        return 0.0
    precision = matches / len(cand_tokens)
    recall = matches / len(ref_tokens)
    fmean = 10 * precision * recall / (recall + 9 * precision)
    penalty = params.penalty_gamma * (chunks / matches) ** params.penalty_power
    return fmean * (1.0 - penalty)


def sentence_match_score(source: SimilaritySource, prompt_text: str,
                         method: str, gateway: ModelGateway,
                         endpoints: dict[str, BackendEndpoint], *,
                         pair_id: str, image: ImageInput | None = None,
                         meteor_params: MeteorParams = MeteorParams()) -> ScoreRecord:
    """Score one pair under one baseline variant, named by (kind, method)."""
    variant = VARIANTS.get((source.kind, method))
    if variant is None:
        raise ValueError(f"no baseline variant for ({source.kind}, {method})")

    if method == "embed_cosine":
        prompt_vec = gateway.embed(prompt_text, endpoints["embed_text"])
        if source.kind == "image":
            if image is None:
                raise ValueError("image sources need the image payload")
            other_vec = gateway.embed(image, endpoints["embed_image"])
        else:
            other_vec = gateway.embed(source.text, endpoints["embed_text"])
        value = clip_style_score(other_vec, prompt_vec)
    else:
        value = meteor(source.text, prompt_text, meteor_params)

    return ScoreRecord(pair_id=pair_id, objective=None, mode="baseline",
                       raw_value=value, normalized_score=value, variant=variant)
