from __future__ import annotations

import numpy as np
import pytest

from t2ieval._porter import stem
from t2ieval.baselines import (
    MeteorParams,
    SimilaritySource,
    align_unigrams,
    clip_style_score,
    meteor,
    sentence_match_score,
    tokenize,
)
from t2ieval.errors import DegenerateEmbedding, EmptyText
from t2ieval.gateway import ImageInput

from conftest import make_png

# -- brute-force alignment oracle ------------------------------------------------


def _all_max_matchings(cand, ref):
    results = []
    best_size = 0

    def rec(i, used, pairs):
        nonlocal best_size
        if i == len(cand):
            if len(pairs) > best_size:
                best_size = len(pairs)
                results.clear()
            if len(pairs) == best_size:
                results.append(list(pairs))
            return
        rec(i + 1, used, pairs)
        for j in range(len(ref)):
            if j not in used and ref[j] == cand[i]:
                rec(i + 1, used | {j}, pairs + [(i, j)])

    rec(0, frozenset(), [])
    return best_size, [p for p in results if len(p) == best_size]


def _chunks_of(pairs):
    count = 0
    prev = None
    for i, j in sorted(pairs):
        if prev is None or (i - prev[0], j - prev[1]) != (1, 1):
            count += 1
        prev = (i, j)
    return count


def meteor_oracle(candidate: str, reference: str,
                  gamma: float = 0.5, power: float = 3.0) -> float:
    cand, ref = tokenize(candidate), tokenize(reference)
    m, matchings = _all_max_matchings(cand, ref)
    if m == 0:
        return 0.0
    chunks = min(_chunks_of(p) for p in matchings)
    precision = m / len(cand)
    recall = m / len(ref)
    fmean = 10 * precision * recall / (recall + 9 * precision)
    return fmean * (1 - gamma * (chunks / m) ** power)


# committed short pairs: every candidate/reference combination stays <= 6 tokens
ORACLE_PAIRS = [
    ("a red book", "a red book"),
    ("red book a", "a red book"),
    ("a red book and", "a yellow book"),
    ("dog", "cat"),
    ("a a b a", "b a a"),
    ("the cat sat", "the cat sat down"),
    ("b a b a b", "a b a b a"),
    ("one two three four five", "five four three two one"),
    ("a sheep near a car", "a car near a sheep"),
    ("big red car", "red big car"),
    ("a a a", "a a a a"),
    ("x y x y", "y x y x"),
]


class TestMeteor:
    def test_identity_anchor(self):
        # m=3, chunks=1: fmean 1, penalty 0.5*(1/3)^3
        assert meteor("a red book", "a red book") == pytest.approx(
            0.9814814814814815, abs=1e-12)

    def test_disjoint_is_zero(self):
        assert meteor("dog", "cat") == 0.0

    def test_scramble_against_oracle(self):
        value = meteor("red book a", "a red book")
        assert value == pytest.approx(meteor_oracle("red book a", "a red book"),
                                      abs=1e-12)

    @pytest.mark.parametrize("candidate,reference", ORACLE_PAIRS)
    def test_committed_pairs_match_oracle(self, candidate, reference):
        assert meteor(candidate, reference) == pytest.approx(
            meteor_oracle(candidate, reference), abs=1e-12)

    def test_random_short_pairs_match_oracle(self):
        rng = np.random.default_rng(7)
        vocab = ["a", "b", "red", "book", "cat"]
        for _ in range(200):
            cand = " ".join(rng.choice(vocab, size=rng.integers(1, 7)))
            ref = " ".join(rng.choice(vocab, size=rng.integers(1, 7)))
            assert meteor(cand, ref) == pytest.approx(meteor_oracle(cand, ref),
                                                      abs=1e-12)

    def test_self_score_depends_only_on_token_count(self):
        for text_a, text_b in [("a red car", "one two three"),
                               ("big dog here now", "x y z w")]:
            assert meteor(text_a, text_a) == pytest.approx(meteor(text_b, text_b),
                                                           abs=1e-15)

    def test_bounded(self):
        rng = np.random.default_rng(11)
        vocab = ["a", "b", "c", "red", "blue", "book"]
        for _ in range(100):
            cand = " ".join(rng.choice(vocab, size=rng.integers(1, 10)))
            ref = " ".join(rng.choice(vocab, size=rng.integers(1, 10)))
            assert 0.0 <= meteor(cand, ref) <= 1.0

    def test_empty_after_tokenization(self):
        with pytest.raises(EmptyText):
            meteor("...", "a red book")

    def test_stem_matcher(self):
        params = MeteorParams(matcher="exact_plus_stem")
        assert meteor("the books", "the book", params) > 0.5
        assert meteor("running", "runs", params) > 0.0

    def test_custom_penalty_params(self):
        loose = MeteorParams(penalty_gamma=0.0)
        assert meteor("red book a", "a red book", loose) == pytest.approx(1.0)


class TestTokenize:
    def test_lowercase_and_punctuation(self):
        assert tokenize("A Red, book!") == ["a", "red", "book"]

    def test_inner_punctuation_kept(self):
        assert tokenize("it's 512x512") == ["it's", "512x512"]

    def test_empty(self):
        assert tokenize("  ...  ") == []


class TestAlignment:
    def test_identity(self):
        assert align_unigrams(["a", "b", "c"], ["a", "b", "c"]) == (3, 1)

    def test_no_matches(self):
        assert align_unigrams(["a"], ["b"]) == (0, 0)

    def test_prefers_fewer_chunks(self):
        # "a b" matches contiguously at the tail of the reference
        assert align_unigrams(["a", "b"], ["b", "a", "b"]) == (2, 1)


class TestPorterStemmer:
    @pytest.mark.parametrize("word,expected", [
        ("caresses", "caress"),
        ("ponies", "poni"),
        ("cats", "cat"),
        ("feed", "feed"),
        ("agreed", "agre"),
        ("plastered", "plaster"),
        ("motoring", "motor"),
        ("happy", "happi"),
        ("relational", "relat"),
        ("adjustable", "adjust"),
        ("effective", "effect"),
    ])
    def test_known_stems(self, word, expected):
        assert stem(word) == expected


class TestClipStyleScore:
    def test_identity(self):
        v = [0.3, -1.2, 0.5]
        assert clip_style_score(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert clip_style_score([1, 0], [0, 1]) == 0.0

    def test_opposite_clamped(self):
        v = [0.4, 0.1, -2.0]
        assert clip_style_score(v, [-x for x in v]) == 0.0

    def test_scale_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            u = rng.normal(size=8)
            v = rng.normal(size=8)
            a, b = rng.uniform(0.01, 100, size=2)
            assert clip_style_score(a * u, b * v) == pytest.approx(
                clip_style_score(u, v), abs=1e-12)

    def test_zero_vector_rejected(self):
        with pytest.raises(DegenerateEmbedding):
            clip_style_score([0, 0, 0], [1, 2, 3])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            clip_style_score([1, 2], [1, 2, 3])


class TestSentenceMatchScore:
    @pytest.mark.parametrize("kind,method,variant", [
        ("image", "embed_cosine", "CLIP"),
        ("caption", "embed_cosine", "CapCLIP"),
        ("caption", "meteor", "CapMETEOR"),
        ("description", "embed_cosine", "DescCLIP"),
        ("description", "meteor", "DescMETEOR"),
    ])
    def test_variant_labels(self, kind, method, variant, synthetic_gateway, endpoints):
        source = (SimilaritySource(kind="image") if kind == "image"
                  else SimilaritySource(kind=kind, text="a red car parked outside"))
        image = (ImageInput.from_bytes(make_png()) if kind == "image" else None)
        record = sentence_match_score(source, "a red car", method,
                                      synthetic_gateway, endpoints,
                                      pair_id="p1", image=image)
        assert record.variant == variant
        assert record.mode == "baseline"
        assert 0.0 <= record.normalized_score <= 1.0
        assert record.objective is None

    def test_image_meteor_invalid(self, synthetic_gateway, endpoints):
        with pytest.raises(ValueError):
            sentence_match_score(SimilaritySource(kind="image"), "x", "meteor",
                                 synthetic_gateway, endpoints, pair_id="p")

    def test_source_validation(self):
        with pytest.raises(ValueError):
            SimilaritySource(kind="caption")
        with pytest.raises(ValueError):
            SimilaritySource(kind="image", text="nope")
