from __future__ import annotations

import json

import pytest

from t2ieval.datasets import (
    HumanRatingRecord,
    ImageManifestRecord,
    PromptRecord,
    bench_of,
    dump_jsonl,
    join_pairs,
    load_manifest,
    load_prompts,
    load_ratings,
    sample_prompts,
)
from t2ieval.errors import (
    DuplicateKey,
    InsufficientRecords,
    IntegrityError,
    SkippedWarning,
    ValidationError,
)

from conftest import FIXTURES, make_png


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")
    return path


@pytest.fixture
def data_dir(tmp_path):
    (tmp_path / "images").mkdir()
    for name in ("a", "b", "c"):
        (tmp_path / "images" / f"{name}.png").write_bytes(make_png(64, 48))
    write_jsonl(tmp_path / "prompts.jsonl", [
        {"prompt_id": "p1", "dataset": "concept_conjunction",
         "text": "a red book and a yellow vase"},
        {"prompt_id": "p2", "dataset": "coco2014",
         "text": "a man riding a horse"},
    ])
    write_jsonl(tmp_path / "manifest.jsonl", [
        {"pair_id": "pair-a", "prompt_id": "p1", "generator": "gen1",
         "image_path": "images/a.png", "width": 64, "height": 48},
        {"pair_id": "pair-b", "prompt_id": "p2", "generator": "gen1",
         "image_path": "images/b.png", "width": 64, "height": 48},
        {"pair_id": "pair-c", "prompt_id": "p2", "generator": "gen2",
         "image_path": "images/c.png", "width": 64, "height": 48},
    ])
    write_jsonl(tmp_path / "ratings.jsonl", [
        {"pair_id": "pair-a", "annotator_id": "r1", "overall": 7, "error_count": 0},
        {"pair_id": "pair-a", "annotator_id": "r2", "overall": 9, "error_count": 3},
        {"pair_id": "pair-b", "annotator_id": "r1", "overall": 4, "error_count": 5},
    ])
    return tmp_path


class TestLoaders:
    def test_valid_files_round_trip(self, data_dir):
        assert len(load_prompts(data_dir / "prompts.jsonl")) == 2
        assert len(load_manifest(data_dir / "manifest.jsonl")) == 3
        assert len(load_ratings(data_dir / "ratings.jsonl")) == 3

    def test_overall_out_of_range(self, tmp_path):
        path = write_jsonl(tmp_path / "r.jsonl", [
            {"pair_id": "x", "annotator_id": "a", "overall": 11, "error_count": 0}])
        with pytest.raises(ValidationError) as exc_info:
            load_ratings(path)
        assert "1-10" in str(exc_info.value)
        assert exc_info.value.line == 1

    def test_error_count_out_of_range(self, tmp_path):
        path = write_jsonl(tmp_path / "r.jsonl", [
            {"pair_id": "x", "annotator_id": "a", "overall": 5, "error_count": 10}])
        with pytest.raises(ValidationError):
            load_ratings(path)

    def test_duplicate_pair_id(self, tmp_path):
        rows = [{"pair_id": "dup", "prompt_id": "p", "generator": "g",
                 "image_path": "i.png", "width": 1, "height": 1}] * 2
        path = write_jsonl(tmp_path / "m.jsonl", rows)
        with pytest.raises(DuplicateKey):
            load_manifest(path, check_images=False)

    def test_malformed_json_cites_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"prompt_id": "a", "dataset": "coco2014", "text": "x"}\n'
                        "{oops\n", encoding="utf-8")
        with pytest.raises(ValidationError) as exc_info:
            load_prompts(path)
        assert exc_info.value.line == 2

    def test_missing_field_named(self, tmp_path):
        path = write_jsonl(tmp_path / "p.jsonl", [{"prompt_id": "a",
                                                   "dataset": "coco2014"}])
        with pytest.raises(ValidationError) as exc_info:
            load_prompts(path)
        assert exc_info.value.field == "text"

    def test_unknown_dataset(self, tmp_path):
        path = write_jsonl(tmp_path / "p.jsonl", [
            {"prompt_id": "a", "dataset": "imagenet", "text": "x"}])
        with pytest.raises(ValidationError):
            load_prompts(path)

    def test_manifest_image_must_exist(self, tmp_path):
        path = write_jsonl(tmp_path / "m.jsonl", [
            {"pair_id": "a", "prompt_id": "p", "generator": "g",
             "image_path": "missing.png", "width": 64, "height": 48}])
        with pytest.raises(ValidationError):
            load_manifest(path)

    def test_manifest_dimension_mismatch(self, tmp_path):
        (tmp_path / "img.png").write_bytes(make_png(10, 10))
        path = write_jsonl(tmp_path / "m.jsonl", [
            {"pair_id": "a", "prompt_id": "p", "generator": "g",
             "image_path": "img.png", "width": 64, "height": 48}])
        with pytest.raises(ValidationError) as exc_info:
            load_manifest(path)
        assert "10x10" in str(exc_info.value)

    def test_boolean_not_accepted_as_int(self, tmp_path):
        path = write_jsonl(tmp_path / "r.jsonl", [
            {"pair_id": "x", "annotator_id": "a", "overall": True,
             "error_count": 0}])
        with pytest.raises(ValidationError):
            load_ratings(path)


class TestJoin:
    def test_mean_overall_normalization(self, data_dir):
        joined = join_pairs(load_prompts(data_dir / "prompts.jsonl"),
                            load_manifest(data_dir / "manifest.jsonl"),
                            load_ratings(data_dir / "ratings.jsonl"))
        pair_a = next(p for p in joined if p.pair_id == "pair-a")
        # annotators 7 and 9 -> mean 8 -> (8-1)/9
        assert pair_a.human_overall == pytest.approx(7 / 9, abs=1e-12)
        # errors 0 and 3 -> qualities 1.0 and 2/3 -> mean 5/6
        assert pair_a.human_error_quality == pytest.approx(5 / 6, abs=1e-12)
        assert pair_a.n_annotators == 2

    def test_unrated_pairs_excluded_when_required(self, data_dir):
        with pytest.warns(SkippedWarning):
            joined = join_pairs(load_prompts(data_dir / "prompts.jsonl"),
                                load_manifest(data_dir / "manifest.jsonl"),
                                load_ratings(data_dir / "ratings.jsonl"))
        assert {p.pair_id for p in joined} == {"pair-a", "pair-b"}

    def test_unrated_pairs_kept_otherwise(self, data_dir):
        joined = join_pairs(load_prompts(data_dir / "prompts.jsonl"),
                            load_manifest(data_dir / "manifest.jsonl"),
                            load_ratings(data_dir / "ratings.jsonl"),
                            require_ratings=False)
        pair_c = next(p for p in joined if p.pair_id == "pair-c")
        assert pair_c.human_overall is None
        assert len(joined) == 3

    def test_single_annotator_flagged(self, data_dir):
        with pytest.warns(SkippedWarning, match="single annotator"):
            joined = join_pairs(load_prompts(data_dir / "prompts.jsonl"),
                                load_manifest(data_dir / "manifest.jsonl"),
                                load_ratings(data_dir / "ratings.jsonl"))
        pair_b = next(p for p in joined if p.pair_id == "pair-b")
        assert pair_b.n_annotators == 1

    def test_rating_with_unknown_pair(self, data_dir):
        ratings = load_ratings(data_dir / "ratings.jsonl")
        ratings.append(HumanRatingRecord("ghost", "r1", 5, 0))
        with pytest.raises(IntegrityError):
            join_pairs(load_prompts(data_dir / "prompts.jsonl"),
                       load_manifest(data_dir / "manifest.jsonl"), ratings)

    def test_manifest_with_unknown_prompt(self, data_dir):
        manifest = load_manifest(data_dir / "manifest.jsonl")
        manifest.append(ImageManifestRecord("pair-x", "ghost", "g", "x.png", 1, 1))
        with pytest.raises(IntegrityError):
            join_pairs(load_prompts(data_dir / "prompts.jsonl"), manifest, [])

    def test_aggregated_scores_in_unit_interval(self, data_dir):
        joined = join_pairs(load_prompts(data_dir / "prompts.jsonl"),
                            load_manifest(data_dir / "manifest.jsonl"),
                            load_ratings(data_dir / "ratings.jsonl"))
        for p in joined:
            assert 0.0 <= p.human_overall <= 1.0
            assert 0.0 <= p.human_error_quality <= 1.0


class TestSampling:
    def records(self):
        return load_prompts(FIXTURES / "sample_prompts.jsonl")

    def test_exhaustive_sample_is_permutation(self):
        records = self.records()
        sampled = sample_prompts(records, len(records), seed=3)
        assert sorted(r.prompt_id for r in sampled) == \
            sorted(r.prompt_id for r in records)

    def test_same_seed_same_sample(self):
        records = self.records()
        assert sample_prompts(records, 10, seed=7) == \
            sample_prompts(records, 10, seed=7)

    def test_known_seed_stable_across_platforms(self):
        records = self.records()
        ids = [r.prompt_id for r in sample_prompts(records, 3, seed=0)]
        # Mersenne Twister sequence is documented and platform-stable
        import random
        expected = [r.prompt_id for r in random.Random(0).sample(records, 3)]
        assert ids == expected

    def test_zero_k(self):
        assert sample_prompts(self.records(), 0, seed=1) == []

    def test_oversample_rejected(self):
        with pytest.raises(InsufficientRecords):
            sample_prompts(self.records(), 999, seed=1)


def test_bench_derivation():
    assert bench_of("concept_conjunction") == "compositional"
    assert bench_of("attribute_binding") == "compositional"
    assert bench_of("coco2014") == "general"
    assert bench_of("drawbench") == "general"
    assert PromptRecord("x", "paintskills", "t").bench == "general"


def test_canonical_reserialization_round_trip(tmp_path):
    source = FIXTURES / "sample_prompts.jsonl"
    records = load_prompts(source)
    out = tmp_path / "again.jsonl"
    dump_jsonl(records, out)
    assert load_prompts(out) == records
    # canonical form is stable under a second round trip
    again = tmp_path / "again2.jsonl"
    dump_jsonl(load_prompts(out), again)
    assert again.read_text() == out.read_text()
