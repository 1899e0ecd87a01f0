"""LLM-judged text-to-image evaluation harness.

Pipeline: turn each generated image into an object-centric visual description
(global caption + dense region captions, fused by a chat model), rate the
description against the text prompt (instruction-following or rule-enhanced),
attach rationales, score the classic baselines, and correlate everything
against human ratings. All model backends sit behind a replayable wire
protocol, so full runs are deterministic offline.
"""

from .baselines import MeteorParams, SimilaritySource, clip_style_score, meteor
from .datasets import (
    HumanRatingRecord,
    ImageManifestRecord,
    JoinedPair,
    PromptRecord,
    join_pairs,
    load_manifest,
    load_prompts,
    load_ratings,
    sample_prompts,
)
from .descriptor import (
    GlobalDescription,
    LocalDescription,
    ObjectCentricDescription,
    compose_description_prompt,
    format_global,
    format_region,
    synthesize_description,
)
from .evaluator import (
    AtomicCounts,
    Objective,
    RatingScale,
    ScoreRecord,
    error_count_rate,
    error_quality,
    extract_atomic_counts,
    generate_rationale,
    instruction_following_rate,
    rule_enhanced_score,
    score_pair,
)
from .gateway import (
    BackendEndpoint,
    ChatReply,
    ChatRequest,
    ImageInput,
    ModelGateway,
    RegionProposal,
    ResponseCache,
)
from .parsing import TaggedReply, parse_atomic, parse_integer_fallback, parse_tagged
from .stats import (
    AgreementResult,
    CorrelationResult,
    RatingSeries,
    aggregate,
    kendall_tau_b,
    krippendorff_alpha,
    normalize,
    spearman_rho,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
