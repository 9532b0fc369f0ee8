"""Toolkit for cross-lingual sign-to-sign translation pipelines:
back-translated parallel corpora, strict pair re-verification, and
direct-vs-cascade evaluation with geometric and text metrics."""

from .bleu import BleuScore, corpus_bleu, sentence_bleu_floor, tokenize_eval
from .btcorpus import BtConfig, StatsTable, bt_corpus_stats, build_bt_direction
from .corpus_io import build_pose_store, build_token_store, load_corpus, save_corpus
from .errors import DataError, EndpointError, S2SKitError, UsageError
from .evalharness import (
    Anchor,
    AnchorSet,
    EvalContext,
    System,
    anchor_set_from_pairs,
    build_anchor_sets,
    evaluate_direction,
    run_matrix,
)
from .geoalign import AlignmentResult, DtwResult, MetricReport, dtw, dtw_pa_mpjpe, procrustes_align
from .langs import SignLang, SpokenLang, partner, sign_for_spoken
from .modelio import EndpointSpec, HttpBackend, StubBackend, SubprocessBackend, TimedResult, cascade_s2s, invoke
from .quantize import Codebook, decode_tokens, encode_clip, train_codebook
from .records import (
    CandidatePair,
    GoldPair,
    MotionTokenSequence,
    PoseClip,
    Provenance,
    S2SPair,
    TextUtterance,
    validate_clip,
)
from .verify import ScreeningSession, apply_filters, finalize_strict, record_decision, subset_stats

__version__ = "0.1.0"
