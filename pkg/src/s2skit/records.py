"""Domain record types shared by every pipeline stage.

All records are immutable after construction. Types other than PoseClip
validate their invariants on construction; PoseClip is deliberately lax so
that validate_clip can report problems as data instead of exceptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DataError
from .langs import PARTNER, SignLang, SpokenLang

PARTS = ("body", "left_hand", "right_hand")

Decision = str  # "keep" | "discard"
DECISIONS = ("keep", "discard")


@dataclass(frozen=True)
class TextUtterance:
    id: str
    text: str
    lang: SpokenLang

    def __post_init__(self) -> None:
        if not self.id:
            raise DataError("utterance id must be non-empty")
        if not self.text.strip():
            raise DataError(f"utterance {self.id!r}: text empty after trimming")


@dataclass(frozen=True)
class PoseClip:
    """A sign clip: frames of flat joint coordinates, body then hands.

    Each frame is a flat tuple of (body + left_hand + right_hand) * dims
    coordinates. Use validate_clip for invariant checking.
    """

    id: str
    sign_lang: SignLang
    fps: float
    dims: int
    layout: Mapping[str, int]  # joints per part, keys PARTS
    frames: tuple
    line: Optional[int] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "layout", dict(self.layout))
        object.__setattr__(self, "frames", tuple(tuple(float(v) for v in f) for f in self.frames))

    @property
    def n_joints(self) -> int:
        return sum(self.layout.get(p, 0) for p in PARTS)

    @property
    def frame_width(self) -> int:
        return self.n_joints * self.dims

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @cached_property
    def as_array(self) -> np.ndarray:
        """(n_frames, frame_width) float64 view of the clip."""
        arr = np.asarray(self.frames, dtype=np.float64)
        arr.flags.writeable = False
        return arr

    def joints(self) -> np.ndarray:
        """(n_frames, n_joints, dims) view."""
        return self.as_array.reshape(self.n_frames, self.n_joints, self.dims)

    def part_slices(self) -> dict[str, slice]:
        """Joint-index slice per part, in body/left_hand/right_hand order."""
        out, start = {}, 0
        for p in PARTS:
            n = self.layout.get(p, 0)
            out[p] = slice(start, start + n)
            start += n
        return out


def validate_clip(clip: PoseClip) -> list[str]:
    """Return a list of invariant violations (empty means the clip is valid)."""
    violations = []
    if not clip.id:
        violations.append("id: empty")
    if not clip.fps > 0:
        violations.append(f"fps: must be positive, got {clip.fps}")
    if clip.dims not in (2, 3):
        violations.append(f"dims: must be 2 or 3, got {clip.dims}")
    for p in PARTS:
        if clip.layout.get(p, 0) < 1:
            violations.append(f"layout.{p}: joint count must be >= 1")
    if not clip.frames:
        violations.append("frames: empty")
    width = clip.frame_width
    for i, frame in enumerate(clip.frames):
        if len(frame) != width:
            violations.append(f"frame length mismatch, frame {i}: expected {width}, got {len(frame)}")
        elif not all(math.isfinite(v) for v in frame):
            violations.append(f"non-finite coordinate, frame {i}")
    return violations


@dataclass(frozen=True)
class MotionTokenSequence:
    """Per-timestep token triples over the body/left_hand/right_hand streams."""

    id: str
    sign_lang: SignLang
    synthetic: bool
    tokens: tuple  # of (body_id, left_id, right_id)
    codebook_id: str
    line: Optional[int] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        toks = tuple(tuple(int(t) for t in triple) for triple in self.tokens)
        object.__setattr__(self, "tokens", toks)
        if not self.id:
            raise DataError("token sequence id must be non-empty")
        if not toks:
            raise DataError(f"token sequence {self.id!r}: empty")
        for i, triple in enumerate(toks):
            if len(triple) != 3:
                raise DataError(f"token sequence {self.id!r}: triple {i} has {len(triple)} entries")
            if any(t < 0 for t in triple):
                raise DataError(f"token sequence {self.id!r}: negative token id at position {i}")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class GoldPair:
    """A natural (text, sign) pair from a monolingual corpus; the sign side is never synthetic."""

    text: TextUtterance
    sign_ref: str
    corpus_id: str
    sign_lang: SignLang
    line: Optional[int] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.sign_ref:
            raise DataError(f"gold pair {self.text.id!r}: empty sign_ref")
        if PARTNER[self.sign_lang] is not self.text.lang:
            raise DataError(
                f"gold pair {self.text.id!r}: partner mismatch "
                f"(text lang {self.text.lang.value}, sign {self.sign_lang.value})"
            )


@dataclass(frozen=True)
class Provenance:
    gold_corpus_id: str
    gold_text: str
    translated_text: str


@dataclass(frozen=True)
class S2SPair:
    """(synthetic source clip, gold target clip) training instance."""

    source: MotionTokenSequence
    target: MotionTokenSequence
    direction: tuple
    provenance: Provenance
    line: Optional[int] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        src, tgt = self.direction
        object.__setattr__(self, "direction", (src, tgt))
        if src is tgt:
            raise DataError(f"pair {self.source.id!r}: direction must span two sign languages")
        if self.source.sign_lang is not src:
            raise DataError(f"pair {self.source.id!r}: source sign language {self.source.sign_lang.value} != direction {src.value}")
        if self.target.sign_lang is not tgt:
            raise DataError(f"pair {self.source.id!r}: target sign language {self.target.sign_lang.value} != direction {tgt.value}")
        if not self.source.synthetic:
            raise DataError(f"pair {self.source.id!r}: source must be synthetic")
        if self.target.synthetic:
            raise DataError(f"pair {self.source.id!r}: target must be gold (synthetic=false)")


@dataclass(frozen=True)
class CandidatePair:
    """A cross-lingual text match with clip lists, automatic scores and screening decisions."""

    pair_id: str
    src_text: TextUtterance
    tgt_text: TextUtterance
    src_clips: tuple
    tgt_clips: tuple
    llm_rating: Optional[int] = None
    cosine: Optional[float] = None
    decisions: Mapping[str, Decision] = field(default_factory=dict)
    line: Optional[int] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "src_clips", tuple(self.src_clips))
        object.__setattr__(self, "tgt_clips", tuple(self.tgt_clips))
        object.__setattr__(self, "decisions", dict(self.decisions))
        if not self.pair_id:
            raise DataError("candidate pair_id must be non-empty")
        if self.src_text.lang is self.tgt_text.lang:
            raise DataError(f"pair {self.pair_id!r}: source and target languages must differ")
        if self.llm_rating is not None and not 1 <= self.llm_rating <= 5:
            raise DataError(f"pair {self.pair_id!r}: llm_rating {self.llm_rating} outside 1..5")
        if self.cosine is not None and not -1.0 <= self.cosine <= 1.0:
            raise DataError(f"pair {self.pair_id!r}: cosine {self.cosine} outside [-1, 1]")
        for annotator, decision in self.decisions.items():
            if decision not in DECISIONS:
                raise DataError(f"pair {self.pair_id!r}: invalid decision {decision!r} by {annotator!r}")


def token_payload(tokens: Sequence[Sequence[int]]) -> list:
    """Tokens as plain nested lists, the shape used on every wire and file format."""
    return [[int(b), int(l), int(r)] for b, l, r in tokens]
