"""BLEU with the per-language tokenization convention used for evaluation:
word-level for ASL/DGS partners, character-level for CSL."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import DataError, UsageError
from .langs import SignLang

SMOOTHING_MODES = ("none", "floor")
FLOOR_EPS = 0.1


@dataclass(frozen=True)
class BleuScore:
    bleu: float  # 0..100
    precisions: tuple  # modified n-gram precisions, length max_n
    brevity_penalty: float
    hyp_len: int
    ref_len: int

    def to_json_obj(self) -> dict:
        return {
            "bleu": self.bleu,
            "precisions": list(self.precisions),
            "brevity_penalty": self.brevity_penalty,
            "hyp_len": self.hyp_len,
            "ref_len": self.ref_len,
        }


def tokenize_eval(text: str, target_sign_lang: SignLang) -> list:
    """Whitespace tokens for ASL/DGS targets, Unicode characters for CSL."""
    if target_sign_lang is SignLang.CSL:
        return [ch for ch in text if not ch.isspace()]
    return text.split()


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(
    hyps: Sequence[Sequence[str]],
    refs: Sequence[Sequence[str]],
    max_n: int = 4,
    smoothing: str = "none",
    floor_eps: float = FLOOR_EPS,
) -> BleuScore:
    """Corpus-level BLEU from aggregated clipped n-gram counts, one reference
    per hypothesis, on the 0-100 scale.

    smoothing="none" is the canonical definition (any zero precision gives
    BLEU 0); smoothing="floor" substitutes floor_eps for zero clipped counts,
    for sentence-level use where zero 4-gram matches are common.
    """
    if len(hyps) != len(refs):
        raise DataError(f"hypothesis/reference count mismatch: {len(hyps)} vs {len(refs)}")
    if not hyps:
        raise DataError("empty corpus")
    if not 1 <= max_n <= 4:
        raise UsageError(f"max_n must be in 1..4, got {max_n}")
    if smoothing not in SMOOTHING_MODES:
        raise UsageError(f"unknown smoothing {smoothing!r}")

    hyp_len = sum(len(h) for h in hyps)
    ref_len = sum(len(r) for r in refs)

    clipped = [0] * max_n
    totals = [0] * max_n
    for hyp, ref in zip(hyps, refs):
        for n in range(1, max_n + 1):
            hyp_counts = _ngram_counts(hyp, n)
            if not hyp_counts:
                continue
            ref_counts = _ngram_counts(ref, n)
            totals[n - 1] += sum(hyp_counts.values())
            clipped[n - 1] += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())

    precisions = []
    for n in range(max_n):
        if totals[n] == 0:
            precisions.append(0.0)
        elif clipped[n] == 0 and smoothing == "floor":
            precisions.append(floor_eps / totals[n])
        else:
            precisions.append(clipped[n] / totals[n])

    if hyp_len == 0:
        bp = 0.0
    elif hyp_len < ref_len:
        bp = math.exp(1.0 - ref_len / hyp_len)
    else:
        bp = 1.0

    if any(p == 0.0 for p in precisions) or bp == 0.0:
        bleu = 0.0
    else:
        bleu = 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / max_n)

    return BleuScore(
        bleu=bleu,
        precisions=tuple(precisions),
        brevity_penalty=bp,
        hyp_len=hyp_len,
        ref_len=ref_len,
    )


def sentence_bleu_floor(hyp: Sequence[str], ref: Sequence[str], max_n: int = 4) -> float:
    """Floor-smoothed sentence BLEU, used to pick the best reference per anchor."""
    return corpus_bleu([hyp], [ref], max_n=max_n, smoothing="floor").bleu
