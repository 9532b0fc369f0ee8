"""Back-translation corpus construction: synthesize source clips for gold
targets in another sign language, three stages per pair (translate the gold
text, generate source sign tokens from it, pair with the untouched gold clip).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import DataError, S2SKitError, UsageError
from .langs import SignLang, direction_label, partner
from .modelio import EndpointSpec, MtRequest, invoke, synthesize_source
from .records import GoldPair, MotionTokenSequence, Provenance, S2SPair

ON_ERROR_MODES = ("skip_and_log", "abort")


@dataclass(frozen=True)
class BtConfig:
    source_sign_lang: SignLang
    mt: EndpointSpec
    t2s: EndpointSpec
    on_error: str = "skip_and_log"

    def __post_init__(self) -> None:
        if self.mt.role != "mt":
            raise UsageError(f"mt endpoint has role {self.mt.role!r}")
        if self.t2s.role != "t2s":
            raise UsageError(f"t2s endpoint has role {self.t2s.role!r}")
        if self.on_error not in ON_ERROR_MODES:
            raise UsageError(f"unknown on_error mode {self.on_error!r}")


@dataclass(frozen=True)
class SkipRecord:
    gold_id: str
    stage: str  # mt | t2s | pairing
    error: str


@dataclass(frozen=True)
class BtBuildResult:
    pairs: tuple
    skipped: tuple

    def skip_log_text(self) -> str:
        return "".join(
            json.dumps({"gold_id": s.gold_id, "stage": s.stage, "error": s.error}, ensure_ascii=False) + "\n"
            for s in self.skipped
        )


def build_bt_direction(
    gold: Sequence[GoldPair],
    cfg: BtConfig,
    token_store: Mapping[str, MotionTokenSequence],
) -> BtBuildResult:
    """Emit one synthetic-source/gold-target pair per gold entry.

    Targets are taken from token_store byte-for-byte; sources are generated
    through the shared t2s entry point so training-time construction and
    inference use one decoding setup. In skip_and_log mode stage failures
    are collected instead of raised.
    """
    pairs, skipped = [], []
    for g in gold:
        if g.sign_lang is cfg.source_sign_lang:
            raise UsageError(
                f"gold pair {g.text.id!r}: requested source language {cfg.source_sign_lang.value} "
                "equals the gold corpus sign language"
            )
        direction = (cfg.source_sign_lang, g.sign_lang)
        try:
            translated = invoke(
                cfg.mt,
                MtRequest(text=g.text.text, src=g.text.lang, tgt=partner(cfg.source_sign_lang)),
            ).payload
        except S2SKitError as exc:
            skipped.append(_skip_or_raise(cfg, g, "mt", exc))
            continue
        try:
            source = synthesize_source(cfg.t2s, translated, cfg.source_sign_lang).payload
        except S2SKitError as exc:
            skipped.append(_skip_or_raise(cfg, g, "t2s", exc))
            continue
        try:
            target = _resolve_target(g, token_store)
            pairs.append(
                S2SPair(
                    source=source,
                    target=target,
                    direction=direction,
                    provenance=Provenance(
                        gold_corpus_id=g.corpus_id,
                        gold_text=g.text.text,
                        translated_text=translated,
                    ),
                )
            )
        except S2SKitError as exc:
            skipped.append(_skip_or_raise(cfg, g, "pairing", exc))
    return BtBuildResult(pairs=tuple(pairs), skipped=tuple(skipped))


def _skip_or_raise(cfg: BtConfig, g: GoldPair, stage: str, exc: S2SKitError) -> SkipRecord:
    if cfg.on_error == "abort":
        raise DataError(f"gold pair {g.text.id!r}, stage {stage}: {exc}") from None
    return SkipRecord(gold_id=g.text.id, stage=stage, error=str(exc))


def _resolve_target(g: GoldPair, token_store: Mapping[str, MotionTokenSequence]) -> MotionTokenSequence:
    if g.sign_ref not in token_store:
        raise DataError(f"sign_ref {g.sign_ref!r} not found in token store")
    target = token_store[g.sign_ref]
    if target.synthetic:
        raise DataError(f"gold clip {g.sign_ref!r} is marked synthetic")
    if partner(target.sign_lang) is not g.text.lang:
        raise DataError(
            f"partner mismatch: text lang {g.text.lang.value!r} but clip {g.sign_ref!r} is {target.sign_lang.value}"
        )
    return target


@dataclass(frozen=True)
class StatsRow:
    direction: str
    pairs: int
    src_len: float  # mean source token length
    tgt_len: float  # mean gold token length


@dataclass(frozen=True)
class StatsTable:
    rows: tuple

    def total_pairs(self) -> int:
        return sum(r.pairs for r in self.rows)

    def to_json_obj(self) -> dict:
        return {
            "rows": [
                {"direction": r.direction, "pairs": r.pairs, "src_len": r.src_len, "tgt_len": r.tgt_len}
                for r in self.rows
            ],
            "total_pairs": self.total_pairs(),
        }


def bt_corpus_stats(pairs: Sequence[S2SPair]) -> StatsTable:
    """Per-direction pair counts and mean source/target token lengths."""
    grouped: dict = {}
    for p in pairs:
        grouped.setdefault(p.direction, []).append(p)
    rows = []
    for direction in sorted(grouped, key=lambda d: (d[0].value, d[1].value)):
        members = grouped[direction]
        rows.append(
            StatsRow(
                direction=direction_label(*direction),
                pairs=len(members),
                src_len=sum(len(p.source) for p in members) / len(members),
                tgt_len=sum(len(p.target) for p in members) / len(members),
            )
        )
    return StatsTable(rows=tuple(rows))


def format_stats_table(table: StatsTable) -> str:
    header = f"{'direction':<12}{'pairs':>8}{'src_len':>10}{'tgt_len':>10}"
    lines = [header]
    for r in table.rows:
        lines.append(f"{r.direction:<12}{r.pairs:>8,}{r.src_len:>10.2f}{r.tgt_len:>10.2f}")
    lines.append(f"{'total':<12}{table.total_pairs():>8,}")
    return "\n".join(lines)
