"""Anchor-based evaluation of direct vs cascaded sign-to-sign systems.

Every unique source clip is one anchor, fed to the system exactly once; the
output is scored against all target clips sharing the anchor's text match,
keeping the best score per metric (min for the pose error, max for the BLEU
reference selection). Means are reported per direction, with a per-anchor
log kept for audit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .bleu import BleuScore, corpus_bleu, sentence_bleu_floor, tokenize_eval
from .errors import DataError, EndpointError, S2SKitError, UsageError
from .geoalign import MetricReport, dtw_pa_mpjpe
from .langs import SignLang, direction_label, parse_sign, sign_for_spoken
from .modelio import EndpointSpec, S2sRequest, S2tRequest, TimedResult, cascade_s2s, endpoint_from_obj, invoke, synthesize_source
from .quantize import Codebook, decode_tokens, encode_clip
from .records import CandidatePair, MotionTokenSequence, PARTS, PoseClip, S2SPair

PathLike = Union[str, Path]

SOURCE_MODES = ("real", "synthetic")
LOW_N_THRESHOLD = 10  # directions with fewer anchors are flagged, not suppressed


@dataclass(frozen=True)
class Anchor:
    source_clip: str
    target_clips: tuple  # >= 1 clip ids
    pair_id: str
    translated_text: Optional[str] = None  # source-language text, for synthetic-source mode


@dataclass(frozen=True)
class AnchorSet:
    direction: tuple  # (SignLang, SignLang)
    anchors: tuple
    skipped: tuple = ()  # (pair_id, reason) entries from construction

    @property
    def n_anchors(self) -> int:
        return len(self.anchors)


def build_anchor_sets(strict: Sequence[CandidatePair], direction: tuple) -> AnchorSet:
    """Anchors for one direction: one per unique source-side clip, each
    carrying all target-side clips of its text match."""
    src_sign, tgt_sign = direction
    if src_sign is tgt_sign:
        raise UsageError("direction must span two sign languages")
    anchors, skipped, seen = [], [], set()
    for p in strict:
        pair_signs = {sign_for_spoken(p.src_text.lang), sign_for_spoken(p.tgt_text.lang)}
        if pair_signs != {src_sign, tgt_sign}:
            continue
        if sign_for_spoken(p.src_text.lang) is src_sign:
            sources, targets, src_text = p.src_clips, p.tgt_clips, p.src_text.text
        else:
            sources, targets, src_text = p.tgt_clips, p.src_clips, p.tgt_text.text
        if not sources or not targets:
            skipped.append((p.pair_id, "empty clip list"))
            continue
        for clip_id in sources:
            if clip_id in seen:
                skipped.append((p.pair_id, f"duplicate source clip {clip_id!r}"))
                continue
            seen.add(clip_id)
            anchors.append(
                Anchor(source_clip=clip_id, target_clips=tuple(targets), pair_id=p.pair_id, translated_text=src_text)
            )
    return AnchorSet(direction=(src_sign, tgt_sign), anchors=tuple(anchors), skipped=tuple(skipped))


def anchor_set_from_pairs(pairs: Sequence[S2SPair]) -> AnchorSet:
    """Anchors for a synthetic-source test set: one anchor per pair, one target."""
    if not pairs:
        raise DataError("no pairs")
    direction = pairs[0].direction
    anchors = []
    for p in pairs:
        if p.direction != direction:
            raise DataError(f"pair {p.source.id!r}: mixed directions in one anchor set")
        anchors.append(
            Anchor(
                source_clip=p.source.id,
                target_clips=(p.target.id,),
                pair_id=p.source.id,
                translated_text=p.provenance.translated_text,
            )
        )
    return AnchorSet(direction=direction, anchors=tuple(anchors))


def dump_anchor_sets(sets: Sequence[AnchorSet]) -> str:
    """One JSON line per anchor set (the `eval run --anchors` file format)."""
    lines = []
    for s in sets:
        obj = {
            "direction": [s.direction[0].value, s.direction[1].value],
            "anchors": [
                {
                    "source_clip": a.source_clip,
                    "target_clips": list(a.target_clips),
                    "pair_id": a.pair_id,
                    "translated_text": a.translated_text,
                }
                for a in s.anchors
            ],
        }
        lines.append(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def load_anchor_sets(path: PathLike) -> list:
    sets = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {line_no}: malformed JSON: {exc.msg}") from None
            sets.append(_anchor_set_from_obj(obj, line_no))
    return sets


def _anchor_set_from_obj(obj: dict, line_no: int) -> AnchorSet:
    try:
        direction = (parse_sign(obj["direction"][0]), parse_sign(obj["direction"][1]))
        anchors = tuple(
            Anchor(
                source_clip=str(a["source_clip"]),
                target_clips=tuple(str(t) for t in a["target_clips"]),
                pair_id=str(a.get("pair_id", "")),
                translated_text=a.get("translated_text"),
            )
            for a in obj["anchors"]
        )
    except (KeyError, IndexError, TypeError):
        raise DataError(f"line {line_no}: malformed anchor set") from None
    return AnchorSet(direction=direction, anchors=anchors)


@dataclass(frozen=True)
class System:
    """A named S2S system: one direct endpoint, or a cascade triple."""

    name: str
    kind: str  # "direct" | "cascade"
    s2s: Optional[EndpointSpec] = None
    s2t: Optional[EndpointSpec] = None
    mt: Optional[EndpointSpec] = None
    t2s: Optional[EndpointSpec] = None

    def __post_init__(self) -> None:
        if self.kind == "direct":
            if self.s2s is None or self.s2s.role != "s2s":
                raise UsageError(f"system {self.name!r}: direct systems need an s2s endpoint")
        elif self.kind == "cascade":
            for role in ("s2t", "mt", "t2s"):
                spec = getattr(self, role)
                if spec is None or spec.role != role:
                    raise UsageError(f"system {self.name!r}: cascade systems need an {role} endpoint")
        else:
            raise UsageError(f"system {self.name!r}: unknown kind {self.kind!r}")


def system_from_obj(obj: dict) -> System:
    kind = obj.get("kind")
    name = obj.get("name", kind or "system")
    if kind == "direct":
        return System(name=name, kind=kind, s2s=endpoint_from_obj("s2s", obj["s2s"]))
    if kind == "cascade":
        return System(
            name=name,
            kind=kind,
            s2t=endpoint_from_obj("s2t", obj["s2t"]),
            mt=endpoint_from_obj("mt", obj["mt"]),
            t2s=endpoint_from_obj("t2s", obj["t2s"]),
        )
    raise UsageError(f"system {name!r}: unknown kind {kind!r}")


def load_systems(path: PathLike) -> list:
    objs = json.loads(Path(path).read_text(encoding="utf-8"))
    systems = [system_from_obj(o) for o in objs]
    if len({s.name for s in systems}) != len(systems):
        raise DataError("duplicate system names")
    return systems


@dataclass
class EvalContext:
    """Everything evaluate_direction needs besides the system and anchors."""

    quantizer: Codebook
    pose_store: Mapping[str, PoseClip]
    text_store: Mapping[str, str]  # clip id -> gold text, used as BLEU references
    s2t_eval: EndpointSpec
    source_mode: str = "real"
    t2s: Optional[EndpointSpec] = None  # same endpoint object as corpus construction
    allow_scale: bool = False

    def __post_init__(self) -> None:
        if self.source_mode not in SOURCE_MODES:
            raise UsageError(f"unknown source_mode {self.source_mode!r}")
        if self.source_mode == "synthetic" and self.t2s is None:
            raise UsageError("source_mode=synthetic needs the shared t2s endpoint")
        if self.s2t_eval.role != "s2t":
            raise UsageError(f"s2t_eval endpoint has role {self.s2t_eval.role!r}")


@dataclass(frozen=True)
class DirectionReport:
    direction: str
    n_anchors: int
    n_failed: int
    low_n: bool
    skipped: bool  # true when no anchor succeeded
    pa: Optional[MetricReport]
    b1: Optional[BleuScore]
    b4: Optional[BleuScore]
    latency_ms: Optional[float]

    def to_json_obj(self) -> dict:
        return {
            "direction": self.direction,
            "n_anchors": self.n_anchors,
            "n_failed": self.n_failed,
            "low_n": self.low_n,
            "skipped": self.skipped,
            "pa": None if self.pa is None else self.pa.to_json_obj(),
            "b1": None if self.b1 is None else self.b1.to_json_obj(),
            "b4": None if self.b4 is None else self.b4.to_json_obj(),
            "latency_ms": self.latency_ms,
        }


@dataclass(frozen=True)
class DirectionEvaluation:
    report: DirectionReport
    per_anchor: tuple  # of dicts, keyed by anchor id, audit-complete


def _source_tokens(anchor: Anchor, direction: tuple, ctx: EvalContext) -> MotionTokenSequence:
    if ctx.source_mode == "synthetic":
        if anchor.translated_text is None:
            raise DataError(f"anchor {anchor.source_clip!r}: no source text for synthetic mode")
        return synthesize_source(ctx.t2s, anchor.translated_text, direction[0]).payload
    if anchor.source_clip not in ctx.pose_store:
        raise DataError(f"anchor source clip {anchor.source_clip!r} not in pose store")
    return encode_clip(ctx.pose_store[anchor.source_clip], ctx.quantizer)


def _run_system(system: System, source: MotionTokenSequence, tgt: SignLang) -> TimedResult:
    if system.kind == "direct":
        return invoke(system.s2s, S2sRequest(tokens=source.tokens, src=source.sign_lang, tgt=tgt))
    return cascade_s2s(system.s2t, system.mt, system.t2s, source, tgt)


def evaluate_direction(system: System, anchor_set: AnchorSet, ctx: EvalContext) -> DirectionEvaluation:
    """Run the system once per anchor and aggregate best-of scores.

    Failed anchors are excluded from every mean but reported; the per-anchor
    log carries all per-target scores so the best-of selection is auditable.
    """
    direction = anchor_set.direction
    tgt_sign = direction[1]
    logs = []
    pa_sel, part_sel = [], {p: [] for p in PARTS}
    hyp_corpus, ref_corpus = [], []
    latencies = []

    for anchor in anchor_set.anchors:
        entry = {
            "anchor": anchor.source_clip,
            "pair_id": anchor.pair_id,
            "failed": False,
            "error": None,
        }
        try:
            source = _source_tokens(anchor, direction, ctx)
            result = _run_system(system, source, tgt_sign)
            output = result.payload
            decoded = decode_tokens(replace(output, codebook_id=ctx.quantizer.codebook_id), ctx.quantizer)

            pa_by_target = []
            for tid in anchor.target_clips:
                if tid not in ctx.pose_store:
                    raise DataError(f"target clip {tid!r} not in pose store")
                pa_by_target.append(dtw_pa_mpjpe(decoded, ctx.pose_store[tid], ctx.allow_scale))
            pa_idx = min(range(len(pa_by_target)), key=lambda i: pa_by_target[i].overall)

            hyp_text = invoke(ctx.s2t_eval, S2tRequest(tokens=output.tokens, sign_lang=tgt_sign)).payload
            hyp_tokens = tokenize_eval(hyp_text, tgt_sign)
            ref_tokens_by_target, bleu_by_target = [], []
            for tid in anchor.target_clips:
                if tid not in ctx.text_store:
                    raise DataError(f"target clip {tid!r} has no gold text")
                ref_tokens = tokenize_eval(ctx.text_store[tid], tgt_sign)
                ref_tokens_by_target.append(ref_tokens)
                bleu_by_target.append(sentence_bleu_floor(hyp_tokens, ref_tokens))
            bleu_idx = max(range(len(bleu_by_target)), key=lambda i: bleu_by_target[i])
        except S2SKitError as exc:
            entry["failed"] = True
            entry["error"] = str(exc)
            logs.append(entry)
            continue

        chosen = pa_by_target[pa_idx]
        pa_sel.append(chosen.overall)
        for p in PARTS:
            part_sel[p].append(chosen.per_part[p])
        hyp_corpus.append(hyp_tokens)
        ref_corpus.append(ref_tokens_by_target[bleu_idx])
        latencies.append(result.latency_ms)

        entry.update(
            {
                "latency_ms": result.latency_ms,
                "output_tokens": len(output),
                "pa_by_target": [r.overall for r in pa_by_target],
                "pa_selected_index": pa_idx,
                "pa_overall": chosen.overall,
                "pa_per_part": dict(chosen.per_part),
                "hyp_text": hyp_text,
                "hyp_tokens": hyp_tokens,
                "bleu_by_target": bleu_by_target,
                "bleu_selected_index": bleu_idx,
                "selected_ref_tokens": ref_tokens_by_target[bleu_idx],
            }
        )
        logs.append(entry)

    n_ok = len(pa_sel)
    if n_ok:
        pa = MetricReport(
            overall=sum(pa_sel) / n_ok,
            per_part={p: sum(part_sel[p]) / n_ok for p in PARTS},
        )
        b1 = corpus_bleu(hyp_corpus, ref_corpus, max_n=1)
        b4 = corpus_bleu(hyp_corpus, ref_corpus, max_n=4)
        latency = sum(latencies) / n_ok
    else:
        pa = b1 = b4 = latency = None

    report = DirectionReport(
        direction=direction_label(*direction),
        n_anchors=anchor_set.n_anchors,
        n_failed=anchor_set.n_anchors - n_ok,
        low_n=anchor_set.n_anchors < LOW_N_THRESHOLD,
        skipped=n_ok == 0,
        pa=pa,
        b1=b1,
        b4=b4,
        latency_ms=latency,
    )
    return DirectionEvaluation(report=report, per_anchor=tuple(logs))


@dataclass(frozen=True)
class MatrixCell:
    system: str
    direction: str
    report: Optional[DirectionReport]
    error: Optional[str] = None


@dataclass(frozen=True)
class MatrixReport:
    systems: tuple  # system names
    directions: tuple  # direction labels
    cells: tuple  # of MatrixCell
    averages: dict  # system -> {pa, b1, b4, latency_ms}
    per_anchor: tuple  # of dicts with system/direction attached

    def cell(self, system: str, direction: str) -> MatrixCell:
        for c in self.cells:
            if c.system == system and c.direction == direction:
                return c
        raise KeyError((system, direction))

    def to_json_obj(self) -> dict:
        return {
            "systems": list(self.systems),
            "directions": list(self.directions),
            "cells": [
                {
                    "system": c.system,
                    "direction": c.direction,
                    "report": None if c.report is None else c.report.to_json_obj(),
                    "error": c.error,
                }
                for c in self.cells
            ],
            "averages": self.averages,
        }


def run_matrix(
    systems: Sequence[System],
    anchor_sets: Sequence[AnchorSet],
    ctx: EvalContext,
) -> MatrixReport:
    """One DirectionReport per (system, direction); a failed cell never aborts the rest."""
    cells, per_anchor = [], []
    for system in systems:
        for aset in anchor_sets:
            label = direction_label(*aset.direction)
            try:
                evaluation = evaluate_direction(system, aset, ctx)
                cells.append(MatrixCell(system=system.name, direction=label, report=evaluation.report))
                for entry in evaluation.per_anchor:
                    per_anchor.append({"system": system.name, "direction": label, **entry})
            except S2SKitError as exc:
                cells.append(MatrixCell(system=system.name, direction=label, report=None, error=str(exc)))

    averages = {}
    for system in systems:
        reports = [c.report for c in cells if c.system == system.name and c.report is not None and not c.report.skipped]
        if reports:
            averages[system.name] = {
                "pa": sum(r.pa.overall for r in reports) / len(reports),
                "b1": sum(r.b1.bleu for r in reports) / len(reports),
                "b4": sum(r.b4.bleu for r in reports) / len(reports),
                "latency_ms": sum(r.latency_ms for r in reports) / len(reports),
            }
        else:
            averages[system.name] = {"pa": None, "b1": None, "b4": None, "latency_ms": None}

    return MatrixReport(
        systems=tuple(s.name for s in systems),
        directions=tuple(direction_label(*a.direction) for a in anchor_sets),
        cells=tuple(cells),
        averages=averages,
        per_anchor=tuple(per_anchor),
    )


def format_matrix(matrix: MatrixReport) -> str:
    def num(value, width=9, digits=3) -> str:
        return f"{'-':>{width}}" if value is None else f"{value:>{width}.{digits}f}"

    lines = []
    for direction in matrix.directions:
        lines.append(direction)
        lines.append(f"  {'system':<12}{'PA':>9}{'B1':>9}{'B4':>9}{'Lat(ms)':>9}{'n':>5}{'fail':>6}  flags")
        for name in matrix.systems:
            c = matrix.cell(name, direction)
            if c.report is None:
                lines.append(f"  {name:<12}  failed: {c.error}")
                continue
            r = c.report
            flags = " ".join(f for f, on in (("low-n", r.low_n), ("skipped", r.skipped)) if on)
            lines.append(
                f"  {name:<12}"
                f"{num(None if r.pa is None else r.pa.overall)}"
                f"{num(None if r.b1 is None else r.b1.bleu)}"
                f"{num(None if r.b4 is None else r.b4.bleu)}"
                f"{num(r.latency_ms)}"
                f"{r.n_anchors:>5}{r.n_failed:>6}  {flags}"
            )
        lines.append("")
    lines.append("averages")
    lines.append(f"  {'system':<12}{'PA':>9}{'B1':>9}{'B4':>9}{'Lat(ms)':>9}")
    for name in matrix.systems:
        avg = matrix.averages[name]
        lines.append(
            f"  {name:<12}{num(avg['pa'])}{num(avg['b1'])}{num(avg['b4'])}{num(avg['latency_ms'])}"
        )
    return "\n".join(lines) + "\n"


def write_matrix_report(matrix: MatrixReport, out_dir: PathLike) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(matrix.to_json_obj(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    (out / "report.txt").write_text(format_matrix(matrix), encoding="utf-8")
    with (out / "per_anchor.jsonl").open("w", encoding="utf-8") as fh:
        for entry in matrix.per_anchor:
            fh.write(json.dumps(entry, ensure_ascii=False, separators=(",", ":")) + "\n")
