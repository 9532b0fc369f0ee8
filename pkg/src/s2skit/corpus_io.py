"""JSON-lines corpus I/O.

One self-contained JSON object per line. Serialization is canonical
(fixed key order, compact separators, ensure_ascii=False) so that
save -> load -> save is byte-stable for every kind.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .errors import DataError, UsageError
from .langs import PARTNER, SignLang, parse_sign, parse_spoken, sign_for_spoken
from .records import (
    CandidatePair,
    GoldPair,
    MotionTokenSequence,
    PARTS,
    PoseClip,
    Provenance,
    S2SPair,
    TextUtterance,
    token_payload,
    validate_clip,
)

KINDS = ("poses", "tokens", "gold_manifest", "s2s_pairs", "candidates")

PathLike = Union[str, Path]


def _dumps(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _get(obj: dict, key: str, line: int):
    if key not in obj:
        raise DataError(f"line {line}: missing field {key!r}")
    return obj[key]


def _parse_pose(obj: dict, line: int) -> PoseClip:
    layout = _get(obj, "layout", line)
    if not isinstance(layout, dict) or set(layout) != set(PARTS):
        raise DataError(f"line {line}: field 'layout' must have keys body, left_hand, right_hand")
    clip = PoseClip(
        id=str(_get(obj, "id", line)),
        sign_lang=parse_sign(_get(obj, "sign_lang", line)),
        fps=float(_get(obj, "fps", line)),
        dims=int(_get(obj, "dims", line)),
        layout={p: int(layout[p]) for p in PARTS},
        frames=_get(obj, "frames", line),
        line=line,
    )
    violations = validate_clip(clip)
    if violations:
        raise DataError(f"line {line}: clip {clip.id!r}: {violations[0]}")
    return clip


def _pose_obj(clip: PoseClip) -> dict:
    return {
        "id": clip.id,
        "sign_lang": clip.sign_lang.value,
        "fps": clip.fps,
        "dims": clip.dims,
        "layout": {p: clip.layout[p] for p in PARTS},
        "frames": [list(f) for f in clip.frames],
    }


def _parse_tokens(obj: dict, line: int) -> MotionTokenSequence:
    return MotionTokenSequence(
        id=str(_get(obj, "id", line)),
        sign_lang=parse_sign(_get(obj, "sign_lang", line)),
        synthetic=bool(_get(obj, "synthetic", line)),
        tokens=_get(obj, "tokens", line),
        codebook_id=str(_get(obj, "codebook_id", line)),
        line=line,
    )


def _tokens_obj(seq: MotionTokenSequence) -> dict:
    return {
        "id": seq.id,
        "sign_lang": seq.sign_lang.value,
        "synthetic": seq.synthetic,
        "codebook_id": seq.codebook_id,
        "tokens": token_payload(seq.tokens),
    }


def _parse_gold(obj: dict, line: int, clip_langs: Optional[Mapping[str, SignLang]]) -> GoldPair:
    lang = parse_spoken(_get(obj, "lang", line))
    sign_ref = str(_get(obj, "sign_ref", line))
    if clip_langs is not None:
        if sign_ref not in clip_langs:
            raise DataError(f"line {line}: sign_ref {sign_ref!r} not found in clip corpus")
        sign_lang = clip_langs[sign_ref]
        if PARTNER[sign_lang] is not lang:
            raise DataError(
                f"line {line}: partner mismatch: text lang {lang.value!r} "
                f"but clip {sign_ref!r} is {sign_lang.value}"
            )
    else:
        # Partner mapping is a bijection; without a clip resolver the sign
        # language is implied by the text language and re-checked at pairing.
        sign_lang = sign_for_spoken(lang)
    return GoldPair(
        text=TextUtterance(id=str(_get(obj, "id", line)), text=str(_get(obj, "text", line)), lang=lang),
        sign_ref=sign_ref,
        corpus_id=str(_get(obj, "corpus_id", line)),
        sign_lang=sign_lang,
        line=line,
    )


def _gold_obj(pair: GoldPair) -> dict:
    return {
        "id": pair.text.id,
        "text": pair.text.text,
        "lang": pair.text.lang.value,
        "sign_ref": pair.sign_ref,
        "corpus_id": pair.corpus_id,
    }


def _parse_s2s(obj: dict, line: int, token_store: Mapping[str, MotionTokenSequence]) -> S2SPair:
    direction = _get(obj, "direction", line)
    if not isinstance(direction, list) or len(direction) != 2:
        raise DataError(f"line {line}: field 'direction' must be a [src, tgt] pair")
    src, tgt = parse_sign(direction[0]), parse_sign(direction[1])
    source = _parse_tokens(_get(obj, "source", line), line)
    if not source.synthetic:
        raise DataError(f"line {line}: source {source.id!r} must be synthetic")
    target_ref = str(_get(obj, "target_ref", line))
    if target_ref not in token_store:
        raise DataError(f"line {line}: target_ref {target_ref!r} not found in token store")
    prov = _get(obj, "provenance", line)
    return S2SPair(
        source=source,
        target=token_store[target_ref],
        direction=(src, tgt),
        provenance=Provenance(
            gold_corpus_id=str(_get(prov, "gold_corpus_id", line)),
            gold_text=str(_get(prov, "gold_text", line)),
            translated_text=str(_get(prov, "translated_text", line)),
        ),
        line=line,
    )


def _s2s_obj(pair: S2SPair) -> dict:
    return {
        "direction": [pair.direction[0].value, pair.direction[1].value],
        "source": _tokens_obj(pair.source),
        "target_ref": pair.target.id,
        "provenance": {
            "gold_corpus_id": pair.provenance.gold_corpus_id,
            "gold_text": pair.provenance.gold_text,
            "translated_text": pair.provenance.translated_text,
        },
    }


def _parse_text(obj: dict, key: str, line: int) -> TextUtterance:
    sub = _get(obj, key, line)
    return TextUtterance(
        id=str(_get(sub, "id", line)),
        text=str(_get(sub, "text", line)),
        lang=parse_spoken(_get(sub, "lang", line)),
    )


def _parse_candidate(obj: dict, line: int) -> CandidatePair:
    rating = obj.get("llm_rating")
    cosine = obj.get("cosine")
    return CandidatePair(
        pair_id=str(_get(obj, "pair_id", line)),
        src_text=_parse_text(obj, "src_text", line),
        tgt_text=_parse_text(obj, "tgt_text", line),
        src_clips=[str(c) for c in _get(obj, "src_clips", line)],
        tgt_clips=[str(c) for c in _get(obj, "tgt_clips", line)],
        llm_rating=None if rating is None else int(rating),
        cosine=None if cosine is None else float(cosine),
        decisions=obj.get("decisions", {}),
        line=line,
    )


def _text_obj(t: TextUtterance) -> dict:
    return {"id": t.id, "text": t.text, "lang": t.lang.value}


def _candidate_obj(pair: CandidatePair) -> dict:
    return {
        "pair_id": pair.pair_id,
        "src_text": _text_obj(pair.src_text),
        "tgt_text": _text_obj(pair.tgt_text),
        "src_clips": list(pair.src_clips),
        "tgt_clips": list(pair.tgt_clips),
        "llm_rating": pair.llm_rating,
        "cosine": pair.cosine,
        "decisions": dict(sorted(pair.decisions.items())),
    }


def record_to_obj(record, kind: str) -> dict:
    if kind == "poses":
        return _pose_obj(record)
    if kind == "tokens":
        return _tokens_obj(record)
    if kind == "gold_manifest":
        return _gold_obj(record)
    if kind == "s2s_pairs":
        return _s2s_obj(record)
    if kind == "candidates":
        return _candidate_obj(record)
    raise UsageError(f"unknown corpus kind {kind!r} (expected one of {', '.join(KINDS)})")


def dumps_record(record, kind: str) -> str:
    return _dumps(record_to_obj(record, kind))


def dumps_corpus(records: Sequence, kind: str) -> str:
    return "".join(dumps_record(r, kind) + "\n" for r in records)


def save_corpus(records: Sequence, path: PathLike, kind: str) -> None:
    Path(path).write_text(dumps_corpus(records, kind), encoding="utf-8")


def load_corpus(
    path: PathLike,
    kind: str,
    *,
    token_store: Optional[Mapping[str, MotionTokenSequence]] = None,
    clip_langs: Optional[Mapping[str, SignLang]] = None,
) -> list:
    """Parse a JSONL corpus file into validated records, in file order.

    s2s_pairs files store targets by reference and need token_store (a
    mapping from clip id to the gold MotionTokenSequence) to materialize
    them. gold_manifest files accept an optional clip_langs resolver to
    enforce the partner invariant against the actual referenced clips.
    """
    if kind not in KINDS:
        raise UsageError(f"unknown corpus kind {kind!r} (expected one of {', '.join(KINDS)})")
    if kind == "s2s_pairs" and token_store is None:
        raise UsageError("kind 's2s_pairs' stores targets by reference; pass token_store= to resolve them")
    p = Path(path)
    if not p.exists():
        raise DataError(f"corpus file not found: {p}")
    records = []
    with p.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {line_no}: malformed JSON: {exc.msg}") from None
            try:
                if kind == "poses":
                    records.append(_parse_pose(obj, line_no))
                elif kind == "tokens":
                    records.append(_parse_tokens(obj, line_no))
                elif kind == "gold_manifest":
                    records.append(_parse_gold(obj, line_no, clip_langs))
                elif kind == "s2s_pairs":
                    records.append(_parse_s2s(obj, line_no, token_store))
                else:
                    records.append(_parse_candidate(obj, line_no))
            except DataError as exc:
                msg = str(exc)
                raise DataError(msg if msg.startswith("line ") else f"line {line_no}: {msg}") from None
    return records


def build_token_store(sequences: Sequence[MotionTokenSequence]) -> dict:
    store = {}
    for seq in sequences:
        if seq.id in store:
            raise DataError(f"duplicate token sequence id {seq.id!r}")
        store[seq.id] = seq
    return store


def build_pose_store(clips: Sequence[PoseClip]) -> dict:
    store = {}
    for clip in clips:
        if clip.id in store:
            raise DataError(f"duplicate clip id {clip.id!r}")
        store[clip.id] = clip
    return store
