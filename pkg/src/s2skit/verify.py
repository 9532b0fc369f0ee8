"""Re-verification of noisy cross-lingual pairs into a strict subset.

Two automatic filters (judge rating strictly above a threshold, embedding
cosine strictly above a threshold, kept only on passing both) feed a
dual-annotator screening session; a pair survives only when both annotators
keep it. Precision over recall: every cut is logged.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .errors import DataError, UsageError
from .corpus_io import dumps_corpus
from .langs import SignLang, sign_for_spoken
from .records import CandidatePair, DECISIONS

PathLike = Union[str, Path]

DEFAULT_RATING_MIN_EXCLUSIVE = 4
DEFAULT_COSINE_MIN_EXCLUSIVE = 0.5

SCORE_KINDS = ("llm_rating", "cosine")


def load_score_file(path: PathLike, kind: str) -> dict:
    """Read a pair_id -> score mapping from a JSONL score file."""
    if kind not in SCORE_KINDS:
        raise UsageError(f"unknown score kind {kind!r}")
    scores = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {line_no}: malformed JSON: {exc.msg}") from None
            if "pair_id" not in obj or kind not in obj:
                raise DataError(f"line {line_no}: expected fields 'pair_id' and {kind!r}")
            scores[str(obj["pair_id"])] = obj[kind]
    return scores


def attach_scores(
    pairs: Sequence[CandidatePair],
    ratings: Optional[Mapping[str, int]] = None,
    cosines: Optional[Mapping[str, float]] = None,
) -> list:
    """Fill llm_rating / cosine fields from score maps (existing values kept)."""
    out = []
    for p in pairs:
        rating = p.llm_rating if p.llm_rating is not None else (ratings or {}).get(p.pair_id)
        cosine = p.cosine if p.cosine is not None else (cosines or {}).get(p.pair_id)
        out.append(
            replace(
                p,
                llm_rating=None if rating is None else int(rating),
                cosine=None if cosine is None else float(cosine),
            )
        )
    return out


@dataclass(frozen=True)
class Rejection:
    pair_id: str
    failed: tuple  # subset of ("llm_rating", "cosine")


@dataclass(frozen=True)
class FilterResult:
    pool: tuple
    rejections: tuple

    def rejection_log_text(self) -> str:
        return "".join(
            json.dumps({"pair_id": r.pair_id, "failed": list(r.failed)}, ensure_ascii=False) + "\n"
            for r in self.rejections
        )


def apply_filters(
    pairs: Sequence[CandidatePair],
    rating_min_exclusive: int = DEFAULT_RATING_MIN_EXCLUSIVE,
    cosine_min_exclusive: float = DEFAULT_COSINE_MIN_EXCLUSIVE,
) -> FilterResult:
    """Keep pairs with llm_rating strictly above rating_min_exclusive AND
    cosine strictly above cosine_min_exclusive, preserving input order."""
    pool, rejections = [], []
    for p in pairs:
        if p.llm_rating is None:
            raise DataError(f"pair {p.pair_id!r}: missing llm_rating (ingest scores before filtering)")
        if p.cosine is None:
            raise DataError(f"pair {p.pair_id!r}: missing cosine (ingest scores before filtering)")
        failed = []
        if not p.llm_rating > rating_min_exclusive:
            failed.append("llm_rating")
        if not p.cosine > cosine_min_exclusive:
            failed.append("cosine")
        if failed:
            rejections.append(Rejection(pair_id=p.pair_id, failed=tuple(failed)))
        else:
            pool.append(p)
    return FilterResult(pool=tuple(pool), rejections=tuple(rejections))


@dataclass(frozen=True)
class DecisionRecord:
    pair_id: str
    annotator: str
    decision: str
    ts: float


class ScreeningSession:
    """Single-writer store of screening decisions over a candidate pool.

    Exactly two registered annotators; decisions overwrite per (annotator,
    pair) and are appended to the persistence file on every write so they
    survive restarts. No annotator ever sees the other's pending decisions.
    """

    def __init__(
        self,
        pool: Sequence[CandidatePair],
        annotators: Sequence[str],
        persist_path: Optional[PathLike] = None,
        session_id: str = "main",
    ) -> None:
        if len(annotators) != 2 or len(set(annotators)) != 2:
            raise UsageError("a screening session needs exactly two distinct annotators")
        self.session_id = session_id
        self.pool = tuple(pool)
        self.by_id = {p.pair_id: p for p in self.pool}
        if len(self.by_id) != len(self.pool):
            raise DataError("duplicate pair_id in candidate pool")
        self.annotators = tuple(annotators)
        self.persist_path = None if persist_path is None else Path(persist_path)
        self._decisions: dict = {}  # (annotator, pair_id) -> DecisionRecord
        self._lock = threading.Lock()
        if self.persist_path is not None and self.persist_path.exists():
            self._replay(self.persist_path)

    def _replay(self, path: Path) -> None:
        with path.open(encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise DataError(f"decisions file line {line_no}: malformed JSON: {exc.msg}") from None
                record_decision(
                    self,
                    annotator=obj["annotator"],
                    pair_id=obj["pair_id"],
                    decision=obj["decision"],
                    ts=float(obj["ts"]),
                    _persist=False,
                )

    def decision_of(self, annotator: str, pair_id: str) -> Optional[str]:
        rec = self._decisions.get((annotator, pair_id))
        return None if rec is None else rec.decision

    def queue_for(self, annotator: str) -> list:
        """This annotator's undecided pairs, in pool order."""
        if annotator not in self.annotators:
            raise UsageError(f"annotator {annotator!r} not registered")
        return [p for p in self.pool if (annotator, p.pair_id) not in self._decisions]

    def progress(self) -> dict:
        total = len(self.pool)
        return {
            a: {"decided": sum(1 for p in self.pool if (a, p.pair_id) in self._decisions), "total": total}
            for a in self.annotators
        }


def record_decision(
    session: ScreeningSession,
    annotator: str,
    pair_id: str,
    decision: str,
    ts: Optional[float] = None,
    _persist: bool = True,
) -> ScreeningSession:
    """Store one keep/discard decision; a repeat by the same annotator overwrites."""
    if annotator not in session.annotators:
        raise UsageError(f"annotator {annotator!r} not registered")
    if pair_id not in session.by_id:
        raise DataError(f"pair {pair_id!r} is not a screening candidate")
    if decision not in DECISIONS:
        raise DataError(f"invalid decision {decision!r} (expected keep or discard)")
    record = DecisionRecord(pair_id=pair_id, annotator=annotator, decision=decision, ts=ts if ts is not None else time.time())
    with session._lock:
        session._decisions[(annotator, pair_id)] = record
        if _persist and session.persist_path is not None:
            with session.persist_path.open("a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {"pair_id": record.pair_id, "annotator": record.annotator, "decision": record.decision, "ts": record.ts},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
                fh.flush()
    return session


def finalize_strict(session: ScreeningSession) -> list:
    """Pairs both annotators agreed to keep, with decisions embedded, in pool order."""
    undecided = []
    for p in session.pool:
        for a in session.annotators:
            if (a, p.pair_id) not in session._decisions:
                undecided.append(p.pair_id)
                break
    if undecided:
        raise DataError(f"undecided pairs: {', '.join(undecided)}")
    strict = []
    for p in session.pool:
        decisions = {a: session.decision_of(a, p.pair_id) for a in session.annotators}
        if all(d == "keep" for d in decisions.values()):
            strict.append(replace(p, decisions=decisions))
    return strict


def dump_strict(pairs: Sequence[CandidatePair]) -> str:
    """Canonical serialization of a strict subset; the HTTP export and the
    CLI emit exactly these bytes."""
    return dumps_corpus(pairs, "candidates")


def langpair_key(pair: CandidatePair) -> tuple:
    """Unordered sign-language pair of a candidate, sorted by name."""
    a = sign_for_spoken(pair.src_text.lang)
    b = sign_for_spoken(pair.tgt_text.lang)
    return tuple(sorted((a, b), key=lambda s: s.value))


@dataclass(frozen=True)
class StatsCell:
    pairs: int
    mean_rating: Optional[float]
    mean_cosine: Optional[float]


@dataclass(frozen=True)
class SubsetStatsRow:
    label: str
    before: StatsCell
    after: StatsCell


@dataclass(frozen=True)
class SubsetStats:
    rows: tuple
    pooled: SubsetStatsRow

    def to_json_obj(self) -> dict:
        def cell(c: StatsCell) -> dict:
            return {"pairs": c.pairs, "mean_rating": c.mean_rating, "mean_cosine": c.mean_cosine}

        return {
            "rows": [{"pair": r.label, "before": cell(r.before), "after": cell(r.after)} for r in self.rows],
            "pooled": {"pair": self.pooled.label, "before": cell(self.pooled.before), "after": cell(self.pooled.after)},
        }


def _cell(pairs: Sequence[CandidatePair]) -> StatsCell:
    ratings = [p.llm_rating for p in pairs if p.llm_rating is not None]
    cosines = [p.cosine for p in pairs if p.cosine is not None]
    return StatsCell(
        pairs=len(pairs),
        mean_rating=sum(ratings) / len(ratings) if ratings else None,
        mean_cosine=sum(cosines) / len(cosines) if cosines else None,
    )


def subset_stats(before: Sequence[CandidatePair], after: Sequence[CandidatePair]) -> SubsetStats:
    """Per-language-pair and pooled sizes and mean scores, before vs after."""
    before_ids = {p.pair_id for p in before}
    stray = [p.pair_id for p in after if p.pair_id not in before_ids]
    if stray:
        raise DataError(f"after-set pairs not present in before set: {', '.join(stray)}")

    groups: dict = {}
    for p in before:
        groups.setdefault(langpair_key(p), [[], []])[0].append(p)
    for p in after:
        groups.setdefault(langpair_key(p), [[], []])[1].append(p)

    rows = []
    for key in sorted(groups, key=lambda k: (k[0].value, k[1].value)):
        b, a = groups[key]
        label = f"{key[0].value} <-> {key[1].value}"
        rows.append(SubsetStatsRow(label=label, before=_cell(b), after=_cell(a)))
    pooled = SubsetStatsRow(label="All", before=_cell(list(before)), after=_cell(list(after)))
    return SubsetStats(rows=tuple(rows), pooled=pooled)


def format_subset_stats(stats: SubsetStats) -> str:
    def fmt(value: Optional[float]) -> str:
        return "-" if value is None else f"{value:.2f}"

    header = (
        f"{'language pair':<14}{'#before':>10}{'#after':>9}"
        f"{'rating_b':>10}{'rating_a':>10}{'cosine_b':>10}{'cosine_a':>10}"
    )
    lines = [header]
    for r in list(stats.rows) + [stats.pooled]:
        lines.append(
            f"{r.label:<14}{r.before.pairs:>10,}{r.after.pairs:>9,}"
            f"{fmt(r.before.mean_rating):>10}{fmt(r.after.mean_rating):>10}"
            f"{fmt(r.before.mean_cosine):>10}{fmt(r.after.mean_cosine):>10}"
        )
    return "\n".join(lines)
