"""Input files for the full stub pipeline:
quantize train -> bt build/stats -> verify filter/finalize -> eval run.

Everything is deterministic under seed 0; the returned dict carries every
path plus the in-memory codebook used to key the stub maps.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from s2skit.corpus_io import save_corpus
from s2skit.langs import SignLang, SpokenLang
from s2skit.quantize import encode_clip, train_codebook
from s2skit.records import GoldPair, MotionTokenSequence, TextUtterance, token_payload
from conftest import make_candidate, make_clip

N_GOLD = 4
TRAIN_CFG = {"window": 2, "K": 4, "max_iters": 50, "seed": 0}


def tok_key(tokens) -> str:
    return json.dumps(token_payload(tokens), separators=(",", ":"))


def prepare(root: Path) -> dict:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(0)
    paths = {}

    # --- quantizer training data -------------------------------------------
    train_clips = [make_clip(f"train{i}", SignLang.ASL, n_frames=6, rng=rng) for i in range(10)]
    paths["train_poses"] = root / "train_poses.jsonl"
    save_corpus(train_clips, paths["train_poses"], "poses")
    codebook = train_codebook(train_clips, codebook_id="cb-e2e", **TRAIN_CFG)

    # --- gold corpus for bt build (ASL targets, en texts) -------------------
    gold_rows, gold_tokens, mt_map, t2s_map = [], [], {}, {}
    for i in range(N_GOLD):
        ref = f"gold-clip{i}"
        gold_rows.append(
            GoldPair(
                text=TextUtterance(id=f"g{i}", text=f"gold text {i}", lang=SpokenLang.EN),
                sign_ref=ref,
                corpus_id="goldcorpus",
                sign_lang=SignLang.ASL,
            )
        )
        gold_tokens.append(
            MotionTokenSequence(
                id=ref, sign_lang=SignLang.ASL, synthetic=False, tokens=[(i % 4, 0, 1)] * 3, codebook_id="cb-e2e"
            )
        )
        mt_map[f"gold text {i}"] = f"译文 {i}"
        t2s_map[f"译文 {i}"] = [[(i + 1) % 4, 2, 2], [(i + 2) % 4, 3, 3]]
    paths["gold_manifest"] = root / "gold.jsonl"
    save_corpus(gold_rows, paths["gold_manifest"], "gold_manifest")
    paths["gold_tokens"] = root / "gold_tokens.jsonl"
    save_corpus(gold_tokens, paths["gold_tokens"], "tokens")

    # --- candidates for verify (ASL <-> CSL), two survive the filters -------
    candidates = [
        make_candidate("cand0", rating=5, cosine=0.9, src_clips=("eval-src0",), tgt_clips=("eval-tgt0", "eval-tgt1"),
                       src_text="the cat sat", tgt_text="猫 坐 下"),
        make_candidate("cand1", rating=5, cosine=0.8, src_clips=("eval-src1",), tgt_clips=("eval-tgt2",),
                       src_text="a dog runs", tgt_text="狗 跑"),
        make_candidate("cand2", rating=4, cosine=0.99, src_clips=("x0",), tgt_clips=("x1",),
                       src_text="rating at threshold", tgt_text="阈 值"),
        make_candidate("cand3", rating=5, cosine=0.5, src_clips=("x2",), tgt_clips=("x3",),
                       src_text="cosine at threshold", tgt_text="余 弦"),
    ]
    paths["candidates"] = root / "candidates.jsonl"
    save_corpus(candidates, paths["candidates"], "candidates")

    # scripted screening: both keep cand0, disagree on cand1
    decisions = [
        {"pair_id": "cand0", "annotator": "A", "decision": "keep", "ts": 1.0},
        {"pair_id": "cand0", "annotator": "B", "decision": "keep", "ts": 2.0},
        {"pair_id": "cand1", "annotator": "A", "decision": "keep", "ts": 3.0},
        {"pair_id": "cand1", "annotator": "B", "decision": "discard", "ts": 4.0},
    ]
    paths["decisions"] = root / "decisions.jsonl"
    paths["decisions"].write_text("".join(json.dumps(d) + "\n" for d in decisions), encoding="utf-8")

    # --- eval stores: poses and texts for the strict pair's clips -----------
    src_clip = make_clip("eval-src0", SignLang.ASL, n_frames=4, rng=rng)
    tgt0 = make_clip("eval-tgt0", SignLang.CSL, n_frames=4, rng=rng)
    tgt1 = make_clip("eval-tgt1", SignLang.CSL, n_frames=6, rng=rng)
    paths["eval_poses"] = root / "eval_poses.jsonl"
    save_corpus([src_clip, tgt0, tgt1], paths["eval_poses"], "poses")

    eval_gold = [
        GoldPair(
            text=TextUtterance(id="eg0", text="猫 坐", lang=SpokenLang.ZH),
            sign_ref="eval-tgt0", corpus_id="evalcorpus", sign_lang=SignLang.CSL,
        ),
        GoldPair(
            text=TextUtterance(id="eg1", text="狗 跑 了", lang=SpokenLang.ZH),
            sign_ref="eval-tgt1", corpus_id="evalcorpus", sign_lang=SignLang.CSL,
        ),
    ]
    paths["eval_gold"] = root / "eval_gold.jsonl"
    save_corpus(eval_gold, paths["eval_gold"], "gold_manifest")

    # --- stub wiring for the two systems and the evaluator ------------------
    src_tokens = encode_clip(src_clip, codebook)
    direct_out = [[0, 0, 0], [1, 1, 1]]
    cascade_out = [[1, 1, 1], [2, 2, 2]]
    s2s_map = {tok_key(src_tokens.tokens): direct_out}
    cascade_s2t_map = {tok_key(src_tokens.tokens): "the cat sat"}
    cascade_mt_map = {"the cat sat": "猫 坐 下"}
    cascade_t2s_map = {"猫 坐 下": cascade_out}
    s2t_eval_map = {tok_key(direct_out): "猫 坐 下", tok_key(cascade_out): "猫 在 坐"}

    def write_map(name: str, mapping: dict) -> Path:
        path = root / f"{name}.json"
        path.write_text(json.dumps(mapping, ensure_ascii=False), encoding="utf-8")
        return path

    paths["mt_map"] = write_map("mt_map", mt_map)
    paths["t2s_map"] = write_map("t2s_map", t2s_map)
    paths["s2s_map"] = write_map("s2s_map", s2s_map)
    paths["cascade_s2t_map"] = write_map("cascade_s2t_map", cascade_s2t_map)
    paths["cascade_mt_map"] = write_map("cascade_mt_map", cascade_mt_map)
    paths["cascade_t2s_map"] = write_map("cascade_t2s_map", cascade_t2s_map)
    paths["s2t_eval_map"] = write_map("s2t_eval_map", s2t_eval_map)

    def stub_spec(map_path: Path, delay_ms: float = 0.0) -> dict:
        return {"backend": {"kind": "stub", "map_file": str(map_path), "delay_ms": delay_ms}, "codebook_id": "cb-e2e"}

    paths["mt_spec"] = root / "mt_spec.json"
    paths["mt_spec"].write_text(json.dumps(stub_spec(paths["mt_map"])), encoding="utf-8")
    paths["t2s_spec"] = root / "t2s_spec.json"
    paths["t2s_spec"].write_text(json.dumps(stub_spec(paths["t2s_map"])), encoding="utf-8")
    paths["s2t_eval_spec"] = root / "s2t_eval_spec.json"
    paths["s2t_eval_spec"].write_text(json.dumps(stub_spec(paths["s2t_eval_map"])), encoding="utf-8")

    systems = [
        {"name": "direct", "kind": "direct", "s2s": stub_spec(paths["s2s_map"], delay_ms=6.5)},
        {
            "name": "cascade",
            "kind": "cascade",
            "s2t": stub_spec(paths["cascade_s2t_map"], delay_ms=5.0),
            "mt": stub_spec(paths["cascade_mt_map"], delay_ms=5.0),
            "t2s": stub_spec(paths["cascade_t2s_map"], delay_ms=5.0),
        },
    ]
    paths["systems"] = root / "systems.json"
    paths["systems"].write_text(json.dumps(systems), encoding="utf-8")

    paths["codebook_obj"] = codebook
    paths["root"] = root
    return paths
