from __future__ import annotations

import numpy as np
import pytest

from s2skit.langs import SignLang, SpokenLang
from s2skit.records import CandidatePair, PoseClip, TextUtterance

SMALL_LAYOUT = {"body": 2, "left_hand": 1, "right_hand": 1}


def make_clip(
    clip_id: str = "c0",
    sign_lang: SignLang = SignLang.ASL,
    n_frames: int = 8,
    layout: dict = None,
    dims: int = 2,
    fps: float = 25.0,
    rng: np.random.Generator = None,
    frames: np.ndarray = None,
) -> PoseClip:
    layout = dict(layout or SMALL_LAYOUT)
    width = sum(layout.values()) * dims
    if frames is None:
        rng = rng or np.random.default_rng(0)
        frames = rng.normal(size=(n_frames, width))
    return PoseClip(id=clip_id, sign_lang=sign_lang, fps=fps, dims=dims, layout=layout, frames=np.asarray(frames).tolist())


def make_candidate(
    pair_id: str = "p0",
    src_lang: SpokenLang = SpokenLang.EN,
    tgt_lang: SpokenLang = SpokenLang.ZH,
    rating: int = 5,
    cosine: float = 0.9,
    src_clips=("sc0",),
    tgt_clips=("tc0",),
    src_text: str = "a cat sits",
    tgt_text: str = "...",
    decisions=None,
) -> CandidatePair:
    return CandidatePair(
        pair_id=pair_id,
        src_text=TextUtterance(id=f"{pair_id}-src", text=src_text, lang=src_lang),
        tgt_text=TextUtterance(id=f"{pair_id}-tgt", text=tgt_text, lang=tgt_lang),
        src_clips=src_clips,
        tgt_clips=tgt_clips,
        llm_rating=rating,
        cosine=cosine,
        decisions=decisions or {},
    )


def random_rotation(dims: int, rng: np.random.Generator) -> np.ndarray:
    """Random proper rotation from the QR decomposition of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.normal(size=(dims, dims)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
