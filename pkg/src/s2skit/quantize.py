"""Windowed k-means tokenizer: pose frames <-> discrete motion-token triples.

Each token covers `window` consecutive frames (default 4) and carries one
code per stream (body, left hand, right hand). Codebooks are trained with
plain Lloyd iterations, deterministically under a seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DataError
from .records import MotionTokenSequence, PARTS, PoseClip, validate_clip

PathLike = Union[str, Path]

DEFAULT_WINDOW = 4
DEFAULT_K = 512


@dataclass(frozen=True, eq=False)
class Codebook:
    """Per-stream codebooks of windowed pose vectors.

    streams[p] has shape (K, window * layout[p] * dims). layout/dims/fps
    describe the training clips so decoded output can be rebuilt as a
    PoseClip.
    """

    codebook_id: str
    window: int
    K: int
    streams: dict  # part -> (K, D_part) float64
    layout: dict
    dims: int
    fps: float
    training_errors: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.K < 1:
            raise DataError("codebook size K must be >= 1")
        if self.window < 1:
            raise DataError("window must be >= 1")
        for p in PARTS:
            vecs = self.streams[p]
            if vecs.shape != (self.K, self.window * self.layout[p] * self.dims):
                raise DataError(f"stream {p!r}: codeword shape {vecs.shape} inconsistent with window/layout/dims")
            if not np.isfinite(vecs).all():
                raise DataError(f"stream {p!r}: non-finite codeword")

    def stream_width(self, part: str) -> int:
        return self.layout[part] * self.dims

    def coord_slices(self) -> dict:
        """Per-frame flat coordinate slice for each part."""
        out, start = {}, 0
        for p in PARTS:
            w = self.stream_width(p)
            out[p] = slice(start, start + w)
            start += w
        return out

    def to_json(self) -> str:
        obj = {
            "codebook_id": self.codebook_id,
            "window": self.window,
            "K": self.K,
            "streams": {p: self.streams[p].tolist() for p in PARTS},
            "layout": {p: self.layout[p] for p in PARTS},
            "dims": self.dims,
            "fps": self.fps,
        }
        return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))

    def save(self, path: PathLike) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: PathLike) -> "Codebook":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            codebook_id=obj["codebook_id"],
            window=int(obj["window"]),
            K=int(obj["K"]),
            streams={p: np.asarray(obj["streams"][p], dtype=np.float64) for p in PARTS},
            layout={p: int(obj["layout"][p]) for p in PARTS},
            dims=int(obj["dims"]),
            fps=float(obj["fps"]),
        )


def _check_clip(clip: PoseClip) -> None:
    violations = validate_clip(clip)
    if violations:
        raise DataError(f"clip {clip.id!r}: {violations[0]}")


def _pad_frames(frames: np.ndarray, window: int) -> np.ndarray:
    """Zero-pad the ragged final window so no frames are dropped."""
    t = frames.shape[0]
    n_win = math.ceil(t / window)
    padded = np.zeros((n_win * window, frames.shape[1]), dtype=np.float64)
    padded[:t] = frames
    return padded


def clip_windows(clip: PoseClip, window: int) -> dict:
    """Per-stream window vectors for one clip: part -> (n_windows, window * width)."""
    padded = _pad_frames(clip.as_array, window)
    n_win = padded.shape[0] // window
    out, start = {}, 0
    for p in PARTS:
        width = clip.layout[p] * clip.dims
        cols = padded[:, start : start + width]
        out[p] = cols.reshape(n_win, window * width)
        start += width
    return out


def _nearest(vectors: np.ndarray, codewords: np.ndarray) -> tuple:
    """Index of the nearest codeword per vector (squared Euclidean, lowest index on ties)."""
    n, k = vectors.shape[0], codewords.shape[0]
    idx = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    # Direct differences keep exact ties exact; chunking bounds memory.
    chunk = max(1, (1 << 22) // max(1, k * vectors.shape[1]))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        d = ((vectors[lo:hi, None, :] - codewords[None, :, :]) ** 2).sum(axis=2)
        idx[lo:hi] = np.argmin(d, axis=1)
        dist[lo:hi] = d[np.arange(hi - lo), idx[lo:hi]]
    return idx, dist


def _init_codewords(vectors: np.ndarray, k: int, order: np.ndarray) -> np.ndarray:
    """First k distinct vectors in shuffled data order; duplicates fill any shortfall."""
    chosen, seen = [], set()
    for i in order:
        key = vectors[i].tobytes()
        if key not in seen:
            seen.add(key)
            chosen.append(i)
            if len(chosen) == k:
                break
    while len(chosen) < k:
        chosen.append(order[len(chosen) % len(order)])
    return vectors[np.array(chosen)].copy()


def train_codebook(
    clips: Sequence[PoseClip],
    *,
    window: int = DEFAULT_WINDOW,
    K: int = DEFAULT_K,
    max_iters: int = 50,
    seed: int = 0,
    codebook_id: str = "default",
) -> Codebook:
    """Train per-stream k-means codebooks over all clip windows.

    Deterministic given the seed; the per-iteration mean quantization error
    of each stream is recorded on the returned codebook (training_errors).
    """
    if not clips:
        raise DataError("no clips to train on")
    first = clips[0]
    _check_clip(first)
    for clip in clips[1:]:
        _check_clip(clip)
        if dict(clip.layout) != dict(first.layout) or clip.dims != first.dims:
            raise DataError(f"clip {clip.id!r}: heterogeneous layout or dims")

    per_stream = {p: [] for p in PARTS}
    for clip in clips:
        wins = clip_windows(clip, window)
        for p in PARTS:
            per_stream[p].append(wins[p])
    data = {p: np.concatenate(per_stream[p], axis=0) for p in PARTS}
    n_windows = data[PARTS[0]].shape[0]
    if n_windows < K:
        raise DataError(f"insufficient data for codebook size {K}: only {n_windows} windows")

    rng = np.random.default_rng(seed)
    order = rng.permutation(n_windows)

    streams, traces = {}, {}
    for p in PARTS:
        vectors = data[p]
        codewords = _init_codewords(vectors, K, order)
        trace = []
        prev_idx = None
        for _ in range(max_iters):
            idx, dist = _nearest(vectors, codewords)
            trace.append(float(dist.mean()))
            if prev_idx is not None and np.array_equal(idx, prev_idx):
                break
            prev_idx = idx
            for k in range(K):
                members = vectors[idx == k]
                if members.shape[0]:  # empty clusters keep their codeword
                    codewords[k] = members.mean(axis=0)
        streams[p] = codewords
        traces[p] = tuple(trace)

    return Codebook(
        codebook_id=codebook_id,
        window=window,
        K=K,
        streams=streams,
        layout=dict(first.layout),
        dims=first.dims,
        fps=first.fps,
        training_errors=traces,
    )


def _check_compatible(clip: PoseClip, codebook: Codebook) -> None:
    if clip.dims != codebook.dims:
        raise DataError(f"clip {clip.id!r}: dims {clip.dims} != codebook dims {codebook.dims}")
    for p in PARTS:
        if clip.layout[p] != codebook.layout[p]:
            raise DataError(
                f"clip {clip.id!r}: stream {p!r} has {clip.layout[p]} joints, codebook expects {codebook.layout[p]}"
            )


def encode_clip(clip: PoseClip, codebook: Codebook) -> MotionTokenSequence:
    """Quantize a clip to ceil(frames / window) token triples (synthetic=false)."""
    _check_clip(clip)
    _check_compatible(clip, codebook)
    wins = clip_windows(clip, codebook.window)
    ids = {p: _nearest(wins[p], codebook.streams[p])[0] for p in PARTS}
    triples = list(zip(*(ids[p].tolist() for p in PARTS)))
    return MotionTokenSequence(
        id=clip.id,
        sign_lang=clip.sign_lang,
        synthetic=False,
        tokens=triples,
        codebook_id=codebook.codebook_id,
    )


def quantization_errors(clip: PoseClip, codebook: Codebook) -> np.ndarray:
    """Per-window squared quantization error, summed over the three streams."""
    _check_clip(clip)
    _check_compatible(clip, codebook)
    wins = clip_windows(clip, codebook.window)
    total = None
    for p in PARTS:
        _, dist = _nearest(wins[p], codebook.streams[p])
        total = dist if total is None else total + dist
    return total


def decode_tokens(tokens: MotionTokenSequence, codebook: Codebook) -> PoseClip:
    """Reconstruct a clip of len(tokens) * window frames from codewords."""
    if tokens.codebook_id != codebook.codebook_id:
        raise DataError(
            f"token sequence {tokens.id!r}: codebook {tokens.codebook_id!r} != {codebook.codebook_id!r}"
        )
    slices = codebook.coord_slices()
    n_frames = len(tokens) * codebook.window
    frames = np.zeros((n_frames, sum(codebook.stream_width(p) for p in PARTS)), dtype=np.float64)
    for w, triple in enumerate(tokens.tokens):
        for p, code in zip(PARTS, triple):
            if code >= codebook.K:
                raise DataError(f"token sequence {tokens.id!r}: {p} id {code} out of range at position {w}")
            block = codebook.streams[p][code].reshape(codebook.window, codebook.stream_width(p))
            frames[w * codebook.window : (w + 1) * codebook.window, slices[p]] = block
    return PoseClip(
        id=tokens.id,
        sign_lang=tokens.sign_lang,
        fps=codebook.fps,
        dims=codebook.dims,
        layout=dict(codebook.layout),
        frames=frames.tolist(),
    )
