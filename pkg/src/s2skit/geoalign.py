"""Geometric metric kernels: Procrustes alignment, DTW, and their composition.

The composed score aligns every candidate frame pair independently with an
optimal rigid (optionally similarity) transform, runs dynamic time warping
over the residuals, and reports the path-normalized mean per-joint error
overall and per part.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DataError
from .records import PARTS, PoseClip


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    rotation: np.ndarray  # dims x dims, proper orthogonal
    translation: np.ndarray  # dims
    scale: float  # 1.0 when scaling disabled
    residual_mpjpe: float  # mean per-joint distance after transform


@dataclass(frozen=True)
class DtwResult:
    path: tuple  # of (i, j) index pairs
    total_cost: float
    normalized_cost: float


@dataclass(frozen=True)
class MetricReport:
    overall: float
    per_part: dict  # part -> mean per-joint distance along the optimal path

    def to_json_obj(self) -> dict:
        return {"overall": self.overall, "per_part": dict(self.per_part)}


def procrustes_align(pred: np.ndarray, ref: np.ndarray, allow_scale: bool = False) -> AlignmentResult:
    """Least-squares rigid (plus optional uniform scale) transform of pred onto ref.

    pred and ref are (J, dims) joint arrays with identical shape and J >= dims.
    The rotation comes from the SVD of the cross-covariance with a sign
    correction so det = +1.
    """
    pred = np.asarray(pred, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if pred.ndim != 2 or ref.ndim != 2:
        raise DataError("frames must be (joints, dims) arrays")
    if pred.shape != ref.shape:
        raise DataError(f"joint-count mismatch: pred {pred.shape} vs ref {ref.shape}")
    n_joints, dims = pred.shape
    if n_joints < dims:
        raise DataError(f"need at least {dims} joints for {dims}-D alignment, got {n_joints}")
    if not (np.isfinite(pred).all() and np.isfinite(ref).all()):
        raise DataError("non-finite coordinates")

    pred_centroid = pred.mean(axis=0)
    ref_centroid = ref.mean(axis=0)
    p = pred - pred_centroid
    r = ref - ref_centroid

    pred_var = float((p * p).sum())
    if not pred_var > 0.0:
        raise DataError("degenerate configuration: all pred joints coincident")

    u, s, vt = np.linalg.svd(p.T @ r)
    d = np.ones(dims)
    d[-1] = np.sign(np.linalg.det(vt.T @ u.T)) or 1.0
    rotation = vt.T @ np.diag(d) @ u.T

    scale = float((s * d).sum() / pred_var) if allow_scale else 1.0
    translation = ref_centroid - scale * rotation @ pred_centroid
    aligned = scale * (rotation @ pred.T).T + translation
    residual = float(np.linalg.norm(aligned - ref, axis=1).mean())
    return AlignmentResult(rotation=rotation, translation=translation, scale=scale, residual_mpjpe=residual)


def dtw(n: int, m: int, cost: Callable[[int, int], float]) -> DtwResult:
    """Minimum-cost monotone alignment of two sequences of lengths n and m.

    Steps are (1,0), (0,1), (1,1) with unit weights; traceback ties prefer
    the diagonal, then (1,0), then (0,1).
    """
    if n < 1 or m < 1:
        raise DataError("dtw requires non-empty sequences")
    c = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            c[i, j] = cost(i, j)
    if not np.isfinite(c).all():
        raise DataError("non-finite cost")

    acc = np.empty((n, m), dtype=np.float64)
    acc[0, 0] = c[0, 0]
    for i in range(1, n):
        acc[i, 0] = acc[i - 1, 0] + c[i, 0]
    for j in range(1, m):
        acc[0, j] = acc[0, j - 1] + c[0, j]
    for i in range(1, n):
        for j in range(1, m):
            acc[i, j] = c[i, j] + min(acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])

    path = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            best = min(acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
            if acc[i - 1, j - 1] == best:
                i, j = i - 1, j - 1
            elif acc[i - 1, j] == best:
                i -= 1
            else:
                j -= 1
        path.append((i, j))
    path.reverse()

    total = float(acc[n - 1, m - 1])
    return DtwResult(path=tuple(path), total_cost=total, normalized_cost=total / len(path))


def dtw_pa_mpjpe(pred: PoseClip, ref: PoseClip, allow_scale: bool = False) -> MetricReport:
    """Frame-wise Procrustes residuals warped by DTW, normalized by path length.

    The alignment transform for each frame pair uses all joints; per-part
    values decompose the same path and transforms by part.
    """
    if dict(pred.layout) != dict(ref.layout) or pred.dims != ref.dims:
        raise DataError(f"clip {pred.id!r} vs {ref.id!r}: layout or dims mismatch")
    if pred.n_frames == 0 or ref.n_frames == 0:
        raise DataError("clips must be non-empty")

    a = pred.joints()
    b = ref.joints()
    n, m = pred.n_frames, ref.n_frames
    slices = pred.part_slices()

    overall_cost = np.empty((n, m), dtype=np.float64)
    part_cost = {p: np.empty((n, m), dtype=np.float64) for p in PARTS}
    for i in range(n):
        for j in range(m):
            res = procrustes_align(a[i], b[j], allow_scale)
            aligned = res.scale * (res.rotation @ a[i].T).T + res.translation
            dists = np.linalg.norm(aligned - b[j], axis=1)
            overall_cost[i, j] = dists.mean()
            for p in PARTS:
                part_cost[p][i, j] = dists[slices[p]].mean()

    result = dtw(n, m, lambda i, j: overall_cost[i, j])
    rows = np.fromiter((i for i, _ in result.path), dtype=np.int64)
    cols = np.fromiter((j for _, j in result.path), dtype=np.int64)
    per_part = {p: float(part_cost[p][rows, cols].mean()) for p in PARTS}
    return MetricReport(overall=result.normalized_cost, per_part=per_part)
