from __future__ import annotations

import math

import numpy as np
import pytest

from s2skit.errors import DataError
from s2skit.langs import SignLang
from s2skit.quantize import (
    Codebook,
    clip_windows,
    decode_tokens,
    encode_clip,
    quantization_errors,
    train_codebook,
)
from s2skit.records import PARTS
from conftest import SMALL_LAYOUT, make_clip

WIDTH = sum(SMALL_LAYOUT.values()) * 2  # 8 coords per frame


def _clips_from_distinct_frames(k: int) -> list:
    """Clips whose frames are k distinct repeated patterns (window=1 clusters)."""
    clips = []
    for i in range(k):
        frame = [float(i * 10 + j) for j in range(WIDTH)]
        clips.append(make_clip(f"c{i}", frames=[frame] * 3))
    return clips


def test_kmeans_fixed_point_on_separable_clusters():
    k = 4
    codebook = train_codebook(_clips_from_distinct_frames(k), window=1, K=k, seed=0)
    for p in PARTS:
        codewords = {tuple(v) for v in codebook.streams[p]}
        expected = set()
        for i in range(k):
            frame = np.array([float(i * 10 + j) for j in range(WIDTH)])
            wins = clip_windows(make_clip("x", frames=[frame]), 1)
            expected.add(tuple(wins[p][0]))
        assert codewords == expected
    for clip in _clips_from_distinct_frames(k):
        assert quantization_errors(clip, codebook).max() == 0.0


def test_training_is_deterministic_given_seed():
    clips = [make_clip(f"c{i}", n_frames=9, rng=np.random.default_rng(i)) for i in range(6)]
    cb1 = train_codebook(clips, window=4, K=5, seed=7)
    cb2 = train_codebook(clips, window=4, K=5, seed=7)
    assert cb1.to_json() == cb2.to_json()


def test_quantization_error_non_increasing_over_iterations():
    clips = [make_clip(f"c{i}", n_frames=8, rng=np.random.default_rng(100 + i)) for i in range(100)]
    codebook = train_codebook(clips, window=4, K=16, max_iters=50, seed=0)
    for p in PARTS:
        trace = codebook.training_errors[p]
        assert trace[-1] <= trace[0]
        assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))


def test_insufficient_windows_raises():
    clips = [make_clip("c0", n_frames=4)]
    with pytest.raises(DataError, match="insufficient data for codebook size 8"):
        train_codebook(clips, window=4, K=8)


def test_heterogeneous_layouts_raise():
    a = make_clip("a", layout={"body": 2, "left_hand": 1, "right_hand": 1})
    b = make_clip("b", layout={"body": 1, "left_hand": 2, "right_hand": 1})
    with pytest.raises(DataError, match="heterogeneous"):
        train_codebook([a, b], window=1, K=2)


@pytest.fixture(scope="module")
def trained():
    clips = [make_clip(f"c{i}", n_frames=10, rng=np.random.default_rng(i)) for i in range(30)]
    return clips, train_codebook(clips, window=4, K=8, seed=0, codebook_id="cb-test")


class TestEncode:
    def test_token_count_is_ceil_frames_over_window(self, trained):
        _, codebook = trained
        clip = make_clip("x", n_frames=10, rng=np.random.default_rng(99))
        seq = encode_clip(clip, codebook)
        assert len(seq) == 3  # ceil(10 / 4)
        assert seq.synthetic is False
        assert seq.codebook_id == "cb-test"

    def test_exact_codeword_tiling_round_trips(self, trained):
        _, codebook = trained
        tokens = [(7, 7, 7)] * 2
        seq0 = type(encode_clip(make_clip("y", n_frames=4), codebook))(
            id="y", sign_lang=SignLang.ASL, synthetic=False, tokens=tokens, codebook_id="cb-test"
        )
        clip = decode_tokens(seq0, codebook)
        seq = encode_clip(clip, codebook)
        assert seq.tokens == ((7, 7, 7), (7, 7, 7))
        assert decode_tokens(seq, codebook).frames == clip.frames

    def test_tie_breaks_to_lowest_index(self):
        # Codewords 2 and 5 sit symmetrically around the zero window.
        k, window = 6, 1
        streams = {}
        for p, n_joints in SMALL_LAYOUT.items():
            d = window * n_joints * 2
            vecs = np.arange(k * d, dtype=np.float64).reshape(k, d) + 100.0
            vecs[2] = np.full(d, 3.0)
            vecs[5] = np.full(d, -3.0)
            streams[p] = vecs
        codebook = Codebook(
            codebook_id="tie", window=window, K=k, streams=streams, layout=dict(SMALL_LAYOUT), dims=2, fps=25.0
        )
        clip = make_clip("z", frames=[[0.0] * WIDTH] * 4)
        seq = encode_clip(clip, codebook)
        assert all(t == (2, 2, 2) for t in seq.tokens)

    def test_layout_mismatch_names_stream(self, trained):
        _, codebook = trained
        clip = make_clip("m", layout={"body": 3, "left_hand": 1, "right_hand": 1})
        with pytest.raises(DataError, match="body"):
            encode_clip(clip, codebook)


class TestDecode:
    def test_length_arithmetic(self, trained):
        _, codebook = trained
        seq = encode_clip(make_clip("x", n_frames=9, rng=np.random.default_rng(5)), codebook)
        clip = decode_tokens(seq, codebook)
        assert clip.n_frames == len(seq) * codebook.window == 12

    def test_decode_error_equals_encode_error(self, trained):
        _, codebook = trained
        clip = make_clip("x", n_frames=11, rng=np.random.default_rng(77))
        seq = encode_clip(clip, codebook)
        decoded = decode_tokens(seq, codebook)
        padded = np.zeros((len(seq) * 4, WIDTH))
        padded[: clip.n_frames] = clip.as_array
        per_window = ((decoded.as_array - padded) ** 2).reshape(len(seq), -1).sum(axis=1)
        reported = quantization_errors(clip, codebook)
        assert np.allclose(per_window, reported, atol=1e-9)

    def test_out_of_range_token_names_position(self, trained):
        _, codebook = trained
        seq = encode_clip(make_clip("x", n_frames=4), codebook)
        bad = type(seq)(id="b", sign_lang=SignLang.ASL, synthetic=False, tokens=[(0, 0, 0), (0, 99, 0)], codebook_id="cb-test")
        with pytest.raises(DataError, match="position 1"):
            decode_tokens(bad, codebook)

    def test_codebook_id_mismatch_raises(self, trained):
        _, codebook = trained
        seq = encode_clip(make_clip("x", n_frames=4), codebook)
        bad = type(seq)(id="b", sign_lang=SignLang.ASL, synthetic=False, tokens=seq.tokens, codebook_id="other")
        with pytest.raises(DataError, match="codebook"):
            decode_tokens(bad, codebook)


class TestLaws:
    def test_length_law_many_lengths(self, trained):
        _, codebook = trained
        for t in range(1, 18):
            clip = make_clip(f"l{t}", n_frames=t, rng=np.random.default_rng(t))
            assert len(encode_clip(clip, codebook)) == math.ceil(t / codebook.window)

    def test_encode_decode_idempotent(self, trained):
        clips, codebook = trained
        for clip in clips[:10]:
            once = encode_clip(clip, codebook)
            again = encode_clip(decode_tokens(once, codebook), codebook)
            assert again.tokens == once.tokens

    def test_nearest_codeword_optimality_exhaustive(self, trained):
        _, codebook = trained
        clip = make_clip("opt", n_frames=12, rng=np.random.default_rng(3))
        seq = encode_clip(clip, codebook)
        wins = clip_windows(clip, codebook.window)
        for w, triple in enumerate(seq.tokens):
            for p, chosen in zip(PARTS, triple):
                dists = ((codebook.streams[p] - wins[p][w]) ** 2).sum(axis=1)
                assert not (dists < dists[chosen]).any()


def test_codebook_file_round_trip(tmp_path, trained):
    _, codebook = trained
    path = tmp_path / "cb.json"
    codebook.save(path)
    loaded = Codebook.load(path)
    assert loaded.to_json() == codebook.to_json()
