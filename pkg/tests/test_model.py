import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hxpcs import io
from hxpcs.errors import ContractError, MaskError, ShapeError
from hxpcs.model import (
    CompressedSeries,
    EncoderMode,
    EncodingMatrix,
    FrameSeries,
    G2Curve,
    PixelMask,
    TTCMatrix,
    apply_mask,
    content_hash,
)


def orthonormal(rng, m, k):
    q, _ = np.linalg.qr(rng.normal(size=(m, k)))
    return q


# masks

def test_mask_all_pixels_is_identity(rng):
    frames = FrameSeries(rng.random((3, 6)))
    out = apply_mask(frames, PixelMask(6, np.arange(6)))
    assert np.array_equal(out.intensities, frames.intensities)


def test_mask_selects_columns():
    frames = FrameSeries(np.arange(8.0).reshape(2, 4))
    out = apply_mask(frames, PixelMask(4, np.array([1, 3])))
    assert out.intensities.tolist() == [[1.0, 3.0], [5.0, 7.0]]
    assert out.n_pixels == 2


def test_annular_mask_matches_direct_indexing(rng):
    mask = PixelMask.annulus((10, 10), 3.5, 5.5, center=(3.0, 3.5))
    assert mask.count == 37
    frames = FrameSeries(rng.random((10, 100)))
    out = apply_mask(frames, mask)
    assert out.n_pixels == 37
    yy, xx = np.mgrid[0:10, 0:10]
    r = np.hypot(yy - 3.0, xx - 3.5).ravel()
    direct = frames.intensities[:, (r >= 3.5) & (r < 5.5)]
    assert np.array_equal(out.intensities, direct)


@given(st.integers(2, 60), st.data())
def test_mask_with_complement_is_a_permutation(m, data):
    chosen = data.draw(st.sets(st.integers(0, m - 1), min_size=1, max_size=m - 1))
    mask = PixelMask(m, np.array(sorted(chosen)))
    comp = mask.complement()
    assert mask.count + comp.count == m
    x = np.arange(2.0 * m).reshape(2, m)
    frames = FrameSeries(x)
    joined = np.hstack([apply_mask(frames, mask).intensities, apply_mask(frames, comp).intensities])
    order = np.concatenate([mask.indices, comp.indices])
    assert sorted(order.tolist()) == list(range(m))
    assert np.array_equal(joined, x[:, order])


@pytest.mark.parametrize("indices", [[], [2, 1], [1, 1], [-1, 2], [0, 5]])
def test_mask_invalid(indices):
    with pytest.raises(MaskError):
        PixelMask(5, np.array(indices, dtype=np.int64))


def test_mask_size_mismatch():
    with pytest.raises(MaskError):
        apply_mask(FrameSeries(np.ones((2, 4))), PixelMask(5, np.array([0])))


def test_mask_twice_rejected():
    frames = apply_mask(FrameSeries(np.ones((2, 4))), PixelMask(4, np.array([0, 1])))
    with pytest.raises(MaskError):
        apply_mask(frames, PixelMask(2, np.array([0])))


# frame series

def test_frames_reject_negative_and_nan():
    with pytest.raises(ContractError):
        FrameSeries(np.array([[1.0, -1.0]]))
    with pytest.raises(ContractError):
        FrameSeries(np.array([[1.0, np.nan]]))


def test_frames_keep_dtype_and_are_readonly():
    x = np.ones((2, 3), dtype=np.uint16)
    frames = FrameSeries(x)
    assert frames.intensities.dtype == np.uint16
    assert frames.as_float().dtype == np.float64
    with pytest.raises(ValueError):
        frames.intensities[0, 0] = 5


def test_frames_reject_bad_shape_and_period():
    with pytest.raises(ShapeError):
        FrameSeries(np.ones(3))
    with pytest.raises(ContractError):
        FrameSeries(np.ones((2, 2)), frame_period=0.0)


def test_frames_slice():
    frames = FrameSeries(np.arange(12.0).reshape(4, 3), 0.5)
    half = frames.slice(2, None)
    assert half.n_frames == 2 and half.frame_period == 0.5
    assert half.intensities[0].tolist() == [6.0, 7.0, 8.0]


# encoding matrix and hash

def test_encoder_invariants(rng):
    enc = EncodingMatrix(orthonormal(rng, 20, 4), np.array([4.0, 3.0, 2.0, 1.0, 0.5]))
    assert enc.k == 4 and enc.n_pixels == 20
    assert enc.orthonormality_error() <= 1e-10
    assert not enc.is_lossless
    with pytest.raises(ContractError):
        EncodingMatrix(orthonormal(rng, 20, 2), np.array([1.0, 2.0]))
    with pytest.raises(ShapeError):
        EncodingMatrix(orthonormal(rng, 20, 3), np.array([1.0]))


def test_mode_codes_round_trip():
    for mode in EncoderMode:
        assert EncoderMode.from_code(mode.code) is mode


def test_content_hash_deterministic_and_sensitive(rng):
    v = orthonormal(rng, 16, 3)
    s = np.array([3.0, 2.0, 1.0])
    a = EncodingMatrix(v, s)
    assert content_hash(a) == content_hash(EncodingMatrix(v.copy(), s))
    assert len(content_hash(a)) == 16
    w = v.copy()
    w[5, 1] = np.nextafter(w[5, 1], 1.0)
    assert content_hash(EncodingMatrix(w, s)) != content_hash(a)
    assert content_hash(EncodingMatrix(v, s, EncoderMode.ONLINE_RELATED)) != content_hash(a)


def test_content_hash_survives_file_round_trip(rng, tmp_path):
    enc = EncodingMatrix(orthonormal(rng, 30, 5), np.linspace(5, 1, 7), EncoderMode.ONLINE_UNRELATED)
    io.write_encoder(tmp_path / "e.xenc", enc)
    assert content_hash(io.read_encoder(tmp_path / "e.xenc")) == content_hash(enc)


# compressed store

def test_store_append_and_views():
    store = CompressedSeries(2, "ab" * 8)
    assert len(store) == 0
    store.append([0.6, 0.8], 5.0)
    view = store.coefficients
    for i in range(40):
        store.append([0.0, 1.0], 1.0 + i)
    assert view.shape == (1, 2) and view.tolist() == [[0.6, 0.8]]
    assert len(store) == 41
    assert store.frame_norms[:3].tolist() == [5.0, 1.0, 2.0]
    with pytest.raises(ValueError):
        store.coefficients[0, 0] = 1.0


def test_store_rejects_bad_rows():
    store = CompressedSeries(2, "00" * 8)
    with pytest.raises(ShapeError):
        store.append([1.0], 1.0)
    with pytest.raises(ContractError):
        store.append([1.0, 1.0], 1.0)
    with pytest.raises(ContractError):
        store.append([0.1, 0.1], 0.0)
    with pytest.raises(ContractError):
        CompressedSeries(0, "00" * 8)


def test_store_snapshot_consistent_under_concurrent_appends():
    store = CompressedSeries(3, "00" * 8)
    rows = np.eye(3)[np.arange(3000) % 3] * 0.5

    def writer():
        for i, row in enumerate(rows):
            store.append(row, float(i + 1))

    t = threading.Thread(target=writer)
    t.start()
    while t.is_alive():
        coef, norms = store.snapshot()
        assert coef.shape[0] == norms.shape[0]
        assert np.array_equal(coef, rows[: coef.shape[0]])
        assert np.array_equal(norms, np.arange(1, coef.shape[0] + 1, dtype=float))
    t.join()
    assert len(store) == 3000


# TTC and g2 containers

def test_ttc_validation():
    TTCMatrix(np.eye(3))
    with pytest.raises(ContractError):
        TTCMatrix(np.array([[1.0, 0.5], [0.4, 1.0]]))
    with pytest.raises(ContractError):
        TTCMatrix(np.array([[1.0, 1.1], [1.1, 1.0]]))
    with pytest.raises(ContractError):
        TTCMatrix(np.diag([1.0, 0.5]))
    assert TTCMatrix(np.diag([1.0, 0.5]), lossless=False).n == 2
    with pytest.raises(ShapeError):
        TTCMatrix(np.ones((2, 3)))


def test_g2_curve_validation():
    curve = G2Curve([0.0, 1.0, 2.0], [1.0, 0.5, 0.2])
    assert curve.counts.tolist() == [3, 2, 1]
    assert curve.window(0.5, 2.0).tolist() == [False, True, True]
    with pytest.raises(ContractError):
        G2Curve([1.0, 2.0], [1.0, 1.0])
    with pytest.raises(ContractError):
        G2Curve([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(ShapeError):
        G2Curve([0.0, 1.0], [1.0])
