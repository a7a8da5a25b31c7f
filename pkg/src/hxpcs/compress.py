"""Project frames onto an encoding matrix, whole series or one frame at a time.

Both paths run the same fixed-order kernel, so streaming a series through
:func:`compress_frame` and :func:`append` gives bit-for-bit the rows that
:func:`compress_series` produces.
"""

import numpy as np

from .errors import BindingError, ShapeError
from .linalg import matmul, row_normalize
from .model import CompressedSeries, content_hash


def _frames_matrix(frames):
    if hasattr(frames, "as_float"):
        return frames.as_float()
    return np.asarray(frames, dtype=np.float64)


def compress_series(frames, enc):
    """``Y = normalize_rows(X) @ V_K`` together with the raw frame norms."""
    x = _frames_matrix(frames)
    if x.ndim != 2 or x.shape[1] != enc.n_pixels:
        raise ShapeError(f"frames have {x.shape[-1]} pixels, encoder expects {enc.n_pixels}")
    xn, norms = row_normalize(x)
    y = matmul(xn, enc.v)
    return CompressedSeries(enc.k, content_hash(enc), y, norms, lossless=enc.is_lossless)


def compress_frame(frame, enc):
    """Compress one flattened frame; returns ``(coefficients, norm)``."""
    x = np.asarray(frame, dtype=np.float64)
    if x.shape != (enc.n_pixels,):
        raise ShapeError(f"frame has shape {x.shape}, encoder expects ({enc.n_pixels},)")
    xn, norms = row_normalize(x[None, :])
    return matmul(xn, enc.v)[0], float(norms[0])


def empty_store(enc):
    """A store bound to ``enc`` with no frames yet."""
    return CompressedSeries(enc.k, content_hash(enc), lossless=enc.is_lossless)


def append(store, coefficients, norm):
    return store.append(coefficients, norm)


def check_binding(store, enc):
    if store.encoder_id != content_hash(enc):
        raise BindingError(
            f"store was compressed with encoder {store.encoder_id}, not {content_hash(enc)}"
        )


def decompress(store, enc):
    """Row-normalized reconstruction ``Y @ V_K^T`` (N x M)."""
    check_binding(store, enc)
    return matmul(store.coefficients, np.ascontiguousarray(enc.v.T))
