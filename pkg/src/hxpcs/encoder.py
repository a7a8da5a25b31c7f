"""Build encoding matrices (projection bases) for compression."""

import numpy as np

from .errors import ContractError, RankError
from .linalg import gram_svd, row_normalize
from .model import EncoderMode, EncodingMatrix
from .synth import gen_shifted_corpus

DEFAULT_CORPUS_SIZE = 1000


def _basis(frames, rel_tol, method):
    x = frames.as_float() if hasattr(frames, "as_float") else np.asarray(frames, dtype=np.float64)
    xn, _ = row_normalize(x)
    return gram_svd(xn, rel_tol=rel_tol, method=method)


def build_offline(frames, rel_tol=1e-12, method="jacobi"):
    """Encoder from the series itself, keeping every numerically significant component.

    Compressing ``frames`` with the result is lossless.
    """
    if frames.n_frames < 2:
        raise ContractError("offline encoding needs at least 2 frames")
    svd = _basis(frames, rel_tol, method)
    return EncodingMatrix(svd.right_vectors, svd.singular_values, EncoderMode.OFFLINE)


def truncate(enc, k):
    """Keep the ``k`` leading columns; the spectrum is kept whole."""
    k = int(k)
    if not 1 <= k <= enc.k:
        raise ContractError(f"k must lie in [1, {enc.k}], got {k}")
    if k == enc.k:
        return enc
    return EncodingMatrix(enc.v[:, :k], enc.singular_values, enc.mode)


def build_online_from_frames(prior, k, rel_tol=1e-12, method="jacobi"):
    """Encoder of rank ``k`` from an earlier measurement on the same sample."""
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    svd = _basis(prior, rel_tol, method)
    if k > svd.rank:
        raise RankError(k, svd.rank)
    enc = EncodingMatrix(svd.right_vectors, svd.singular_values, EncoderMode.ONLINE_RELATED)
    return truncate(enc, k)


def build_online(reference, frame_shape, k, r_samples=DEFAULT_CORPUS_SIZE, seed=0,
                 rel_tol=1e-12, method="jacobi"):
    """Instrument-agnostic encoder from randomly shifted copies of a reference image.

    The corpus is ``synth.gen_shifted_corpus(reference, r_samples,
    frame_shape, seed)``; the encoder keeps its ``k`` leading right singular
    vectors.  Deterministic for fixed arguments.
    """
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    corpus = gen_shifted_corpus(reference, r_samples, frame_shape, seed)
    svd = _basis(corpus, rel_tol, method)
    if k > svd.rank:
        raise RankError(k, svd.rank)
    enc = EncodingMatrix(svd.right_vectors, svd.singular_values, EncoderMode.ONLINE_UNRELATED)
    return truncate(enc, k)


def suggest_k(enc_or_spectrum, factor=2.0):
    """Number of singular values larger than ``factor`` times the smallest one.

    A rule of thumb for the smallest rank whose lossy correlation still
    tracks the lossless one.  Returns 0 for a flat spectrum.
    """
    if factor <= 1.0:
        raise ContractError("factor must be > 1")
    s = getattr(enc_or_spectrum, "singular_values", enc_or_spectrum)
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0:
        raise ContractError("empty spectrum")
    return int(np.count_nonzero(s > factor * s.min()))
