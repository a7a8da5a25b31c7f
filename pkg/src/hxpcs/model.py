"""Domain types shared by every pipeline stage."""

import hashlib
import struct
import threading
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ContractError, MaskError, ShapeError

_TOL = 1e-10


class EncoderMode(str, Enum):
    OFFLINE = "offline"
    ONLINE_RELATED = "online-related"
    ONLINE_UNRELATED = "online-unrelated"

    @property
    def code(self):
        return _MODE_CODES[self]

    @classmethod
    def from_code(cls, code):
        for mode, c in _MODE_CODES.items():
            if c == code:
                return mode
        raise ValueError(f"unknown encoder mode code {code}")


_MODE_CODES = {
    EncoderMode.OFFLINE: 0,
    EncoderMode.ONLINE_RELATED: 1,
    EncoderMode.ONLINE_UNRELATED: 2,
}


@dataclass(frozen=True)
class PixelMask:
    """Ascending subset of detector pixel indices (e.g. one q-range)."""

    full_pixels: int
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.ndim != 1 or idx.size == 0:
            raise MaskError("mask must select at least one pixel")
        if not np.issubdtype(idx.dtype, np.integer):
            raise MaskError("mask indices must be integers")
        idx = idx.astype(np.int64)
        if idx[0] < 0 or np.any(np.diff(idx) <= 0):
            raise MaskError("mask indices must be non-negative and strictly ascending")
        if idx[-1] >= self.full_pixels:
            raise MaskError(f"mask index {idx[-1]} out of range for {self.full_pixels} pixels")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "full_pixels", int(self.full_pixels))

    @property
    def count(self):
        return self.indices.size

    def complement(self):
        keep = np.ones(self.full_pixels, dtype=bool)
        keep[self.indices] = False
        return PixelMask(self.full_pixels, np.flatnonzero(keep))

    @classmethod
    def annulus(cls, shape, r_min, r_max, center=None):
        """Pixels of a ``shape`` detector whose distance to ``center`` is in [r_min, r_max)."""
        h, w = shape
        cy, cx = center if center is not None else ((h - 1) / 2.0, (w - 1) / 2.0)
        yy, xx = np.mgrid[0:h, 0:w]
        r = np.hypot(yy - cy, xx - cx).ravel()
        return cls(h * w, np.flatnonzero((r >= r_min) & (r < r_max)))


@dataclass(frozen=True)
class FrameSeries:
    """N detector frames of M pixels each, stored as raw intensities.

    ``intensities`` keeps its storage dtype (uint16, float32 or float64);
    computations promote to float64.
    """

    intensities: np.ndarray
    frame_period: float = 1.0
    mask: PixelMask | None = None

    def __post_init__(self):
        x = np.asarray(self.intensities)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ShapeError(f"frames must be a non-empty N x M array, got shape {x.shape}")
        if x.dtype not in (np.uint16, np.float32, np.float64):
            x = x.astype(np.float64)
        if x.dtype != np.uint16:
            if not np.all(np.isfinite(x)):
                raise ContractError("frame intensities must be finite")
            if np.any(x < 0):
                raise ContractError("frame intensities must be non-negative")
        if not self.frame_period > 0:
            raise ContractError("frame_period must be positive")
        if self.mask is not None and self.mask.count != x.shape[1]:
            raise MaskError(
                f"mask selects {self.mask.count} pixels but frames have {x.shape[1]}"
            )
        x.setflags(write=False)
        object.__setattr__(self, "intensities", x)
        object.__setattr__(self, "frame_period", float(self.frame_period))

    @property
    def n_frames(self):
        return self.intensities.shape[0]

    @property
    def n_pixels(self):
        return self.intensities.shape[1]

    def as_float(self):
        return np.asarray(self.intensities, dtype=np.float64)

    def slice(self, start=None, stop=None):
        """Frames ``start:stop`` as a new series."""
        return FrameSeries(self.intensities[start:stop], self.frame_period, self.mask)


def apply_mask(frames, mask):
    """Keep only the pixels selected by ``mask``, in mask order."""
    if frames.mask is not None:
        raise MaskError("frames are already masked")
    if mask.full_pixels != frames.n_pixels:
        raise MaskError(
            f"mask is for {mask.full_pixels} pixels but frames have {frames.n_pixels}"
        )
    return FrameSeries(frames.intensities[:, mask.indices], frames.frame_period, mask)


@dataclass(frozen=True, eq=False)
class EncodingMatrix:
    """Projection basis ``V_K`` (M x K, orthonormal columns) plus its full spectrum."""

    v: np.ndarray
    singular_values: np.ndarray
    mode: EncoderMode = EncoderMode.OFFLINE

    def __post_init__(self):
        v = np.ascontiguousarray(self.v, dtype=np.float64)
        s = np.ascontiguousarray(self.singular_values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] < 1:
            raise ShapeError(f"encoding matrix must be M x K with K >= 1, got {v.shape}")
        if s.ndim != 1 or s.size < v.shape[1]:
            raise ShapeError("spectrum must hold at least K singular values")
        if np.any(s < 0) or np.any(np.diff(s) > 0):
            raise ContractError("spectrum must be non-negative and descending")
        v.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "singular_values", s)
        object.__setattr__(self, "mode", EncoderMode(self.mode))

    @property
    def k(self):
        return self.v.shape[1]

    @property
    def n_pixels(self):
        return self.v.shape[0]

    @property
    def is_lossless(self):
        """Offline encoder that keeps every component of its source data."""
        return self.mode is EncoderMode.OFFLINE and self.k == self.singular_values.size

    def orthonormality_error(self):
        return float(np.max(np.abs(self.v.T @ self.v - np.eye(self.k))))

    def content_hash(self):
        return content_hash(self)


def content_hash(enc):
    """64-bit hex digest over the dimensions, mode and exact bits of ``enc.v``."""
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<BQQ", enc.mode.code, enc.n_pixels, enc.k))
    h.update(enc.v.astype("<f8", copy=False).tobytes())
    return h.hexdigest()


class CompressedSeries:
    """Growable store of compressed frames (the rows of ``Y``) and their raw norms.

    One thread may append while others read.  :attr:`coefficients` and
    :attr:`frame_norms` return read-only views of a consistent prefix; a view
    never changes after it has been taken.
    """

    def __init__(self, k, encoder_id, coefficients=None, frame_norms=None, lossless=False):
        self.k = int(k)
        if self.k < 1:
            raise ContractError("k must be >= 1")
        self.encoder_id = str(encoder_id)
        self.lossless = bool(lossless)
        self._lock = threading.Lock()
        self._n = 0
        self._coef = np.empty((16, self.k))
        self._norms = np.empty(16)
        if coefficients is not None:
            coefficients = np.asarray(coefficients, dtype=np.float64)
            frame_norms = np.asarray(frame_norms, dtype=np.float64)
            if coefficients.ndim != 2 or coefficients.shape[1] != self.k:
                raise ShapeError(f"coefficients must be N x {self.k}, got {coefficients.shape}")
            if frame_norms.shape != (coefficients.shape[0],):
                raise ShapeError("need exactly one norm per coefficient row")
            _check_rows(coefficients, frame_norms)
            n = coefficients.shape[0]
            self._coef = np.array(coefficients, order="C")
            self._norms = np.array(frame_norms)
            self._n = n

    def __len__(self):
        return self._n

    @property
    def n_frames(self):
        return self._n

    @property
    def coefficients(self):
        n, buf = self._n, self._coef
        view = buf[:n]
        view.setflags(write=False)
        return view

    @property
    def frame_norms(self):
        n, buf = self._n, self._norms
        view = buf[:n]
        view.setflags(write=False)
        return view

    def snapshot(self):
        """Consistent ``(coefficients, frame_norms)`` prefix."""
        with self._lock:
            n, coef, norms = self._n, self._coef, self._norms
        c, f = coef[:n], norms[:n]
        c.setflags(write=False)
        f.setflags(write=False)
        return c, f

    def append(self, coefficients, norm):
        row = np.asarray(coefficients, dtype=np.float64)
        if row.shape != (self.k,):
            raise ShapeError(f"expected {self.k} coefficients, got shape {row.shape}")
        _check_rows(row[None, :], np.array([norm], dtype=np.float64))
        with self._lock:
            n = self._n
            coef, norms = self._coef, self._norms
            if n == coef.shape[0]:
                grown = np.empty((2 * n, self.k))
                grown[:n] = coef[:n]
                grown_norms = np.empty(2 * n)
                grown_norms[:n] = norms[:n]
                coef, norms = grown, grown_norms
            coef[n] = row
            norms[n] = norm
            self._coef, self._norms = coef, norms
            self._n = n + 1
        return self


def _check_rows(coefficients, norms):
    if not (np.all(np.isfinite(coefficients)) and np.all(np.isfinite(norms))):
        raise ContractError("compressed rows must be finite")
    if np.any(norms <= 0):
        raise ContractError("frame norms must be positive")
    row_norms = np.sqrt(np.einsum("ij,ij->i", coefficients, coefficients))
    if np.any(row_norms > 1.0 + _TOL):
        raise ContractError("a compressed row is longer than 1; wrong encoder or unnormalized frame")


@dataclass(frozen=True, eq=False)
class TTCMatrix:
    """N x N two-time correlation matrix of row-normalized frames."""

    values: np.ndarray
    lossless: bool = True

    def __post_init__(self):
        g = np.asarray(self.values, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 1:
            raise ShapeError(f"TTC must be square, got {g.shape}")
        if not np.array_equal(g, g.T):
            raise ContractError("TTC must be exactly symmetric")
        if np.any(np.abs(g) > 1.0 + _TOL):
            raise ContractError("TTC entries must lie in [-1, 1]")
        d = np.diag(g)
        if self.lossless:
            if np.any(np.abs(d - 1.0) > _TOL):
                raise ContractError("lossless TTC must have a unit diagonal")
        elif np.any(d < 0.0):
            raise ContractError("TTC diagonal must be non-negative")
        g.setflags(write=False)
        object.__setattr__(self, "values", g)

    @property
    def n(self):
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class G2Curve:
    """g2 versus lag.  ``lags`` are in seconds, ``counts[d]`` pairs went into lag ``d``."""

    lags: np.ndarray
    values: np.ndarray
    counts: np.ndarray = field(default=None)

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if lags.ndim != 1 or lags.shape != values.shape or lags.size < 1:
            raise ShapeError("lags and values must be equal-length 1-D arrays")
        if lags[0] != 0.0 or np.any(np.diff(lags) <= 0):
            raise ContractError("lags must start at 0 and increase strictly")
        counts = self.counts
        if counts is None:
            counts = np.arange(lags.size, 0, -1)
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != lags.shape:
            raise ShapeError("counts must match lags")
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "counts", counts)

    def window(self, lo, hi):
        """Boolean selector of lags in the closed interval [lo, hi]."""
        return (self.lags >= lo) & (self.lags <= hi)
