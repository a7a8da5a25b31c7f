"""Binary file formats and CSV export.  Everything is little-endian.

Layouts (byte sizes in parentheses)::

    frames   "XFSR"(4) version:u32 dtype:u32 N:u64 M:u64 frame_period:f64
             then N*M values row-major; dtype 0=u16 1=f32 2=f64
    mask     "XMSK"(4) version:u32 full_pixels:u64 count:u64 then count u64 indices
    encoder  "XENC"(4) version:u32 mode:u8 M:u64 K:u64 spectrum_len:u64
             then spectrum f64[spectrum_len], then V f64[M*K] row-major
    compressed
             "XCMP"(4) version:u32 K:u64 encoder_hash(8) N:u64
             then N records of (norm:f64, coefficients f64[K])

Every reader raises :class:`~hxpcs.errors.FormatError` (or a subclass) with
the byte offset of the problem instead of failing on corrupt input.
"""

import csv
import os
import struct

import numpy as np

from .errors import FormatError, IntegrityError, LengthError, MaskError
from .model import CompressedSeries, EncoderMode, EncodingMatrix, FrameSeries, G2Curve, PixelMask

VERSION = 1

FRAMES_MAGIC = b"XFSR"
MASK_MAGIC = b"XMSK"
ENCODER_MAGIC = b"XENC"
COMPRESSED_MAGIC = b"XCMP"

_FRAMES_HEADER = struct.Struct("<4sIIQQd")
_MASK_HEADER = struct.Struct("<4sIQQ")
_ENCODER_HEADER = struct.Struct("<4sIBQQQ")
_COMPRESSED_HEADER = struct.Struct("<4sIQ8sQ")
_COMPRESSED_N_OFFSET = 24

FRAMES_HEADER_SIZE = _FRAMES_HEADER.size
ENCODER_HEADER_SIZE = _ENCODER_HEADER.size
COMPRESSED_HEADER_SIZE = _COMPRESSED_HEADER.size

_DTYPES = {0: np.dtype("<u2"), 1: np.dtype("<f4"), 2: np.dtype("<f8")}
_DTYPE_CODES = {np.dtype(np.uint16): 0, np.dtype(np.float32): 1, np.dtype(np.float64): 2}

ORTHONORMALITY_TOL = 1e-8


class _Buffer:
    """Sequential reader over a bytes object that reports offsets."""

    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise LengthError(
                f"file truncated: {what} needs {n} bytes, {len(self.data) - self.pos} left",
                self.pos,
            )
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, st, what):
        return st.unpack(self.take(st.size, what))

    def array(self, dtype, count, what):
        dtype = np.dtype(dtype)
        return np.frombuffer(self.take(dtype.itemsize * count, what), dtype=dtype).copy()

    def expect_end(self):
        if self.pos != len(self.data):
            raise FormatError(f"{len(self.data) - self.pos} unexpected trailing bytes", self.pos)


def _read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


def _check_magic(magic, expected, version):
    if magic != expected:
        raise FormatError(f"bad magic {magic!r}, expected {expected!r}", 0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)


def frames_file_size(n, m, dtype=np.float64):
    return FRAMES_HEADER_SIZE + n * m * np.dtype(dtype).itemsize


def encoder_file_size(m, k, spectrum_len):
    return ENCODER_HEADER_SIZE + 8 * spectrum_len + 8 * m * k


def compressed_file_size(n, k):
    return COMPRESSED_HEADER_SIZE + n * 8 * (k + 1)


def write_frames(path, frames):
    x = frames.intensities
    code = _DTYPE_CODES.get(x.dtype)
    if code is None:
        x, code = x.astype(np.float64), 2
    header = _FRAMES_HEADER.pack(FRAMES_MAGIC, VERSION, code, x.shape[0], x.shape[1], frames.frame_period)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(x, dtype=_DTYPES[code]).tobytes())


def read_frames(path):
    buf = _Buffer(_read_bytes(path))
    magic, version, code, n, m, period = buf.unpack(_FRAMES_HEADER, "frames header")
    _check_magic(magic, FRAMES_MAGIC, version)
    if code not in _DTYPES:
        raise FormatError(f"unknown dtype code {code}", 8)
    if n < 1 or m < 1:
        raise FormatError(f"empty frame series {n} x {m}", 12)
    x = buf.array(_DTYPES[code], n * m, "frame payload").reshape(n, m)
    buf.expect_end()
    try:
        return FrameSeries(x.astype(x.dtype.newbyteorder("=")), period)
    except ValueError as exc:
        raise IntegrityError(str(exc), FRAMES_HEADER_SIZE) from exc


def write_mask(path, mask):
    with open(path, "wb") as fh:
        fh.write(_MASK_HEADER.pack(MASK_MAGIC, VERSION, mask.full_pixels, mask.count))
        fh.write(mask.indices.astype("<u8").tobytes())


def read_mask(path):
    buf = _Buffer(_read_bytes(path))
    magic, version, full, count = buf.unpack(_MASK_HEADER, "mask header")
    _check_magic(magic, MASK_MAGIC, version)
    if count == 0:
        raise FormatError("empty mask", 16)
    idx = buf.array("<u8", count, "mask indices")
    buf.expect_end()
    if np.any(np.diff(idx.astype(np.int64)) <= 0):
        bad = int(np.flatnonzero(np.diff(idx.astype(np.int64)) <= 0)[0]) + 1
        raise FormatError("mask indices not strictly ascending", _MASK_HEADER.size + 8 * bad)
    try:
        return PixelMask(full, idx.astype(np.int64))
    except MaskError as exc:
        raise FormatError(str(exc), _MASK_HEADER.size) from exc


def write_encoder(path, enc):
    spectrum = enc.singular_values
    with open(path, "wb") as fh:
        fh.write(_ENCODER_HEADER.pack(ENCODER_MAGIC, VERSION, enc.mode.code, enc.n_pixels, enc.k, spectrum.size))
        fh.write(spectrum.astype("<f8").tobytes())
        fh.write(enc.v.astype("<f8").tobytes())


def read_encoder(path):
    buf = _Buffer(_read_bytes(path))
    magic, version, code, m, k, slen = buf.unpack(_ENCODER_HEADER, "encoder header")
    _check_magic(magic, ENCODER_MAGIC, version)
    try:
        mode = EncoderMode.from_code(code)
    except ValueError as exc:
        raise FormatError(str(exc), 8) from exc
    if m < 1 or k < 1 or slen < k:
        raise FormatError(f"inconsistent encoder dimensions M={m} K={k} spectrum={slen}", 9)
    spectrum = buf.array("<f8", slen, "spectrum")
    v_offset = buf.pos
    v = buf.array("<f8", m * k, "encoding matrix").reshape(m, k)
    buf.expect_end()
    try:
        enc = EncodingMatrix(v, spectrum, mode)
    except ValueError as exc:
        raise IntegrityError(str(exc), ENCODER_HEADER_SIZE) from exc
    err = enc.orthonormality_error()
    if err > ORTHONORMALITY_TOL:
        raise IntegrityError(f"encoder columns not orthonormal (max error {err:.3g})", v_offset)
    return enc


class CompressedWriter:
    """Append-only writer for compressed stores.

    Opening an existing file appends to it after validating its header.  The
    frame count in the header is rewritten on :meth:`close`.

    >>> with CompressedWriter(path, k=8, encoder_id=enc.content_hash()) as w:  # doctest: +SKIP
    ...     w.append(coefficients, norm)
    """

    def __init__(self, path, k=None, encoder_id=None, append=False):
        self.path = os.fspath(path)
        if append and os.path.exists(self.path):
            self._fh = open(self.path, "r+b")
            header = self._fh.read(COMPRESSED_HEADER_SIZE)
            buf = _Buffer(header)
            magic, version, fk, fhash, n = buf.unpack(_COMPRESSED_HEADER, "compressed header")
            _check_magic(magic, COMPRESSED_MAGIC, version)
            if k is not None and k != fk:
                raise FormatError(f"file holds K={fk}, writer asked for K={k}", 8)
            if encoder_id is not None and bytes.fromhex(encoder_id) != fhash:
                raise FormatError("file was written with a different encoder", 16)
            size = self._fh.seek(0, os.SEEK_END)
            if size != compressed_file_size(n, fk):
                raise LengthError(f"payload does not match N={n}", size)
            self.k, self.encoder_id, self.n = fk, fhash.hex(), n
        else:
            if k is None or encoder_id is None:
                raise ValueError("a new compressed file needs k and encoder_id")
            self._fh = open(self.path, "wb")
            self.k, self.encoder_id, self.n = int(k), encoder_id, 0
            self._fh.write(
                _COMPRESSED_HEADER.pack(COMPRESSED_MAGIC, VERSION, self.k, bytes.fromhex(encoder_id), 0)
            )

    def append(self, coefficients, norm):
        row = np.asarray(coefficients, dtype="<f8")
        if row.shape != (self.k,):
            raise ValueError(f"expected {self.k} coefficients, got {row.shape}")
        self._fh.write(struct.pack("<d", norm))
        self._fh.write(row.tobytes())
        self.n += 1

    def extend(self, coefficients, norms):
        coef = np.asarray(coefficients, dtype=np.float64)
        if coef.ndim != 2 or coef.shape[1] != self.k or norms.shape != (coef.shape[0],):
            raise ValueError("need an N x K block and N norms")
        records = np.empty((coef.shape[0], self.k + 1), dtype="<f8")
        records[:, 0] = norms
        records[:, 1:] = coef
        self._fh.write(records.tobytes())
        self.n += coef.shape[0]

    def close(self):
        if self._fh.closed:
            return
        self._fh.seek(_COMPRESSED_N_OFFSET)
        self._fh.write(struct.pack("<Q", self.n))
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_compressed(path, store):
    coef, norms = store.snapshot()
    with CompressedWriter(path, store.k, store.encoder_id) as w:
        w.extend(coef, norms)


def read_compressed(path):
    buf = _Buffer(_read_bytes(path))
    magic, version, k, ehash, n = buf.unpack(_COMPRESSED_HEADER, "compressed header")
    _check_magic(magic, COMPRESSED_MAGIC, version)
    if k < 1:
        raise FormatError("K must be >= 1", 8)
    records = buf.array("<f8", n * (k + 1), "compressed records").reshape(n, k + 1)
    buf.expect_end()
    try:
        return CompressedSeries(k, ehash.hex(), records[:, 1:], records[:, 0])
    except ValueError as exc:
        raise IntegrityError(str(exc), COMPRESSED_HEADER_SIZE) from exc


def export_ttc_csv(path, ttc):
    values = ttc.values if hasattr(ttc, "values") else np.asarray(ttc)
    np.savetxt(path, values, fmt="%.17g", delimiter=",")


def export_g2_csv(path, curve):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lag_seconds", "g2", "count"])
        for lag, value, count in zip(curve.lags, curve.values, curve.counts):
            writer.writerow([f"{lag:.17g}", f"{value:.17g}", int(count)])


def read_ttc_csv(path):
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=np.float64))


def read_g2_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["lag_seconds", "g2", "count"]:
        raise FormatError("g2 CSV must start with the header lag_seconds,g2,count", 0)
    data = rows[1:]
    return G2Curve(
        [float(r[0]) for r in data],
        [float(r[1]) for r in data],
        [int(r[2]) for r in data],
    )


def _pgm_tokens(data):
    """Yield (token, end_offset) for the whitespace/comment separated PGM header."""
    pos = 0
    while True:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("PGM header ended early", pos)
        yield data[start:pos], pos


def read_pgm(path):
    """Read a binary (P5) PGM image as an (H, W) uint8 or uint16 array."""
    data = _read_bytes(path)
    if data[:2] != b"P5":
        raise FormatError(f"not a binary PGM (magic {data[:2]!r}); only P5 is supported", 0)
    tokens = _pgm_tokens(data)
    next(tokens)
    fields = []
    pos = 2
    for _ in range(3):
        tok, pos = next(tokens)
        if not tok.isdigit():
            raise FormatError(f"bad PGM header field {tok!r}", pos - len(tok))
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError("PGM image has no pixels", pos)
    if not 0 < maxval <= 65535:
        raise FormatError(f"PGM maxval {maxval} outside 1..65535", pos)
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("missing whitespace after PGM header", pos)
    buf = _Buffer(data)
    buf.pos = pos + 1
    dtype = ">u1" if maxval < 256 else ">u2"
    img = buf.array(dtype, width * height, "PGM pixels").reshape(height, width)
    return img.astype(np.uint8 if maxval < 256 else np.uint16)


def write_pgm(path, image):
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PGM image must be 2-D")
    maxval = 255 if img.dtype == np.uint8 else 65535
    dtype = ">u1" if maxval == 255 else ">u2"
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode("ascii"))
        fh.write(img.astype(dtype).tobytes())
