"""Deterministic synthetic XPCS series with known ground truth.

Random numbers
--------------
All generators draw from :class:`PortableRNG`, a Philox4x64-10 counter
stream whose 128-bit key is ``(seed, 0)``.  Block ``i`` (``i = 1, 2, ...``)
encrypts the 256-bit counter ``(i, 0, 0, 0)`` and yields four 64-bit words
in order.  Derived variates use only these transforms, so any language with a
Philox4x64-10 implementation can reproduce the series:

* uniform ``u = (raw >> 11) * 2**-53`` in [0, 1)
* exponential ``-log1p(-u)``
* normal, Box-Muller cosine branch over consecutive uniform pairs
  ``(u1, u2)``: ``sqrt(-2 log1p(-u1)) * cos(2 pi u2)``
* integer in [0, h): ``floor(u * h)``

Arrays are filled in C order, one variate after another.
"""

from importlib import resources

import numpy as np

from .errors import ContractError, ShapeError
from .model import FrameSeries

RELAXATION_AMPLITUDE = 0.5


class PortableRNG:
    """Philox4x64-10 stream keyed directly by ``seed``."""

    def __init__(self, seed):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ContractError("seed must be in [0, 2**64)")
        self.seed = seed
        self._bits = np.random.Philox(key=seed, counter=0)

    def raw(self, size):
        return self._bits.random_raw(int(size))

    def uniform(self, shape):
        n = int(np.prod(shape))
        return ((self.raw(n) >> np.uint64(11)) * 2.0**-53).reshape(shape)

    def exponential(self, shape):
        return -np.log1p(-self.uniform(shape))

    def normal(self, shape):
        n = int(np.prod(shape))
        u = self.uniform((n, 2))
        return (np.sqrt(-2.0 * np.log1p(-u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])).reshape(shape)

    def integers(self, high, size):
        return np.floor(self.uniform((size,)) * high).astype(np.int64)


def gen_oscillatory(n, m, period_frames, contrast, noise, seed, frame_period=1.0):
    """Speckle series that swings periodically between two patterns.

    Frame ``t`` is ``(1 - w_t) A + w_t B + noise * eps_t`` with
    ``w_t = contrast * sin(pi t / period_frames)**2``, where A and B are
    independent fully developed speckle fields (exponential pixels) and
    ``eps_t`` is fresh Gaussian noise.  Negative pixels are clipped to 0.
    Frames ``period_frames`` apart are most alike, so the correlation has
    ridges at multiples of the period.
    """
    if n < 2 or m < 2:
        raise ContractError("need n >= 2 frames of m >= 2 pixels")
    if period_frames < 2:
        raise ContractError("period_frames must be >= 2")
    if not 0.0 <= contrast < 1.0:
        raise ContractError("contrast must lie in [0, 1)")
    if noise < 0:
        raise ContractError("noise must be >= 0")
    rng = PortableRNG(seed)
    a = rng.exponential((m,))
    b = rng.exponential((m,))
    t = np.arange(n)
    w = contrast * np.sin(np.pi * t / period_frames) ** 2
    x = (1.0 - w)[:, None] * a + w[:, None] * b
    if noise > 0:
        x += noise * rng.normal((n, m))
    np.clip(x, 0.0, None, out=x)
    return FrameSeries(x, frame_period)


def gen_relaxation(n, m, rho, seed, frame_period=1.0):
    """Speckle series relaxing with a known correlation time.

    Each pixel carries a complex Gaussian field that follows the AR(1)
    recursion ``E_{t+1} = rho E_t + sqrt(1 - rho**2) eta_t``.  Its intensity
    fluctuation ``f_t = |E_t|**2 - 1`` has unit variance and autocorrelation
    ``rho**(2 d)``.  Frame ``t`` is ``base * (1 + 0.5 f_t)`` (clipped at 0,
    which never triggers for amplitude 0.5).  The normalized g2 is then
    ``(1 + 0.25 rho**(2 d)) / 1.25``, i.e. ``B + C exp(-2 d / t0)`` with
    ``t0 = -1 / ln(rho)`` frames.
    """
    if n < 2 or m < 2:
        raise ContractError("need n >= 2 frames of m >= 2 pixels")
    if not 0.0 < rho < 1.0:
        raise ContractError("rho must lie in (0, 1)")
    rng = PortableRNG(seed)
    base = rng.exponential((m,))
    field = (rng.normal((m,)) + 1j * rng.normal((m,))) / np.sqrt(2.0)
    kick = np.sqrt(1.0 - rho * rho)
    x = np.empty((n, m))
    for t in range(n):
        if t:
            eta = (rng.normal((m,)) + 1j * rng.normal((m,))) / np.sqrt(2.0)
            field = rho * field + kick * eta
        f = field.real**2 + field.imag**2 - 1.0
        x[t] = base * (1.0 + RELAXATION_AMPLITUDE * f)
    np.clip(x, 0.0, None, out=x)
    return FrameSeries(x, frame_period)


def relaxation_time(rho):
    """Ground-truth ``t0`` (frames) of :func:`gen_relaxation`."""
    return -1.0 / np.log(rho)


def shifted_corpus(reference, shifts, frame_shape):
    """Cyclically shift ``reference`` by each ``(dy, dx)``, center-crop, flatten."""
    ref = np.asarray(reference, dtype=np.float64)
    if ref.ndim != 2:
        raise ShapeError("reference must be a 2-D image")
    h, w = frame_shape
    H, W = ref.shape
    if H < h or W < w:
        raise ShapeError(f"reference {ref.shape} is smaller than the frame {frame_shape}")
    y0 = (H - h) // 2
    x0 = (W - w) // 2
    rows = []
    for dy, dx in shifts:
        shifted = np.roll(ref, (int(dy), int(dx)), axis=(0, 1))
        rows.append(shifted[y0:y0 + h, x0:x0 + w].ravel())
    return FrameSeries(np.array(rows))


def gen_shifted_corpus(reference, r_samples, frame_shape, seed):
    """``r_samples`` uniformly random cyclic shifts of ``reference`` as a frame series.

    Shifts are drawn as ``(dy, dx)`` pairs in sample order, ``dy`` in
    [0, H) and ``dx`` in [0, W).
    """
    if r_samples < 1:
        raise ContractError("r_samples must be >= 1")
    ref = np.asarray(reference)
    if ref.ndim != 2:
        raise ShapeError("reference must be a 2-D image")
    H, W = ref.shape
    rng = PortableRNG(seed)
    u = rng.uniform((int(r_samples), 2))
    shifts = np.stack([np.floor(u[:, 0] * H), np.floor(u[:, 1] * W)], axis=1).astype(np.int64)
    return shifted_corpus(ref, shifts, frame_shape)


def textured_reference(size=256, seed=0):
    """Random 1/f texture as an 8-bit image; a license-free stand-in for natural photos."""
    rng = PortableRNG(seed)
    white = rng.normal((size, size))
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.rfftfreq(size)[None, :]
    f = np.hypot(fy, fx)
    f[0, 0] = 1.0
    spectrum = np.fft.rfft2(white) / f
    spectrum[0, 0] = 0.0
    img = np.fft.irfft2(spectrum, s=(size, size))
    img = (img - img.min()) / (img.max() - img.min())
    return np.round(16 + 239 * img).astype(np.uint8)


def load_reference():
    """The shipped reference image (``data/reference.pgm``)."""
    from .io import read_pgm

    with resources.as_file(resources.files("hxpcs") / "data" / "reference.pgm") as path:
        return read_pgm(path)
