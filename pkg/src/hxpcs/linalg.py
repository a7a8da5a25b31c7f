"""Dense kernels: matrix product, Gram matrix, symmetric eigensolver, Gram-trick SVD.

The product kernels accumulate every output entry sequentially over the
inner dimension, with no fused multiply-add and no reassociation.  An entry
therefore depends only on the two vectors that meet in it, never on the
shape of the surrounding call, its blocking, or the number of threads.
That property is what makes frame-at-a-time compression and incremental
correlation updates bit-identical to their batch counterparts.
"""

import math
import os
import warnings
from dataclasses import dataclass

import numba
import numpy as np

from .errors import ContractError, NormalizationError, ShapeError

warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "threadsafe"

# Tiling only affects speed: every entry is still summed over q = 0, 1, ...
# in order, whatever the block sizes.
_ROW_BLOCK = 8
_DEPTH_BLOCK = 128
_COL_BLOCK = 512

# Components whose squared singular value is within this many ulps (times N)
# of the largest eigenvalue of the Gram matrix are rounding noise.
_GRAM_NOISE_ULPS = 10.0


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``x = U diag(s) V^T`` with ``r`` retained components."""

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    @property
    def rank(self):
        return self.singular_values.shape[0]

    def reconstruct(self):
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def set_threads(n):
    """Cap kernel parallelism; ``0`` restores the numba default."""
    n = int(n)
    if n < 0:
        raise ContractError("thread count must be >= 0")
    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(limit if n == 0 else min(n, limit))


def _threads_from_env():
    value = os.environ.get("XPCS_THREADS")
    if value:
        try:
            set_threads(int(value))
        except (ValueError, ContractError):
            warnings.warn(f"ignoring invalid XPCS_THREADS={value!r}")


def as_matrix(a, name="matrix"):
    """Return ``a`` as a C-contiguous float64 2-D array with finite entries."""
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"{name} must have at least one row and column, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractError(f"{name} contains NaN or Inf")
    return m


@numba.njit(cache=True, nogil=True)
def _matmul_tile(a, b, q0, q1, i0, i1, j0, j1, out):
    # slice views keep the innermost loop unit-stride and vectorizable
    for q in range(q0, q1):
        bq = b[q, j0:j1]
        for i in range(i0, i1):
            s = a[i, q]
            oi = out[i, j0:j1]
            for j in range(j1 - j0):
                oi[j] += s * bq[j]


@numba.njit(cache=True, nogil=True)
def _matmul_serial(a, b, out):
    p = a.shape[1]
    m = b.shape[1]
    for q0 in range(0, p, _DEPTH_BLOCK):
        q1 = min(p, q0 + _DEPTH_BLOCK)
        for j0 in range(0, m, _COL_BLOCK):
            _matmul_tile(a, b, q0, q1, 0, a.shape[0], j0, min(m, j0 + _COL_BLOCK), out)


@numba.njit(cache=True, parallel=True)
def _matmul_parallel(a, b, out):
    n, p = a.shape
    m = b.shape[1]
    nblocks = (n + _ROW_BLOCK - 1) // _ROW_BLOCK
    for q0 in range(0, p, _DEPTH_BLOCK):
        q1 = min(p, q0 + _DEPTH_BLOCK)
        for j0 in range(0, m, _COL_BLOCK):
            j1 = min(m, j0 + _COL_BLOCK)
            for blk in numba.prange(nblocks):
                i0 = blk * _ROW_BLOCK
                _matmul_tile(a, b, q0, q1, i0, min(n, i0 + _ROW_BLOCK), j0, j1, out)


@numba.njit(cache=True, nogil=True)
def _gram_tile(xt, q0, q1, i0, i1, out):
    # fills out[i, j] for i in [i0, i1), j >= i0; the caller keeps j >= i
    n = xt.shape[1]
    for q in range(q0, q1):
        xq = xt[q, i0:n]
        for i in range(i0, i1):
            s = xt[q, i]
            oi = out[i, i0:n]
            for j in range(n - i0):
                oi[j] += s * xq[j]


@numba.njit(cache=True, parallel=True)
def _gram_kernel(xt, out):
    p, n = xt.shape
    nblocks = (n + _ROW_BLOCK - 1) // _ROW_BLOCK
    for q0 in range(0, p, _DEPTH_BLOCK):
        q1 = min(p, q0 + _DEPTH_BLOCK)
        for blk in numba.prange(nblocks):
            i0 = blk * _ROW_BLOCK
            _gram_tile(xt, q0, q1, i0, min(n, i0 + _ROW_BLOCK), out)


@numba.njit(cache=True, nogil=True)
def _row_sumsq(x, out):
    n, m = x.shape
    for i in range(n):
        acc = 0.0
        for j in range(m):
            acc += x[i, j] * x[i, j]
        out[i] = acc


@numba.njit(cache=True, nogil=True)
def _jacobi(s, max_sweeps):
    # cyclic-by-row Jacobi; vt rows accumulate the eigenvectors
    n = s.shape[0]
    a = s.copy()
    vt = np.eye(n)
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if off == 0.0:
            return a, vt, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                g = 100.0 * abs(apq)
                if sweep > 3 and abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                h = aqq - app
                if abs(h) + g == abs(h):
                    t = apq / h
                else:
                    theta = 0.5 * h / apq
                    t = 1.0 / (abs(theta) + math.sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                sn = t * c
                for k in range(n):
                    akp = a[p, k]
                    akq = a[q, k]
                    a[p, k] = c * akp - sn * akq
                    a[q, k] = sn * akp + c * akq
                for k in range(n):
                    a[k, p] = a[p, k]
                    a[k, q] = a[q, k]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vp = vt[p, k]
                    vq = vt[q, k]
                    vt[p, k] = c * vp - sn * vq
                    vt[q, k] = sn * vp + c * vq
    return a, vt, max_sweeps


def matmul(a, b):
    """Matrix product with a fixed, shape-independent reduction order.

    Examples
    --------
    >>> matmul([[1.0, 2.0]], [[3.0], [4.0]])
    array([[11.]])
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    out = np.zeros((a.shape[0], b.shape[1]))
    if a.shape[0] <= _ROW_BLOCK:
        _matmul_serial(a, b, out)
    else:
        _matmul_parallel(a, b, out)
    return out


def gram(x):
    """Return ``x @ x.T``, exactly symmetric.

    Only the upper triangle is computed; the lower one is a mirror.  Each
    entry is bit-identical to the corresponding entry of ``matmul(x, x.T)``.
    """
    x = as_matrix(x, "x")
    n = x.shape[0]
    out = np.zeros((n, n))
    _gram_kernel(np.ascontiguousarray(x.T), out)
    upper = np.triu(out)
    return upper + np.triu(upper, 1).T


def row_normalize(x):
    """Divide each row by its Euclidean norm.

    Returns
    -------
    normalized : ndarray
        Rows of unit length.
    norms : ndarray
        The original row norms.

    Raises
    ------
    NormalizationError
        If a row is entirely zero; ``err.index`` names the row.
    """
    x = as_matrix(x, "frames")
    sumsq = np.empty(x.shape[0])
    _row_sumsq(x, sumsq)
    norms = np.sqrt(sumsq)
    dead = np.flatnonzero(norms == 0.0)
    if dead.size:
        raise NormalizationError(dead[0])
    return x / norms[:, None], norms


def sym_eig(s, method="jacobi", symmetry_tol=1e-10):
    """Eigendecomposition of a real symmetric matrix.

    Parameters
    ----------
    s : array_like, (n, n)
    method : {"jacobi", "lapack"}
        ``"jacobi"`` runs cyclic Jacobi rotations (deterministic, accurate,
        roughly cubic per sweep).  ``"lapack"`` defers to ``numpy.linalg.eigh``
        and is much faster for n in the thousands.

    Returns
    -------
    eigenvalues : ndarray
        Descending.
    eigenvectors : ndarray
        Column ``i`` pairs with ``eigenvalues[i]``.
    """
    s = as_matrix(s, "s")
    n = s.shape[0]
    if s.shape[1] != n:
        raise ShapeError(f"sym_eig needs a square matrix, got {s.shape}")
    scale = max(np.max(np.abs(s)), np.finfo(float).tiny)
    if np.max(np.abs(s - s.T)) > symmetry_tol * scale:
        raise ContractError("sym_eig input is not symmetric")
    s = 0.5 * (s + s.T)
    if method == "jacobi":
        a, vt, _ = _jacobi(s, 100)
        lam = np.diag(a).copy()
        vecs = vt.T
    elif method == "lapack":
        lam, vecs = np.linalg.eigh(s)
    else:
        raise ContractError(f"unknown eigensolver {method!r}")
    order = np.argsort(-lam, kind="stable")
    return lam[order], np.ascontiguousarray(vecs[:, order])


def fix_signs(u, v):
    """Flip paired columns so each column of ``v`` has its largest-magnitude entry positive."""
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, v * signs


def gram_svd(x, rel_tol=1e-12, method="jacobi"):
    """Thin SVD through the eigendecomposition of the N x N Gram matrix.

    Suited to short, wide matrices (N frames of M pixels, N << M): the only
    large intermediate is ``x`` itself.

    Components with ``s_i <= rel_tol * s_max`` are dropped.  So are those
    that the Gram route cannot resolve from rounding noise, i.e. with
    ``s_i**2`` below roughly ``10 * N * eps * s_max**2``.  The right vectors
    ``x.T @ U / s`` are re-orthonormalized afterwards, because the Gram route
    loses orthogonality in the small-singular-value directions.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ContractError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    x = as_matrix(x, "x")
    n = x.shape[0]
    lam, u = sym_eig(gram(x), method=method)
    if lam[0] <= 0.0:
        raise ContractError("matrix is all zeros; it has no spectrum")
    sigma = np.sqrt(np.clip(lam, 0.0, None))
    floor = math.sqrt(_GRAM_NOISE_ULPS * n * np.finfo(float).eps)
    keep = sigma > max(rel_tol, floor) * sigma[0]
    u = np.ascontiguousarray(u[:, keep])
    sigma = sigma[keep]

    v = matmul(u.T, x).T / sigma
    q, r = np.linalg.qr(v)
    q = q * np.sign(np.diag(r))
    u, q = fix_signs(u, q)
    return SvdResult(u, sigma, np.ascontiguousarray(q))


_threads_from_env()
