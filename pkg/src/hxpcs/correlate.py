"""Two-time correlation on raw or compressed frames, and g2 extraction.

For row-normalized frames ``Xn`` the correlation is ``G = Xn Xn^T``.  With
compressed rows ``Y = Xn V_K`` the same product ``Y Y^T`` equals
``Xn V_K V_K^T Xn^T``, which is exactly ``G`` when ``V_K`` spans the rows
of ``Xn`` and its best rank-K approximation otherwise.
"""

import threading

import numpy as np

from .errors import ContractError, ShapeError
from .linalg import gram, matmul, row_normalize
from .model import G2Curve, TTCMatrix


def ttc_raw(frames):
    """Correlation of the raw frames."""
    x = frames.as_float() if hasattr(frames, "as_float") else np.asarray(frames, dtype=np.float64)
    if x.shape[0] < 2:
        raise ContractError("need at least 2 frames")
    xn, _ = row_normalize(x)
    return TTCMatrix(gram(xn), lossless=True)


def ttc_compressed(store):
    """Correlation computed directly from compressed rows, with no decompression."""
    y = store.coefficients
    if y.shape[0] < 2:
        raise ContractError("need at least 2 compressed frames")
    return TTCMatrix(gram(y), lossless=store.lossless)


def _new_column(y, row):
    # same kernel and operand order as gram(); entries are bit-identical
    return matmul(y, np.ascontiguousarray(row, dtype=np.float64)[:, None])[:, 0]


def ttc_extend(ttc, store, new_row):
    """Correlation of ``store``'s rows plus ``new_row``, grown from ``ttc``.

    ``ttc`` must be the correlation of ``store``'s current rows.  Costs
    O(N K); the result equals recomputing from scratch bit for bit.
    """
    y = store.coefficients
    row = np.asarray(new_row, dtype=np.float64)
    n = y.shape[0]
    if row.shape != (store.k,):
        raise ShapeError(f"new row must have {store.k} coefficients, got {row.shape}")
    g = np.asarray(ttc.values if hasattr(ttc, "values") else ttc)
    if g.shape != (n, n):
        raise ShapeError(f"TTC is {g.shape} but the store holds {n} rows")
    col = _new_column(np.vstack([y, row[None, :]]), row)
    out = np.empty((n + 1, n + 1))
    out[:n, :n] = g
    out[:n, n] = col[:n]
    out[n, :n] = col[:n]
    out[n, n] = col[n]
    return TTCMatrix(out, lossless=store.lossless)


class StreamingTTC:
    """Correlation that grows by one frame per :meth:`push`.

    Holds its own capacity-doubling buffer, so each update costs O(N K)
    without copying the whole matrix.  Updates are serialized; readers get
    consistent snapshots from :meth:`snapshot`.
    """

    def __init__(self, store):
        self.store = store
        self._lock = threading.Lock()
        n = len(store)
        self._buf = np.empty((max(16, n), max(16, n)))
        self._n = 0
        if n:
            self._buf[:n, :n] = gram(store.coefficients)
            self._n = n

    def __len__(self):
        return self._n

    def push(self, coefficients, norm):
        """Append a compressed frame to the store and extend the correlation."""
        with self._lock:
            self.store.append(coefficients, norm)
            y = self.store.coefficients
            n = self._n
            col = _new_column(y, y[n])
            buf = self._buf
            if n == buf.shape[0]:
                grown = np.empty((2 * n, 2 * n))
                grown[:n, :n] = buf[:n, :n]
                buf = grown
            buf[:n + 1, n] = col
            buf[n, :n] = col[:n]
            self._buf = buf
            self._n = n + 1

    def snapshot(self):
        n, buf = self._n, self._buf
        return TTCMatrix(buf[:n, :n].copy(), lossless=self.store.lossless)

    def g2(self, frame_period=1.0):
        return g2_from_ttc(self.snapshot(), frame_period)


def g2_from_ttc(ttc, frame_period=1.0):
    """Average each constant-lag diagonal: ``g2[d] = mean_t G[t, t + d]``."""
    g = np.asarray(ttc.values if hasattr(ttc, "values") else ttc)
    n = g.shape[0]
    if n < 2:
        raise ContractError("need at least 2 frames")
    values = np.array([np.diagonal(g, d).mean() for d in range(n)])
    return G2Curve(np.arange(n) * float(frame_period), values, np.arange(n, 0, -1))


def ttc_rel_error(ttc, approx):
    """Relative Frobenius error ``||G - G~|| / ||G||``."""
    g = np.asarray(ttc.values if hasattr(ttc, "values") else ttc)
    h = np.asarray(approx.values if hasattr(approx, "values") else approx)
    if g.shape != h.shape:
        raise ShapeError(f"TTC shapes differ: {g.shape} vs {h.shape}")
    return float(np.linalg.norm(g - h) / np.linalg.norm(g))
