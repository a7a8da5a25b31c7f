"""Physics-facing metrics on g2 curves and correlation matrices."""

from dataclasses import asdict, dataclass

import numpy as np

from .encoder import suggest_k
from .errors import ContractError, FitConvergenceError, FitDegenerateError


@dataclass(frozen=True)
class KwwFit:
    """``g2(dt) = baseline + contrast * exp(-2 dt / relaxation_time)``."""

    baseline: float
    contrast: float
    relaxation_time: float
    residual_rms: float
    iterations: int = 0

    def __call__(self, lags):
        return kww_model(lags, self.baseline, self.contrast, self.relaxation_time)


@dataclass(frozen=True)
class VisibilityReport:
    peak_lag: float
    peak_value: float
    baseline_value: float
    visibility: float
    ttc_background_sigma: float
    detectable: bool

    def to_dict(self):
        d = asdict(self)
        d["detectable"] = bool(d["detectable"])
        return d


@dataclass(frozen=True)
class SpectrumReport:
    spectrum: np.ndarray
    suggested_k: int

    @property
    def degenerate(self):
        """True when no singular value stands out (flat spectrum)."""
        return self.suggested_k == 0


def kww_model(lags, baseline, contrast, relaxation_time):
    return baseline + contrast * np.exp(-2.0 * np.asarray(lags) / relaxation_time)


def _windowed(curve, window, min_points, what):
    lo, hi = window
    sel = curve.window(lo, hi)
    if np.count_nonzero(sel) < min_points:
        raise ContractError(f"{what} window [{lo}, {hi}] holds fewer than {min_points} points")
    return curve.lags[sel], curve.values[sel]


def _initial_guess(t, y):
    tail = max(1, int(round(0.1 * t.size)))
    b = float(np.mean(y[-tail:]))
    c = float(y[0] - b)
    if not c > 0:
        raise FitDegenerateError("curve does not decay over the window")
    below = np.flatnonzero((y - b) / c < np.exp(-2.0))
    t0 = float(t[below[0]]) if below.size else float(t[-1])
    if t0 <= 0:
        t0 = float(np.min(np.diff(t)))
    return np.array([b, c, t0])


def fit_kww(curve, lag_window=None, max_iter=200, step_tol=1e-10):
    """Least-squares fit of the exponential relaxation model over ``lag_window``.

    Levenberg-Marquardt damped Gauss-Newton started from a moment-based
    guess.  Stops when an update changes every parameter by less than
    ``step_tol`` relative, or raises :class:`FitConvergenceError` (carrying the
    best iterate) after ``max_iter`` iterations.
    """
    if lag_window is None:
        lag_window = (curve.lags[0], curve.lags[-1])
    t, y = _windowed(curve, lag_window, 5, "fit")
    if not np.all(np.isfinite(y)):
        raise ContractError("g2 values must be finite")
    p = _initial_guess(t, y)

    def residual(params):
        return kww_model(t, *params) - y

    r = residual(p)
    cost = r @ r
    lam = 1e-3
    for it in range(1, max_iter + 1):
        b, c, t0 = p
        e = np.exp(-2.0 * t / t0)
        jac = np.column_stack([np.ones_like(t), e, c * e * 2.0 * t / t0**2])
        jtj = jac.T @ jac
        grad = jac.T @ r
        while True:
            step = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj)), -grad)
            converged = np.all(np.abs(step) <= step_tol * np.abs(p))
            trial = p + step
            if trial[2] > 0:
                tr = residual(trial)
                if tr @ tr <= cost:
                    p, r, cost = trial, tr, tr @ tr
                    lam = max(lam / 10.0, 1e-12)
                    break
            if converged:
                break
            lam *= 10.0
            if lam > 1e16:
                raise FitConvergenceError("damping grew without reducing the residual", _fit(p, r, it))
        if converged:
            break
    else:
        raise FitConvergenceError(f"no convergence in {max_iter} iterations", _fit(p, r, max_iter))
    return _fit(p, r, it)


def _fit(p, r, iterations):
    return KwwFit(float(p[0]), float(p[1]), float(p[2]), float(np.sqrt(np.mean(r * r))), iterations)


def peak_visibility(curve, peak_window, baseline_window):
    """Peak height of g2 over its background.

    Returns ``(peak_value, baseline_value, visibility)`` with the peak the
    maximum over ``peak_window`` and the background the median over
    ``baseline_window``.
    """
    (plo, phi), (blo, bhi) = peak_window, baseline_window
    if not (phi < blo or bhi < plo):
        raise ContractError("peak and baseline windows overlap")
    _, peak = _windowed(curve, peak_window, 1, "peak")
    _, base = _windowed(curve, baseline_window, 1, "baseline")
    peak_value = float(np.max(peak))
    baseline_value = float(np.median(base))
    return peak_value, baseline_value, peak_value - baseline_value


def ttc_background(ttc, exclusion=0):
    """Standard deviation of the correlation away from the diagonal band.

    Entries with ``|t1 - t2| <= exclusion`` are left out.
    """
    g = np.asarray(ttc.values if hasattr(ttc, "values") else ttc)
    n = g.shape[0]
    exclusion = int(exclusion)
    if exclusion < 0:
        raise ContractError("exclusion must be >= 0")
    if n <= 2 * exclusion or exclusion >= n - 1:
        raise ContractError(f"exclusion band {exclusion} covers the whole {n} x {n} matrix")
    i, j = np.triu_indices(n, exclusion + 1)
    vals = np.concatenate([g[i, j], g[j, i]])
    return float(np.std(vals))


def detectability(visibility, background_sigma):
    """A feature counts as detected when it exceeds twice the background level."""
    if background_sigma < 0:
        raise ContractError("background sigma must be >= 0")
    return bool(visibility > 2.0 * background_sigma)


def visibility_report(curve, ttc, peak_window, baseline_window, exclusion=0):
    peak_value, baseline_value, vis = peak_visibility(curve, peak_window, baseline_window)
    sel = curve.window(*peak_window)
    peak_lag = float(curve.lags[sel][np.argmax(curve.values[sel])])
    sigma = ttc_background(ttc, exclusion)
    return VisibilityReport(peak_lag, peak_value, baseline_value, vis, sigma, detectability(vis, sigma))


def spectrum_report(enc, factor=2.0):
    s = np.array(enc.singular_values)
    return SpectrumReport(s, suggest_k(s, factor))
