"""Timing harness: raw versus compressed correlation, and on-disk compression ratios.

The raw correlation costs O(N^2 M) and the compressed one O(N^2 K), so the
speedup should approach M/K and the raw time should grow linearly in M.
Benchmarks report ratios and slopes; absolute times depend on the machine.
"""

import json
import math
import os
import tempfile
import time

import numba
import numpy as np

from . import io
from .compress import compress_series
from .correlate import ttc_compressed, ttc_raw
from .encoder import build_offline, truncate
from .errors import ContractError
from .model import EncoderMode, EncodingMatrix, FrameSeries
from .synth import gen_oscillatory

REPORT_VERSION = 1
DEFAULT_GRID = ((256, 65536, 64), (256, 131072, 64))

# a doubling of M should scale the raw time by 2 and leave the compressed one alone
SCALING_TOLERANCE = 0.30

_GEN = {"period_frames": 40.0, "contrast": 0.5, "noise": 0.1}


def parse_grid(text):
    """Parse ``"256x65536x64,256x131072x64"`` into ``[(n, m, k), ...]``."""
    grid = []
    for item in text.split(","):
        parts = item.strip().lower().split("x")
        if len(parts) != 3:
            raise ContractError(f"grid entry {item!r} is not of the form NxMxK")
        try:
            n, m, k = (int(p) for p in parts)
        except ValueError:
            raise ContractError(f"grid entry {item!r} is not of the form NxMxK") from None
        if n < 2 or m < 1 or not 1 <= k <= m:
            raise ContractError(f"grid entry {item!r} needs N >= 2 and 1 <= K <= M")
        grid.append((n, m, k))
    if not grid:
        raise ContractError("empty benchmark grid")
    return grid


def best_time(fn, repeats):
    """Shortest wall time of ``repeats`` calls, in seconds."""
    best = math.inf
    for _ in range(max(1, int(repeats))):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def _encoder_for(frames, full, k):
    m = frames.n_pixels
    if full is not None and k <= full.k:
        return truncate(full, k)
    if k == m:
        # no compression at all: the identity basis
        return EncodingMatrix(np.eye(m), np.ones(m), EncoderMode.ONLINE_UNRELATED)
    raise ContractError(f"K={k} exceeds the rank of the offline encoder and is not M")


def _file_size(path):
    return os.path.getsize(path)


def run_bench(grid=DEFAULT_GRID, repeats=3, compressed_repeats=30, seed=0, workdir=None):
    """Time both correlation paths over ``grid`` and measure stored sizes.

    Parameters
    ----------
    grid : sequence of (n, m, k)
    repeats : int
        Best-of count for the raw correlation.
    compressed_repeats : int
        Best-of count for the compressed correlation, which is far quicker
        and so noisier.
    workdir : path, optional
        Where the frame, encoder and compressed files are written.  A
        temporary directory is used and removed when omitted.

    Returns
    -------
    dict
        The report; see :func:`format_summary` for a readable rendering.
    """
    grid = [tuple(int(v) for v in entry) for entry in grid]
    with tempfile.TemporaryDirectory() as tmp:
        root = os.fspath(workdir) if workdir is not None else tmp
        entries = _measure(grid, repeats, compressed_repeats, seed, root)
    return {
        "version": REPORT_VERSION,
        "threads": numba.get_num_threads(),
        "repeats": int(repeats),
        "compressed_repeats": int(compressed_repeats),
        "entries": entries,
        "scaling": scaling_checks(entries),
    }


def _measure(grid, repeats, compressed_repeats, seed, root):
    entries = []
    by_shape = {}
    for n, m, k in grid:
        by_shape.setdefault((n, m), []).append(k)
    for (n, m), ks in by_shape.items():
        frames = gen_oscillatory(n, m, seed=seed, **_GEN)
        frames_path = os.path.join(root, f"frames_{n}x{m}.xfs")
        io.write_frames(frames_path, frames)
        # compile on a tiny slice so the timing excludes the JIT
        ttc_raw(FrameSeries(np.ascontiguousarray(frames.intensities[:2, :8]), frames.frame_period))
        raw_seconds = best_time(lambda: ttc_raw(frames), repeats)
        full = build_offline(frames) if any(k < m for k in ks) else None
        for k in ks:
            enc = _encoder_for(frames, full, k)
            store = compress_series(frames, enc)
            enc_path = os.path.join(root, f"encoder_{n}x{m}x{k}.xenc")
            store_path = os.path.join(root, f"compressed_{n}x{m}x{k}.xcmp")
            io.write_encoder(enc_path, enc)
            io.write_compressed(store_path, store)
            ttc_compressed(store)  # warm caches before timing
            comp_seconds = best_time(lambda: ttc_compressed(store), compressed_repeats)
            frames_bytes = _file_size(frames_path)
            enc_bytes = _file_size(enc_path)
            store_bytes = _file_size(store_path)
            entries.append({
                "n": n,
                "m": m,
                "k": k,
                "raw_seconds": raw_seconds,
                "compressed_seconds": comp_seconds,
                "speedup": raw_seconds / comp_seconds,
                "speedup_bound": m / k,
                "frames_bytes": frames_bytes,
                "encoder_bytes": enc_bytes,
                "compressed_bytes": store_bytes,
                # offline: encoder and coefficients replace the frames
                "cr_offline": frames_bytes / (enc_bytes + store_bytes),
                "cr_offline_formula": n / k,
                # online: the encoder is shared, only coefficients are stored
                "cr_online": frames_bytes / store_bytes,
                "cr_online_formula": m / k,
            })
    return entries


def scaling_checks(entries):
    """Compare timings between grid entries that differ only by a doubling of M."""
    checks = []
    index = {(e["n"], e["m"], e["k"]): e for e in entries}
    for (n, m, k), lo in sorted(index.items()):
        hi = index.get((n, 2 * m, k))
        if hi is None:
            continue
        raw_ratio = hi["raw_seconds"] / lo["raw_seconds"]
        comp_ratio = hi["compressed_seconds"] / lo["compressed_seconds"]
        checks.append({
            "n": n,
            "k": k,
            "m_low": m,
            "m_high": 2 * m,
            "raw_ratio": raw_ratio,
            "raw_slope": math.log2(raw_ratio),
            "compressed_ratio": comp_ratio,
            "raw_linear": abs(raw_ratio - 2.0) <= 2.0 * SCALING_TOLERANCE,
            "compressed_flat": abs(comp_ratio - 1.0) <= SCALING_TOLERANCE,
        })
    return checks


def format_summary(report):
    lines = [f"threads: {report['threads']}, best of {report['repeats']} (raw) / "
             f"{report['compressed_repeats']} (compressed)"]
    lines.append(f"{'N':>6} {'M':>8} {'K':>6} {'raw s':>9} {'comp s':>10} {'speedup':>9} "
                 f"{'CR off':>8} {'N/K':>8} {'CR on':>8} {'M/K':>8}")
    for e in report["entries"]:
        lines.append(
            f"{e['n']:>6} {e['m']:>8} {e['k']:>6} {e['raw_seconds']:>9.4f} {e['compressed_seconds']:>10.6f} "
            f"{e['speedup']:>9.1f} {e['cr_offline']:>8.2f} {e['cr_offline_formula']:>8.2f} "
            f"{e['cr_online']:>8.2f} {e['cr_online_formula']:>8.2f}"
        )
    for c in report["scaling"]:
        lines.append(
            f"M {c['m_low']} -> {c['m_high']} (N={c['n']}, K={c['k']}): raw x{c['raw_ratio']:.2f} "
            f"(slope {c['raw_slope']:.2f}, linear: {c['raw_linear']}), "
            f"compressed x{c['compressed_ratio']:.2f} (flat: {c['compressed_flat']})"
        )
    return "\n".join(lines)


def write_report(path, report):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
