# Lossy offline compression
# Keeping only the leading K singular vectors shrinks the store by about
# N/K and approximates the correlation.  The spectrum suggests a K.

import numpy as np

import hxpcs as hx
from hxpcs import analysis, synth

PERIOD = 40
frames = synth.gen_oscillatory(256, 4096, PERIOD, 0.5, 0.1, seed=5)
full = hx.build_offline(frames)

report = analysis.spectrum_report(full)
print("leading singular values:", np.round(report.spectrum[:6], 3))
print("suggested K:", report.suggested_k)

raw = hx.ttc_raw(frames)
peak, base = (0.8 * PERIOD, 1.2 * PERIOD), (0.35 * PERIOD, 0.65 * PERIOD)
*_, lossless = analysis.peak_visibility(hx.g2_from_ttc(raw), peak, base)
print(f"lossless visibility: {lossless:.4f}")

for k in (1, 2, 4, 16, 64, full.k):
    comp = hx.ttc_compressed(hx.compress_series(frames, hx.truncate(full, k)))
    *_, vis = analysis.peak_visibility(hx.g2_from_ttc(comp), peak, base)
    print(f"K={k:>4}  rel. error {hx.ttc_rel_error(raw, comp):.2e}  visibility {vis:.4f}")
