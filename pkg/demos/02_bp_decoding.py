"""Belief propagation on noisy frames.

Transmits random codewords of the (63,51) BCH code over AWGN, decodes with
clipped BP, and shows the effect of the iteration count and early stopping.

Run:  python3 demos/02_bp_decoding.py
"""

import numpy as np

from ewgnn import (
    bch_construct,
    bp_decode,
    build_graph,
    derive_stream,
    encode,
    llr_from_channel,
    sigma_from_snr_db,
)

code = bch_construct(6, 5)
graph = build_graph(code.parity)
params = sigma_from_snr_db(5.0)
print(f"{code.name} at 5 dB (sigma = {params.sigma:.4f}), clip factor 1e-32")
print()

errors_by_T = {1: 0, 2: 0, 4: 0, 8: 0}
frames = 200
for f in range(frames):
    b = (derive_stream(2024, [f, 1]).uniform64(code.k) & np.uint64(1)).astype(np.int64)
    c = encode(code, b)
    y = (1.0 - 2.0 * c) + params.sigma * derive_stream(2024, [f, 3]).gaussians(code.n)
    s = llr_from_channel(y, params.sigma2)
    for T in errors_by_T:
        res = bp_decode(graph, s, T=T, alpha=1e-32)
        errors_by_T[T] += int((res.c_hat != c).sum())

print(f"bit errors over {frames} frames ({frames * code.n} bits):")
for T, errs in errors_by_T.items():
    print(f"  T={T}:  {errs:4d}  (ber={errs / (frames * code.n):.2e})")

print()
print("early stopping on an easy frame:")
c = encode(code, np.zeros(code.k, dtype=int))
s = 12.0 * (1.0 - 2.0 * c)
fixed = bp_decode(graph, s, T=8, alpha=1e-32, early_stop=False)
early = bp_decode(graph, s, T=8, alpha=1e-32, early_stop=True)
print(f"  fixed schedule: {fixed.iterations_run} iterations, syndrome_ok={fixed.syndrome_ok}")
print(f"  early stop:     {early.iterations_run} iteration(s), same decision:",
      np.array_equal(fixed.c_hat, early.c_hat))
