"""Monte-Carlo BER comparison: BP vs a (quickly) trained EW-GNN.

Trains for a few hundred epochs, then sweeps SNR with the deterministic
Monte-Carlo harness and writes CSV + SVG artifacts.  Both decoders see the
identical noise realizations (streams are keyed by frame index only), so the
comparison is paired.

Run:  python3 demos/04_ber_sweep.py  [epochs]
"""

import sys

from ewgnn import DecoderSpec, StopRule, ber_run, ldpc_regular_construct, plot_svg, write_csv
from ewgnn.neural import init_fnn
from ewgnn.trainer import TrainConfig, train

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 300

code = ldpc_regular_construct(32, 3, 6, seed=7)
print(f"training EW-GNN on {code.name} for {epochs} epochs ...")
cfg = TrainConfig(code=code, batch_size=200, snr_range=(1.0, 8.0), T=8,
                  epochs=epochs, seed=5, alpha=1e-7)
model = train(cfg, init_fnn(5, alpha=1e-7)).final_model

snrs = [2.0, 3.0, 4.0, 5.0]
stop = StopRule(min_bit_errors=100, max_frames=50_000)
print(f"sweeping {snrs} dB, stop at 100 bit errors or 50k frames per point")

tables = []
for spec in [DecoderSpec("bp", alpha=1e-7), DecoderSpec("ewgnn", model=model, alpha=1e-7)]:
    table = ber_run(code, spec, snrs, stop, T=8, seed=99)
    tables.append(table)
    print(f"\n{spec.kind}:")
    for p in table.points:
        print(f"  snr={p.snr_db:3.1f}  frames={p.frames:6d}  ber={p.ber:.3e}  fer={p.fer:.3e}")

with open("demo_ber_bp.csv", "w") as f:
    f.write(write_csv(tables[0]))
with open("demo_ber_ewgnn.csv", "w") as f:
    f.write(write_csv(tables[1]))
with open("demo_ber.svg", "w") as f:
    f.write(plot_svg(tables))
print("\nwrote demo_ber_bp.csv, demo_ber_ewgnn.csv, demo_ber.svg")
