"""Training the edge-weight network (short demonstration run).

Trains the 1249-parameter weight network on the (32,16) LDPC code for a few
hundred epochs and plots the loss trace as ASCII.  The full desk-scale run
(2000 epochs) lives in the acceptance suite; this is a quick look at the
mechanics: fresh batch per epoch, one Adam step, bit-reproducible end to end.

Run:  python3 demos/03_train_ewgnn.py  [epochs]
"""

import sys

from ewgnn import ldpc_regular_construct
from ewgnn.neural import init_fnn, model_save
from ewgnn.trainer import TrainConfig, train

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 150

code = ldpc_regular_construct(32, 3, 6, seed=7)
cfg = TrainConfig(
    code=code,
    batch_size=200,
    snr_range=(1.0, 8.0),
    T=8,
    epochs=epochs,
    seed=5,
    alpha=1e-7,
)
print(f"training EW-GNN on {code.name}: batch={cfg.batch_size}, T={cfg.T}, "
      f"SNR in {cfg.snr_range} dB, {epochs} epochs")
report = train(cfg, init_fnn(cfg.seed, alpha=cfg.alpha))
print(f"done in {report.wall_time:.1f} s")
print(f"loss: {report.losses[0]:.5f} -> {report.losses[-1]:.5f}")

# coarse ASCII loss trace (bucketed means)
buckets = 30
per = max(len(report.losses) // buckets, 1)
means = [sum(report.losses[i : i + per]) / len(report.losses[i : i + per])
         for i in range(0, len(report.losses), per)]
lo, hi = min(means), max(means)
width = 50
print()
for i, m in enumerate(means):
    bar = int((m - lo) / (hi - lo + 1e-12) * width)
    print(f"  epoch {i * per:4d}  {m:.5f} |{'#' * bar}")

out = "demo_model.ewgnn"
with open(out, "w") as f:
    f.write(model_save(report.final_model))
print(f"\nmodel written to {out} (text format, load with ewgnn.model_load)")
