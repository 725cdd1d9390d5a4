"""Command-line front door: build codes, train, sweep BER, decode frames.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bench, trainer
from .codes import (
    Gf2Matrix,
    alist_read,
    alist_write,
    bch_construct,
    code_from_parity,
    ldpc_regular_construct,
)
from .gnn import EwgnnConfig, ewgnn_decode
from .msgpass import NbpWeights, bp_decode, nbp_decode, unit_nbp_weights
from .neural import init_fnn, model_load, model_save
from .tanner import build_graph


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser():
    p = _Parser(prog="ewgnn", description="Decoders for short binary block codes")
    sub = p.add_subparsers(dest="command", required=True)

    code = sub.add_parser("code", parents=[], description="Construct a code and write its alist")
    code_sub = code.add_subparsers(dest="code_kind", required=True)
    bch = code_sub.add_parser("bch")
    bch.add_argument("--m", type=int, required=True, help="field degree (n = 2^m - 1)")
    bch.add_argument("--delta", type=int, required=True, help="designed distance (odd)")
    bch.add_argument("--out", default="-", help="output alist path (default stdout)")
    ldpc = code_sub.add_parser("ldpc")
    ldpc.add_argument("--n", type=int, required=True)
    ldpc.add_argument("--wc", type=int, required=True, help="column weight")
    ldpc.add_argument("--wr", type=int, required=True, help="row weight")
    ldpc.add_argument("--seed", type=int, default=1)
    ldpc.add_argument("--out", default="-", help="output alist path (default stdout)")

    tr = sub.add_parser("train")
    tr.add_argument("--code", required=True, help="alist file of the parity-check matrix")
    tr.add_argument("--decoder", choices=["ewgnn", "nbp"], default="ewgnn")
    tr.add_argument("--t", type=int, default=8, help="decoding iterations")
    tr.add_argument("--batch", type=int, default=500)
    tr.add_argument("--snr-min", type=float, default=1.0)
    tr.add_argument("--snr-max", type=float, default=8.0)
    tr.add_argument("--epochs", type=int, default=2000)
    tr.add_argument("--eta", type=float, default=1e-3)
    tr.add_argument("--alpha", type=float, default=1e-7)
    tr.add_argument("--seed", type=int, default=1)
    tr.add_argument("--checkpoint-every", type=int, default=0)
    tr.add_argument("--out", required=True, help="trained model path")

    ev = sub.add_parser("eval")
    ev.add_argument("--code", required=True)
    ev.add_argument("--decoder", choices=["bp", "nbp", "ewgnn"], required=True)
    ev.add_argument("--model", default=None)
    ev.add_argument("--t", type=int, default=8)
    ev.add_argument("--snr", required=True, help="start:stop:step (inclusive) or comma list")
    ev.add_argument("--min-bit-errors", type=int, default=100)
    ev.add_argument("--max-frames", type=int, default=1_000_000)
    ev.add_argument("--alpha", type=float, default=1e-7)
    ev.add_argument("--seed", type=int, default=1)
    ev.add_argument("--workers", type=int, default=1)
    ev.add_argument("--early-stop", action="store_true")
    ev.add_argument("--csv", required=True)
    ev.add_argument("--svg", default=None)

    de = sub.add_parser("decode")
    de.add_argument("--code", required=True)
    de.add_argument("--decoder", choices=["bp", "nbp", "ewgnn"], required=True)
    de.add_argument("--model", default=None)
    de.add_argument("--llr", required=True, help="comma-separated channel LLRs")
    de.add_argument("--t", type=int, default=8)
    de.add_argument("--alpha", type=float, default=1e-7)
    return p


def parse_snr_sweep(text):
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"--snr expects start:stop:step, got {text!r}")
        start, stop, step = (float(x) for x in parts)
        if step <= 0:
            raise UsageError("--snr step must be positive")
        out = []
        x = start
        while x <= stop + 1e-9:
            out.append(round(x, 10))
            x += step
        return out
    return [float(x) for x in text.split(",") if x.strip()]


def _load_code(path):
    with open(path) as f:
        H = alist_read(f.read())
    return code_from_parity(H, name=path)


def _load_model(path, decoder):
    if decoder == "bp":
        if path:
            raise UsageError("--model is not accepted for the bp decoder")
        return None
    if not path:
        raise UsageError(f"--model is required for the {decoder} decoder")
    with open(path) as f:
        text = f.read()
    if decoder == "nbp":
        return trainer.load_nbp_weights(text)
    return model_load(text)


def _cmd_code(args):
    if args.code_kind == "bch":
        code = bch_construct(args.m, args.delta)
    else:
        code = ldpc_regular_construct(args.n, args.wc, args.wr, args.seed)
    text = alist_write(code.parity)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as f:
            f.write(text)
        print(f"wrote {code.name}: n={code.n} k={code.k} -> {args.out}")
    return 0


def _cmd_train(args):
    code = _load_code(args.code)
    cfg = trainer.TrainConfig(
        code=code,
        batch_size=args.batch,
        snr_range=(args.snr_min, args.snr_max),
        T=args.t,
        eta=args.eta,
        epochs=args.epochs,
        seed=args.seed,
        alpha=args.alpha,
        checkpoint_every=args.checkpoint_every,
        checkpoint_path=args.out if args.checkpoint_every else "",
    )
    if args.decoder == "ewgnn":
        init = init_fnn(args.seed, alpha=args.alpha)
    else:
        E = build_graph(code.parity).E
        init = unit_nbp_weights(E)
    report = trainer.train(cfg, init)
    if args.decoder == "ewgnn":
        text = model_save(report.final_model)
    else:
        text = trainer.save_nbp_weights(report.final_model, args.alpha)
    with open(args.out, "w") as f:
        f.write(text)
    print(
        f"trained {args.decoder} on {code.name}: epochs={args.epochs} "
        f"final_loss={report.losses[-1]:.6g} -> {args.out}"
    )
    return 0


def _cmd_eval(args):
    code = _load_code(args.code)
    model = _load_model(args.model, args.decoder)
    spec = bench.DecoderSpec(
        kind=args.decoder, model=model, alpha=args.alpha, early_stop=args.early_stop
    )
    snrs = parse_snr_sweep(args.snr)
    stop = bench.StopRule(min_bit_errors=args.min_bit_errors, max_frames=args.max_frames)
    table = bench.ber_run(code, spec, snrs, stop, args.t, args.seed, workers=args.workers)
    with open(args.csv, "w") as f:
        f.write(bench.write_csv(table))
    if args.svg:
        with open(args.svg, "w") as f:
            f.write(bench.plot_svg([table]))
    for p in table.points:
        print(f"snr={p.snr_db:g} frames={p.frames} ber={p.ber:.3e} fer={p.fer:.3e}")
    return 0


def _cmd_decode(args):
    code = _load_code(args.code)
    model = _load_model(args.model, args.decoder)
    try:
        s = np.array([float(x) for x in args.llr.split(",")])
    except ValueError:
        raise UsageError(f"--llr must be a comma-separated list of reals, got {args.llr!r}")
    if s.size != code.n:
        raise UsageError(f"--llr has {s.size} values, code length is {code.n}")
    graph = build_graph(code.parity)
    if args.decoder == "bp":
        res = bp_decode(graph, s, args.t, args.alpha)
    elif args.decoder == "nbp":
        res = nbp_decode(graph, s, args.t, model, args.alpha)
    else:
        res = ewgnn_decode(graph, s, model, EwgnnConfig(alpha=args.alpha, T=args.t))
    print("c_hat " + "".join(str(int(b)) for b in res.c_hat))
    print("posterior " + " ".join(f"{x:.6g}" for x in res.posterior))
    print(f"syndrome_ok {res.syndrome_ok}")
    return 0


_COMMANDS = {"code": _cmd_code, "train": _cmd_train, "eval": _cmd_eval, "decode": _cmd_decode}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help paths exit 0
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
