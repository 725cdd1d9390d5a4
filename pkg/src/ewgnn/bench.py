"""Monte-Carlo BER/FER measurement with deterministic, worker-count-invariant
parallelism, plus CSV and SVG emission.

Frames are simulated in fixed-size chunks consumed strictly in order; each
frame draws its noise from the stream (seed, [snr_index, frame]).  Counts are
therefore identical for any worker count, and raising the frame budget never
changes already-collected outcomes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import derive_stream, llr_from_channel, sigma_from_snr_db
from .codes import encode
from .gnn import EwgnnConfig, ewgnn_decode_batch
from .msgpass import bp_decode_batch
from .tanner import build_graph


class EmptyTable(ValueError):
    pass


CHUNK_FRAMES = 256

_LBL_MESSAGE = 1
_LBL_NOISE = 3


@dataclass(frozen=True)
class StopRule:
    min_bit_errors: int = 100
    max_frames: int = 1_000_000

    def __post_init__(self):
        if self.min_bit_errors < 1 and self.max_frames < 1:
            raise ValueError("need min_bit_errors >= 1 or max_frames >= 1")


@dataclass
class BerPoint:
    snr_db: float
    frames: int
    bit_errors: int
    frame_errors: int

    @property
    def ber(self):
        return self.bit_errors / (self.frames * self._n) if self.frames else 0.0

    @property
    def fer(self):
        return self.frame_errors / self.frames if self.frames else 0.0

    _n: int = 1


@dataclass
class BerTable:
    code_name: str
    decoder_name: str
    T: int
    points: list = field(default_factory=list)
    seed: int = 0


@dataclass
class DecoderSpec:
    """What to run per frame: bp | nbp | ewgnn | uncoded (raw hard decision)."""

    kind: str
    model: object = None
    alpha: float = 1e-7
    early_stop: bool = False

    @property
    def name(self):
        return self.kind


_GRAPH_CACHE = {}


def _graph_for(code):
    key = code.parity.a.tobytes() + bytes([code.parity.rows % 251])
    g = _GRAPH_CACHE.get(key)
    if g is None:
        g = build_graph(code.parity)
        _GRAPH_CACHE[key] = g
    return g


def _simulate_chunk(args):
    """Decode frames [start, start+count) of one SNR point; returns counts."""
    code, decoder, snr_db, snr_idx, start, count, T, seed = args
    params = sigma_from_snr_db(snr_db)
    n = code.n
    C = np.empty((count, n), dtype=np.uint8)
    Y = np.empty((count, n))
    for f in range(count):
        frame = start + f
        if decoder.kind == "uncoded":
            bit_rng = derive_stream(seed, [snr_idx, frame, _LBL_MESSAGE])
            c = (bit_rng.uniform64(n) & np.uint64(1)).astype(np.uint8)
        else:
            msg_rng = derive_stream(seed, [snr_idx, frame, _LBL_MESSAGE])
            b = (msg_rng.uniform64(code.k) & np.uint64(1)).astype(np.int64)
            c = encode(code, b).astype(np.uint8)
        noise_rng = derive_stream(seed, [snr_idx, frame, _LBL_NOISE])
        C[f] = c
        Y[f] = (1.0 - 2.0 * c) + params.sigma * noise_rng.gaussians(n)
    S = llr_from_channel(Y, params.sigma2)
    if decoder.kind == "uncoded":
        c_hat = (S <= 0.0).astype(np.uint8)
    elif decoder.kind == "bp":
        graph = _graph_for(code)
        _, c_hat, _, _ = bp_decode_batch(graph, S, T, decoder.alpha, early_stop=decoder.early_stop)
    elif decoder.kind == "nbp":
        graph = _graph_for(code)
        _, c_hat, _, _ = bp_decode_batch(
            graph, S, T, decoder.alpha, weights=decoder.model, early_stop=decoder.early_stop
        )
    elif decoder.kind == "ewgnn":
        graph = _graph_for(code)
        cfg = EwgnnConfig(alpha=decoder.alpha, T=T)
        _, c_hat, _ = ewgnn_decode_batch(graph, S, decoder.model, cfg)
    else:
        raise ValueError(f"unknown decoder kind {decoder.kind!r}")
    diff = c_hat != C
    return int(diff.sum()), int(diff.any(axis=1).sum()), count


def ber_run(code, decoder, snr_list, stop, T, seed, workers=1):
    """Measure BER/FER per SNR point until the stop rule is met.

    Chunks are submitted ahead of time but consumed strictly in chunk order,
    so the collected counts are independent of `workers`.
    """
    table = BerTable(code_name=code.name, decoder_name=decoder.name, T=T, seed=seed)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for snr_idx, snr_db in enumerate(snr_list):
            bit_err = 0
            frame_err = 0
            frames = 0
            pending = []
            next_start = 0

            def submit():
                nonlocal next_start
                if next_start >= stop.max_frames:
                    return
                count = min(CHUNK_FRAMES, stop.max_frames - next_start)
                args = (code, decoder, snr_db, snr_idx, next_start, count, T, seed)
                if pool is None:
                    pending.append(args)
                else:
                    pending.append(pool.submit(_simulate_chunk, args))
                next_start += count

            for _ in range(max(workers, 1) + 1):
                submit()
            while pending:
                item = pending.pop(0)
                be, fe, cnt = _simulate_chunk(item) if pool is None else item.result()
                bit_err += be
                frame_err += fe
                frames += cnt
                if bit_err >= stop.min_bit_errors or frames >= stop.max_frames:
                    for fut in pending:
                        if pool is not None:
                            fut.cancel()
                    pending.clear()
                    break
                submit()
            point = BerPoint(snr_db=snr_db, frames=frames, bit_errors=bit_err, frame_errors=frame_err)
            point._n = code.n
            table.points.append(point)
    finally:
        if pool is not None:
            pool.shutdown(wait=False, cancel_futures=True)
    return table


def write_csv(table):
    lines = ["snr_db,frames,bit_errors,frame_errors,ber,fer"]
    for p in table.points:
        lines.append(
            f"{p.snr_db:.17g},{p.frames},{p.bit_errors},{p.frame_errors},"
            f"{p.ber:.17g},{p.fer:.17g}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# SVG rendering (log-scale BER vs SNR)

_BER_FLOOR = 1e-8
_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def plot_svg(tables, width=640, height=480):
    """Render BER curves for one or more tables as standalone SVG 1.1 text."""
    for t in tables:
        if not t.points:
            raise EmptyTable(f"table {t.decoder_name!r} has no points")
    margin = 60
    xs = [p.snr_db for t in tables for p in t.points]
    ys = [max(p.ber, _BER_FLOOR) for t in tables for p in t.points]
    x0, x1 = min(xs), max(xs)
    y0 = math.floor(math.log10(min(ys)))
    y1 = math.ceil(math.log10(max(ys))) if max(ys) < 1 else 0
    if y1 <= y0:
        y1 = y0 + 1
    if x1 <= x0:
        x1 = x0 + 1.0

    def px(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def py(ber):
        ly = math.log10(max(ber, _BER_FLOOR))
        return height - margin - (ly - y0) / (y1 - y0) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for d in range(y0, y1 + 1):
        y = py(10.0 ** d)
        parts.append(
            f'<line x1="{margin}" y1="{y:.2f}" x2="{width - margin}" y2="{y:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{margin - 8}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-size="11">1e{d}</text>'
        )
    step = max(round((x1 - x0) / 8 * 2) / 2, 0.5)
    x = x0
    while x <= x1 + 1e-9:
        parts.append(
            f'<text x="{px(x):.2f}" y="{height - margin + 18}" text-anchor="middle" '
            f'font-size="11">{x:g}</text>'
        )
        x += step
    parts.append(
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" '
        f'font-size="13">SNR (dB)</text>'
    )
    parts.append(
        f'<text x="16" y="{height / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {height / 2})">BER</text>'
    )
    for i, t in enumerate(tables):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px(p.snr_db):.2f},{py(p.ber):.2f}" for p in t.points)
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        label = f"{t.decoder_name} {t.code_name} T={t.T}"
        ly = margin + 16 * i
        parts.append(
            f'<line x1="{width - margin - 150}" y1="{ly}" x2="{width - margin - 120}" '
            f'y2="{ly}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{width - margin - 112}" y="{ly + 4}" font-size="11">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
