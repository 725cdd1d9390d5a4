"""Decoders for short binary linear block codes.

Conventional belief propagation, the neural-BP baseline with 2E tied weights,
and an edge-weighted GNN decoder whose per-edge weights come from a small
shared feed-forward network, plus code construction, end-to-end training,
and a reproducible Monte-Carlo BER harness.
"""

from .bench import BerPoint, BerTable, DecoderSpec, StopRule, ber_run, plot_svg, write_csv
from .channel import (
    ChannelParams,
    RngStream,
    derive_stream,
    llr_from_channel,
    sigma_from_snr_db,
    transmit,
)
from .codes import (
    Code,
    Gf2Matrix,
    Gf2Poly,
    alist_read,
    alist_write,
    bch_construct,
    code_from_parity,
    encode,
    generator_from_parity,
    ldpc_regular_construct,
    row_reduce_gf2,
    syndrome,
)
from .gnn import (
    ConstantWeight,
    DecoderState,
    EwgnnConfig,
    build_features,
    decode_iteration,
    ewgnn_decode,
    ewgnn_decode_batch,
    multiloss,
    weight_eval,
)
from .msgpass import (
    DecodeResult,
    NbpWeights,
    bp_decode,
    bp_decode_batch,
    check_update_clipped,
    check_update_exact,
    hard_decision,
    nbp_decode,
    unit_nbp_weights,
)
from .neural import AdamState, FnnModel, adam_step, fnn_forward, init_fnn, model_load, model_save
from .tanner import TannerGraph, build_graph
from .trainer import TrainConfig, TrainReport, sample_batch, train

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
