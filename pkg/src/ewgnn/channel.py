"""BPSK modulation over AWGN, channel LLRs, and the reproducible RNG contract.

All randomness in the library flows through :class:`RngStream`, a counter-based
generator built on the SplitMix64 avalanche function.  Streams are derived from
a (seed, labels) pair, so every frame / epoch / purpose gets its own stream and
results never depend on scheduling, worker count, or any global RNG state.

Gaussians come from Box-Muller applied to 53-bit uniforms; a request for n
Gaussians always consumes exactly ceil(n/2) pairs of uniforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class NonpositiveVariance(ValueError):
    pass


_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0  # 2 ** -53


def _mix64(z):
    """SplitMix64 finalizer; accepts uint64 scalars or arrays, wraps mod 2^64."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U30)) * _M1
        z = (z ^ (z >> _U27)) * _M2
        return z ^ (z >> _U31)


@dataclass
class RngStream:
    """Counter-based random stream: output i is mix(state + (i+1)*gamma)."""

    state: np.uint64
    stream_id: int = 0
    _counter: int = field(default=0, repr=False)

    def uniform64(self, count):
        """Next `count` raw 64-bit outputs."""
        with np.errstate(over="ignore"):
            idx = np.arange(self._counter + 1, self._counter + count + 1, dtype=np.uint64)
            out = _mix64(self.state + idx * _GAMMA)
        self._counter += count
        return out

    def uniforms(self, count):
        """Uniform doubles in (0, 1]."""
        return ((self.uniform64(count) >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * _INV_2_53

    def gaussians(self, count):
        """Standard normals via Box-Muller; consumes exactly ceil(count/2) pairs."""
        pairs = (count + 1) // 2
        u1 = self.uniforms(pairs)
        u2 = self.uniforms(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        ang = (2.0 * math.pi) * u2
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(ang)
        z[1::2] = r * np.sin(ang)
        return z[:count]

    def randint_below(self, bound):
        """One integer uniform in [0, bound) (negligible modulo bias for small bound)."""
        return int(self.uniform64(1)[0] % np.uint64(bound))


def derive_stream(seed, labels):
    """Hierarchical stream derivation: each label avalanches into the state."""
    s = _mix64(np.uint64(seed & _MASK))
    sid = 0
    for lab in labels:
        with np.errstate(over="ignore"):
            s = _mix64(s ^ _mix64(np.uint64(lab & _MASK) + _GAMMA))
        sid = (sid * 1000003 + int(lab)) & _MASK
    return RngStream(state=s, stream_id=sid)


@dataclass(frozen=True)
class ChannelParams:
    """SNR gamma (dB) with its noise sigma, where gamma = 10*log10(1/sigma^2)."""

    snr_db: float
    sigma: float
    sigma2: float


def sigma_from_snr_db(snr_db):
    if not math.isfinite(snr_db):
        raise ValueError(f"SNR must be finite, got {snr_db}")
    sigma = 10.0 ** (-snr_db / 20.0)
    return ChannelParams(snr_db=snr_db, sigma=sigma, sigma2=sigma * sigma)


def transmit(c, params, rng):
    """BPSK-modulate bits c and add white Gaussian noise from `rng`."""
    c = np.asarray(c)
    x = 1.0 - 2.0 * c.astype(np.float64)
    z = rng.gaussians(c.shape[-1])
    return x + params.sigma * z


def llr_from_channel(y, sigma2):
    """Channel LLRs for BPSK over AWGN: 2*y/sigma^2."""
    if sigma2 <= 0:
        raise NonpositiveVariance(f"sigma2 must be positive, got {sigma2}")
    return 2.0 * np.asarray(y, dtype=np.float64) / sigma2
