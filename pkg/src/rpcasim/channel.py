"""Log-distance path loss with Rayleigh block fading, and the link rates.

All SNRs are linear; dB/dBm inputs are converted once at the configuration
boundary.  Every mean SNR carries the reference gain at 1 m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import DistanceInfo, NetworkGeometry, distances

LN2 = math.log(2.0)


class DegenerateGeometryError(ValueError):
    """Raised when a link distance is zero and path loss is undefined."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ChannelParams:
    p_source: float  # mW
    p_rsu: float  # mW
    noise: float  # mW
    alpha_v2v: float = 3.0
    alpha_v2r: float = 2.5
    ref_gain: float = 1e-3  # linear path gain at 1 m

    def __post_init__(self):
        if min(self.p_source, self.p_rsu, self.noise) <= 0:
            raise ValueError("powers must be positive")
        if min(self.alpha_v2v, self.alpha_v2r) <= 0:
            raise ValueError("path-loss exponents must be positive")
        if not (0.0 < self.ref_gain <= 1.0):
            raise ValueError("ref_gain must lie in (0, 1]")

    @classmethod
    def from_db(cls, p_source_dbm: float, p_rsu_dbm: float, noise_dbm: float,
                ref_gain_db: float, alpha_v2v: float = 3.0,
                alpha_v2r: float = 2.5) -> "ChannelParams":
        return cls(
            p_source=db_to_linear(p_source_dbm),
            p_rsu=db_to_linear(p_rsu_dbm),
            noise=db_to_linear(noise_dbm),
            alpha_v2v=alpha_v2v,
            alpha_v2r=alpha_v2r,
            ref_gain=db_to_linear(ref_gain_db),
        )


@dataclass(frozen=True)
class SnrMeans:
    """Per-pair mean SNRs: direct V2V, source->RSU uplink, RSU->destination downlink."""

    direct: tuple[float, ...]
    uplink: tuple[float, ...]
    downlink: tuple[float, ...]

    def __post_init__(self):
        for seq in (self.direct, self.uplink, self.downlink):
            if any(not (v > 0 and math.isfinite(v)) for v in seq):
                raise ValueError("mean SNRs must be positive and finite")


@dataclass(frozen=True)
class SnrDraw:
    """One block-fading realization for a winning pair."""

    direct: float
    uplink: float
    downlink: float


def _mean(power: float, dist: float, alpha: float, params: ChannelParams) -> float:
    if dist <= 0.0:
        raise DegenerateGeometryError("zero link distance: path loss undefined")
    return params.ref_gain * power * dist ** (-alpha) / params.noise


def means_from_distances(dist: DistanceInfo, params: ChannelParams) -> SnrMeans:
    direct = tuple(_mean(params.p_source, d, params.alpha_v2v, params) for d in dist.v2v)
    uplink = tuple(_mean(params.p_source, sr, params.alpha_v2r, params)
                   for sr, _ in dist.v2r)
    downlink = tuple(_mean(params.p_rsu, rd, params.alpha_v2r, params)
                     for _, rd in dist.v2r)
    return SnrMeans(direct=direct, uplink=uplink, downlink=downlink)


def snr_means(geometry: NetworkGeometry, params: ChannelParams) -> SnrMeans:
    return means_from_distances(distances(geometry), params)


def sample_snrs(means: SnrMeans, pair: int, rng: np.random.Generator) -> SnrDraw:
    """Draw the three link SNRs for one pair (independent exponentials)."""
    return SnrDraw(
        direct=rng.exponential(means.direct[pair]),
        uplink=rng.exponential(means.uplink[pair]),
        downlink=rng.exponential(means.downlink[pair]),
    )


def relay_snr(draw: SnrDraw) -> float:
    """End-to-end SNR with amplify-and-forward relaying on top of the direct link."""
    g1, g2 = draw.uplink, draw.downlink
    if g1 == 0.0 or g2 == 0.0:
        return draw.direct
    return draw.direct + g1 * g2 / (g1 + g2 + 1.0)


def relay_snr_min_approx(draw: SnrDraw) -> float:
    """Upper bound on relay_snr using min(uplink, downlink) as the relay term."""
    return draw.direct + min(draw.uplink, draw.downlink)


def rates(draw: SnrDraw) -> tuple[float, float]:
    """(direct, relay-aided) achievable rates in bits/s/Hz.

    The relay path spends half its symbols forwarding, hence the 1/2 factor.
    """
    direct = math.log2(1.0 + draw.direct)
    relay = 0.5 * math.log2(1.0 + relay_snr(draw))
    return direct, relay
