"""Channel-access decision kernels: the two-stage threshold strategy and
the four baselines it is compared against.

All kernels are pure functions of the observed SNRs and the configured
thresholds; the engine owns randomness and time accounting.  Baseline
rewards are in rate * microseconds (divide by elapsed microseconds for a
throughput in bits/s/Hz).
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Sequence

from .channel import SnrDraw, rates, relay_snr
from .optimizer import StrategyConfig, TimingParams


class Decision(Enum):
    STOP_DIRECT = "stop_direct"
    STOP_RELAY = "stop_relay"
    PROBE_RSU = "probe_rsu"
    RECONTEND = "recontend"


class StrategyKind(Enum):
    RPCA = "rpca"
    DIRECT_V2V = "direct_v2v"
    DIRECT_RSU = "direct_rsu"
    OPTIMAL_STOP_PROBE = "optimal_stop_probe"
    MU_RSU = "mu_rsu"


def rpca_stage1(pair: int, snr: float, config: StrategyConfig) -> Decision:
    """First-stage decision after winning contention with direct SNR ``snr``.

    Benefit-set pairs use the probing window [recontend_th, stop_th); all
    other pairs reduce to a single stop-or-recontend cutoff at 2**rate - 1.
    """
    if pair in config.benefit:
        if snr >= config.stop_th[pair]:
            return Decision.STOP_DIRECT
        if snr < config.recontend_th[pair]:
            return Decision.RECONTEND
        return Decision.PROBE_RSU
    if snr >= config.snr_cutoff:
        return Decision.STOP_DIRECT
    return Decision.RECONTEND


def rpca_stage2(snr: float, snr_relay: float, config: StrategyConfig) -> Decision:
    """Second-stage decision after probing: stop when either SNR clears the
    cutoff, transmitting on whichever link has the higher SNR."""
    if max(snr, snr_relay) >= config.snr_cutoff:
        return Decision.STOP_RELAY if snr_relay > snr else Decision.STOP_DIRECT
    return Decision.RECONTEND


def baseline_direct_v2v(draw: SnrDraw, timing: TimingParams) -> tuple[float, float]:
    """Transmit on the direct link immediately after every contention win."""
    reward = timing.t_data * math.log2(1.0 + draw.direct)
    return reward, timing.t_data


def baseline_direct_rsu(draw: SnrDraw, timing: TimingParams) -> tuple[float, float]:
    """Probe the relay after every win and transmit at the better rate."""
    r_direct, r_relay = rates(draw)
    reward = timing.t_data_relay * max(r_direct, r_relay)
    return reward, timing.t_data


def baseline_optimal_stop_probe(draw: SnrDraw, timing: TimingParams,
                                rate_threshold: float) -> Decision:
    """Always probe, then stop iff the better rate clears the precomputed
    threshold (see optimizer.always_probe_rate)."""
    r_direct, r_relay = rates(draw)
    if max(r_direct, r_relay) >= rate_threshold:
        return Decision.STOP_RELAY if r_relay > r_direct else Decision.STOP_DIRECT
    return Decision.RECONTEND


def baseline_mu_rsu(draws: Sequence[SnrDraw], interference: Sequence[float],
                    timing: TimingParams) -> tuple[float, float]:
    """Concurrent multi-user relay access within one coherence window.

    Modeled variant: the contention winner plus any other source that drew
    a transmit decision all send through the relay simultaneously; each
    destination treats the other transmissions as noise, so pair j sees
    SINR_j = relay_snr_j / (1 + interference_j) and achieves half-rate
    log2(1 + SINR_j)/2.  Rewards add across transmitters; one coherence
    window of data time is spent regardless of how many transmit.
    """
    reward = 0.0
    for draw, noise in zip(draws, interference):
        sinr = relay_snr(draw) / (1.0 + noise)
        reward += timing.t_data_relay * 0.5 * math.log2(1.0 + sinr)
    return reward, timing.t_data
