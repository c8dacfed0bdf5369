"""Two-timescale simulation engine.

A small-scale phase is one contention-to-transmission cycle; a large-scale
phase is M of them over frozen vehicle positions, after which locations
are refreshed, the strategy is reconfigured from the new distances, and
mobility advances by the realized phase duration.  Time is accounted in
integer nanoseconds so the per-phase decomposition
(elapsed = contention time + re-contended probes * t_probe + t_data)
holds exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import ChannelParams, SnrDraw, means_from_distances, rates, relay_snr
from .contention import ContentionError, ContentionParams, contend
from .geometry import (DistanceInfo, MobilityParams, NetworkGeometry, Position,
                       RandomWaypoint, distances, euclid, initial_layout)
from .optimizer import (LookupTable, SolverParams, StrategyConfig, TimingParams)
from .strategies import Decision, StrategyKind, rpca_stage1, rpca_stage2


class PhaseAbortError(RuntimeError):
    """A phase exceeded the per-phase contention guard."""


def _ns(us: float) -> int:
    return round(us * 1000.0)


@dataclass(frozen=True)
class PhaseSchedule:
    m_per_large: int = 300
    n_large: int = 100
    t_data: float = 15000.0  # us

    def __post_init__(self):
        if self.m_per_large < 1 or self.n_large < 1:
            raise ValueError("phase counts must be >= 1")


@dataclass(slots=True)
class PhaseRecord:
    """Outcome of one small-scale phase."""

    reward: float  # rate * us
    elapsed_ns: int
    contentions: int
    probes: int
    decision: Decision
    path: list[int]  # alternating contention markers (1) and probe flags


@dataclass
class RunSummary:
    strategy: StrategyKind
    seed: int
    axis_name: str
    axis_value: float
    throughput: float  # bits/s at the configured bandwidth
    total_reward: float  # rate * us
    total_elapsed_ns: int
    n_phases: int
    contentions_mean: float
    probes_mean: float
    records: list[PhaseRecord] | None = None


@dataclass(frozen=True)
class EngineParams:
    """Everything one replication needs besides the strategy kind and seed."""

    channel: ChannelParams
    contention: ContentionParams
    timing: TimingParams
    mobility: MobilityParams
    schedule: PhaseSchedule
    solver: SolverParams = field(default_factory=SolverParams)
    bandwidth_hz: float = 1.0
    mobility_on: bool = True
    rsu: Position | None = None
    layout: NetworkGeometry | None = None
    max_contentions: int = 100_000


@dataclass
class PhaseContext:
    """Per-large-phase immutable state consumed by the small-phase loop."""

    kind: StrategyKind
    k: int
    direct_mean: np.ndarray
    uplink_mean: np.ndarray
    downlink_mean: np.ndarray
    contention: ContentionParams
    timing: TimingParams
    idle_ns: int
    rts_ns: int
    cts_ns: int
    probe_ns: int
    data_ns: int
    max_contentions: int
    config: StrategyConfig | None = None
    probe_stop_rate: float | None = None
    cross_mean: np.ndarray | None = None  # [i, j]: interferer i at destination j


def reconfigure(
    dist: DistanceInfo,
    channel: ChannelParams,
    timing: TimingParams,
    contention: ContentionParams,
    solver: SolverParams,
    table: LookupTable | None = None,
) -> StrategyConfig:
    """Strategy update from a distance snapshot, via the lookup table."""
    if table is None:
        table = LookupTable(channel, timing, contention, solver)
    return table.config_for(dist)


def _cross_means(geometry: NetworkGeometry, channel: ChannelParams) -> np.ndarray:
    """Mean SNR of interferer source i received at destination j (i != j)."""
    k = geometry.k
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            d = max(euclid(geometry.pairs[i][0], geometry.pairs[j][1]), 1.0)
            out[i, j] = (channel.ref_gain * channel.p_source
                         * d ** (-channel.alpha_v2v) / channel.noise)
    return out


def prepare_context(
    kind: StrategyKind,
    geometry: NetworkGeometry,
    params: EngineParams,
    table: LookupTable,
) -> PhaseContext:
    dist = distances(geometry)
    means = means_from_distances(dist, params.channel)
    ctx = PhaseContext(
        kind=kind,
        k=geometry.k,
        direct_mean=np.array(means.direct),
        uplink_mean=np.array(means.uplink),
        downlink_mean=np.array(means.downlink),
        contention=params.contention,
        timing=params.timing,
        idle_ns=_ns(params.contention.slot_idle),
        rts_ns=_ns(params.contention.t_rts),
        cts_ns=_ns(params.contention.t_cts),
        probe_ns=_ns(params.timing.t_probe),
        data_ns=_ns(params.timing.t_data),
        max_contentions=params.max_contentions,
    )
    if kind is StrategyKind.RPCA:
        ctx.config = table.config_for(dist)
    elif kind is StrategyKind.OPTIMAL_STOP_PROBE:
        ctx.probe_stop_rate = table.probe_rate_for(dist)
    elif kind is StrategyKind.MU_RSU:
        ctx.cross_mean = _cross_means(geometry, params.channel)
    return ctx


def run_small_phase(ctx: PhaseContext, rng: np.random.Generator) -> PhaseRecord:
    """One contention-to-transmission cycle under the configured strategy."""
    timing = ctx.timing
    t_data, t_data_relay = timing.t_data, timing.t_data_relay
    contentions = 0
    probes = 0
    recontended_probes = 0
    contention_ns = 0
    path: list[int] = []
    while True:
        out = contend(ctx.contention, rng)
        contentions += 1
        if contentions > ctx.max_contentions:
            raise PhaseAbortError(
                f"phase exceeded {ctx.max_contentions} contentions"
            )
        contention_ns += (out.idle_slots * ctx.idle_ns
                          + out.collision_slots * ctx.rts_ns
                          + ctx.rts_ns + ctx.cts_ns)
        path.append(1)
        i = out.winner
        snr = rng.exponential(ctx.direct_mean[i])

        if ctx.kind is StrategyKind.DIRECT_V2V:
            reward = t_data * math.log2(1.0 + snr)
            decision = Decision.STOP_DIRECT
            break

        if ctx.kind is StrategyKind.DIRECT_RSU:
            draw = SnrDraw(snr, rng.exponential(ctx.uplink_mean[i]),
                           rng.exponential(ctx.downlink_mean[i]))
            probes += 1
            path.append(1)
            r_direct, r_relay = rates(draw)
            reward = t_data_relay * max(r_direct, r_relay)
            decision = (Decision.STOP_RELAY if r_relay > r_direct
                        else Decision.STOP_DIRECT)
            break

        if ctx.kind is StrategyKind.OPTIMAL_STOP_PROBE:
            draw = SnrDraw(snr, rng.exponential(ctx.uplink_mean[i]),
                           rng.exponential(ctx.downlink_mean[i]))
            probes += 1
            path.append(1)
            r_direct, r_relay = rates(draw)
            if max(r_direct, r_relay) >= ctx.probe_stop_rate:
                reward = t_data_relay * max(r_direct, r_relay)
                decision = (Decision.STOP_RELAY if r_relay > r_direct
                            else Decision.STOP_DIRECT)
                break
            recontended_probes += 1
            continue

        if ctx.kind is StrategyKind.MU_RSU:
            active = [i] + [j for j in range(ctx.k) if j != i
                            and rng.random() < ctx.contention.p0]
            draws = [SnrDraw(snr if j == i else rng.exponential(ctx.direct_mean[j]),
                             rng.exponential(ctx.uplink_mean[j]),
                             rng.exponential(ctx.downlink_mean[j]))
                     for j in active]
            reward = 0.0
            for a, j in enumerate(active):
                noise = sum(rng.exponential(ctx.cross_mean[l, j])
                            for l in active if l != j)
                sinr = relay_snr(draws[a]) / (1.0 + noise)
                reward += t_data_relay * 0.5 * math.log2(1.0 + sinr)
            probes += 1
            path.append(1)
            decision = Decision.STOP_RELAY
            break

        # RPCA
        first = rpca_stage1(i, snr, ctx.config)
        if first is Decision.STOP_DIRECT:
            reward = t_data * math.log2(1.0 + snr)
            decision = first
            break
        if first is Decision.RECONTEND:
            path.append(0)
            continue
        probes += 1
        path.append(1)
        draw = SnrDraw(snr, rng.exponential(ctx.uplink_mean[i]),
                       rng.exponential(ctx.downlink_mean[i]))
        second = rpca_stage2(snr, relay_snr(draw), ctx.config)
        if second is Decision.RECONTEND:
            recontended_probes += 1
            continue
        r_direct, r_relay = rates(draw)
        reward = t_data_relay * max(r_direct, r_relay)
        decision = second
        break

    elapsed_ns = contention_ns + recontended_probes * ctx.probe_ns + ctx.data_ns
    return PhaseRecord(reward=reward, elapsed_ns=elapsed_ns,
                       contentions=contentions, probes=probes,
                       decision=decision, path=path)


def run_large_phase(
    kind: StrategyKind,
    geometry: NetworkGeometry,
    params: EngineParams,
    table: LookupTable,
    mobility: RandomWaypoint | None,
    rng: np.random.Generator,
) -> tuple[list[PhaseRecord], NetworkGeometry]:
    """Reconfigure from current distances, run M small phases, move vehicles."""
    ctx = prepare_context(kind, geometry, params, table)
    records = []
    duration_ns = 0
    for _ in range(params.schedule.m_per_large):
        rec = run_small_phase(ctx, rng)
        duration_ns += rec.elapsed_ns
        records.append(rec)
    if mobility is not None:
        geometry = mobility.step(duration_ns * 1e-9)
    return records, geometry


def run_replication(
    kind: StrategyKind,
    params: EngineParams,
    seed: int,
    *,
    axis_name: str = "",
    axis_value: float = 0.0,
    keep_records: bool = True,
) -> RunSummary:
    """One full simulation: n_large large phases for one strategy and seed.

    The layout and mobility streams depend only on the seed, so paired-seed
    runs of different strategies start from identical geometry.
    """
    root = np.random.SeedSequence([int(seed), 2024])
    layout_ss, mobility_ss, mac_ss = root.spawn(3)
    layout_rng = np.random.default_rng(layout_ss)
    if params.layout is not None:
        geometry = params.layout
    else:
        geometry = initial_layout(params.contention.k_pairs, params.mobility,
                                  layout_rng, rsu=params.rsu)
    mobility = None
    if params.mobility_on:
        mobility = RandomWaypoint(geometry, params.mobility,
                                  np.random.default_rng(mobility_ss))
    rng = np.random.default_rng(mac_ss)
    table = LookupTable(params.channel, params.timing, params.contention,
                        params.solver)
    all_records: list[PhaseRecord] = []
    total_reward = 0.0
    total_ns = 0
    total_contentions = 0
    total_probes = 0
    n_phases = 0
    for _ in range(params.schedule.n_large):
        records, geometry = run_large_phase(kind, geometry, params, table,
                                            mobility, rng)
        for rec in records:
            total_reward += rec.reward
            total_ns += rec.elapsed_ns
            total_contentions += rec.contentions
            total_probes += rec.probes
        n_phases += len(records)
        if keep_records:
            all_records.extend(records)
    elapsed_us = total_ns / 1000.0
    throughput = params.bandwidth_hz * total_reward / elapsed_us
    return RunSummary(
        strategy=kind,
        seed=seed,
        axis_name=axis_name,
        axis_value=axis_value,
        throughput=throughput,
        total_reward=total_reward,
        total_elapsed_ns=total_ns,
        n_phases=n_phases,
        contentions_mean=total_contentions / n_phases,
        probes_mean=total_probes / n_phases,
        records=all_records if keep_records else None,
    )


@dataclass(frozen=True)
class ExperimentCell:
    """One (strategy, sweep value, seed) run of an experiment."""

    kind: StrategyKind
    params: EngineParams
    seed: int
    axis_name: str
    axis_value: float


def _run_cell(args) -> RunSummary:
    cell, keep_records = args
    return run_replication(cell.kind, cell.params, cell.seed,
                           axis_name=cell.axis_name, axis_value=cell.axis_value,
                           keep_records=keep_records)


def run_experiment(cells: Sequence[ExperimentCell], *, keep_records: bool = False,
                   workers: int = 1) -> list[RunSummary]:
    """Execute all cells, optionally on a process pool; order is preserved,
    and each cell is deterministic in (params, seed)."""
    jobs = [(cell, keep_records) for cell in cells]
    if workers > 1:
        import multiprocessing

        with multiprocessing.Pool(workers) as pool:
            return pool.map(_run_cell, jobs)
    return [_run_cell(job) for job in jobs]
