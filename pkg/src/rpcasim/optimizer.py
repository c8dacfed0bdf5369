"""Threshold optimization for the two-stage probe-and-transmit strategy.

The central object is the probe value: the expected surplus (reward minus
price-weighted time) of probing the relay after winning contention with a
given direct-link SNR, under the min(uplink, downlink) relay combiner.  Its
closed form, the per-pair decision thresholds derived from it, and the
fixed point of the long-run-rate equation are all computed here, together
with a Monte Carlo cross-check and a distance-keyed lookup table for the
simulation engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import LN2, ChannelParams, SnrMeans, means_from_distances
from .contention import ContentionParams, mean_observation_duration
from .geometry import DistanceInfo
from .special import adaptive_quad, exp1_scaled, exp_weighted_tail

_EXP_FLOOR = 745.0  # exp(-x) underflows past this


class ConvergenceError(RuntimeError):
    """The fixed-point iteration did not converge within max_iters."""


class BracketError(RuntimeError):
    """A threshold root could not be bracketed (monotonicity violated)."""


@dataclass(frozen=True)
class TimingParams:
    """Data and probing durations in microseconds."""

    t_data: float
    t_probe: float

    def __post_init__(self):
        if not (self.t_data > self.t_probe > 0):
            raise ValueError("need t_data > t_probe > 0")

    @property
    def t_data_relay(self) -> float:
        return self.t_data - self.t_probe

    @classmethod
    def from_contention(cls, t_data: float, contention: ContentionParams) -> "TimingParams":
        return cls(t_data=t_data, t_probe=contention.t_rts + contention.t_cts)


@dataclass(frozen=True)
class PairStats:
    """Channel statistics a pair needs for its probe-value curve.

    ``relay_decay`` is the exponential rate of min(uplink, downlink), i.e.
    1/mean_uplink + 1/mean_downlink; ``direct_mean`` is the mean V2V SNR.
    """

    direct_mean: float
    relay_decay: float

    def __post_init__(self):
        if not (self.direct_mean > 0 and self.relay_decay > 0):
            raise ValueError("statistics must be positive")

    @classmethod
    def from_means(cls, means: SnrMeans, pair: int) -> "PairStats":
        return cls(
            direct_mean=means.direct[pair],
            relay_decay=1.0 / means.uplink[pair] + 1.0 / means.downlink[pair],
        )


def stats_from_means(means: SnrMeans) -> tuple[PairStats, ...]:
    return tuple(PairStats.from_means(means, i) for i in range(len(means.direct)))


@dataclass(frozen=True)
class SolverParams:
    epsilon: float = 1e-4
    step: float | None = None  # default: midpoint of the admissible interval
    max_iters: int = 20000
    quad_limit: int = 4096
    mc_samples: int = 100_000

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1 or self.quad_limit < 15 or self.mc_samples < 1:
            raise ValueError("iteration/sample budgets must be positive")


@dataclass(frozen=True)
class StrategyConfig:
    """Thresholds of the two-stage strategy at a given long-run rate.

    Stage 1 for a pair in the benefit set: stop on the direct link at or
    above ``stop_th``, re-contend below ``recontend_th``, probe in between.
    Pairs outside the benefit set use the single SNR cutoff 2**rate - 1;
    their threshold entries are NaN.
    """

    rate: float
    recontend_th: tuple[float, ...]
    stop_th: tuple[float, ...]
    benefit: frozenset[int]

    @property
    def snr_cutoff(self) -> float:
        return 2.0 ** self.rate - 1.0


def _probe_value_raw(relay_decay, t_data, t_probe, snr, price):
    """Vectorized closed form of the probe value (min-combiner relay model).

    Derivation: probing reveals the relay boost V ~ Exp(relay_decay); the
    best of {stop direct, stop relayed, re-contend} after probing yields
    surplus t_data_relay * max(direct_rate, relay_rate, price) - price*t_data.
    Integrating the relay-rate tail against the exponential law gives the
    exp1 term below; the relay SNR must clear
    cut = max(4**price - 1, snr**2 + 2*snr) to beat both alternatives.
    """
    c = np.asarray(relay_decay, dtype=float)
    g = np.asarray(snr, dtype=float)
    lam = np.asarray(price, dtype=float)
    td1 = t_data - t_probe
    rd = np.log2(1.0 + g)
    with np.errstate(over="ignore"):
        cut = np.maximum(np.exp2(2.0 * lam) - 1.0, g * (g + 2.0))
    t = c * (cut - g)
    t_cl = np.minimum(t, _EXP_FLOOR + 1.0)
    cut_f = np.where(np.isfinite(cut), cut, 0.0)
    relay_tail = np.where(
        t < _EXP_FLOOR,
        np.exp(-t_cl) * (np.log1p(cut_f) + exp1_scaled(c * (cut_f + 1.0))),
        0.0,
    )
    direct_win = np.where(rd > lam, rd - lam, 0.0) * (
        -np.expm1(-np.minimum(c * g * (g + 1.0), _EXP_FLOOR))
    )
    relay_win = -np.expm1(-t_cl)
    return td1 * (relay_tail / (2.0 * LN2) + direct_win + lam * relay_win) - lam * t_data


def probe_value(stats: PairStats, timing: TimingParams, snr, price):
    """Expected surplus of probing the relay at direct-link SNR ``snr``.

    Accepts scalars or arrays for ``snr`` and ``price``; never falls below
    -price * t_probe (the value of walking away after the probe).
    """
    out = _probe_value_raw(stats.relay_decay, timing.t_data, timing.t_probe, snr, price)
    if np.ndim(out) == 0:
        return float(out)
    return out


def probe_value_mc(
    stats: PairStats,
    relay_means: tuple[float, float],
    timing: TimingParams,
    snr: float,
    price: float,
    *,
    min_approx: bool = True,
    samples: int = 100_000,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo estimate of the probe value, straight from its definition.

    Draws the two relay-link SNRs, combines them exactly (amplify-and-forward)
    or via the min approximation, and averages
    max(t_data_relay * max(R_direct, R_relay) - price*t_data, -price*t_probe).
    """
    up = rng.exponential(relay_means[0], samples)
    down = rng.exponential(relay_means[1], samples)
    if min_approx:
        boost = np.minimum(up, down)
    else:
        boost = up * down / (up + down + 1.0)
    r_relay = 0.5 * np.log2(1.0 + snr + boost)
    r_direct = math.log2(1.0 + snr)
    surplus = timing.t_data_relay * np.maximum(r_direct, r_relay) - price * timing.t_data
    return float(np.mean(np.maximum(surplus, -price * timing.t_probe)))


def _bisect_many(fn, lo, hi, *, rtol=1e-9, max_iter=200):
    """Vectorized bisection for sign changes of fn (negative at lo, positive at hi)."""
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        neg = fn(mid) < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
        if np.all(hi - lo <= rtol * np.maximum(np.abs(lo), 1e-12)):
            break
    return 0.5 * (lo + hi)


def _thresholds_arrays(decay: np.ndarray, timing: TimingParams, price: float):
    """(recontend, stop, benefit) arrays for all pairs at the given price.

    recontend solves probe_value = 0; stop solves
    probe_value = t_data * (log2(1+snr) - price).  Entries for pairs
    outside the benefit set are NaN.
    """
    td, tp = timing.t_data, timing.t_probe
    base = 2.0 ** price - 1.0

    def w(x):
        return _probe_value_raw(decay, td, tp, x, price)

    w_base = w(np.full_like(decay, base))
    benefit = w_base > 0.0

    recontend = np.full_like(decay, np.nan)
    stop = np.full_like(decay, np.nan)
    if not benefit.any():
        return recontend, stop, benefit

    dec_b = decay[benefit]

    def wb(x):
        return _probe_value_raw(dec_b, td, tp, x, price)

    # lower threshold: either an interior zero crossing on [0, base] or 0
    # when probing is already worthwhile at zero SNR
    w0 = wb(np.zeros_like(dec_b))
    lo = np.zeros_like(dec_b)
    hi = np.full_like(dec_b, base if base > 0 else 1.0)
    zeta = np.where(w0 >= 0.0, 0.0, _bisect_many(wb, lo, hi))

    # upper threshold: zero of the (increasing) gap between stopping directly
    # and probing; bracket by geometric growth
    def gap(x):
        return td * (np.log2(1.0 + x) - price) - wb(x)

    g_lo = np.full_like(dec_b, base)
    g_hi = np.maximum(g_lo * 2.0 + 2.0, 4.0)
    for _ in range(200):
        bad = gap(g_hi) <= 0.0
        if not bad.any():
            break
        if np.any(g_hi > 1e15):
            raise BracketError("stop threshold could not be bracketed")
        g_hi = np.where(bad, g_hi * 4.0, g_hi)
    else:
        raise BracketError("stop threshold could not be bracketed")
    eta = _bisect_many(gap, g_lo, g_hi)

    recontend[benefit] = zeta
    stop[benefit] = eta
    return recontend, stop, benefit


def find_thresholds(stats: PairStats, timing: TimingParams, price: float):
    """Per-pair thresholds (recontend, stop), or None when the pair cannot
    benefit from probing at this price."""
    decay = np.array([stats.relay_decay])
    rec, stop, benefit = _thresholds_arrays(decay, timing, price)
    if not benefit[0]:
        return None
    return float(rec[0]), float(stop[0])


def benefit_set(stats: Sequence[PairStats], timing: TimingParams, price: float) -> frozenset[int]:
    """Pairs whose probe value is positive at the single-stage cutoff SNR."""
    decay = np.array([s.relay_decay for s in stats])
    base = 2.0 ** price - 1.0
    w = _probe_value_raw(decay, timing.t_data, timing.t_probe, base, price)
    return frozenset(int(i) for i in np.nonzero(w > 0.0)[0])


def _config_at(stats: Sequence[PairStats], timing: TimingParams, price: float) -> StrategyConfig:
    decay = np.array([s.relay_decay for s in stats])
    rec, stop, benefit = _thresholds_arrays(decay, timing, price)
    return StrategyConfig(
        rate=price,
        recontend_th=tuple(float(v) for v in rec),
        stop_th=tuple(float(v) for v in stop),
        benefit=frozenset(int(i) for i in np.nonzero(benefit)[0]),
    )


def bellman_residual(
    cfg: StrategyConfig,
    stats: Sequence[PairStats],
    timing: TimingParams,
    contention: ContentionParams,
    *,
    quad_tol: float = 1e-10,
    quad_limit: int = 4096,
) -> float:
    """Mean per-contention surplus at cfg.rate minus the price of the
    contention time; zero exactly at the optimal long-run rate.

    The expectation over the winner's direct SNR splits into the probing
    window (probe value against the exponential density) and the
    stop-directly tail; pairs outside the benefit set only have the tail,
    starting at the single-stage cutoff.
    """
    lam = cfg.rate
    td, tp = timing.t_data, timing.t_probe
    tau_obs = mean_observation_duration(contention)
    acc = 0.0
    for i, st in enumerate(stats):
        s2 = st.direct_mean
        if i in cfg.benefit:
            z, e = cfg.recontend_th[i], cfg.stop_th[i]
            mid = 0.0
            if e > z:
                mid = adaptive_quad(
                    lambda x, c=st.relay_decay, s=s2: (
                        _probe_value_raw(c, td, tp, x, lam) / td
                        * np.exp(-np.minimum(x / s, _EXP_FLOOR)) / s
                    ),
                    z, e, tol=quad_tol, limit=quad_limit,
                )
            tail_from = e
        else:
            mid = 0.0
            tail_from = 2.0 ** lam - 1.0
        tail = exp_weighted_tail(
            lambda x: np.log2(1.0 + x) - lam, tail_from, s2,
            tol=quad_tol, limit=quad_limit,
        )
        acc += td * (mid + tail)
    return acc / len(stats) - lam * tau_obs


def _resolve_step(solver: SolverParams, tau_obs: float, t_data: float) -> float:
    upper = (2.0 - solver.epsilon) / (tau_obs + t_data)
    if solver.step is not None:
        if not (solver.epsilon <= solver.step <= upper):
            raise ValueError(
                f"step must lie in [{solver.epsilon:g}, {upper:g}] for this timing"
            )
        return solver.step
    if solver.epsilon <= upper:
        return 0.5 * (solver.epsilon + upper)
    # admissible interval is empty (extreme contention overhead); fall back
    # to a step that still contracts the iteration
    return 1.0 / (tau_obs + t_data)


def solve_strategy(
    stats: Sequence[PairStats],
    timing: TimingParams,
    contention: ContentionParams,
    solver: SolverParams = SolverParams(),
    *,
    start: float = 0.0,
) -> StrategyConfig:
    """Fixed-point iteration for the optimal long-run rate.

    Starting from ``start`` (zero by default), repeatedly recomputes the
    thresholds at the current rate and moves the rate along the residual
    with a step inside the admissible stability interval, until the
    residual magnitude drops below epsilon.
    """
    tau_obs = mean_observation_duration(contention)
    alpha = _resolve_step(solver, tau_obs, timing.t_data)
    lam = float(start)
    for _ in range(solver.max_iters):
        cfg = _config_at(stats, timing, lam)
        delta = bellman_residual(cfg, stats, timing, contention,
                                 quad_limit=solver.quad_limit)
        if abs(delta) < solver.epsilon:
            return cfg
        lam = max(lam + alpha * delta, 0.0)
    raise ConvergenceError(
        f"no convergence after {solver.max_iters} iterations (last residual {delta:.3e})"
    )


def bisect_rate(
    stats: Sequence[PairStats],
    timing: TimingParams,
    contention: ContentionParams,
    solver: SolverParams = SolverParams(),
) -> float:
    """Independent bisection on the residual; cross-check for solve_strategy."""

    def residual(lam: float) -> float:
        cfg = _config_at(stats, timing, lam)
        return bellman_residual(cfg, stats, timing, contention,
                                quad_limit=solver.quad_limit)

    lo, hi = 0.0, 1.0
    for _ in range(80):
        if residual(hi) < 0.0:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise ConvergenceError("residual never became negative")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) < 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _best_rate_tail(stats: Sequence[PairStats], r: np.ndarray) -> np.ndarray:
    """P(max(direct rate, relay rate) > r) averaged over pairs, min-combiner."""
    out = np.zeros_like(r)
    with np.errstate(over="ignore"):
        a = np.exp2(r) - 1.0  # direct-SNR level for rate r
        b = np.exp2(2.0 * r) - 1.0  # relay-SNR level for rate r
    for st in stats:
        s, c = st.direct_mean, st.relay_decay
        k = c - 1.0 / s
        ka = k * a
        # P(both below r) = (1 - e^{-a/s}) - e^{-cb} (e^{ka} - 1)/(s k)
        small = np.abs(ka) < 1e-4
        with np.errstate(over="ignore", invalid="ignore"):
            direct_part = np.exp(np.minimum(ka - c * b, 0.0)) - np.exp(-c * b)
            term = np.where(small,
                            np.exp(-np.minimum(c * b, _EXP_FLOOR)) * (a / s) * (1.0 + 0.5 * ka),
                            direct_part / (s * k))
        below = -np.expm1(-np.minimum(a / s, _EXP_FLOOR)) - term
        out += np.clip(1.0 - below, 0.0, 1.0)
    return out / len(stats)


def always_probe_rate(
    stats: Sequence[PairStats],
    timing: TimingParams,
    contention: ContentionParams,
) -> float:
    """Optimal threshold rate for the always-probe baseline.

    That strategy probes after every contention win and stops when the best
    of the two rates clears its own rate threshold; the threshold solves
    E[(t_data_relay * best_rate - rate * t_data)^+] = rate * (tau_obs + t_probe).
    """
    tau_obs = mean_observation_duration(contention)
    td1 = timing.t_data_relay

    def gain(lam: float) -> float:
        r0 = lam * timing.t_data / td1
        r_hi = r0 + 1.0
        for st in stats:
            r_hi = max(r_hi,
                       math.log2(1.0 + 46.0 * st.direct_mean),
                       0.5 * math.log2(1.0 + 46.0 / st.relay_decay) + 1.0)
        val = adaptive_quad(lambda r: _best_rate_tail(stats, r), r0, r_hi + 2.0,
                            tol=1e-10)
        return td1 * val

    def f(lam: float) -> float:
        return gain(lam) - lam * (tau_obs + timing.t_probe)

    lo, hi = 0.0, 1.0
    for _ in range(80):
        if f(hi) < 0.0:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise ConvergenceError("always-probe rate equation has no bracket")
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


TABLE_FORMAT_VERSION = "rpcasim-table-v1"


@dataclass
class LookupTable:
    """Distance-keyed cache of solved strategies.

    Distances are snapped to a 1 m grid (never below 1 m) and the strategy
    is solved from the snapped values, so the cache is a pure function of
    its key.  Rates from earlier solves warm-start later ones.
    """

    channel: ChannelParams
    timing: TimingParams
    contention: ContentionParams
    solver: SolverParams = field(default_factory=SolverParams)
    _configs: dict = field(default_factory=dict)
    _probe_rates: dict = field(default_factory=dict)
    _last_rate: float = 0.0

    @staticmethod
    def quantize(dist: DistanceInfo) -> tuple:
        snap = lambda d: max(1.0, float(round(d)))
        v2v = tuple(snap(d) for d in dist.v2v)
        v2r = tuple((snap(sr), snap(rd)) for sr, rd in dist.v2r)
        return (v2v, v2r)

    def _stats_for(self, key: tuple) -> tuple[PairStats, ...]:
        v2v, v2r = key
        dist = DistanceInfo(v2v=v2v, v2r=v2r)
        return stats_from_means(means_from_distances(dist, self.channel))

    def config_for(self, dist: DistanceInfo) -> StrategyConfig:
        key = self.quantize(dist)
        cfg = self._configs.get(key)
        if cfg is None:
            cfg = solve_strategy(self._stats_for(key), self.timing, self.contention,
                                 self.solver, start=self._last_rate)
            self._configs[key] = cfg
            self._last_rate = cfg.rate
        return cfg

    def probe_rate_for(self, dist: DistanceInfo) -> float:
        key = self.quantize(dist)
        rate = self._probe_rates.get(key)
        if rate is None:
            rate = always_probe_rate(self._stats_for(key), self.timing, self.contention)
            self._probe_rates[key] = rate
        return rate

    def save(self, path) -> None:
        lines = [TABLE_FORMAT_VERSION]
        for key, cfg in sorted(self._configs.items()):
            v2v, v2r = key
            flat = list(v2v) + [d for pair in v2r for d in pair]
            dists = ",".join(f"{d:g}" for d in flat)
            rec = ",".join(f"{v!r}" for v in cfg.recontend_th)
            stp = ",".join(f"{v!r}" for v in cfg.stop_th)
            ben = ",".join(str(i) for i in sorted(cfg.benefit))
            lines.append(f"{dists}|{cfg.rate!r}|{rec}|{stp}|{ben}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def load(self, path) -> int:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines or lines[0] != TABLE_FORMAT_VERSION:
            raise ValueError(f"unrecognized table format (expected {TABLE_FORMAT_VERSION})")
        n = 0
        for ln in lines[1:]:
            dists, rate, rec, stp, ben = ln.split("|")
            flat = [float(v) for v in dists.split(",")]
            k = len(flat) // 3
            key = (tuple(flat[:k]),
                   tuple((flat[k + 2 * i], flat[k + 2 * i + 1]) for i in range(k)))
            cfg = StrategyConfig(
                rate=float(rate),
                recontend_th=tuple(float(v) for v in rec.split(",")),
                stop_th=tuple(float(v) for v in stp.split(",")),
                benefit=frozenset(int(v) for v in ben.split(",") if v),
            )
            self._configs[key] = cfg
            n += 1
        return n
