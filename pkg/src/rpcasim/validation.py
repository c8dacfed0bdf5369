"""Quick self-checks runnable from the command line.

Each check pits an implementation against an independent route (Monte
Carlo, a textbook identity, or a second numeric method) and reports a
single pass/fail line.  These are lighter-weight versions of the full
test-suite oracles, intended as a smoke test of an installed build.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from .channel import LN2
from .contention import ContentionParams, contend, mean_observation_duration
from .optimizer import (PairStats, SolverParams, TimingParams, bellman_residual,
                        bisect_rate, probe_value, probe_value_mc, _config_at,
                        solve_strategy)
from .special import adaptive_quad, exp_integral_e1


def check_exp_integral() -> tuple[str, bool, str]:
    xs = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 80.0]
    worst = max(abs(exp_integral_e1(x) - float(special.exp1(x))) for x in xs)
    return ("exponential integral vs scipy", worst < 1e-13, f"max abs err {worst:.2e}")


def check_quadrature() -> tuple[str, bool, str]:
    val = adaptive_quad(lambda x: np.log1p(x) * np.exp(-x), 0.0, 50.0)
    ref, _ = integrate.quad(lambda x: math.log1p(x) * math.exp(-x), 0.0, 50.0,
                            epsabs=1e-12)
    err = abs(val - ref)
    return ("adaptive quadrature vs QUADPACK", err < 1e-9, f"abs err {err:.2e}")


def check_contention_mean(seed: int = 7) -> tuple[str, bool, str]:
    params = ContentionParams(k_pairs=8, p0=0.3)
    rng = np.random.default_rng(seed)
    n = 200_000
    total = sum(contend(params, rng).elapsed for _ in range(n))
    rel = abs(total / n - mean_observation_duration(params)) / mean_observation_duration(params)
    return ("contention mean vs closed form", rel < 0.02, f"rel err {rel:.3%}")


def check_probe_value(seed: int = 11) -> tuple[str, bool, str]:
    timing = TimingParams(t_data=15000.0, t_probe=200.0)
    up, down = 80.0, 120.0
    stats = PairStats(direct_mean=10.0, relay_decay=1.0 / up + 1.0 / down)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for snr in (0.5, 2.0, 8.0):
        for price in (0.5, 1.5, 3.0):
            ref = probe_value_mc(stats, (up, down), timing, snr, price,
                                 samples=400_000, rng=rng)
            got = probe_value(stats, timing, snr, price)
            tol = max(0.01 * abs(ref), 1e-3 * price * timing.t_data)
            worst = max(worst, abs(got - ref) / tol)
    return ("closed-form probe value vs Monte Carlo", worst < 1.0,
            f"worst err at {worst:.2f}x tolerance")


def check_rate_solver() -> tuple[str, bool, str]:
    timing = TimingParams(t_data=15000.0, t_probe=200.0)
    contention = ContentionParams(k_pairs=4, p0=0.3)
    stats = [PairStats(direct_mean=m, relay_decay=c)
             for m, c in ((2.0, 0.02), (15.0, 0.05), (0.5, 0.01), (40.0, 0.2))]
    solver = SolverParams()
    cfg = solve_strategy(stats, timing, contention, solver)
    resid = bellman_residual(cfg, stats, timing, contention)
    lam_bis = bisect_rate(stats, timing, contention, solver)
    ok = abs(resid) <= solver.epsilon and abs(cfg.rate - lam_bis) <= 2 * solver.epsilon
    return ("rate fixed point vs bisection", ok,
            f"residual {resid:.2e}, gap {abs(cfg.rate - lam_bis):.2e}")


ALL_CHECKS = [
    check_exp_integral,
    check_quadrature,
    check_contention_mean,
    check_probe_value,
    check_rate_solver,
]


def run_all(verbose: bool = True) -> bool:
    ok = True
    for check in ALL_CHECKS:
        name, passed, detail = check()
        ok = ok and passed
        if verbose:
            print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return ok
