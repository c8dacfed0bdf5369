"""Slotted RTS/CTS channel contention.

Per slot every source independently transmits an RTS with probability p0:
no transmitter costs an idle slot, two or more cost a collision slot (one
wasted RTS time), exactly one wins and pays the RTS+CTS handshake.  The
sampler below draws the slot tally from the process distribution directly
(geometric number of failed slots, binomial idle/collision split, uniform
winner), which is exact and stays O(1) even when the per-slot success
probability is minuscule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ContentionError(RuntimeError):
    """Contention cannot terminate (or exceeded the configured slot guard)."""


@dataclass(frozen=True)
class ContentionParams:
    k_pairs: int
    p0: float
    slot_idle: float = 50.0  # us
    t_rts: float = 100.0  # us
    t_cts: float = 100.0  # us
    max_slots: int = 1_000_000

    def __post_init__(self):
        if self.k_pairs < 1:
            raise ValueError("k_pairs must be >= 1")
        if not (0.0 < self.p0 <= 1.0):
            raise ValueError("p0 must lie in (0, 1]")
        if min(self.slot_idle, self.t_rts, self.t_cts) <= 0:
            raise ValueError("slot durations must be positive")
        if self.max_slots < 1:
            raise ValueError("max_slots must be >= 1")

    @property
    def p_idle(self) -> float:
        return (1.0 - self.p0) ** self.k_pairs

    @property
    def p_success(self) -> float:
        return self.k_pairs * self.p0 * (1.0 - self.p0) ** (self.k_pairs - 1)

    @property
    def p_collision(self) -> float:
        return max(1.0 - self.p_idle - self.p_success, 0.0)


@dataclass(frozen=True)
class ContentionOutcome:
    winner: int
    elapsed: float  # us
    idle_slots: int
    collision_slots: int

    @property
    def slots(self) -> tuple[int, int, int]:
        """(idle, collision, success) slot counts; success is always the last slot."""
        return (self.idle_slots, self.collision_slots, 1)


def contend(params: ContentionParams, rng: np.random.Generator) -> ContentionOutcome:
    """Run one contention round until a single source wins.

    Raises ContentionError when success is impossible (p0 = 1 with two or
    more contenders) or when the drawn round exceeds ``max_slots`` slots.
    """
    q = params.p_success
    if q <= 0.0:
        raise ContentionError(
            "per-slot success probability is zero; contention never terminates"
        )
    n_fail = int(rng.geometric(q)) - 1
    if n_fail + 1 > params.max_slots:
        raise ContentionError(
            f"contention exceeded the {params.max_slots}-slot guard"
        )
    if n_fail > 0:
        idle = int(rng.binomial(n_fail, params.p_idle / (params.p_idle + params.p_collision)))
    else:
        idle = 0
    collisions = n_fail - idle
    winner = int(rng.integers(params.k_pairs))
    elapsed = (idle * params.slot_idle + collisions * params.t_rts
               + params.t_rts + params.t_cts)
    return ContentionOutcome(winner=winner, elapsed=elapsed,
                             idle_slots=idle, collision_slots=collisions)


def mean_observation_duration(params: ContentionParams) -> float:
    """Expected time (us) from the start of contention to a winning handshake."""
    q = params.p_success
    if q <= 0.0:
        raise ContentionError("mean observation duration undefined: success probability is zero")
    return (params.t_rts + params.t_cts
            + (params.p_idle * params.slot_idle + params.p_collision * params.t_rts) / q)
