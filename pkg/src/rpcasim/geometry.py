"""Node geometry on a two-road layout plus random-waypoint mobility.

The road network is two perpendicular axis-aligned segments crossing at the
middle of a rectangular area.  All vehicles live on the segments; the
roadside unit sits at a fixed point (the intersection unless overridden).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("position coordinates must be finite")


@dataclass(frozen=True)
class NetworkGeometry:
    """K source/destination pairs plus the roadside unit."""

    pairs: tuple[tuple[Position, Position], ...]
    rsu: Position

    def __post_init__(self):
        if len(self.pairs) < 1:
            raise ValueError("need at least one communication pair")

    @property
    def k(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class DistanceInfo:
    """Euclidean link lengths: per-pair V2V plus (source->RSU, RSU->destination)."""

    v2v: tuple[float, ...]
    v2r: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class MobilityParams:
    area_x: float = 1000.0  # metres
    area_y: float = 1000.0
    speed_min: float = 20.0  # km/h
    speed_max: float = 80.0

    def __post_init__(self):
        if self.area_x <= 0 or self.area_y <= 0:
            raise ValueError("area side lengths must be positive")
        if not (0.0 < self.speed_min <= self.speed_max):
            raise ValueError("need 0 < speed_min <= speed_max")

    @property
    def cross(self) -> tuple[float, float]:
        return (0.5 * self.area_x, 0.5 * self.area_y)


def euclid(a: Position, b: Position) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def distances(geometry: NetworkGeometry) -> DistanceInfo:
    """Distance snapshot used for strategy reconfiguration."""
    v2v = tuple(euclid(s, d) for s, d in geometry.pairs)
    v2r = tuple(
        (euclid(s, geometry.rsu), euclid(geometry.rsu, d)) for s, d in geometry.pairs
    )
    return DistanceInfo(v2v=v2v, v2r=v2r)


class _Roads:
    """Coordinate bookkeeping for the two crossing segments.

    A road point is (road, t): road 0 is the horizontal segment with t = x,
    road 1 the vertical segment with t = y.
    """

    def __init__(self, params: MobilityParams):
        self.cx, self.cy = params.cross
        self.len0 = params.area_x
        self.len1 = params.area_y

    def to_xy(self, road: int, t: float) -> Position:
        if road == 0:
            return Position(t, self.cy)
        return Position(self.cx, t)

    def cross_t(self, road: int) -> float:
        return self.cx if road == 0 else self.cy

    def sample(self, rng: np.random.Generator) -> tuple[int, float]:
        u = rng.uniform(0.0, self.len0 + self.len1)
        if u < self.len0:
            return 0, u
        return 1, u - self.len0

    def snap(self, p: Position) -> tuple[int, float]:
        # project onto whichever road is closer
        d0 = abs(p.y - self.cy)
        d1 = abs(p.x - self.cx)
        if d0 <= d1:
            return 0, min(max(p.x, 0.0), self.len0)
        return 1, min(max(p.y, 0.0), self.len1)


def initial_layout(
    k: int,
    params: MobilityParams,
    rng: np.random.Generator,
    rsu: Position | None = None,
) -> NetworkGeometry:
    """Place K sources and K destinations uniformly on the roads.

    The RSU defaults to the road intersection; pass ``rsu`` to override.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    roads = _Roads(params)
    points = [roads.to_xy(*roads.sample(rng)) for _ in range(2 * k)]
    pairs = tuple((points[2 * i], points[2 * i + 1]) for i in range(k))
    if rsu is None:
        rsu = Position(*params.cross)
    return NetworkGeometry(pairs=pairs, rsu=rsu)


class RandomWaypoint:
    """Random-waypoint motion constrained to the road segments.

    Each vehicle heads toward a waypoint drawn uniformly over the road
    union at a speed drawn uniformly from [speed_min, speed_max]; on
    arrival a fresh waypoint and speed are drawn.  Paths between roads go
    through the intersection.  The RSU never moves.
    """

    def __init__(self, geometry: NetworkGeometry, params: MobilityParams,
                 rng: np.random.Generator):
        self.params = params
        self.rng = rng
        self.roads = _Roads(params)
        self.rsu = geometry.rsu
        self.k = geometry.k
        nodes = [p for pair in geometry.pairs for p in pair]
        self.road = np.empty(len(nodes), dtype=int)
        self.t = np.empty(len(nodes))
        for idx, p in enumerate(nodes):
            self.road[idx], self.t[idx] = self.roads.snap(p)
        self.wp_road = np.empty(len(nodes), dtype=int)
        self.wp_t = np.empty(len(nodes))
        self.speed = np.empty(len(nodes))  # m/s
        for idx in range(len(nodes)):
            self._new_waypoint(idx)

    def _new_waypoint(self, idx: int) -> None:
        self.wp_road[idx], self.wp_t[idx] = self.roads.sample(self.rng)
        self.speed[idx] = self.rng.uniform(self.params.speed_min,
                                           self.params.speed_max) / 3.6

    def _advance(self, idx: int, budget: float) -> None:
        while budget > 0.0:
            if self.road[idx] == self.wp_road[idx]:
                gap = self.wp_t[idx] - self.t[idx]
                if abs(gap) <= budget:
                    self.t[idx] = self.wp_t[idx]
                    budget -= abs(gap)
                    self._new_waypoint(idx)
                else:
                    self.t[idx] += math.copysign(budget, gap)
                    return
            else:
                c = self.roads.cross_t(int(self.road[idx]))
                gap = c - self.t[idx]
                if abs(gap) <= budget:
                    budget -= abs(gap)
                    self.road[idx] = self.wp_road[idx]
                    self.t[idx] = self.roads.cross_t(int(self.road[idx]))
                else:
                    self.t[idx] += math.copysign(budget, gap)
                    return

    def step(self, elapsed: float) -> NetworkGeometry:
        """Advance every vehicle by ``elapsed`` seconds and return the new snapshot."""
        if elapsed <= 0.0:
            raise ValueError("elapsed must be positive")
        for idx in range(self.road.size):
            self._advance(idx, self.speed[idx] * elapsed)
        return self.geometry()

    def geometry(self) -> NetworkGeometry:
        nodes = [self.roads.to_xy(int(r), float(t)) for r, t in zip(self.road, self.t)]
        pairs = tuple((nodes[2 * i], nodes[2 * i + 1]) for i in range(self.k))
        return NetworkGeometry(pairs=pairs, rsu=self.rsu)
