"""Plain-text experiment configuration: parsing, defaults, serialization.

The format is one ``key = value`` per line with ``#`` comments.  Values in
natural units (dBm, dB, km/h, microseconds) are converted to linear/SI
exactly once, when engine parameters are built.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .channel import ChannelParams
from .contention import ContentionParams
from .engine import EngineParams, ExperimentCell, PhaseSchedule
from .geometry import MobilityParams, NetworkGeometry, Position
from .optimizer import SolverParams, TimingParams
from .strategies import StrategyKind

SWEEP_AXES = ("p_source", "t_data", "p0")

ALL_STRATEGIES = ("rpca", "direct_v2v", "direct_rsu", "optimal_stop_probe", "mu_rsu")


class ConfigError(ValueError):
    """Malformed or out-of-range configuration input."""


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(",", " ").split())


def _parse_str_list(text: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    # network and channel (defaults: the evaluated operating point)
    k_pairs: int = 8
    p_source_dbm: float = 24.0
    p_rsu_dbm: float | None = None  # None: track p_source
    noise_dbm: float = -90.0
    ref_gain_db: float = -30.0
    alpha_v2v: float = 3.0
    alpha_v2r: float = 2.5
    # contention
    p0: float = 0.3
    slot_idle_us: float = 50.0
    t_rts_us: float = 100.0
    t_cts_us: float = 100.0
    max_slots: int = 1_000_000
    # timing / phases
    t_data_us: float = 15000.0
    m_small: int = 300
    n_large: int = 100
    # area and motion
    area_x_m: float = 1000.0
    area_y_m: float = 1000.0
    speed_min_kmh: float = 20.0
    speed_max_kmh: float = 80.0
    mobility: bool = True
    rsu_x_m: float | None = None  # None: road intersection
    rsu_y_m: float | None = None
    # solver
    epsilon: float = 1e-4
    step_alpha: float | None = None
    max_iters: int = 20000
    quad_limit: int = 4096
    mc_samples: int = 100_000
    # experiment
    bandwidth_hz: float = 1.0
    sweep_axis: str = "p_source"
    sweep_values: tuple[float, ...] = (24.0,)
    strategies: tuple[str, ...] = ALL_STRATEGIES
    seeds: tuple[int, ...] = tuple(range(1, 11))
    out_dir: str = "out"
    # optional explicit layout: per pair "sx sy dx dy", pairs separated by ';'
    layout: str | None = None

    def validate(self) -> None:
        if self.k_pairs < 1:
            raise ConfigError("k_pairs must be >= 1")
        if not (0.0 < self.p0 <= 1.0):
            raise ConfigError(f"p0 out of range (0, 1]: {self.p0}")
        for name in ("slot_idle_us", "t_rts_us", "t_cts_us", "t_data_us"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.t_data_us <= self.t_rts_us + self.t_cts_us:
            raise ConfigError("t_data_us must exceed the RTS+CTS probe time")
        if not (0.0 < self.speed_min_kmh <= self.speed_max_kmh):
            raise ConfigError("need 0 < speed_min_kmh <= speed_max_kmh")
        if self.area_x_m <= 0 or self.area_y_m <= 0:
            raise ConfigError("area sides must be positive")
        if not (-150.0 <= self.noise_dbm <= 0.0):
            raise ConfigError(f"noise_dbm {self.noise_dbm} outside supported range [-150, 0]")
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep_axis must be one of {SWEEP_AXES}")
        if not self.sweep_values:
            raise ConfigError("sweep_values must not be empty")
        if self.sweep_axis == "p0" and any(not (0 < v < 1) for v in self.sweep_values):
            raise ConfigError("p0 sweep values must lie in (0, 1)")
        if self.sweep_axis == "t_data" and any(
                v <= self.t_rts_us + self.t_cts_us for v in self.sweep_values):
            raise ConfigError("t_data sweep values must exceed the probe time")
        for s in self.strategies:
            if s not in ALL_STRATEGIES:
                raise ConfigError(f"unknown strategy {s!r}")
        if not self.strategies:
            raise ConfigError("strategies must not be empty")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.bandwidth_hz <= 0:
            raise ConfigError("bandwidth_hz must be positive")
        if self.layout is not None:
            self.explicit_layout()  # raises on malformed text

    def explicit_layout(self) -> NetworkGeometry | None:
        if self.layout is None:
            return None
        pairs = []
        for chunk in self.layout.split(";"):
            vals = [float(v) for v in chunk.replace(",", " ").split()]
            if len(vals) != 4:
                raise ConfigError("layout entries need 4 numbers: sx sy dx dy")
            pairs.append((Position(vals[0], vals[1]), Position(vals[2], vals[3])))
        if len(pairs) != self.k_pairs:
            raise ConfigError(
                f"layout has {len(pairs)} pairs but k_pairs = {self.k_pairs}"
            )
        return NetworkGeometry(pairs=tuple(pairs), rsu=self._rsu_position())

    def _rsu_position(self) -> Position:
        x = self.rsu_x_m if self.rsu_x_m is not None else 0.5 * self.area_x_m
        y = self.rsu_y_m if self.rsu_y_m is not None else 0.5 * self.area_y_m
        return Position(x, y)

    def engine_params(self, axis_value: float | None = None) -> EngineParams:
        """Concrete engine parameters with the sweep value applied."""
        p_source = self.p_source_dbm
        p0 = self.p0
        t_data = self.t_data_us
        if axis_value is not None:
            if self.sweep_axis == "p_source":
                p_source = axis_value
            elif self.sweep_axis == "p0":
                p0 = axis_value
            else:
                t_data = axis_value
        p_rsu = self.p_rsu_dbm if self.p_rsu_dbm is not None else p_source
        channel = ChannelParams.from_db(p_source, p_rsu, self.noise_dbm,
                                        self.ref_gain_db, self.alpha_v2v,
                                        self.alpha_v2r)
        contention = ContentionParams(
            k_pairs=self.k_pairs, p0=p0, slot_idle=self.slot_idle_us,
            t_rts=self.t_rts_us, t_cts=self.t_cts_us, max_slots=self.max_slots,
        )
        timing = TimingParams.from_contention(t_data, contention)
        mobility = MobilityParams(
            area_x=self.area_x_m, area_y=self.area_y_m,
            speed_min=self.speed_min_kmh, speed_max=self.speed_max_kmh,
        )
        schedule = PhaseSchedule(m_per_large=self.m_small, n_large=self.n_large,
                                 t_data=t_data)
        solver = SolverParams(epsilon=self.epsilon, step=self.step_alpha,
                              max_iters=self.max_iters, quad_limit=self.quad_limit,
                              mc_samples=self.mc_samples)
        rsu = self._rsu_position() if (self.rsu_x_m is not None
                                       or self.rsu_y_m is not None) else None
        return EngineParams(
            channel=channel, contention=contention, timing=timing,
            mobility=mobility, schedule=schedule, solver=solver,
            bandwidth_hz=self.bandwidth_hz, mobility_on=self.mobility,
            rsu=rsu, layout=self.explicit_layout(),
        )

    def cells(self) -> list[ExperimentCell]:
        out = []
        for value in self.sweep_values:
            params = self.engine_params(value)
            for name in self.strategies:
                kind = StrategyKind(name)
                for seed in self.seeds:
                    out.append(ExperimentCell(kind=kind, params=params, seed=seed,
                                              axis_name=self.sweep_axis,
                                              axis_value=value))
        return out


_PARSERS = {
    "k_pairs": int,
    "p_source_dbm": float,
    "p_rsu_dbm": float,
    "noise_dbm": float,
    "ref_gain_db": float,
    "alpha_v2v": float,
    "alpha_v2r": float,
    "p0": float,
    "slot_idle_us": float,
    "t_rts_us": float,
    "t_cts_us": float,
    "max_slots": int,
    "t_data_us": float,
    "m_small": int,
    "n_large": int,
    "area_x_m": float,
    "area_y_m": float,
    "speed_min_kmh": float,
    "speed_max_kmh": float,
    "mobility": _parse_bool,
    "rsu_x_m": float,
    "rsu_y_m": float,
    "epsilon": float,
    "step_alpha": float,
    "max_iters": int,
    "quad_limit": int,
    "mc_samples": int,
    "bandwidth_hz": float,
    "sweep_axis": str,
    "sweep_values": _parse_float_list,
    "strategies": _parse_str_list,
    "seeds": _parse_int_list,
    "out_dir": str,
    "layout": str,
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse a key-value document; unset keys fall back to the defaults."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    cfg = ExperimentConfig(**values)
    try:
        cfg.validate()
    except ConfigError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse(serialize(cfg)) == cfg."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        lines.append(f"{f.name} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def with_overrides(cfg: ExperimentConfig, **kwargs) -> ExperimentConfig:
    out = replace(cfg, **{k: v for k, v in kwargs.items() if v is not None})
    out.validate()
    return out
