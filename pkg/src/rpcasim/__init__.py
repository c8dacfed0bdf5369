"""Cooperative MAC simulator and threshold optimizer for relay-assisted
vehicular networks."""

from .channel import (ChannelParams, DegenerateGeometryError, SnrDraw, SnrMeans,
                      rates, relay_snr, relay_snr_min_approx, sample_snrs,
                      snr_means)
from .contention import (ContentionError, ContentionOutcome, ContentionParams,
                         contend, mean_observation_duration)
from .engine import (EngineParams, ExperimentCell, PhaseRecord, PhaseSchedule,
                     RunSummary, run_experiment, run_replication,
                     run_small_phase, reconfigure)
from .geometry import (DistanceInfo, MobilityParams, NetworkGeometry, Position,
                       RandomWaypoint, distances, initial_layout)
from .optimizer import (LookupTable, PairStats, SolverParams, StrategyConfig,
                        TimingParams, always_probe_rate, bellman_residual,
                        benefit_set, bisect_rate, find_thresholds, probe_value,
                        probe_value_mc, solve_strategy)
from .special import adaptive_quad, exp1_scaled, exp_integral_e1
from .strategies import Decision, StrategyKind, rpca_stage1, rpca_stage2

__version__ = "0.1.0"
