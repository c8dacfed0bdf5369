"""Command-line front end.

Verbs:
  solve      print the optimal rate, thresholds and the benefit set for a geometry
  simulate   run the configured experiment and write CSV results
  figure     run one of the named sweep presets (3a / 3b / 3c) and write
             CSV + gnuplot data + a rendered PNG
  validate   run the built-in oracle smoke checks

Results are written atomically only after every cell completed; a failed
run leaves no partial output files.
"""

from __future__ import annotations

import argparse
import math
import os
import statistics
import sys
from pathlib import Path

import numpy as np

from .config import (ALL_STRATEGIES, ConfigError, ExperimentConfig, parse_config,
                     serialize_config, with_overrides)
from .engine import RunSummary, run_experiment
from .geometry import distances, initial_layout
from .optimizer import LookupTable, stats_from_means
from .channel import means_from_distances

CSV_HEADER = ("figure,strategy,axis_name,axis_value,seed,"
              "throughput_bps,n_phases,probes_mean,contentions_mean")

FIGURE_PRESETS = {
    "3a": dict(sweep_axis="p_source",
               sweep_values=(16.0, 18.0, 20.0, 22.0, 24.0, 26.0, 28.0, 30.0),
               t_data_us=15000.0),
    "3b": dict(sweep_axis="t_data",
               sweep_values=(3000.0, 5000.0, 7000.0, 10000.0, 15000.0,
                             22000.0, 30000.0),
               p_source_dbm=26.0),
    "3c": dict(sweep_axis="p0",
               sweep_values=(0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7,
                             0.8, 0.9),
               p_source_dbm=26.0, t_data_us=15000.0,
               max_slots=1_000_000_000),
}


class ReportError(ValueError):
    """Comparison table requested over mismatched result cells."""


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def runs_csv(summaries: list[RunSummary], figure: str) -> str:
    lines = [CSV_HEADER]
    for s in summaries:
        lines.append(",".join([
            figure, s.strategy.value, s.axis_name, _fmt(s.axis_value),
            str(s.seed), _fmt(s.throughput), str(s.n_phases),
            _fmt(s.probes_mean), _fmt(s.contentions_mean),
        ]))
    return "\n".join(lines) + "\n"


def aggregate(summaries: list[RunSummary]) -> dict[str, list[tuple[float, float, float]]]:
    """strategy -> [(axis_value, mean throughput, 95% CI half-width)]."""
    groups: dict[tuple[str, float], list[float]] = {}
    for s in summaries:
        groups.setdefault((s.strategy.value, s.axis_value), []).append(s.throughput)
    out: dict[str, list[tuple[float, float, float]]] = {}
    for (name, value), vals in sorted(groups.items()):
        mean = statistics.fmean(vals)
        ci = 0.0
        if len(vals) > 1:
            ci = 1.96 * statistics.stdev(vals) / math.sqrt(len(vals))
        out.setdefault(name, []).append((value, mean, ci))
    return out


def summary_csv(agg: dict, figure: str, axis_name: str, n_seeds: int) -> str:
    lines = ["figure,strategy,axis_name,axis_value,n_seeds,throughput_mean,throughput_ci95"]
    for name in sorted(agg):
        for value, mean, ci in agg[name]:
            lines.append(",".join([figure, name, axis_name, _fmt(value),
                                   str(n_seeds), _fmt(mean), _fmt(ci)]))
    return "\n".join(lines) + "\n"


def gnuplot_dat(agg: dict, axis_name: str) -> str:
    """Wide-format whitespace table: axis value, then mean and CI per strategy."""
    names = sorted(agg)
    values = sorted({v for rows in agg.values() for v, _, _ in rows})
    header = "# " + " ".join([axis_name] + [f"{n}_mean {n}_ci" for n in names])
    lookup = {(n, v): (m, c) for n in names for v, m, c in agg[n]}
    lines = [header]
    for v in values:
        row = [_fmt(v)]
        for n in names:
            m, c = lookup.get((n, v), (float("nan"), float("nan")))
            row.extend([_fmt(m), _fmt(c)])
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def report(summaries: list[RunSummary]) -> str:
    """Relative-gain table of the threshold strategy over each baseline.

    Gains are 100 * (rpca - baseline) / baseline on seed-averaged
    throughput, one row per sweep value.
    """
    agg = aggregate(summaries)
    if "rpca" not in agg:
        raise ReportError("no rpca runs to compare against")
    base = {v: m for v, m, _ in agg["rpca"]}
    others = [n for n in sorted(agg) if n != "rpca"]
    if not others:
        raise ReportError("no baselines to compare against")
    for name in others:
        if {v for v, _, _ in agg[name]} != set(base):
            raise ReportError(f"strategy {name!r} was not run on the same sweep values")
    lines = ["axis_value  " + "  ".join(f"{n}(%)" for n in others)]
    for v in sorted(base):
        cells = []
        for name in others:
            other = next(m for vv, m, _ in agg[name] if vv == v)
            if other <= 0:
                cells.append("inf")
            else:
                cells.append(f"{100.0 * (base[v] - other) / other:+.1f}")
        lines.append(f"{_fmt(v):>10}  " + "  ".join(f"{c:>12}" for c in cells))
    return "\n".join(lines) + "\n"


def _load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        cfg = ExperimentConfig()
        cfg.validate()
        return cfg
    text = Path(path).read_text()
    return parse_config(text)


def _apply_flags(cfg: ExperimentConfig, args) -> ExperimentConfig:
    over = {}
    if getattr(args, "seed", None):
        over["seeds"] = tuple(int(s) for s in args.seed.split(","))
    if getattr(args, "strategies", None):
        over["strategies"] = tuple(args.strategies.split(","))
    if getattr(args, "phases", None):
        try:
            n_large, m_small = (int(v) for v in args.phases.split(","))
        except ValueError as exc:
            raise ConfigError(f"--phases expects 'L,M': {exc}") from exc
        over["n_large"] = n_large
        over["m_small"] = m_small
    if getattr(args, "out", None):
        over["out_dir"] = args.out
    return with_overrides(cfg, **over)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("RPCASIM_WORKERS", "1")))
    except ValueError:
        return 1


def _write_outputs(out_dir: Path, tag: str, summaries: list[RunSummary],
                   cfg: ExperimentConfig) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    agg = aggregate(summaries)
    (out_dir / f"{tag}_runs.csv").write_text(runs_csv(summaries, tag))
    (out_dir / f"{tag}_summary.csv").write_text(
        summary_csv(agg, tag, cfg.sweep_axis, len(cfg.seeds)))
    (out_dir / f"{tag}.dat").write_text(gnuplot_dat(agg, cfg.sweep_axis))
    if "rpca" in agg and len(agg) > 1:
        (out_dir / f"{tag}_gains.txt").write_text(report(summaries))
    from .plotting import render_sweep

    render_sweep(agg, cfg.sweep_axis, out_dir / f"{tag}.png", title=tag)


def cmd_solve(args) -> int:
    cfg = _apply_flags(_load_config(args.config), args)
    params = cfg.engine_params(cfg.sweep_values[0])
    geometry = params.layout
    if geometry is None:
        rng = np.random.default_rng(cfg.seeds[0])
        geometry = initial_layout(cfg.k_pairs, params.mobility, rng, rsu=params.rsu)
    dist = distances(geometry)
    table = LookupTable(params.channel, params.timing, params.contention,
                        params.solver)
    strategy = table.config_for(dist)
    print(f"rate: {strategy.rate:.6f} bits/s/Hz "
          f"({strategy.rate * cfg.bandwidth_hz:.6f} bits/s)")
    print(f"snr cutoff (2^rate - 1): {strategy.snr_cutoff:.6f}")
    print(f"benefit set: {sorted(strategy.benefit)}")
    print("pair  recontend_th  stop_th")
    for i in range(cfg.k_pairs):
        rec, stp = strategy.recontend_th[i], strategy.stop_th[i]
        if i in strategy.benefit:
            print(f"{i:4d}  {rec:12.6f}  {stp:10.6f}")
        else:
            print(f"{i:4d}  {'-':>12}  {'-':>10}")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        table.save(out_dir / "lookup_table.txt")
        print(f"lookup table written to {out_dir / 'lookup_table.txt'}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _apply_flags(_load_config(args.config), args)
    summaries = run_experiment(cfg.cells(), workers=_workers())
    out_dir = Path(cfg.out_dir)
    _write_outputs(out_dir, "simulate", summaries, cfg)
    print(runs_csv(summaries, "simulate"), end="")
    return 0


def cmd_figure(args) -> int:
    preset = FIGURE_PRESETS[args.name]
    cfg = _load_config(args.config)
    cfg = with_overrides(cfg, **preset)
    cfg = _apply_flags(cfg, args)
    summaries = run_experiment(cfg.cells(), workers=_workers())
    tag = f"figure_{args.name}"
    _write_outputs(Path(cfg.out_dir), tag, summaries, cfg)
    print(f"wrote {tag} outputs to {cfg.out_dir}")
    return 0


def cmd_validate(args) -> int:
    from .validation import run_all

    return 0 if run_all() else 1


def cmd_dump_config(args) -> int:
    cfg = _apply_flags(_load_config(args.config), args)
    print(serialize_config(cfg), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rpcasim")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="configuration file path")
        p.add_argument("--seed", help="comma-separated seed list")
        p.add_argument("--out", help="output directory")
        p.add_argument("--strategies",
                       help=f"comma-separated subset of {','.join(ALL_STRATEGIES)}")
        p.add_argument("--phases", help="large,small phase counts (L,M)")

    p_solve = sub.add_parser("solve", help="solve the threshold strategy for one geometry")
    common(p_solve)
    p_solve.set_defaults(fn=cmd_solve)

    p_sim = sub.add_parser("simulate", help="run the configured experiment")
    common(p_sim)
    p_sim.set_defaults(fn=cmd_simulate)

    p_fig = sub.add_parser("figure", help="run a named sweep preset")
    p_fig.add_argument("name", choices=sorted(FIGURE_PRESETS))
    common(p_fig)
    p_fig.set_defaults(fn=cmd_figure)

    p_val = sub.add_parser("validate", help="run oracle smoke checks")
    p_val.set_defaults(fn=cmd_validate)

    p_dump = sub.add_parser("dump-config", help="print the resolved configuration")
    common(p_dump)
    p_dump.set_defaults(fn=cmd_dump_config)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # engine/solver failures abort nonzero
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
