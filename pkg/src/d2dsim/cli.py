"""Command-line entry point: ``d2dsim run | sweep | modes | dump | config``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .config import ConfigError, SimConfig, write_default_config
from .geometry import InfeasibleConfigError, ScenarioKind
from .modeselect import MsPolicy
from .output import emit_outputs, scatter_row, write_scatter
from .powerctl import PcScheme
from .simulation import prepare_drop, simulate

log = logging.getLogger("d2dsim")

BASELINES = ("fix", "fixsnr", "ol", "cl")
MAX_FAILURE_RATE = 0.01


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--scenario", choices=["proximity", "range_extension"])
    p.add_argument("--drops", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def _config_from_args(args) -> SimConfig:
    cfg = SimConfig.load(args.config) if args.config else SimConfig()
    changes = {}
    if args.scenario:
        changes["scenario"] = ScenarioKind.parse(args.scenario)
    if getattr(args, "mode_selection", None):
        changes["mode_selection"] = MsPolicy.parse(args.mode_selection)
    if getattr(args, "power_control", None):
        changes["power_control"] = PcScheme.parse(args.power_control)
    if isinstance(getattr(args, "omega", None), float):
        changes["omega"] = args.omega
    if args.drops is not None:
        changes["drops"] = args.drops
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out:
        changes["out_dir"] = args.out
    return cfg.replace(**changes).validate()


def _label(cfg: SimConfig) -> str:
    return cfg.power_control.value


def _omega(cfg: SimConfig):
    return cfg.omega if cfg.power_control is PcScheme.UTILITY_MAX else None


def _run_one(cfg: SimConfig, out_dir, figures: bool):
    stats = simulate(cfg)
    emit_outputs(stats, out_dir, cfg.to_dict(), _label(cfg), _omega(cfg))
    s = stats.summary()
    log.info("%s: %d drops, %d failed, median D2D SINR %s dB, throughput %s Mbps, power %s W",
             out_dir, s["drops"], s["failures"], s.get("median_sinr_db_d2d"),
             s["mean_throughput_mbps"], s["mean_total_power_w"])
    if figures:
        from .plotting import plot_sinr_cdfs
        plot_sinr_cdfs({_label(cfg).upper(): stats.sinr_db}, Path(out_dir) / "sinr_cdf.png",
                       title=cfg.scenario.value)
    if stats.failure_rate > MAX_FAILURE_RATE:
        log.error("failure rate %.1f%% exceeds %.0f%%", 100 * stats.failure_rate,
                  100 * MAX_FAILURE_RATE)
    return stats


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    stats = _run_one(cfg, cfg.out_dir, args.figures)
    return 0 if stats.failure_rate <= MAX_FAILURE_RATE else 3


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    omegas = [float(w) for w in args.omega.split(",") if w.strip()]
    baselines = [b for b in args.baselines.split(",") if b.strip()] if args.baselines else []
    out = Path(cfg.out_dir)
    rows, worst = [], 0.0
    runs = [(PcScheme.parse(b), cfg.omega, b) for b in baselines]
    runs += [(PcScheme.UTILITY_MAX, w, f"um_{w:g}") for w in omegas]
    for scheme, omega, name in runs:
        sub = cfg.replace(power_control=scheme, omega=omega)
        stats = _run_one(sub, out / name, args.figures)
        rows.append(scatter_row(scheme.value, _omega(sub), stats))
        worst = max(worst, stats.failure_rate)
    write_scatter(out / "scatter_power_rate.csv", rows)
    if args.figures:
        from .plotting import plot_power_rate
        plot_power_rate(rows, out / "scatter_power_rate.png", title=cfg.scenario.value)
    return 0 if worst <= MAX_FAILURE_RATE else 3


def cmd_modes(args) -> int:
    cfg = _config_from_args(args)
    out = Path(cfg.out_dir)
    curves, worst = {}, 0.0
    for policy in MsPolicy:
        stats = _run_one(cfg.replace(mode_selection=policy), out / policy.value, False)
        curves[policy.name] = stats.sinr_db
        worst = max(worst, stats.failure_rate)
    if args.figures:
        from .plotting import plot_sinr_cdfs
        plot_sinr_cdfs(curves, out / "sinr_cdf_modes.png", title=cfg.scenario.value)
    return 0 if worst <= MAX_FAILURE_RATE else 3


def cmd_dump(args) -> int:
    cfg = _config_from_args(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    state = prepare_drop(cfg, args.drop)
    state.deployment.write_csv(out / f"deployment_{args.drop}.csv")
    state.table.write_csv(out / f"routes_{args.drop}.csv")
    return 0


def cmd_config(args) -> int:
    write_default_config(args.path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="d2dsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one configuration")
    _add_common(p)
    p.add_argument("--mode-selection", choices=[m.value for m in MsPolicy])
    p.add_argument("--power-control", choices=[s.value for s in PcScheme])
    p.add_argument("--omega", type=float)
    p.add_argument("--figures", action="store_true", help="also render PNG figures")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="baseline schemes plus UM over several omegas")
    _add_common(p)
    p.add_argument("--mode-selection", choices=[m.value for m in MsPolicy])
    p.add_argument("--omega", default="0.1,1,10,100", help="comma-separated omegas")
    p.add_argument("--baselines", default=",".join(BASELINES),
                   help="comma-separated baseline schemes ('' for none)")
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("modes", help="compare Cmode, DMS and HMS")
    _add_common(p)
    p.add_argument("--power-control", choices=[s.value for s in PcScheme])
    p.add_argument("--omega", type=float)
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("dump", help="write deployment and routing CSVs for one drop")
    _add_common(p)
    p.add_argument("--mode-selection", choices=[m.value for m in MsPolicy])
    p.add_argument("--drop", type=int, default=0)
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("config", help="write the default config as JSON")
    p.add_argument("path")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InfeasibleConfigError, OSError) as exc:
        print(f"d2dsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
