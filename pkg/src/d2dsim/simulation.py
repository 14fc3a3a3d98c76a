"""Monte Carlo driver: one drop at a time, then pooled statistics."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import SimConfig
from .geometry import generate_deployment, w_to_dbm
from .modeselect import ModeDecision, select_modes
from .powerctl import SolverError, apply_power_control, build_link_system
from .resalloc import AllocationError, allocate_random, build_problem
from .routing import RoutingTable

log = logging.getLogger(__name__)

CELLULAR, D2D_CANDIDATE = "cellular", "d2d"
WORKERS_ENV = "D2DSIM_WORKERS"


@dataclass
class EntityRecord:
    kind: str                   # CELLULAR or D2D_CANDIDATE
    mode: str
    sinr_db: float              # end-to-end: the weakest hop
    hop_powers_dbm: list[float]
    rate_bps: float


@dataclass
class DropStats:
    drop_index: int
    records: list[EntityRecord] = field(default_factory=list)
    total_power_w: float = 0.0
    failed: bool = False
    reason: str = ""
    um_iterations: int = 0


def drop_rng(seed: int, drop_index: int) -> np.random.Generator:
    """Stream for one drop, independent of the order drops are run in."""
    return np.random.default_rng(np.random.SeedSequence([seed, drop_index]))


@dataclass
class DropState:
    """Everything produced for one drop before measurement."""

    deployment: object
    modes: list[ModeDecision]
    table: RoutingTable


def prepare_drop(config: SimConfig, drop_index: int,
                 rng: np.random.Generator | None = None) -> DropState:
    rng = rng or drop_rng(config.seed, drop_index)
    dep = generate_deployment(config.deployment, config.scenario, rng, config.channel)
    modes = select_modes(config.mode_selection, config.scenario, dep)
    problem = build_problem(dep, modes, config.channel.num_rbs)
    table = allocate_random(problem, rng)
    return DropState(dep, modes, table)


def run_drop(config: SimConfig, drop_index: int) -> DropStats:
    rng = drop_rng(config.seed, drop_index)
    try:
        state = prepare_drop(config, drop_index, rng)
        system = build_link_system(state.table, state.deployment.gains,
                                   config.channel.noise_w, config.power,
                                   config.channel.rb_bandwidth_hz)
        p, um = apply_power_control(config.power_control, system, config.power,
                                    config.um_config)
    except (AllocationError, SolverError) as exc:
        log.warning("drop %d failed: %s", drop_index, exc)
        return DropStats(drop_index, failed=True, reason=f"{type(exc).__name__}: {exc}")

    hop_sinr = system.sinr(p)
    n_cues = state.deployment.num_cues
    records = []
    for i, route in enumerate(state.table.routes):
        hl = route.hop_links
        g = float(hop_sinr[hl].min())
        records.append(EntityRecord(
            kind=CELLULAR if i < n_cues else D2D_CANDIDATE,
            mode=(ModeDecision.CELLULAR.value if i < n_cues
                  else state.modes[i - n_cues].value),
            sinr_db=float(10.0 * np.log10(g)),
            hop_powers_dbm=[float(w_to_dbm(p[l])) for l in hl],
            rate_bps=float(system.bandwidth_hz * np.log2(1.0 + g)),
        ))
    return DropStats(drop_index, records,
                     total_power_w=float(p[~system.fixed].sum()),
                     um_iterations=um.iterations if um else 0)


def _run_drop_args(args):
    return run_drop(*args)


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return default
    n = int(raw)
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer")
    return n


def run_drops(config: SimConfig, workers: int | None = None) -> list[DropStats]:
    """Run every drop; results are returned in drop-index order."""
    config.validate()
    workers = worker_count() if workers is None else workers
    jobs = [(config, k) for k in range(config.drops)]
    if workers <= 1:
        return [run_drop(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_drop_args, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


@dataclass
class AggregateStats:
    sinr_db: dict[str, np.ndarray]          # sorted samples per entity class
    drop_throughput_bps: np.ndarray         # per-drop mean end-to-end rate
    drop_power_w: np.ndarray                # per-drop total UE power
    mode_counts: dict[str, int]
    num_records: int
    drops: int
    failures: int
    rates_bps: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def failure_rate(self) -> float:
        return self.failures / self.drops if self.drops else 0.0

    def summary(self) -> dict:
        def stat(fn, x):
            return float(fn(x)) if len(x) else None

        out = {"drops": self.drops, "failures": self.failures,
               "failure_rate": self.failure_rate, "records": self.num_records,
               "mode_counts": dict(sorted(self.mode_counts.items()))}
        for cls, x in sorted(self.sinr_db.items()):
            out[f"median_sinr_db_{cls}"] = stat(np.median, x)
            out[f"p10_sinr_db_{cls}"] = stat(lambda v: np.percentile(v, 10), x)
            out[f"p_sinr_below_0db_{cls}"] = stat(lambda v: np.mean(v < 0.0), x)
            out[f"samples_{cls}"] = int(len(x))
        out["p_sinr_below_0db"] = out.get(f"p_sinr_below_0db_{D2D_CANDIDATE}")
        out["mean_throughput_mbps"] = stat(np.mean, self.rates_bps / 1e6)
        out["mean_total_power_w"] = stat(np.mean, self.drop_power_w)
        n = len(self.drop_throughput_bps)
        out["stderr_throughput_mbps"] = (float(np.std(self.drop_throughput_bps / 1e6, ddof=1)
                                          / np.sqrt(n)) if n > 1 else None)
        out["stderr_total_power_w"] = (float(np.std(self.drop_power_w, ddof=1) / np.sqrt(n))
                                       if n > 1 else None)
        return out


def aggregate(drops: list[DropStats]) -> AggregateStats:
    """Pool the records of all successful drops."""
    ok = [d for d in drops if not d.failed]
    by_cls: dict[str, list[float]] = {CELLULAR: [], D2D_CANDIDATE: []}
    modes: dict[str, int] = {}
    rates = []
    for d in ok:
        for r in d.records:
            by_cls.setdefault(r.kind, []).append(r.sinr_db)
            key = f"{r.kind}:{r.mode}"
            modes[key] = modes.get(key, 0) + 1
            rates.append(r.rate_bps)
    thr = np.array([np.mean([r.rate_bps for r in d.records]) for d in ok if d.records])
    return AggregateStats(
        sinr_db={k: np.sort(np.array(v, dtype=float)) for k, v in by_cls.items()},
        drop_throughput_bps=thr,
        drop_power_w=np.array([d.total_power_w for d in ok], dtype=float),
        mode_counts=modes,
        num_records=sum(len(d.records) for d in ok),
        drops=len(drops),
        failures=len(drops) - len(ok),
        rates_bps=np.array(rates, dtype=float),
    )


def simulate(config: SimConfig, workers: int | None = None) -> AggregateStats:
    return aggregate(run_drops(config, workers))
