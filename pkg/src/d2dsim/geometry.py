"""Network deployment and large-scale channel model.

A drop is a 7-cell hexagonal cluster (one centre cell plus one ring, no
wrap-around). Cellular UEs and D2D triplets (Tx, relay, Rx) are dropped
uniformly inside their cell by rejection sampling, subject to minimum
BS-UE and UE-UE distances.

Node ordering inside a :class:`Deployment` is fixed: base stations first,
then cellular UEs, then one ``(tx, relay, rx)`` block per triplet.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np


class InfeasibleConfigError(RuntimeError):
    """Raised when rejection sampling cannot place a node."""


class ScenarioKind(enum.Enum):
    PROXIMITY = "proximity"
    RANGE_EXTENSION = "range_extension"

    @classmethod
    def parse(cls, value: "str | ScenarioKind") -> "ScenarioKind":
        if isinstance(value, cls):
            return value
        aliases = {"proximity": cls.PROXIMITY, "1": cls.PROXIMITY,
                   "range_extension": cls.RANGE_EXTENSION,
                   "range-extension": cls.RANGE_EXTENSION,
                   "range": cls.RANGE_EXTENSION, "2": cls.RANGE_EXTENSION}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown scenario {value!r}") from None


@dataclass
class DeploymentConfig:
    num_cells: int = 7
    cell_radius_m: float = 500.0
    min_bs_ue_m: float = 50.0
    min_ue_ue_m: float = 10.0
    mean_d2d_pair_m: float = 100.0
    cellular_ues_per_cell: int = 6
    d2d_triplets_per_cell: int = 6
    relay_placement: str = "midpoint_disk"
    relay_min_bs_m: float = 50.0
    max_attempts: int = 10_000

    @classmethod
    def for_scenario(cls, scenario: ScenarioKind, **overrides) -> "DeploymentConfig":
        """Default deployment for the given scenario."""
        if ScenarioKind.parse(scenario) is ScenarioKind.RANGE_EXTENSION:
            base = dict(min_bs_ue_m=400.0, d2d_triplets_per_cell=18,
                        cellular_ues_per_cell=0)
        else:
            base = {}
        base.update(overrides)
        return cls(**base)

    def validate(self) -> None:
        if self.num_cells not in (1, 7):
            raise ValueError("num_cells must be 1 or 7")
        for name in ("cell_radius_m", "min_bs_ue_m", "min_ue_ue_m",
                     "mean_d2d_pair_m", "relay_min_bs_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.min_bs_ue_m >= self.cell_radius_m:
            raise ValueError("min_bs_ue_m must be smaller than cell_radius_m")
        if self.mean_d2d_pair_m <= self.min_ue_ue_m:
            raise ValueError("mean_d2d_pair_m must exceed min_ue_ue_m")
        if self.cellular_ues_per_cell < 0 or self.d2d_triplets_per_cell < 0:
            raise ValueError("node counts must be non-negative")
        if self.relay_placement not in ("midpoint_disk", "uniform_cell"):
            raise ValueError(f"unknown relay_placement {self.relay_placement!r}")


@dataclass
class ChannelParams:
    gain_1m_db: float = -37.0
    pathloss_exponent: float = 3.5
    shadowing_sigma_db: float = 8.0
    noise_per_rb_dbm: float = -116.4
    rb_bandwidth_hz: float = 180e3
    carrier_hz: float = 2e9
    num_rbs: int = 18
    small_scale_fading: bool = False

    def validate(self) -> None:
        if not self.pathloss_exponent > 2:
            raise ValueError("pathloss_exponent must exceed 2")
        if self.shadowing_sigma_db < 0:
            raise ValueError("shadowing_sigma_db must be non-negative")
        if not self.rb_bandwidth_hz > 0:
            raise ValueError("rb_bandwidth_hz must be positive")
        if self.num_rbs < 1:
            raise ValueError("num_rbs must be at least 1")

    @property
    def noise_w(self) -> float:
        return dbm_to_w(self.noise_per_rb_dbm)


def dbm_to_w(dbm):
    w = 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)
    return float(w) if w.ndim == 0 else w


def w_to_dbm(w):
    dbm = 10.0 * np.log10(np.asarray(w, dtype=float)) + 30.0
    return float(dbm) if dbm.ndim == 0 else dbm


# Node kinds used in Deployment.kinds and the CSV dump.
BS, CELLULAR_UE, D2D_TX, D2D_RELAY, D2D_RX = "bs", "cue", "d2d_tx", "d2d_relay", "d2d_rx"


@dataclass
class Deployment:
    scenario: ScenarioKind
    bs_positions: np.ndarray                 # (B, 2)
    cue_positions: np.ndarray                # (C, 2)
    cue_cells: np.ndarray                    # (C,)
    triplet_positions: np.ndarray            # (T, 3, 2) tx, relay, rx
    triplet_cells: np.ndarray                # (T,)
    gains: np.ndarray | None = None          # (N, N) linear, incl. optional fading
    large_scale_gains: np.ndarray | None = None
    _positions: np.ndarray | None = field(default=None, repr=False)

    @property
    def num_bs(self) -> int:
        return len(self.bs_positions)

    @property
    def num_cues(self) -> int:
        return len(self.cue_positions)

    @property
    def num_triplets(self) -> int:
        return len(self.triplet_positions)

    @property
    def num_nodes(self) -> int:
        return self.num_bs + self.num_cues + 3 * self.num_triplets

    def bs_node(self, cell: int) -> int:
        return int(cell)

    def cue_node(self, k: int) -> int:
        return self.num_bs + k

    def triplet_nodes(self, k: int) -> tuple[int, int, int]:
        base = self.num_bs + self.num_cues + 3 * k
        return base, base + 1, base + 2

    @property
    def positions(self) -> np.ndarray:
        if self._positions is None:
            self._positions = np.concatenate([
                self.bs_positions.reshape(-1, 2),
                self.cue_positions.reshape(-1, 2),
                self.triplet_positions.reshape(-1, 2),
            ])
        return self._positions

    @property
    def kinds(self) -> list[str]:
        return ([BS] * self.num_bs + [CELLULAR_UE] * self.num_cues
                + [D2D_TX, D2D_RELAY, D2D_RX] * self.num_triplets)

    @property
    def cells(self) -> np.ndarray:
        return np.concatenate([
            np.arange(self.num_bs),
            self.cue_cells,
            np.repeat(self.triplet_cells, 3),
        ]).astype(int)

    def gain(self, tx: int, rx: int, large_scale: bool = False) -> float:
        table = self.large_scale_gains if large_scale else self.gains
        return float(table[tx, rx])

    def write_csv(self, path) -> None:
        """Debug dump: ``node_id,kind,cell,x_m,y_m``."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["node_id", "kind", "cell", "x_m", "y_m"])
            for n, (kind, cell, (x, y)) in enumerate(
                    zip(self.kinds, self.cells, self.positions)):
                writer.writerow([n, kind, int(cell), f"{x:.3f}", f"{y:.3f}"])


def hex_cell_centers(num_cells: int, radius: float) -> np.ndarray:
    """Centre cell at the origin plus an optional first ring.

    Hexagons are pointy-top with circumradius ``radius``, so neighbouring
    sites sit at distance ``sqrt(3) * radius`` along 0, 60, ..., 300 degrees.
    """
    centers = [(0.0, 0.0)]
    if num_cells == 7:
        isd = math.sqrt(3.0) * radius
        for k in range(6):
            a = k * math.pi / 3.0
            centers.append((isd * math.cos(a), isd * math.sin(a)))
    return np.array(centers)


_HEX_NORMALS = np.array([[math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)]
                         for k in range(3)])


def in_hexagon(points: np.ndarray, center, radius: float) -> np.ndarray:
    rel = np.atleast_2d(points) - np.asarray(center)
    apothem = radius * math.sqrt(3.0) / 2.0
    return np.all(np.abs(rel @ _HEX_NORMALS.T) <= apothem, axis=1)


def path_gain_db(d_m, shadow_db, params: ChannelParams):
    """Log-distance path gain in dB; distances below 1 m are clamped."""
    d = np.maximum(np.asarray(d_m, dtype=float), 1.0)
    out = params.gain_1m_db - 10.0 * params.pathloss_exponent * np.log10(d) + shadow_db
    return float(out) if np.ndim(out) == 0 else out


def build_gain_table(positions: np.ndarray, params: ChannelParams,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(gains, large_scale_gains)`` as symmetric linear tables.

    One shadowing draw per unordered node pair. With small-scale fading
    enabled, a unit-mean exponential power term is multiplied in per pair;
    the large-scale table never carries it.
    """
    n = len(positions)
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    iu = np.triu_indices(n, k=1)
    shadow = np.zeros((n, n))
    if params.shadowing_sigma_db > 0 and n > 1:
        shadow[iu] = rng.normal(0.0, params.shadowing_sigma_db, size=len(iu[0]))
        shadow = shadow + shadow.T
    large = 10.0 ** (np.asarray(path_gain_db(dist, shadow, params)) / 10.0)
    if not params.small_scale_fading:
        return large, large
    fading = np.ones((n, n))
    if n > 1:
        fading[iu] = rng.exponential(1.0, size=len(iu[0]))
        fading = np.triu(fading, 1) + np.triu(fading, 1).T + np.eye(n)
    return large * fading, large


class _Sampler:
    """Rejection sampler holding the already-placed UE positions.

    Candidates are drawn in batches; the first one (in draw order) that
    passes every check is kept.
    """

    batch = 32

    def __init__(self, cfg: DeploymentConfig, bs: np.ndarray, rng: np.random.Generator):
        self.cfg = cfg
        self.bs = bs
        self.rng = rng
        self._buf = np.empty((64, 2))
        self.count = 0

    def _far_from_ues(self, p: np.ndarray, skip_last: int = 0) -> bool:
        n = self.count - skip_last
        if n <= 0:
            return True
        diff = self._buf[:n] - p
        d2 = np.einsum("ij,ij->i", diff, diff)
        return bool(d2.min() >= self.cfg.min_ue_ue_m ** 2)

    def _far_from_bs(self, pts: np.ndarray, min_d: float) -> np.ndarray:
        diff = pts[:, None, :] - self.bs[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff).min(axis=1) >= min_d ** 2

    def _pick(self, cand: np.ndarray, ok: np.ndarray, skip_last: int = 0):
        for p in cand[ok]:
            if self._far_from_ues(p, skip_last):
                return self.place(p)
        return None

    def place(self, p: np.ndarray) -> np.ndarray:
        if self.count == len(self._buf):
            self._buf = np.concatenate([self._buf, np.empty_like(self._buf)])
        self._buf[self.count] = p
        self.count += 1
        return p

    def _fail(self, what: str):
        raise InfeasibleConfigError(
            f"could not place {what} within {self.cfg.max_attempts} attempts")

    def in_cell(self, cell: int, min_bs: float, what: str) -> np.ndarray:
        r = self.cfg.cell_radius_m
        c = self.bs[cell]
        for _ in range(0, self.cfg.max_attempts, self.batch):
            cand = c + self.rng.uniform(-r, r, size=(self.batch, 2))
            ok = in_hexagon(cand, c, r) & self._far_from_bs(cand, min_bs)
            p = self._pick(cand, ok)
            if p is not None:
                return p
        self._fail(what)

    def around(self, tx: np.ndarray, min_bs: float) -> np.ndarray:
        # Shifted exponential keeps the configured mean while honouring the
        # UE-UE spacing towards the pair's own Tx. Only the angle is redrawn
        # on rejection, so the distance law is untouched.
        lo = self.cfg.min_ue_ue_m
        scale = self.cfg.mean_d2d_pair_m - lo
        for _ in range(0, self.cfg.max_attempts, 4 * self.batch):
            d = lo + self.rng.exponential(scale)
            for _ in range(4):
                a = self.rng.uniform(0.0, 2.0 * math.pi, size=self.batch)
                cand = tx + d * np.column_stack([np.cos(a), np.sin(a)])
                p = self._pick(cand, self._far_from_bs(cand, min_bs))
                if p is not None:
                    return p
        self._fail("D2D receiver")

    def in_disk(self, a: np.ndarray, b: np.ndarray, min_bs: float) -> np.ndarray:
        # Spacing is not enforced towards the triplet's own Tx and Rx (the two
        # most recent placements): a short pair leaves no room for it.
        center = (a + b) / 2.0
        radius = np.hypot(*(b - a)) / 2.0
        for _ in range(0, self.cfg.max_attempts, self.batch):
            rho = radius * np.sqrt(self.rng.uniform(size=self.batch))
            phi = self.rng.uniform(0.0, 2.0 * math.pi, size=self.batch)
            cand = center + rho[:, None] * np.column_stack([np.cos(phi), np.sin(phi)])
            p = self._pick(cand, self._far_from_bs(cand, min_bs), skip_last=2)
            if p is not None:
                return p
        self._fail("D2D relay")


def generate_deployment(config: DeploymentConfig, scenario, rng: np.random.Generator,
                        params: ChannelParams | None = None) -> Deployment:
    """Drop BSs, cellular UEs and D2D triplets and attach the gain tables.

    The relay lies uniformly in the disk whose diameter joins the D2D Tx to
    its end point: the D2D Rx in the proximity scenario, the serving BS in
    range extension. In range extension the Rx is still dropped but is never
    used by any link.
    """
    scenario = ScenarioKind.parse(scenario)
    config.validate()
    params = params or ChannelParams()
    params.validate()
    bs = hex_cell_centers(config.num_cells, config.cell_radius_m)
    s = _Sampler(config, bs, rng)
    n_cells = len(bs)
    proximity = scenario is ScenarioKind.PROXIMITY

    cues, cue_cells = [], []
    for cell in range(n_cells):
        for _ in range(config.cellular_ues_per_cell):
            cues.append(s.in_cell(cell, config.min_bs_ue_m, "cellular UE"))
            cue_cells.append(cell)

    triplets, tri_cells = [], []
    for cell in range(n_cells):
        for _ in range(config.d2d_triplets_per_cell):
            tx = s.in_cell(cell, config.min_bs_ue_m, "D2D transmitter")
            # The range-extension Rx is unused, so only UE spacing binds.
            rx = s.around(tx, config.min_bs_ue_m if proximity else 0.0)
            relay_min_bs = min(config.relay_min_bs_m, config.min_bs_ue_m)
            if config.relay_placement == "uniform_cell":
                relay = s.in_cell(cell, relay_min_bs, "D2D relay")
            else:
                end = rx if proximity else bs[cell]
                relay = s.in_disk(tx, end, relay_min_bs)
            triplets.append(np.stack([tx, relay, rx]))
            tri_cells.append(cell)

    dep = Deployment(
        scenario=scenario,
        bs_positions=bs,
        cue_positions=np.array(cues, dtype=float).reshape(-1, 2),
        cue_cells=np.array(cue_cells, dtype=int),
        triplet_positions=np.array(triplets, dtype=float).reshape(-1, 3, 2),
        triplet_cells=np.array(tri_cells, dtype=int),
    )
    dep.gains, dep.large_scale_gains = build_gain_table(dep.positions, params, rng)
    return dep
