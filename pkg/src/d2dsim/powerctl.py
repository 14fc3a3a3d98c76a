"""SINR, capacities and the five uplink power-control schemes.

Every link of a drop uses exactly one resource, so powers are carried as a
per-link vector ``p`` (watts); :func:`power_matrix` expands it into the
``L x Q`` form when needed. :class:`LinkSystem` is the numeric view of a
drop that every scheme works on.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import dbm_to_w, w_to_dbm
from .routing import D2D, DOWNLINK, UPLINK, Link, RoutingTable, hop_link_resource, hops


class SolverError(RuntimeError):
    pass


class PcScheme(enum.Enum):
    FIX = "fix"
    FIX_SNR = "fixsnr"
    OPEN_LOOP = "ol"
    CLOSED_LOOP = "cl"
    UTILITY_MAX = "um"

    @classmethod
    def parse(cls, value) -> "PcScheme":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace("_", "").replace("-", ""))
        except ValueError:
            raise ValueError(f"unknown power-control scheme {value!r}") from None


@dataclass
class PowerParams:
    ue_pmin_dbm: float = -23.0
    ue_pmax_dbm: float = 23.0
    bs_power_dbm: float = 40.0
    fixed_d2d_dbm: float = -10.0
    ol_p0_dbm: float = -10.0
    ol_alpha: float = 0.8
    ol_num_rbs: int = 1
    snr_target_db: float = 15.0
    cl_step_db: float = 1.0
    cl_deadzone_db: float = 0.5
    cl_iters: int = 10

    def validate(self) -> None:
        if self.ue_pmin_dbm > self.ue_pmax_dbm:
            raise ValueError("ue_pmin_dbm exceeds ue_pmax_dbm")
        if not 0 <= self.ol_alpha <= 1:
            raise ValueError("ol_alpha must lie in [0, 1]")
        if self.ol_num_rbs < 1 or self.cl_iters < 1:
            raise ValueError("ol_num_rbs and cl_iters must be at least 1")


@dataclass
class UmConfig:
    omega: float = 1.0
    outer_iters: int = 70
    inner_iters: int = 10
    epsilon: float = 0.05
    p_init_dbm: float = 10.0
    gamma_tgt_init_db: float = 0.0
    step_size: float = 1.0
    max_halvings: int = 5
    max_log_step: float = math.log(10.0)
    target_max_db: float = 40.0

    def validate(self) -> None:
        if not (self.omega > 0 and self.epsilon > 0 and self.step_size > 0
                and self.max_log_step > 0):
            raise ValueError("omega, epsilon, step_size and max_log_step must be positive")
        if self.outer_iters < 1 or self.inner_iters < 1:
            raise ValueError("outer_iters and inner_iters must be at least 1")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be non-negative")


# ---------------------------------------------------------------------------
# Measurement primitives on the L x Q power matrix
# ---------------------------------------------------------------------------

def power_matrix(p: np.ndarray, resources: np.ndarray, num_resources: int) -> np.ndarray:
    P = np.zeros((len(p), num_resources))
    P[np.arange(len(p)), resources] = p
    return P


def received_total_power(P: np.ndarray, links: Sequence[Link], gains: np.ndarray,
                         rx_node: int, q: int) -> float:
    """Total power seen by ``rx_node`` on resource ``q``, wanted signal included.

    A node's own transmission is not counted at its own receiver.
    """
    total = 0.0
    for link in links:
        if P[link.id, q] > 0 and link.tx_node != rx_node:
            total += gains[link.tx_node, rx_node] * P[link.id, q]
    return total


def sinr(P: np.ndarray, table: RoutingTable, gains: np.ndarray, noise: float,
         i: int, h: int) -> float:
    """SINR of hop ``h`` (1-based) of route ``i``."""
    l, q = hop_link_resource(table.routes[i], h)
    link = table.links[l]
    wanted = gains[link.tx_node, link.rx_node] * P[l, q]
    if wanted <= 0:
        return 0.0
    total = received_total_power(P, table.links, gains, link.rx_node, q)
    return wanted / (noise + (total - wanted))


def capacity(gamma, w_hz: float):
    """Shannon capacity ``w * log2(1 + gamma)`` in bit/s."""
    return w_hz * np.log2(1.0 + np.asarray(gamma, dtype=float)) if np.ndim(gamma) \
        else w_hz * math.log2(1.0 + gamma)


def route_rate(P: np.ndarray, table: RoutingTable, gains: np.ndarray, noise: float,
               w_hz: float) -> np.ndarray:
    """End-to-end rate of every route: the smallest hop capacity."""
    s = np.empty(len(table.routes))
    for i, route in enumerate(table.routes):
        s[i] = min(capacity(sinr(P, table, gains, noise, i, h), w_hz)
                   for h in range(1, hops(route) + 1))
    return s


# ---------------------------------------------------------------------------
# Vectorised per-drop view
# ---------------------------------------------------------------------------

@dataclass
class LinkSystem:
    """Per-link desired gains, same-resource cross gains and power bounds.

    ``cross[k, l]`` is the gain from the transmitter of link ``l`` to the
    receiver of link ``k`` when both share a resource (zero otherwise and on
    the diagonal). Links flagged ``fixed`` keep ``pmin == pmax``.
    """

    direct: np.ndarray
    cross: np.ndarray
    noise: float
    pmin: np.ndarray
    pmax: np.ndarray
    fixed: np.ndarray
    route_hops: list[list[int]]
    bandwidth_hz: float = 180e3
    roles: list[str] = field(default_factory=list)

    @property
    def num_links(self) -> int:
        return len(self.direct)

    @property
    def num_routes(self) -> int:
        return len(self.route_hops)

    def interference(self, p: np.ndarray) -> np.ndarray:
        return self.cross @ p

    def sinr(self, p: np.ndarray) -> np.ndarray:
        return self.direct * p / (self.noise + self.cross @ p)

    def route_of_link(self) -> np.ndarray:
        owner = np.full(self.num_links, -1, dtype=int)
        for i, hl in enumerate(self.route_hops):
            owner[hl] = i
        return owner

    def route_sinr(self, p: np.ndarray) -> np.ndarray:
        g = self.sinr(p)
        return np.array([g[hl].min() for hl in self.route_hops])

    def route_rates(self, p: np.ndarray) -> np.ndarray:
        return capacity(self.route_sinr(p), self.bandwidth_hz)

    @classmethod
    def single_resource(cls, G: np.ndarray, noise: float, pmin, pmax,
                        bandwidth_hz: float = 180e3) -> "LinkSystem":
        """Links ``0..n-1`` on one resource with ``G[k, l]`` the gain from
        transmitter ``l`` to receiver ``k``; one single-hop route per link."""
        G = np.asarray(G, dtype=float)
        n = len(G)
        cross = G.copy()
        np.fill_diagonal(cross, 0.0)
        return cls(direct=np.diag(G).copy(), cross=cross, noise=noise,
                   pmin=np.broadcast_to(np.asarray(pmin, float), n).copy(),
                   pmax=np.broadcast_to(np.asarray(pmax, float), n).copy(),
                   fixed=np.zeros(n, dtype=bool), route_hops=[[k] for k in range(n)],
                   bandwidth_hz=bandwidth_hz, roles=[D2D] * n)


def build_link_system(table: RoutingTable, gains: np.ndarray, noise: float,
                      params: PowerParams, bandwidth_hz: float) -> LinkSystem:
    links = table.links
    L = len(links)
    tx = np.array([lk.tx_node for lk in links], dtype=int)
    rx = np.array([lk.rx_node for lk in links], dtype=int)
    q = table.link_resources()
    if L and q.min() < 0:
        raise ValueError("every link needs a resource before building the link system")
    direct = gains[tx, rx] if L else np.zeros(0)
    cross = gains[tx[None, :], rx[:, None]] if L else np.zeros((0, 0))
    mask = (q[:, None] == q[None, :]) & (tx[None, :] != rx[:, None])
    np.fill_diagonal(mask, False)
    cross = np.where(mask, cross, 0.0)
    fixed = np.array([lk.role == DOWNLINK for lk in links], dtype=bool)
    bs_w = dbm_to_w(params.bs_power_dbm)
    pmin = np.where(fixed, bs_w, dbm_to_w(params.ue_pmin_dbm))
    pmax = np.where(fixed, bs_w, dbm_to_w(params.ue_pmax_dbm))
    return LinkSystem(direct=np.asarray(direct, float), cross=cross, noise=noise,
                      pmin=pmin, pmax=pmax, fixed=fixed,
                      route_hops=[list(r.hop_links) for r in table.routes],
                      bandwidth_hz=bandwidth_hz, roles=[lk.role for lk in links])


# ---------------------------------------------------------------------------
# LTE-style baselines
# ---------------------------------------------------------------------------

def pc_lte_open_loop(pl_db, m_rbs: int = 1, p0_dbm: float = -10.0, alpha: float = 0.8,
                     pmax_dbm: float = 23.0, pmin_dbm: float = -23.0):
    """Fractional path-loss compensation, in dBm."""
    p = p0_dbm + 10.0 * math.log10(m_rbs) + alpha * np.asarray(pl_db, dtype=float)
    out = np.clip(p, pmin_dbm, pmax_dbm)
    return float(out) if out.ndim == 0 else out


def pc_fixed(role: str, pl_db: float, params: PowerParams) -> float:
    """Fixed power for D2D links; cellular uplinks fall back to open loop."""
    if role == DOWNLINK:
        return params.bs_power_dbm
    if role == D2D:
        return float(np.clip(params.fixed_d2d_dbm, params.ue_pmin_dbm, params.ue_pmax_dbm))
    return pc_lte_open_loop(pl_db, params.ol_num_rbs, params.ol_p0_dbm, params.ol_alpha,
                            params.ue_pmax_dbm, params.ue_pmin_dbm)


def pc_fixed_snr(gamma_tgt_db: float, g: float, sigma_w: float,
                 pmin_dbm: float = -23.0, pmax_dbm: float = 23.0) -> float:
    """Noise-only channel inversion to an SNR target, in dBm."""
    if not g > 0:
        raise ValueError("gain must be positive")
    p_dbm = gamma_tgt_db + w_to_dbm(sigma_w) - 10.0 * math.log10(g)
    return float(np.clip(p_dbm, pmin_dbm, pmax_dbm))


def pc_lte_closed_loop(p_dbm, achieved_sinr_db, gamma_tgt_db: float = 15.0,
                       step_db: float = 1.0, deadzone_db: float = 0.5,
                       pmin_dbm: float = -23.0, pmax_dbm: float = 23.0):
    """One up/down power command per link, in dBm."""
    err = np.asarray(gamma_tgt_db, float) - np.asarray(achieved_sinr_db, float)
    cmd = np.where(err > deadzone_db, step_db, np.where(err < -deadzone_db, -step_db, 0.0))
    out = np.clip(np.asarray(p_dbm, float) + cmd, pmin_dbm, pmax_dbm)
    return float(out) if out.ndim == 0 else out


def run_closed_loop(system: LinkSystem, p: np.ndarray, active: np.ndarray,
                    params: PowerParams, iters: int | None = None) -> np.ndarray:
    """Synchronous closed-loop updates for the links flagged ``active``."""
    p = p.copy()
    for _ in range(iters or params.cl_iters):
        g_db = 10.0 * np.log10(system.sinr(p))
        new = pc_lte_closed_loop(w_to_dbm(p), g_db, params.snr_target_db,
                                 params.cl_step_db, params.cl_deadzone_db,
                                 params.ue_pmin_dbm, params.ue_pmax_dbm)
        p = np.where(active, dbm_to_w(new), p)
    return p


# ---------------------------------------------------------------------------
# SINR-target following and utility maximisation
# ---------------------------------------------------------------------------

def zander_inner_loop(system: LinkSystem, p_init: np.ndarray, link_targets: np.ndarray,
                      iters: int = 10) -> np.ndarray:
    """Synchronous target-following power iteration.

    Each link scales its power by ``target / measured SINR`` and clamps to
    its bounds. Fixed links are left untouched.
    """
    p = np.clip(np.asarray(p_init, dtype=float), system.pmin, system.pmax)
    free = ~system.fixed
    for _ in range(iters):
        with np.errstate(divide="ignore"):      # zero SINR pushes the link to pmax
            update = np.clip(p * link_targets / system.sinr(p), system.pmin, system.pmax)
        p = np.where(free, update, p)
    return p


def um_objective(system: LinkSystem, p: np.ndarray, omega: float) -> float:
    """Sum of log end-to-end rates minus the weighted UE transmit power."""
    rates = system.route_rates(p)
    with np.errstate(divide="ignore"):
        utility = np.log(rates).sum()
    return float(utility - omega * p[~system.fixed].sum())


def transformed_objective(s_log: np.ndarray, p_log: np.ndarray, omega: float) -> float:
    """Objective in log-rate / log-power coordinates (log utility)."""
    return float(np.sum(s_log) - omega * np.sum(np.exp(p_log)))


def log_capacity_margin(system: LinkSystem, s_log: np.ndarray, p_log: np.ndarray) -> np.ndarray:
    """Per-link ``log c_l(exp(p_log)) - log(rate of the route on l)``.

    Feasible points are those with a non-negative margin everywhere.
    """
    c = capacity(system.sinr(np.exp(p_log)), system.bandwidth_hz)
    owner = system.route_of_link()
    return np.log(c) - np.asarray(s_log)[owner]


@dataclass
class UmResult:
    targets: np.ndarray          # linear SINR target per route
    p: np.ndarray                # per-link power, watts
    rates: np.ndarray            # per-route end-to-end rate, bit/s
    prices: np.ndarray           # per-route dual price of the binding hop
    objective: list[float]
    iterations: int
    converged: bool
    restarts: int = 0


def _log_rate_slope(gamma: np.ndarray) -> np.ndarray:
    # d ln(log2(1 + g)) / d ln g
    return gamma / ((1.0 + gamma) * np.log1p(gamma))


def _target_bounds(system: LinkSystem, p: np.ndarray, cap: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-route SINR window reachable with the current interference.

    Below the lower edge every hop already sits at minimum power; above the
    upper edge some hop would need more than its maximum power.
    """
    denom = system.noise + system.interference(p)
    at_min = system.direct * system.pmin / denom
    at_max = system.direct * system.pmax / denom
    lo = np.array([at_min[hl].min() for hl in system.route_hops])
    hi = np.array([min(at_max[hl].min(), cap) for hl in system.route_hops])
    return lo, hi


def um_solve(config: UmConfig, system: LinkSystem) -> UmResult:
    """Utility-maximising SINR-target setting with a target-following inner loop.

    Outer loop: scaled gradient ascent on the log SINR target of each route
    (one target shared by all hops of the route). The utility slope is
    exact; the power slope uses the frozen-interference estimate
    ``d p / d log(target) = p``. The step on route ``i`` is
    ``step * log(utility slope / power slope)``, which has the sign of the
    gradient. A step that lowers the objective is halved; if every halving
    fails the solver stops. Targets are projected onto the window reachable
    with the current interference.

    Inner loop: ``inner_iters`` rounds of :func:`zander_inner_loop`, warm
    started from the previous powers.
    """
    config.validate()
    if system.num_routes == 0:
        empty = np.zeros(0)
        return UmResult(empty, np.zeros(system.num_links), empty, empty, [], 0, True)
    cap = 10.0 ** (config.target_max_db / 10.0)
    owner = system.route_of_link()
    free = ~system.fixed

    def evaluate(x, p_start):
        p = zander_inner_loop(system, p_start, np.exp(x)[owner], config.inner_iters)
        return um_objective(system, p, config.omega), p

    restarts = 0
    while True:
        x = np.full(system.num_routes, config.gamma_tgt_init_db * math.log(10.0) / 10.0)
        p0 = np.where(system.fixed, system.pmin, dbm_to_w(config.p_init_dbm))
        J, p = evaluate(x, p0)
        history = [J]
        converged = False
        it = 0
        ok = math.isfinite(J)
        while ok and it < config.outer_iters:
            it += 1
            gamma = np.exp(x)
            util_slope = _log_rate_slope(gamma)
            power_slope = config.omega * np.array(
                [p[[l for l in hl if free[l]]].sum() for hl in system.route_hops])
            with np.errstate(divide="ignore"):
                direction = np.log(util_slope) - np.log(power_slope)
            direction = np.clip(direction, -config.max_log_step, config.max_log_step)
            lo, hi = _target_bounds(system, p, cap)
            eta = config.step_size
            accepted = False
            for _ in range(config.max_halvings + 1):
                x_new = np.minimum(np.maximum(x + eta * direction, np.log(lo)), np.log(hi))
                J_new, p_new = evaluate(x_new, p)
                if not math.isfinite(J_new):
                    ok = False
                    break
                if J_new >= J:
                    accepted = True
                    break
                eta /= 2.0
            if not ok:
                break
            if not accepted:
                converged = True
                break
            change = np.max(np.abs(np.expm1(x_new - x)))
            x, p, J = x_new, p_new, J_new
            history.append(J)
            if change < config.epsilon:
                converged = True
                break
        if ok:
            break
        if restarts >= 1:
            raise SolverError("objective is not finite after a restart")
        restarts += 1

    rates = system.route_rates(p)
    return UmResult(targets=np.exp(x), p=p, rates=rates, prices=1.0 / rates,
                    objective=history, iterations=it, converged=converged,
                    restarts=restarts)


# ---------------------------------------------------------------------------
# Scheme dispatch
# ---------------------------------------------------------------------------

def path_loss_db(system: LinkSystem) -> np.ndarray:
    return -10.0 * np.log10(system.direct)


def apply_power_control(scheme, system: LinkSystem, params: PowerParams,
                        um: UmConfig | None = None) -> tuple[np.ndarray, UmResult | None]:
    """Per-link transmit powers (watts) under one scheme.

    Uplinks (any link terminating at a BS) use LTE open loop except under
    utility maximisation; downlinks keep the fixed BS power.
    """
    scheme = PcScheme.parse(scheme)
    params.validate()
    roles = np.array(system.roles) if system.roles else np.full(system.num_links, D2D)
    d2d = roles == D2D
    pl = path_loss_db(system)
    ol = dbm_to_w(pc_lte_open_loop(pl, params.ol_num_rbs, params.ol_p0_dbm, params.ol_alpha,
                                   params.ue_pmax_dbm, params.ue_pmin_dbm))
    p = np.where(system.fixed, system.pmin, ol)
    if scheme is PcScheme.UTILITY_MAX:
        res = um_solve(um or UmConfig(), system)
        return res.p, res
    if scheme is PcScheme.FIX:
        p = np.where(d2d, dbm_to_w(pc_fixed(D2D, 0.0, params)), p)
    elif scheme is PcScheme.FIX_SNR:
        snr = np.array([pc_fixed_snr(params.snr_target_db, g, system.noise,
                                     params.ue_pmin_dbm, params.ue_pmax_dbm)
                        for g in system.direct]) if system.num_links else np.zeros(0)
        p = np.where(d2d, dbm_to_w(snr), p)
    elif scheme is PcScheme.CLOSED_LOOP:
        p = run_closed_loop(system, p, d2d, params)
    return p, None
