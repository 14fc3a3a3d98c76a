"""Forced and harmonic-mean mode selection for D2D candidates."""

from __future__ import annotations

import enum

from .geometry import Deployment, ScenarioKind


class ModeDecision(enum.Enum):
    CELLULAR = "cellular"
    D2D_SINGLE_HOP = "d2d_single_hop"
    D2D_TWO_HOP = "d2d_two_hop"


class MsPolicy(enum.Enum):
    CMODE = "cmode"
    DMS = "dms"
    HMS = "hms"

    @classmethod
    def parse(cls, value) -> "MsPolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown mode-selection policy {value!r}") from None


def equivalent_gain(g_a: float, g_b: float) -> float:
    """Gain of a two-hop path as the harmonic combination of its hops."""
    if not (g_a > 0 and g_b > 0):
        raise ValueError("gains must be positive")
    return 1.0 / (1.0 / g_a + 1.0 / g_b)


def hms_proximity(g_eq: float, g_tx_rx: float, g_tx_bs: float) -> ModeDecision:
    if g_eq >= max(g_tx_rx, g_tx_bs):
        return ModeDecision.D2D_TWO_HOP
    if g_tx_rx >= g_tx_bs:
        return ModeDecision.D2D_SINGLE_HOP
    return ModeDecision.CELLULAR


def hms_range_extension(g_eq: float, g_tx_bs: float) -> ModeDecision:
    if g_eq >= g_tx_bs:
        return ModeDecision.D2D_TWO_HOP
    return ModeDecision.CELLULAR


def select_modes(policy, scenario, deployment: Deployment) -> list[ModeDecision]:
    """One decision per D2D triplet, in triplet order.

    Decisions use the large-scale gains of the drop (path loss and
    shadowing, no fast fading). The serving BS of a triplet is the BS of
    the cell it was dropped in.
    """
    policy = MsPolicy.parse(policy)
    scenario = ScenarioKind.parse(scenario)
    proximity = scenario is ScenarioKind.PROXIMITY
    G = deployment.large_scale_gains
    out = []
    for k in range(deployment.num_triplets):
        tx, relay, rx = deployment.triplet_nodes(k)
        bs = deployment.bs_node(deployment.triplet_cells[k])
        if policy is MsPolicy.CMODE:
            out.append(ModeDecision.CELLULAR)
        elif proximity:
            if policy is MsPolicy.DMS:
                out.append(ModeDecision.D2D_SINGLE_HOP if G[tx, rx] >= G[tx, bs]
                           else ModeDecision.CELLULAR)
            else:
                g_eq = equivalent_gain(G[tx, relay], G[relay, rx])
                out.append(hms_proximity(g_eq, G[tx, rx], G[tx, bs]))
        else:
            if policy is MsPolicy.DMS:
                out.append(ModeDecision.D2D_TWO_HOP)
            else:
                g_eq = equivalent_gain(G[tx, relay], G[relay, bs])
                out.append(hms_range_extension(g_eq, G[tx, bs]))
    return out
