"""Random resource-block allocation under the half-duplex and intracell
orthogonality constraints, plus construction of the per-drop links/routes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Deployment, ScenarioKind
from .modeselect import ModeDecision
from .routing import (CELLULAR_DIRECT, CELLULAR_VIA_BS, D2D, D2D_SINGLE_HOP,
                      D2D_TWO_HOP, DOWNLINK, UPLINK, Link, Route, RoutingTable)


class AllocationError(RuntimeError):
    pass


@dataclass
class AllocationProblem:
    links: list[Link]
    routes: list[Route]          # hop_resources left empty
    num_resources: int
    bs_nodes: frozenset[int]

    def check(self) -> None:
        if any(len(r.hop_links) == 2 for r in self.routes) and self.num_resources < 2:
            raise AllocationError("two-hop routes need at least two resources")
        for bs, n in self.uplinks_per_bs().items():
            if n > self.num_resources:
                raise AllocationError(
                    f"BS {bs} has {n} uplinks but only {self.num_resources} resources")

    def uplinks_per_bs(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for link in self.links:
            if link.rx_node in self.bs_nodes:
                counts[link.rx_node] = counts.get(link.rx_node, 0) + 1
        return counts


def build_problem(deployment: Deployment, modes: list[ModeDecision],
                  num_resources: int) -> AllocationProblem:
    """Materialise the active links and routes of a drop.

    Route ``i`` belongs to entity ``i``: cellular UEs first, then the D2D
    triplets in order. A proximity candidate in cellular mode goes through
    its serving BS (uplink hop, then a downlink hop to the Rx).
    """
    if len(modes) != deployment.num_triplets:
        raise ValueError("one mode decision per triplet is required")
    proximity = deployment.scenario is ScenarioKind.PROXIMITY
    links: list[Link] = []
    routes: list[Route] = []

    def add_link(tx, rx, role):
        links.append(Link(len(links), int(tx), int(rx), role))
        return len(links) - 1

    for k in range(deployment.num_cues):
        bs = deployment.bs_node(deployment.cue_cells[k])
        l = add_link(deployment.cue_node(k), bs, UPLINK)
        routes.append(Route(len(routes), CELLULAR_DIRECT, [l]))

    for k, mode in enumerate(modes):
        tx, relay, rx = deployment.triplet_nodes(k)
        bs = deployment.bs_node(deployment.triplet_cells[k])
        dest = rx if proximity else bs
        dest_role = D2D if proximity else UPLINK
        if mode is ModeDecision.D2D_TWO_HOP:
            hops = [add_link(tx, relay, D2D), add_link(relay, dest, dest_role)]
            routes.append(Route(len(routes), D2D_TWO_HOP, hops))
        elif mode is ModeDecision.D2D_SINGLE_HOP:
            if not proximity:
                raise ValueError("single-hop D2D is not a range-extension mode")
            routes.append(Route(len(routes), D2D_SINGLE_HOP, [add_link(tx, rx, D2D)]))
        elif proximity:
            hops = [add_link(tx, bs, UPLINK), add_link(bs, rx, DOWNLINK)]
            routes.append(Route(len(routes), CELLULAR_VIA_BS, hops))
        else:
            routes.append(Route(len(routes), CELLULAR_DIRECT, [add_link(tx, bs, UPLINK)]))

    return AllocationProblem(links, routes, num_resources,
                             frozenset(range(deployment.num_bs)))


def allocate_random(problem: AllocationProblem, rng: np.random.Generator) -> RoutingTable:
    """Assign one resource per link at random.

    Uplinks of each BS are drawn without replacement. Every other hop is
    drawn uniformly from the pool minus the resource of the other hop of
    its route.
    """
    problem.check()
    Q = problem.num_resources
    res = np.full(len(problem.links), -1, dtype=int)

    by_bs: dict[int, list[int]] = {}
    for link in problem.links:
        if link.rx_node in problem.bs_nodes:
            by_bs.setdefault(link.rx_node, []).append(link.id)
    for bs in sorted(by_bs):
        ls = by_bs[bs]
        res[ls] = rng.choice(Q, size=len(ls), replace=False)

    # Downlinks of one BS are also kept apart so a BS never sends two
    # streams on one resource.
    dl_used: dict[int, set[int]] = {}
    for route in problem.routes:
        for h, l in enumerate(route.hop_links):
            if res[l] >= 0:
                continue
            forbidden = set()
            if len(route.hop_links) == 2:
                forbidden.add(int(res[route.hop_links[1 - h]]))
            link = problem.links[l]
            if link.role == DOWNLINK:
                forbidden |= dl_used.setdefault(link.tx_node, set())
            allowed = [q for q in range(Q) if q not in forbidden]
            if not allowed:
                raise AllocationError(f"no resource left for link {l}")
            res[l] = allowed[int(rng.integers(len(allowed)))]
            if link.role == DOWNLINK:
                dl_used[link.tx_node].add(int(res[l]))

    routes = [Route(r.id, r.kind, list(r.hop_links), [int(res[l]) for l in r.hop_links])
              for r in problem.routes]
    return RoutingTable(list(problem.links), routes, Q)
