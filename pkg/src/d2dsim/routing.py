"""Links, routes and the three-dimensional routing matrix.

All ids (links, routes, resources, nodes) are 0-based. Hop numbers are
1-based, so hop 1 is the first transmission of a route.

Routes are stored sparsely as hop lists; :meth:`RoutingTable.dense` builds
the boolean ``L x I x Q`` tensor when a full view is needed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

CELLULAR_DIRECT = "cellular-direct"
CELLULAR_VIA_BS = "cellular-two-hop-via-BS"
D2D_SINGLE_HOP = "d2d-single-hop"
D2D_TWO_HOP = "d2d-two-hop"
ROUTE_KINDS = (CELLULAR_DIRECT, CELLULAR_VIA_BS, D2D_SINGLE_HOP, D2D_TWO_HOP)

# Link roles. A link terminating at a BS is an uplink whatever its origin.
UPLINK = "uplink"
D2D = "d2d"
DOWNLINK = "downlink"


class RoutingError(ValueError):
    pass


@dataclass(frozen=True)
class Link:
    id: int
    tx_node: int
    rx_node: int
    role: str = D2D

    def __post_init__(self):
        if self.tx_node == self.rx_node:
            raise RoutingError(f"link {self.id}: tx_node equals rx_node")


@dataclass
class Route:
    id: int
    kind: str
    hop_links: list[int]
    hop_resources: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ROUTE_KINDS:
            raise RoutingError(f"unknown route kind {self.kind!r}")
        if len(self.hop_links) not in (1, 2):
            raise RoutingError("a route has one or two hops")
        if self.hop_resources and len(self.hop_resources) != len(self.hop_links):
            raise RoutingError("hop_resources and hop_links differ in length")


def hops(route: Route) -> int:
    """Number of hops of a route (1 or 2)."""
    return len(route.hop_links)


def hop_link_resource(route: Route, h: int) -> tuple[int, int]:
    """``(link, resource)`` used on hop ``h`` (1-based) of ``route``."""
    if not 1 <= h <= hops(route):
        raise IndexError(f"hop {h} out of range for a {hops(route)}-hop route")
    if not route.hop_resources:
        raise RoutingError(f"route {route.id} has no resources assigned")
    return route.hop_links[h - 1], route.hop_resources[h - 1]


def equivalent_routing_matrix(R: np.ndarray) -> np.ndarray:
    """Collapse the resource axis: ``R~ = sum_q R[:, :, q]``.

    Raises :class:`RoutingError` if a link carries one route on more than
    one resource.
    """
    R = np.asarray(R)
    eq = R.astype(np.int64).sum(axis=2)
    if eq.size and eq.max() > 1:
        l, i = np.argwhere(eq > 1)[0]
        raise RoutingError(f"link {l} carries route {i} on {eq[l, i]} resources")
    return eq


def dense_matrix(routes: Sequence[Route], num_links: int, num_resources: int) -> np.ndarray:
    R = np.zeros((num_links, len(routes), num_resources), dtype=bool)
    for col, route in enumerate(routes):
        for h in range(1, hops(route) + 1):
            l, q = hop_link_resource(route, h)
            R[l, col, q] = True
    return R


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


# Violation kinds reported by validate().
CONSISTENCY = "consistency"
SPLIT_FLOW = "split_flow"
MULTIPLE_RECEIVERS = "multiple_receivers"
HALF_DUPLEX = "half_duplex"
ORTHOGONALITY = "orthogonality"


def validate(R: np.ndarray, routes: Sequence[Route], links: Sequence[Link],
             bs_nodes: Iterable[int]) -> list[Violation]:
    """Check a routing tensor against the allocation constraints.

    Resources are read from ``R``; the route records only give the hop
    order. Base stations may transmit to several receivers, UEs may not.
    Never raises; an empty list means the allocation is valid.
    """
    R = np.asarray(R, dtype=bool)
    bs_nodes = set(bs_nodes)
    out: list[Violation] = []
    L, I, Q = R.shape
    eq = R.astype(np.int64).sum(axis=2)

    for l, i in np.argwhere(eq > 1):
        out.append(Violation(SPLIT_FLOW, f"link {l} carries route {i} on {eq[l, i]} resources"))

    for col, route in enumerate(routes):
        members = set(route.hop_links)
        for l in route.hop_links:
            if eq[l, col] == 0:
                out.append(Violation(CONSISTENCY, f"route {route.id}: hop link {l} has no resource"))
        for l in np.flatnonzero(eq[:, col]):
            if l not in members:
                out.append(Violation(CONSISTENCY, f"route {route.id}: link {l} set but not a hop"))

    # A transmitting link serves exactly one route, and a UE transmits on one link.
    served = (eq > 0).sum(axis=1)
    for l in np.flatnonzero(served > 1):
        out.append(Violation(MULTIPLE_RECEIVERS, f"link {l} serves {served[l]} routes"))
    active = np.flatnonzero(served > 0)
    per_tx: dict[int, list[int]] = {}
    for l in active:
        tx = links[l].tx_node
        if tx not in bs_nodes:
            per_tx.setdefault(tx, []).append(int(l))
    for tx, ls in per_tx.items():
        if len(ls) > 1:
            out.append(Violation(MULTIPLE_RECEIVERS, f"node {tx} transmits on links {ls}"))

    for col, route in enumerate(routes):
        if hops(route) != 2:
            continue
        l1, l2 = route.hop_links
        clash = np.flatnonzero(R[l1, col] & R[l2, col])
        if clash.size:
            out.append(Violation(HALF_DUPLEX, f"route {route.id}: both hops on resource {clash[0]}"))

    per_q_use = R.sum(axis=1)  # (L, Q)
    by_bs: dict[int, list[int]] = {}
    for l in active:
        if links[l].rx_node in bs_nodes:
            by_bs.setdefault(links[l].rx_node, []).append(int(l))
    for bs, ls in by_bs.items():
        load = per_q_use[ls].sum(axis=0)
        for q in np.flatnonzero(load > 1):
            out.append(Violation(ORTHOGONALITY, f"BS {bs}: {load[q]} uplinks on resource {q}"))
    return out


@dataclass
class RoutingTable:
    """Per-drop set of active links and routes on ``num_resources`` RBs."""

    links: list[Link]
    routes: list[Route]
    num_resources: int

    @property
    def num_links(self) -> int:
        return len(self.links)

    def dense(self) -> np.ndarray:
        return dense_matrix(self.routes, self.num_links, self.num_resources)

    def link_resources(self) -> np.ndarray:
        """Resource of every link (``-1`` if unassigned)."""
        res = np.full(self.num_links, -1, dtype=int)
        for route in self.routes:
            for l, q in zip(route.hop_links, route.hop_resources):
                res[l] = q
        return res

    def link_routes(self) -> np.ndarray:
        owner = np.full(self.num_links, -1, dtype=int)
        for col, route in enumerate(self.routes):
            owner[route.hop_links] = col
        return owner

    def validate(self, bs_nodes: Iterable[int]) -> list[Violation]:
        return validate(self.dense(), self.routes, self.links, bs_nodes)

    def write_csv(self, path) -> None:
        """Debug dump: ``route_id,hop,link_id,resource,tx_node,rx_node``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["route_id", "hop", "link_id", "resource", "tx_node", "rx_node"])
            for route in self.routes:
                for h in range(1, hops(route) + 1):
                    l, q = hop_link_resource(route, h)
                    w.writerow([route.id, h, l, q, self.links[l].tx_node, self.links[l].rx_node])
