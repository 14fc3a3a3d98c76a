import numpy as np
import pytest
from hypothesis import given, strategies as st

from d2dsim.routing import (CELLULAR_DIRECT, CONSISTENCY, D2D, D2D_SINGLE_HOP,
                            D2D_TWO_HOP, HALF_DUPLEX, MULTIPLE_RECEIVERS, ORTHOGONALITY,
                            SPLIT_FLOW, UPLINK, Link, Route, RoutingError, RoutingTable,
                            dense_matrix, equivalent_routing_matrix, hop_link_resource,
                            hops, validate)


def example_network():
    """Three routes on five links and three resources; nodes 0..6, no BS.

    Route 0: links 0 -> 1 (resources 0, 2); route 1: link 2 (resource 1);
    route 2: links 3 -> 4 (resources 2, 0).
    """
    links = [Link(0, 0, 1), Link(1, 1, 2), Link(2, 3, 4), Link(3, 5, 6), Link(4, 6, 0)]
    routes = [Route(0, D2D_TWO_HOP, [0, 1], [0, 2]),
              Route(1, D2D_SINGLE_HOP, [2], [1]),
              Route(2, D2D_TWO_HOP, [3, 4], [2, 0])]
    return links, routes


def example_tensor():
    R1 = [[1, 0, 0], [0, 0, 0], [0, 0, 0], [0, 0, 0], [0, 0, 1]]
    R2 = [[0, 0, 0], [0, 0, 0], [0, 1, 0], [0, 0, 0], [0, 0, 0]]
    R3 = [[0, 0, 0], [1, 0, 0], [0, 0, 0], [0, 0, 1], [0, 0, 0]]
    return np.stack([R1, R2, R3], axis=2).astype(bool)


def test_example_matches_reference_tensor():
    links, routes = example_network()
    assert np.array_equal(dense_matrix(routes, 5, 3), example_tensor())


def test_equivalent_matrix_of_example():
    eq = equivalent_routing_matrix(example_tensor())
    assert eq.tolist() == [[1, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, 1]]


def test_equivalent_matrix_of_zeros():
    assert not equivalent_routing_matrix(np.zeros((4, 2, 3), bool)).any()


def test_equivalent_matrix_single_entry():
    R = np.zeros((4, 2, 5), bool)
    R[2, 1, 3] = True
    eq = equivalent_routing_matrix(R)
    assert eq[2, 1] == 1 and eq.sum() == 1


def test_equivalent_matrix_rejects_split_flow():
    R = np.zeros((2, 1, 3), bool)
    R[0, 0, [0, 2]] = True
    with pytest.raises(RoutingError):
        equivalent_routing_matrix(R)


def test_hops_of_example():
    _, routes = example_network()
    assert [hops(r) for r in routes] == [2, 1, 2]


def test_hops_of_single_link_route():
    assert hops(Route(0, CELLULAR_DIRECT, [7], [4])) == 1


def test_hop_link_resource_of_example():
    # Third route, second hop: fifth link on the first resource.
    _, routes = example_network()
    assert hop_link_resource(routes[2], 2) == (4, 0)
    assert hop_link_resource(routes[2], 2)[0] == 4


def test_hop_link_resource_trivial_and_range():
    r = Route(0, CELLULAR_DIRECT, [7], [4])
    assert hop_link_resource(r, 1) == (7, 4)
    with pytest.raises(IndexError):
        hop_link_resource(r, 2)
    with pytest.raises(IndexError):
        hop_link_resource(r, 0)


def test_route_and_link_invariants():
    with pytest.raises(RoutingError):
        Link(0, 3, 3)
    with pytest.raises(RoutingError):
        Route(0, D2D_TWO_HOP, [0, 1, 2])
    with pytest.raises(RoutingError):
        Route(0, "bogus", [0])


def test_example_is_valid():
    links, routes = example_network()
    assert validate(example_tensor(), routes, links, bs_nodes=[]) == []


def test_equal_hop_resources_violate_half_duplex():
    links, routes = example_network()
    routes[0].hop_resources = [2, 2]
    kinds = {v.kind for v in validate(dense_matrix(routes, 5, 3), routes, links, [])}
    assert kinds == {HALF_DUPLEX}


def test_two_uplinks_of_one_cell_on_one_resource():
    # Hand-built: UEs 1 and 2 both send to BS 0 on resource 5.
    links = [Link(0, 1, 0, UPLINK), Link(1, 2, 0, UPLINK)]
    routes = [Route(0, CELLULAR_DIRECT, [0], [5]), Route(1, CELLULAR_DIRECT, [1], [5])]
    out = validate(dense_matrix(routes, 2, 6), routes, links, bs_nodes=[0])
    assert [v.kind for v in out] == [ORTHOGONALITY]
    routes[1].hop_resources = [4]
    assert validate(dense_matrix(routes, 2, 6), routes, links, bs_nodes=[0]) == []


def test_uplinks_of_different_cells_may_share():
    links = [Link(0, 2, 0, UPLINK), Link(1, 3, 1, UPLINK)]
    routes = [Route(0, CELLULAR_DIRECT, [0], [5]), Route(1, CELLULAR_DIRECT, [1], [5])]
    assert validate(dense_matrix(routes, 2, 6), routes, links, bs_nodes=[0, 1]) == []


# Single-constraint mutations of the valid example.

def mutate_half_duplex(links, routes, R):
    routes[2].hop_resources = [0, 0]
    R = dense_matrix(routes, len(links), R.shape[2])
    return links, routes, R


def mutate_split_flow(links, routes, R):
    R = R.copy()
    R[2, 1, 0] = True
    return links, routes, R


def mutate_consistency(links, routes, R):
    R = R.copy()
    R[1, 0, :] = False
    return links, routes, R


def mutate_multiple_receivers(links, routes, R):
    links = links + [Link(5, 3, 5)]
    routes = routes + [Route(3, D2D_SINGLE_HOP, [5], [2])]
    return links, routes, dense_matrix(routes, len(links), R.shape[2])


def mutate_orthogonality(links, routes, R):
    links = [Link(l.id, l.tx_node, l.rx_node, UPLINK if l.rx_node == 0 else D2D) for l in links]
    links = links + [Link(5, 7, 0, UPLINK)]
    routes = routes + [Route(3, CELLULAR_DIRECT, [5], [0])]
    return links, routes, dense_matrix(routes, len(links), R.shape[2])


MUTATIONS = {HALF_DUPLEX: mutate_half_duplex, SPLIT_FLOW: mutate_split_flow,
             CONSISTENCY: mutate_consistency, MULTIPLE_RECEIVERS: mutate_multiple_receivers,
             ORTHOGONALITY: mutate_orthogonality}


@pytest.mark.parametrize("kind", sorted(MUTATIONS))
def test_mutation_flags_exactly_its_constraint(kind):
    links, routes = example_network()
    links, routes, R = MUTATIONS[kind](links, routes, example_tensor())
    bs = [0] if kind == ORTHOGONALITY else []
    found = {v.kind for v in validate(R, routes, links, bs)}
    assert found == {kind}


def test_orthogonality_mutation_base_is_valid_with_bs():
    links, routes = example_network()
    links = [Link(l.id, l.tx_node, l.rx_node, UPLINK if l.rx_node == 0 else D2D) for l in links]
    assert validate(example_tensor(), routes, links, [0]) == []


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 2), st.integers(0, 3)),
                min_size=0, max_size=8, unique_by=lambda t: t[0]))
def test_equivalent_matrix_is_additive_over_disjoint_routes(entries):
    # Each link used at most once, so routes are disjoint.
    L, I, Q = 5, 3, 4
    total = np.zeros((L, I, Q), bool)
    parts = []
    for l, i, q in entries:
        part = np.zeros((L, I, Q), bool)
        part[l, i, q] = True
        parts.append(part)
        total |= part
    expected = sum((equivalent_routing_matrix(p) for p in parts), np.zeros((L, I), int))
    assert np.array_equal(equivalent_routing_matrix(total), expected)


def test_round_trip_with_tensor():
    links, routes = example_network()
    R = dense_matrix(routes, 5, 3)
    for i, r in enumerate(routes):
        for h in range(1, hops(r) + 1):
            l, q = hop_link_resource(r, h)
            assert R[l, i, q]


def test_routing_table_helpers(tmp_path):
    links, routes = example_network()
    table = RoutingTable(links, routes, 3)
    assert table.link_resources().tolist() == [0, 2, 1, 2, 0]
    assert table.link_routes().tolist() == [0, 0, 1, 2, 2]
    assert table.validate([]) == []
    path = tmp_path / "routes.csv"
    table.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "route_id,hop,link_id,resource,tx_node,rx_node"
    assert lines[-1] == "2,2,4,0,6,0"
    assert len(lines) == 6
