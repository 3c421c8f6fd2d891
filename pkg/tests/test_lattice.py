import numpy as np
import pytest

from dissipile import (ROOT, alpha_bijection, alpha_inverse, alpha_value,
                       boundary_enumeration, build_box, build_grid,
                       build_wired_graph, direction_index, direction_vectors,
                       domain_from_vertices)


def test_build_box_counts():
    assert len(build_box(2, 1, "cube")) == 9
    assert len(build_box(3, 0, "cube")) == 1
    # |x| <= 2 in Z^2, enumerated by hand: 1 + 4 + 4 + 4
    assert len(build_box(2, 2, "ball")) == 13


def test_build_box_errors():
    with pytest.raises(ValueError):
        build_box(4, 1)
    with pytest.raises(ValueError):
        build_box(2, -1)
    with pytest.raises(ValueError):
        build_box(2, 1, "torus")


def test_index_map_is_row_major_bijection():
    dom = build_box(2, 1, "cube")
    seen = set()
    prev = None
    for i in range(len(dom)):
        v = dom.vertex(i)
        assert dom.index(v) == i
        seen.add(v)
        if prev is not None:
            assert prev < v  # lexicographic
        prev = v
    assert len(seen) == 9
    assert dom.contains((1, 1)) and not dom.contains((2, 0))


def test_ball_membership_matches_inequality():
    dom = build_box(3, 3, "ball")
    for v in dom.vertices:
        assert (v.astype(int) ** 2).sum() <= 9
    # boundary case just outside
    assert not dom.contains((3, 1, 0))
    assert dom.contains((3, 0, 0))


def test_wired_graph_two_vertex():
    dom = domain_from_vertices(2, [(0, 0), (1, 0)])
    g = build_wired_graph(dom, False)
    for i in range(2):
        assert g.ordinary_root_multiplicity(i) == 3
        internal = [g.slot_endpoint(i, t) for t in range(4)]
        assert internal.count(ROOT) == 3
    assert g.edge_count() == (2 * 2 * 2, 0)
    gd = build_wired_graph(dom, True)
    assert gd.edge_count() == (8, 2)
    assert gd.slot_endpoint(0, 4) == ROOT


def test_wired_graph_single_vertex_d3():
    dom = build_box(3, 0, "cube")
    g = build_wired_graph(dom, True)
    assert g.ordinary_root_multiplicity(0) == 6
    assert g.nslots == 7


def test_alpha_examples():
    # P = {+e1, -e2}, K = {2, 3}
    m = alpha_bijection([(1, 0), (0, -1)], [2, 3], d=2)
    assert m[direction_index((1, 0), 2)] == 2
    assert m[direction_index((0, -1), 2)] == 3
    # all directions onto {0..2d-1} is the identity on indices
    m = alpha_bijection(range(4), range(4), d=2)
    assert m == {0: 0, 1: 1, 2: 2, 3: 3}
    m = alpha_bijection([(- 1, 0)], [3], d=2)
    assert m == {1: 3}


def test_alpha_errors_and_monotone():
    with pytest.raises(ValueError):
        alpha_bijection([0, 1], [0], d=2)
    with pytest.raises(ValueError):
        alpha_bijection([], [], d=2)
    rng = np.random.default_rng(0)
    for _ in range(50):
        d = int(rng.integers(2, 4))
        size = int(rng.integers(1, 2 * d + 1))
        p = sorted(rng.choice(2 * d, size=size, replace=False).tolist())
        k0 = int(rng.integers(0, 2 * d - size + 1))
        m = alpha_bijection(p, range(k0, k0 + size), d=d)
        vals = [m[i] for i in sorted(m)]
        assert vals == sorted(vals) == list(range(k0, k0 + size))
        for t in p:
            assert alpha_inverse(p, d, k0, alpha_value(p, d, k0, t)) == t


def test_boundary_enumeration_d2_k0():
    bo = boundary_enumeration(build_box(2, 0, "cube"))
    assert len(bo.boundary) == 4
    assert len(bo.interior) == 1
    assert all(bo.witness_dist[1:] == 2)


def test_boundary_enumeration_d2_k1():
    bo = boundary_enumeration(build_box(2, 1, "cube"))
    assert len(bo.boundary) == 12
    assert len(bo.interior) == 9
    assert all(bo.witness_dist[1:] <= 2)


def test_boundary_enumeration_d3_k0():
    bo = boundary_enumeration(build_box(3, 0, "cube"))
    assert len(bo.boundary) == 6
    # no two of the six are lattice-adjacent: the relaxed witness is at
    # distance exactly 2
    assert all(bo.witness_dist[1:] == 2)


@pytest.mark.parametrize("d,k", [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)])
def test_boundary_witness_contract(d, k):
    bo = boundary_enumeration(build_box(d, k, "cube"))
    n_expected = 2 * d * (2 * k + 1) ** (d - 1)
    assert len(bo.boundary) == n_expected
    # every vertex appears once and each later one has a nearby witness
    assert len({tuple(v) for v in bo.boundary}) == n_expected
    for j in range(1, len(bo.boundary)):
        i = bo.witness[j]
        assert 0 <= i < j
        dist = int(np.abs(bo.boundary[j] - bo.boundary[i]).sum())
        assert dist == bo.witness_dist[j] <= 2
    # the recorded witness is minimal over earlier vertices
    for j in range(1, len(bo.boundary), max(1, len(bo.boundary) // 7)):
        dists = np.abs(bo.boundary[:j] - bo.boundary[j]).sum(axis=1)
        assert bo.witness_dist[j] == dists.min()


def test_boundary_interior_is_index_order():
    dom = build_box(2, 1, "cube")
    bo = boundary_enumeration(dom)
    assert (bo.interior == dom.vertices).all()


def test_boundary_enumeration_rejects_non_cube():
    with pytest.raises(ValueError):
        boundary_enumeration(build_box(2, 2, "ball"))


def test_grid_and_custom_domains():
    g = build_grid(2, (2, 3))
    assert len(g) == 6
    c = domain_from_vertices(2, [(0, 0), (1, 0), (0, 0)])
    assert len(c) == 2  # deduplicated
    with pytest.raises(ValueError):
        build_grid(2, (0, 3))
