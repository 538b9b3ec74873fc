import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from shadowhull.geometry import (PointLineGeometry, bfs_distances, complement_connected,
                                 find_isomorphism, generated_subspace, is_hyperplane,
                                 is_maximal_subspace, is_subspace, spanning_structures,
                                 validate_geometry)
from shadowhull.gf import get_field
from shadowhull.shadowfar import point_line_geometry
from shadowhull.veronese import projective_geometry

from conftest import shadows

FANO_LINES = [(0, 1, 2), (0, 3, 4), (0, 5, 6), (1, 3, 5), (1, 4, 6), (2, 3, 6), (2, 4, 5)]


def fano():
    return PointLineGeometry(7, FANO_LINES)


def grid(n=3):
    rows = [tuple(r * n + c for c in range(n)) for r in range(n)]
    cols = [tuple(r * n + c for r in range(n)) for c in range(n)]
    return PointLineGeometry(n * n, rows + cols)


def cycle(n):
    return PointLineGeometry(n, [(i, (i + 1) % n) for i in range(n)])


def dual_polar_c3():
    return point_line_geometry(shadows("C3(2)", 3))


def test_fano_is_valid():
    rep = validate_geometry(fano())
    assert rep.ok and rep.witnesses == {}


def test_two_lines_sharing_two_points_fail_with_the_pair():
    g = PointLineGeometry(7, FANO_LINES + [(0, 1, 3)])
    rep = validate_geometry(g)
    assert not rep.lines_meet_once
    a, b = rep.witnesses["lines_meet_once"]
    assert len(set(g.lines[a]) & set(g.lines[b])) >= 2


def test_other_axiom_failures_have_witnesses():
    rep = validate_geometry(PointLineGeometry(4, [(0, 1), (1, 2), (2, 3), (3,)]))
    assert not rep.line_sizes and rep.witnesses["line_sizes"] == 3
    assert not rep.point_degrees
    two = PointLineGeometry(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    rep = validate_geometry(two)
    assert not rep.connected and rep.witnesses["connected"] == [0, 3]


def test_dual_polar_c3():
    g = dual_polar_c3()
    assert g.num_points == 135 and len(g.lines) == 315
    assert validate_geometry(g).ok
    span = spanning_structures(g)
    assert span.components == 1 and span.diameter == 3


def test_spanning_structures_small():
    s = spanning_structures(fano())
    assert s.components == 1 and s.diameter == 1
    assert s.parent[0] == -1 and all(s.parent[p] == 0 for p in range(1, 7))
    two = PointLineGeometry(6, [(0, 1, 2), (3, 4, 5)])
    s2 = spanning_structures(two)
    assert s2.components == 2 and s2.diameter is None


def test_generated_subspace_examples():
    g = fano()
    assert generated_subspace(g, {0, 1, 2}) == {0, 1, 2}
    assert generated_subspace(g, {0, 1, 3}) == set(range(7))
    assert generated_subspace(g, set()) == set()
    assert generated_subspace(dual_polar_c3(), set()) == set()


def test_closure_operator_exhaustive_on_fano():
    g = fano()
    subsets = [frozenset(c) for r in range(8) for c in itertools.combinations(range(7), r)]
    closure = {s: generated_subspace(g, s) for s in subsets}
    for s in subsets:
        c = closure[s]
        assert s <= c
        assert generated_subspace(g, c) == c
        assert is_subspace(g, c)
    for s, t in itertools.combinations(subsets, 2):
        if s <= t:
            assert closure[s] <= closure[t]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 134), min_size=0, max_size=4), st.lists(st.integers(0, 134), max_size=3))
def test_closure_operator_sampled_on_dual_polar(seed, extra):
    g = _DP
    c = generated_subspace(g, seed)
    assert set(seed) <= c
    assert generated_subspace(g, c) == c
    assert c <= generated_subspace(g, set(seed) | set(extra))


_DP = dual_polar_c3()


def test_hyperplane_examples():
    g = fano()
    assert is_hyperplane(g, {0, 1, 2})
    assert not is_hyperplane(g, {0})
    assert not is_hyperplane(g, set(range(7)))


def test_dual_polar_far_from_point_is_hyperplane():
    g = _DP
    for x in (0, 17, 134):
        d = bfs_distances(g, x)
        h = {p for p in range(g.num_points) if d[p] <= 2}
        assert is_hyperplane(g, h)
        assert len(h) == 135 - 64


def _all_hyperplanes(g):
    for r in range(g.num_points):
        for c in itertools.combinations(range(g.num_points), r):
            if is_hyperplane(g, c):
                yield frozenset(c)


@pytest.mark.parametrize("g", [fano(), grid(), cycle(4), cycle(6), grid(2)],
                         ids=["fano", "grid3", "c4", "c6", "grid2"])
def test_hyperplane_maximal_iff_complement_connected(g):
    seen = {True: 0, False: 0}
    for h in _all_hyperplanes(g):
        conn = complement_connected(g, h)
        assert is_maximal_subspace(g, h) == conn
        seen[conn] += 1
    assert seen[True] or seen[False]


def test_both_directions_are_exercised():
    cases = [complement_connected(g, h) for g in (cycle(4), cycle(6), grid()) for h in _all_hyperplanes(g)]
    assert True in cases and False in cases


def test_dual_polar_hyperplane_is_maximal():
    d = bfs_distances(_DP, 0)
    h = {p for p in range(135) if d[p] <= 2}
    assert complement_connected(_DP, h)
    assert is_maximal_subspace(_DP, h)


def test_json_round_trip():
    g = _DP
    back = PointLineGeometry.from_json(g.to_json())
    assert back.num_points == g.num_points and back.lines == g.lines


def test_projective_plane_builder_matches_fano_up_to_isomorphism():
    pg, _ = projective_geometry(3, get_field(2))
    assert pg.num_points == 7 and len(pg.lines) == 7
    assert find_isomorphism(pg, fano()) is not None


def test_find_isomorphism_random_relabel_and_negative():
    g = _DP
    rng = random.Random(3)
    perm = list(range(135))
    rng.shuffle(perm)
    h = PointLineGeometry(135, [tuple(perm[p] for p in l) for l in g.lines])
    fmap = find_isomorphism(g, h)
    assert fmap is not None
    assert {tuple(sorted(fmap[p] for p in l)) for l in g.lines} == set(h.lines)
    assert find_isomorphism(grid(), PointLineGeometry(9, [(0, 1, 2), (3, 4, 5), (6, 7, 8),
                                                        (0, 3, 6), (1, 4, 7), (2, 5, 8)])) is not None
    assert find_isomorphism(fano(), grid()) is None
    assert find_isomorphism(cycle(6), PointLineGeometry(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])) is None
