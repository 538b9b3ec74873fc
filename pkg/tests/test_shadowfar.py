import dataclasses
import itertools

import pytest

from shadowhull.errors import ContractViolation, ResourceLimitError
from shadowhull.formspace import FormedSpace
from shadowhull.geometry import PointLineGeometry, find_isomorphism, validate_geometry
from shadowhull.gf import get_field
from shadowhull.shadowfar import (expansion, expansion_matches_far, far_truncation, is_flag,
                                  local_geometry, local_geometry_direct, minimal_flag_types,
                                  shadow_geometry, star_condition)
from shadowhull.veronese import grassmann_geometry, natural_embedding, projective_geometry

from conftest import building, rep, shadows


def _bits(m):
    return [i for i in range(m.bit_length()) if m >> i & 1]


def test_c3_shadow_counts():
    assert shadows("C3(2)", 3).counts() == {1: 135, 2: 315, 3: 63}


def test_a3_shadow_counts():
    counts = shadows("A3(2)", 2).counts()
    assert counts[1] == 35


def test_shadow_of_full_flag_is_single_point():
    sg = shadows("C3(2)", 3)
    b = sg.building
    for i in (0, 50, 134):
        flag = b.flag([(3, b.elements(3)[i])])
        assert sg.shadow_mask(flag) == 1 << i
        assert sg.elements[1][i].mask == 1 << i


@pytest.mark.parametrize("name,j", [("C3(2)", 3), ("A3(2)", 2), ("C3(2)", 1)])
def test_shadow_points_recomputed_from_flags(name, j):
    sg = shadows(name, j)
    for t in (2, 3):
        for s in sg.elements[t][::11]:
            assert sg.shadow_mask(s.flag) == s.mask
            assert tuple(_bits(s.mask)) == s.points


def test_shadow_containment_matches_flag_incidence():
    sg = shadows("C3(2)", 3)
    b = sg.building
    lines, planes = sg.elements[2][::9], sg.elements[3][::5]
    for ln, pl in itertools.product(lines, planes):
        contained = ln.mask & pl.mask == ln.mask
        parts = dict(ln.flag.parts)
        for t, x in pl.flag.parts:
            parts.setdefault(t, x)
        consistent = all(parts[t] == x for t, x in pl.flag.parts)
        assert contained == (consistent and is_flag(b, parts.items()))


def test_minimal_flag_types():
    b = building("C3(2)")
    assert minimal_flag_types(b, 3, 1) == [(3,)]
    assert minimal_flag_types(b, 3, 2) == [(2,)]
    assert minimal_flag_types(b, 3, 3) == [(1,)]
    a = building("A3(2)")
    assert minimal_flag_types(a, 2, 2) == [(1, 3)]
    assert sorted(minimal_flag_types(a, 2, 3)) == [(1,), (3,)]


@pytest.mark.parametrize("name,j", [("C3(2)", 3), ("2A5(2)", 3), ("A3(2)", 2), ("D4(2)", 4)])
def test_star_condition_holds(name, j):
    assert star_condition(building(name), j)


def _local_all(name, j):
    sg = shadows(name, j)
    return sg, [local_geometry(sg, a) for a in range(len(sg.points))]


def test_local_geometry_c3_is_fano():
    sg, locs = _local_all("C3(2)", 3)
    fano, _ = projective_geometry(3, get_field(2))
    first = locs[0].geometry
    assert first.num_points == 7 and len(first.lines) == 7
    assert find_isomorphism(first, fano) is not None


def test_local_geometry_a3_is_grid():
    sg, locs = _local_all("A3(2)", 2)
    grid = PointLineGeometry(9, [(0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8)])
    for loc in locs:
        assert find_isomorphism(loc.geometry, grid) is not None


def test_local_geometry_d4_is_line_grassmannian():
    sg = shadows("D4(2)", 4)
    g = local_geometry(sg, 0).geometry
    grass, _ = grassmann_geometry(4, get_field(2))
    assert g.num_points == 35
    assert find_isomorphism(g, grass) is not None


@pytest.mark.parametrize("name,j", [("C3(2)", 3), ("A3(2)", 2), ("C3(2)", 1)])
def test_local_geometries_pairwise_isomorphic(name, j):
    sg, locs = _local_all(name, j)
    ref = locs[0].geometry
    assert validate_geometry(ref).ok
    for loc in locs[1:]:
        assert find_isomorphism(ref, loc.geometry) is not None


@pytest.mark.parametrize("name,j", [("C3(2)", 3), ("A3(2)", 2), ("D4(2)", 4), ("2A5(2)", 3)])
def test_local_points_meet_only_in_base(name, j):
    sg = shadows(name, j)
    for a in (0, len(sg.points) // 2):
        loc = local_geometry(sg, a)
        masks = [sg.elements[2][k].mask for k in loc.point_shadows]
        for x, y in itertools.combinations(masks, 2):
            assert x & y == 1 << a


@pytest.mark.parametrize("name,j", [("C3(2)", 3), ("A3(2)", 2), ("D4(2)", 4), ("C3(2)", 1)])
def test_two_local_routes_agree(name, j):
    sg = shadows(name, j)
    b = sg.building
    for a in (0, len(sg.points) - 1):
        full = local_geometry(sg, a)
        direct = local_geometry_direct(b, j, sg.points[a])
        assert {f.key() for f in full.point_flags} == {f.key() for f in direct.point_flags}
        assert find_isomorphism(full.geometry, direct.geometry) is not None


@pytest.mark.parametrize("name,j,count", [("C3(2)", 3, 64), ("2A5(2)", 3, 512), ("A3(2)", 2, 16)])
def test_far_point_counts(name, j, count):
    b = building(name)
    anchor = b.elements(b.tau_op(j))[0]
    far = far_truncation(b, j, anchor, shadows(name, j))
    assert len(far.points) == count
    assert far.star_ok and far.warnings == []


@pytest.mark.parametrize("name,j", [("C3(2)", 3), ("A3(2)", 2), ("C3(2)", 1)])
def test_far_counts_independent_of_anchor(name, j):
    b = building(name)
    sg = shadows(name, j)
    counts = {tuple(far_truncation(b, j, a, sg).counts().values()) for a in b.elements(b.tau_op(j))}
    assert len(counts) == 1


def test_far_truncation_rejects_foreign_shadow_geometry():
    b = building("C3(2)")
    with pytest.raises(ContractViolation):
        far_truncation(b, 3, b.elements(3)[0], shadows("A3(2)", 2))


def test_far_lines_have_stabilizer_orbit_size():
    r = rep("C3(2)", 3)
    sg = shadow_geometry(r.building, 3)
    far = far_truncation(r.building, 3, r.A_star, sg)
    sizes = {bin(m).count("1") for m in far.lines}
    assert sizes == {len(img) for img in r.point_images}


def test_expansion_of_c3_rep():
    r = rep("C3(2)", 3)
    ex = expansion(r.embedding)
    assert ex.order == 64
    # point-residue at the identity: lines and planes through it, incidence by inclusion
    e = r.group.identity
    through_l = [set(c) for c in ex.lines if e in c]
    through_p = [set(c) for c in ex.planes if e in c]
    res = PointLineGeometry(len(through_l), [tuple(i for i, l in enumerate(through_l) if l <= p)
                                             for p in through_p])
    assert find_isomorphism(res, r.geometry) is not None


def test_expansion_left_multiplication_is_automorphism():
    r = rep("C3(2)", 3)
    ex = expansion(r.embedding)
    lines = {tuple(c) for c in ex.lines}
    for g in (1, 17, 40):
        for c in ex.lines[::5]:
            moved = tuple(sorted(int(x) for x in r.group.left_multiply(g, c)))
            assert moved in lines


def test_expansion_of_natural_plane_embedding():
    emb = natural_embedding(FormedSpace(get_field(2), 3, "linear"))
    ex = expansion(emb)
    assert ex.order == 8 and len(ex.lines) == 7 * 4
    assert all(len(c) == 2 for c in ex.lines)


def test_expansion_bound_is_enforced():
    with pytest.raises(ResourceLimitError):
        expansion(rep("C3(2)", 3).embedding, bound=10)


@pytest.mark.parametrize("name,j", [("C3(2)", 3), ("D4(2)", 4), ("A3(2)", 2), ("C3(2)", 1)])
def test_expansion_matches_far(name, j):
    r = rep(name, j)
    sg = shadow_geometry(r.building, j)
    far = far_truncation(r.building, j, r.A_star, sg)
    match = expansion_matches_far(r, far, sg)
    assert match.ok, match.counterexample
    assert sorted(match.point_map) == sorted(far.points)
    assert len(match.line_map) == len(far.lines)


def test_corrupted_far_is_rejected():
    r = rep("C3(2)", 3)
    sg = shadow_geometry(r.building, 3)
    far = far_truncation(r.building, 3, r.A_star, sg)
    bad_lines = list(far.lines)
    low = bad_lines[0] & -bad_lines[0]
    bad_lines[0] ^= low
    bad = dataclasses.replace(far, lines=bad_lines)
    match = expansion_matches_far(r, bad)
    assert not match.ok and match.counterexample is not None
    bad_points = dataclasses.replace(far, points=far.points[1:])
    assert not expansion_matches_far(r, bad_points).ok
