import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shadowhull import hull
from shadowhull import linalg as la
from shadowhull.errors import ContractViolation, ResourceLimitError
from shadowhull.formspace import FormedSpace
from shadowhull.geometry import generated_subspace
from shadowhull.gf import get_field
from shadowhull.hull import (Presentation, abelian_hull_dim, build_presentation, compute_hull,
                             cover_degree, hull_coordinates, is_elementary_abelian, quadric_type,
                             standardize, todd_coxeter)
from shadowhull.veronese import natural_embedding, veronese_hermitian, veronese_quadratic, wedge_embedding

from conftest import rep

KERNELS = ["python", "compiled"]


def pres(ngens, p, rels):
    return Presentation(ngens, p, [tuple(r) for r in rels])


def commutators(n):
    return [(-(a + 1), -(b + 1), a + 1, b + 1) for a, b in itertools.combinations(range(n), 2)]


@pytest.mark.parametrize("kernel", KERNELS)
def test_cyclic_of_order_three(kernel):
    order, ct = todd_coxeter(pres(1, 3, [(1, 1, 1)]), kernel=kernel)
    assert order == 3 and ct.status == "complete"


@pytest.mark.parametrize("kernel", KERNELS)
@pytest.mark.parametrize("rels,ngens,expected", [
    ([(1, 1), (2, 2), (1, 2, 1, 2, 1, 2)], 2, 6),                     # S3
    ([(1, 1), (2, 2), (1, 2) * 5], 2, 10),                            # dihedral of order 10
    ([(1, 1), (2, 2), (1, 2) * 4], 2, 8),                             # dihedral of order 8
    ([(1, 1), (2, 2, 2), (1, 2) * 7, (1, -2, 1, 2) * 4], 2, 168),     # PSL(2,7)
    ([(1, 1, 1, 1), (2, 2), (-2, 1, 2, 1)], 2, 8),                    # D4 as <r, s>
])
def test_known_group_orders(kernel, rels, ngens, expected):
    order, _ = todd_coxeter(pres(ngens, 2, rels), kernel=kernel)
    assert order == expected


@pytest.mark.parametrize("kernel", KERNELS)
def test_infinite_dihedral_overflows(kernel):
    order, ct = todd_coxeter(pres(2, 2, [(1, 1), (2, 2)]), max_cosets=500, kernel=kernel)
    assert order is None and ct.status == "overflowed"
    assert ct.high_water > 0 and ct.digest is None
    assert is_elementary_abelian(order, pres(2, 2, [(1, 1), (2, 2)]), ct) is None


abelian_cases = st.tuples(st.sampled_from([2, 3]), st.integers(1, 4)).flatmap(
    lambda pn: st.tuples(st.just(pn[0]), st.just(pn[1]),
                         st.lists(st.lists(st.integers(0, pn[0] - 1), min_size=pn[1], max_size=pn[1]),
                                  max_size=3)))


@settings(max_examples=40, deadline=None)
@given(abelian_cases)
def test_abelian_presentation_order_matches_rank(case):
    p, n, relations = case
    words = [tuple([g + 1] * p) for g in range(n)] + commutators(n)
    for r in relations:
        w = tuple(g + 1 for g in range(n) for _ in range(r[g]))
        if w:
            words.append(w)
    rank = la.rank(relations, get_field(p)) if relations else 0
    P = Presentation(n, p, words)
    for kernel in KERNELS:
        order, ct = todd_coxeter(P, kernel=kernel)
        assert order == p ** (n - rank)
        assert is_elementary_abelian(order, P, ct)


random_words = st.lists(st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), min_size=1, max_size=8),
                        min_size=1, max_size=5)


@settings(max_examples=60, deadline=None)
@given(random_words, st.integers(20, 400))
def test_kernels_agree_on_random_presentations(words, bound):
    P = Presentation(3, 2, [(1, 1), (2, 2), (3, 3)] + [tuple(w) for w in words])
    a = hull.enumerate_cosets(P, bound, "python")
    b = hull.enumerate_cosets(P, bound, "compiled")
    assert (a.status, a.order, a.high_water) == (b.status, b.order, b.high_water)
    assert a.digest == b.digest


def test_gf2_rank_kernels_agree():
    rng = np.random.default_rng(5)
    py, cc = hull.kernel_module("python"), hull.kernel_module("compiled")
    for _ in range(50):
        rows = [int(x) for x in rng.integers(0, 2 ** 20, size=rng.integers(0, 12))]
        mat = [[(r >> i) & 1 for i in range(20)] for r in rows]
        want = la.rank(mat, get_field(2)) if rows else 0
        assert py.gf2_rank(rows) == cc.gf2_rank(rows) == want


def test_unknown_kernel_rejected():
    with pytest.raises(ValueError):
        hull.kernel_module("fortran")


def test_standardize_is_bfs_order_and_idempotent():
    rows = [[2, 2], [1, 1], [0, 0]]
    out = standardize(rows)
    assert out.tolist() == [[1, 1], [0, 0]]
    again = standardize(out.tolist())
    assert np.array_equal(again, out)


def test_quadratic_plane_presentation():
    P = build_presentation(veronese_quadratic(3, 2))
    assert P.ngens == 7 and len(P.relators) == 7 + 21
    assert P.linear_relations == []
    order, ct = todd_coxeter(P)
    assert order == 128 and is_elementary_abelian(order, P, ct)
    assert abelian_hull_dim(P) == 7


def test_hermitian_plane_presentation():
    emb = veronese_hermitian(3, 2)
    P = build_presentation(emb)
    assert P.ngens == 21
    assert len(P.relators) == 21 + 21 * 10 + 21
    assert len(P.linear_relations) == 21
    assert all(sum(1 for v in r if v) == 5 for r in P.linear_relations)


def test_natural_plane_relation():
    emb = natural_embedding(FormedSpace(get_field(2), 3, "linear"))
    P = build_presentation(emb)
    assert len(P.linear_relations) == 7
    for li, line in enumerate(emb.geometry.lines):
        assert P.linear_relations[li] == tuple(1 if x in line else 0 for x in range(7))
    order, _ = todd_coxeter(P)
    assert order == 8


def test_quadratic_space_abelian_dim():
    assert abelian_hull_dim(veronese_quadratic(4, 2)) == 15


@pytest.mark.parametrize("make", [
    lambda: veronese_quadratic(3, 2), lambda: veronese_quadratic(3, 3), lambda: veronese_hermitian(3, 2),
    lambda: wedge_embedding(4, 2), lambda: natural_embedding(FormedSpace(get_field(2), 4, "symplectic")),
    lambda: rep("C3(2)", 3).embedding, lambda: rep("D4(2)", 4).embedding,
], ids=["quad2", "quad3", "herm", "wedge", "w2", "c3rep", "d4rep"])
def test_abelian_dim_bounds_codomain(make):
    emb = make()
    dim = abelian_hull_dim(emb)
    assert dim >= round(math.log(emb.codomain_order, emb.p))


@pytest.mark.parametrize("make", [
    lambda: veronese_quadratic(3, 2), lambda: wedge_embedding(4, 2), lambda: rep("C3(2)", 3).embedding,
    lambda: natural_embedding(FormedSpace(get_field(2), 4, "symplectic")),
], ids=["quad2", "wedge", "c3rep", "w2"])
def test_order_power_of_p_consistency(make):
    emb = make()
    res = compute_hull(emb)
    if res.order == emb.p ** res.abelian_dim:
        assert res.elementary_abelian


def test_wedge_generating_set_and_cover_degree():
    emb = wedge_embedding(4, 2)
    labels = emb.point_labels
    unit = {i for i, s in enumerate(labels) if all(sum(1 for x in r if x) == 1 for r in s.rows)}
    assert len(unit) == 6
    assert generated_subspace(emb.geometry, unit) == set(range(35))
    dim = abelian_hull_dim(emb)
    assert dim <= len(unit)
    res = compute_hull(emb)
    assert res.elementary_abelian and res.cover_degree == 1


@pytest.mark.parametrize("name,j,degree", [("C3(2)", 3, 2), ("D4(2)", 4, 1), ("C3(2)", 1, 1)])
def test_cover_degrees(name, j, degree):
    assert cover_degree(rep(name, j)) == degree


def test_strict_overflow_raises_with_high_water():
    with pytest.raises(ResourceLimitError) as err:
        compute_hull(rep("C3(2)", 3).embedding, max_cosets=50, strict=True)
    assert err.value.high_water is not None
    res = compute_hull(rep("C3(2)", 3).embedding, max_cosets=50)
    assert res.order is None and res.cover_degree is None


def test_amalgam_round_trip():
    P = build_presentation(veronese_quadratic(3, 2))
    back = Presentation.from_amg(P.to_amg())
    assert (back.ngens, back.p, back.relators) == (P.ngens, P.p, P.relators)
    assert todd_coxeter(back)[0] == 128


def test_amalgam_errors():
    with pytest.raises(ValueError):
        Presentation.from_amg("generators 1\norders 2\nrelators 1\n1 1\n")
    with pytest.raises(ContractViolation):
        Presentation.from_amg(hull.AMG_HEADER + "\ngenerators 2\norders 2 3\nrelators 0\n")
    with pytest.raises(ValueError):
        Presentation.from_amg(hull.AMG_HEADER + "\ngenerators 1\norders 2\nrelators 1\n1 2\n")
    with pytest.raises(ValueError):
        Presentation.from_amg(hull.AMG_HEADER + "\ngenerators 1\norders 2\nrelators 2\n1 1\n")


def test_table_digest_is_deterministic_across_kernels():
    P = build_presentation(rep("C3(2)", 3).embedding)
    digests = {hull.enumerate_cosets(P, kernel=k).digest for k in KERNELS for _ in range(2)}
    assert len(digests) == 1


def test_quadric_type_examples():
    conic = [(1, 0, 0), (0, 1, 0), (1, 1, 1)]
    rep_ = quadric_type(conic, 2)
    assert rep_.is_quadric
    F = get_field(2)
    for v in conic:
        assert hull.quad_eval(rep_.form, v, F) == 0
    everything = [v for v in itertools.product(range(2), repeat=3) if any(v)]
    assert not quadric_type(everything, 2).is_quadric


def test_symplectic_quadrangle_hull_is_parabolic_quadric():
    emb = natural_embedding(FormedSpace(get_field(2), 4, "symplectic"))
    res = compute_hull(emb)
    assert res.order == 32 and res.elementary_abelian
    coords = hull_coordinates(res.table, 2)
    assert quadric_type(coords, 2).is_quadric
    assert not quadric_type([b[0] for b in emb.point_bases], 2).is_quadric


def test_non_abelian_line_images_are_unsupported():
    from shadowhull.errors import UnsupportedError
    with pytest.raises(UnsupportedError):
        build_presentation(rep("B3(3)", 3).embedding)
