import itertools

import pytest

from shadowhull import linalg as la
from shadowhull.errors import ContractViolation, UnsupportedError
from shadowhull.formspace import FormedSpace
from shadowhull.gf import get_field
from shadowhull.grouprep import check_axioms
from shadowhull.veronese import (HermitianMatrixSpace, SymmetricMatrixSpace, cap_check, conic_check,
                                 identify_with_unipotent, line_shape_check, natural_embedding,
                                 veronese_hermitian, veronese_quadratic, wedge_embedding)

from conftest import rep


def _point_of(emb, vec):
    return next(i for i, s in enumerate(emb.point_labels) if s.rows[0] == vec)


def test_quadratic_image_of_first_basis_vector():
    emb = veronese_quadratic(3, 2)
    x = _point_of(emb, (1, 0, 0))
    assert emb.point_bases[x] == [(1, 0, 0, 0, 0, 0)]


def test_quadratic_dimensions():
    emb = veronese_quadratic(3, 2)
    assert {len(b) for b in emb.line_bases} == {3}
    assert veronese_quadratic(3, 3).group.dim == 6


def test_hermitian_dimensions_and_lines():
    emb = veronese_hermitian(3, 2)
    assert emb.group.dim == 9
    assert {len(b) for b in emb.line_bases} == {4}
    assert {len(img) for img in emb.line_images} == {16}
    report = cap_check(emb)
    assert report.ok and report.points_per_line == (5,)


def test_cap_condition_exhaustive():
    emb = veronese_hermitian(3, 2)
    F = get_field(2)
    for line in emb.geometry.lines:
        for trio in itertools.combinations(line, 3):
            assert la.rank([emb.point_bases[x][0] for x in trio], F) == 3


def test_conic_condition():
    report = conic_check(veronese_quadratic(3, 2))
    assert report.ok and report.line_dims == (3,) and report.points_per_line == (3,)
    assert conic_check(veronese_quadratic(3, 3)).points_per_line == (4,)


def test_natural_embedding_lines_are_not_caps():
    report = line_shape_check(natural_embedding(FormedSpace(get_field(2), 3, "linear")))
    assert not report.ok and report.witness[0] == "three points in a plane"


def test_symmetric_outer_products_have_rank_one():
    for q in (2, 3):
        F = get_field(q)
        sp = SymmetricMatrixSpace(3, F)
        images = set()
        for v in itertools.product(range(q), repeat=3):
            if any(v) and la.normalize(v, F) == v:
                m = sp.outer(v)
                assert la.rank(m, F) == 1
                images.add(sp.coordinates(m))
        assert len(images) == (q ** 3 - 1) // (q - 1)


def test_hermitian_outer_products():
    F = get_field(2, 2)
    sp = HermitianMatrixSpace(3, F)
    assert sp.dim == 9
    for v in itertools.product(range(4), repeat=3):
        if not any(v):
            continue
        m = sp.outer(v)
        assert sp.is_hermitian(m)
        for t in range(1, 4):
            scaled = sp.outer(tuple(F.mul(t, a) for a in v))
            norm = F.mul(F.conj(t), t)
            assert norm in F.subfield()
            assert scaled == tuple(tuple(F.mul(norm, x) for x in row) for row in m)


@pytest.mark.parametrize("make", [
    lambda: veronese_quadratic(3, 2), lambda: veronese_quadratic(3, 3), lambda: veronese_quadratic(4, 2),
    lambda: veronese_quadratic(4, 3), lambda: veronese_quadratic(3, 5), lambda: veronese_hermitian(3, 2),
    lambda: veronese_hermitian(3, 3), lambda: veronese_hermitian(4, 2), lambda: wedge_embedding(4, 2),
    lambda: wedge_embedding(5, 2),
], ids=["q32", "q33", "q42", "q43", "q35", "h32", "h33", "h42", "w42", "w52"])
def test_constructions_satisfy_axioms(make):
    report = check_axioms(make())
    assert report.ok, report.witnesses


def test_argument_guards():
    with pytest.raises(ContractViolation):
        veronese_quadratic(2, 2)
    with pytest.raises(UnsupportedError):
        veronese_hermitian(3, 4)
    with pytest.raises(UnsupportedError):
        natural_embedding(FormedSpace(get_field(2, 2), 3, "linear"))


@pytest.mark.parametrize("make,name,j", [
    (lambda: veronese_quadratic(3, 2), "C3(2)", 3),
    (lambda: veronese_hermitian(3, 2), "2A5(2)", 3),
    (lambda: wedge_embedding(4, 2), "D4(2)", 4),
], ids=["quadratic-c3", "hermitian-2a5", "wedge-d4"])
def test_identification_succeeds(make, name, j):
    v = make()
    r = rep(name, j)
    ident = identify_with_unipotent(v, r)
    assert ident.ok, ident.witness
    assert sorted(ident.point_map) == list(range(v.geometry.num_points))
    lines_v = {frozenset(l) for l in v.geometry.lines}
    assert all(frozenset(ident.point_map[x] for x in l) in lines_v for l in r.geometry.lines)
    assert la.rank(ident.matrix, get_field(v.p)) == v.group.dim


def test_identification_negative_control():
    ident = identify_with_unipotent(veronese_quadratic(3, 2), rep("D4(2)", 4))
    assert not ident.ok and ident.witness["kind"] == "geometries differ"


def test_identification_rejects_non_elementary_abelian_codomain():
    ident = identify_with_unipotent(veronese_quadratic(3, 3), rep("B3(3)", 3))
    assert not ident.ok
