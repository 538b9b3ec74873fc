"""Acceptance suite: one test per criterion, each under its wall-clock limit.

A pass/fail line per criterion is printed (visible with ``-s``) and repeated
in the terminal summary.
"""
import sys
import time
from contextlib import contextmanager

import pytest

from shadowhull.formspace import Building, FormedSpace, Subspace
from shadowhull.geometry import find_isomorphism
from shadowhull.gf import get_field
from shadowhull.grouprep import (abelianization_check, block_parameters, adapted_matrix, check_axioms,
                                 flag_stabilizer, quotient_check, residue_identification,
                                 restrict_embedding, sharp_transitivity_all, standard_rep)
from shadowhull.hull import (abelian_hull_dim, build_presentation, compute_hull, enumerate_cosets,
                             hull_coordinates, quadric_type)
from shadowhull.shadowfar import expansion_matches_far, far_truncation, shadow_geometry
from shadowhull.veronese import (identify_with_unipotent, natural_embedding, veronese_hermitian,
                                 veronese_quadratic, wedge_embedding)

RESULTS: list[str] = []

# Coset-table digests, agreed on by the compiled and the pure-Python kernels.
FROZEN_DIGESTS = {
    "quadratic n=3 q=2": "d1eac7aafebc5d8d8d44b7d3b3dee5cde961df6151da112d02601d44212c60cf",
    "hermitian n=3 q=2": "087a294ec2bcf7fa02a284e2b6583f4d41d6fea0b94f2c54dad93fd69c2c1a3d",
    "wedge n=4 q=2": "b37cd2ad6b930f95e857a72c9da450656e018aad9c1fc84ee3f90aab9d1495d2",
    "symplectic quadrangle q=2": "35f0a3d60ce9d956ed4de4416805834afcffcdacb9d593b1d0dbdb5b9f268033",
    "C3(2) j=3 unipotent": "d1eac7aafebc5d8d8d44b7d3b3dee5cde961df6151da112d02601d44212c60cf",
    "2A5(2) j=3 unipotent": "b41a76c5680cabfd16ea28d69391c54b7ac2bfb58030dfa8678a3f5d6fb337a0",
    "D4(2) j=4 unipotent": "b37cd2ad6b930f95e857a72c9da450656e018aad9c1fc84ee3f90aab9d1495d2",
}


@contextmanager
def criterion(number: int, title: str, limit: float):
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        within = elapsed < limit
        line = (f"criterion {number:2d} {'PASS' if ok and within else 'FAIL'}  {title}  "
                f"({elapsed:.2f}s, limit {limit:g}s)")
        RESULTS.append(line)
        print(line)
    assert within, f"criterion {number} took {elapsed:.2f}s, limit {limit}s"


def test_criterion_01_quadratic_plane_hull():
    with criterion(1, "quadratic Veronesean n=3 q=2: hull 128, elementary abelian, cover degree 2", 1.0):
        res = compute_hull(veronese_quadratic(3, 2))
        u = standard_rep("C3(2)", 3).group.order
        assert res.order == 128 and res.elementary_abelian
        assert u == 64 and res.order // u == 2 and res.order % u == 0


def test_criterion_02_quadratic_space_abelian_dim():
    with criterion(2, "quadratic Veronesean n=4 q=2: abelian hull dimension 15", 1.0):
        emb = veronese_quadratic(4, 2)
        assert emb.geometry.num_points == 15
        assert abelian_hull_dim(emb) == 15


def test_criterion_03_hermitian_plane_hull():
    with criterion(3, "hermitian Veronesean n=3 q=2: hull 2048, radical 512, cover degree 4", 10.0):
        res = compute_hull(veronese_hermitian(3, 2))
        rep = standard_rep("2A5(2)", 3)
        assert res.order == 2048 and rep.group.order == 512
        assert res.order == 4 * rep.group.order
        assert compute_hull(rep.embedding).order == 2048


def test_criterion_04_wedge_embedding():
    with criterion(4, "wedge embedding of A_{3,2}(2): hull 64, dim 6, degree 1, isomorphic to D4(2) rep", 5.0):
        emb = wedge_embedding(4, 2)
        res = compute_hull(emb)
        assert emb.geometry.num_points == 35
        assert res.order == 64 and res.abelian_dim == 6 and res.cover_degree == 1
        ident = identify_with_unipotent(emb, standard_rep("D4(2)", 4))
        assert ident.ok, ident.witness


def test_criterion_05_sharp_transitivity_every_anchor():
    with criterion(5, "sharp transitivity over every A* for C3/3, 2A5/3, D4/4, A3/2 and D3/1", 30.0):
        cases = [(Building.from_name("C3(2)"), 3, 64), (Building.from_name("2A5(2)"), 3, 512),
                 (Building.from_name("D4(2)"), 4, 64), (Building.from_name("A3(2)"), 2, 16),
                 (Building("D", 3, 2), 1, 16)]
        for b, j, order in cases:
            out = sharp_transitivity_all(b, j)
            assert out["ok"], (b, j, out["failures"][:3])
            assert out["sizes"] == [(order, order)]
            assert out["anchors"] == len(b.elements(b.tau_op(j)))


def test_criterion_06_expansion_isomorphic_to_far_geometry():
    with criterion(6, "expansion of the unipotent rep isomorphic to the far truncation: C3/3 and D4/4", 10.0):
        for name, j in (("C3(2)", 3), ("D4(2)", 4)):
            rep = standard_rep(name, j)
            sg = shadow_geometry(rep.building, j)
            far = far_truncation(rep.building, j, rep.A_star, sg)
            match = expansion_matches_far(rep, far, sg)
            assert match.ok, match.counterexample
            assert len(match.point_map) == rep.group.order == len(far.points)


REPS_FOR_AXIOMS = [("C3(2)", 3), ("C3(2)", 1), ("A3(2)", 2), ("D4(2)", 4), ("B3(3)", 3), ("2A5(2)", 3),
                   ("2D4(2)", 3), ("C4(2)", 4), ("2A6(2)", 3)]


def test_criterion_07_axioms_everywhere():
    with criterion(7, "embedding axioms for every unipotent rep and Veronesean", 30.0):
        for name, j in REPS_FOR_AXIOMS:
            rep = standard_rep(name, j)
            report = check_axioms(rep.embedding)
            assert report.ok, (name, j, report.witnesses)
            # images are exactly the radical elements fixing the minimal flags
            for flags, images in ((rep.point_flags, rep.point_images), (rep.line_flags, rep.line_images)):
                for fl, img in zip(flags[:12], images[:12]):
                    assert tuple(img) == flag_stabilizer(rep.group, fl)
        for emb in (veronese_quadratic(3, 2), veronese_quadratic(4, 2), veronese_quadratic(3, 3),
                    veronese_hermitian(3, 2), wedge_embedding(4, 2)):
            assert check_axioms(emb).ok, emb.name


def test_criterion_08_b3_derived_subgroup_fails_q1():
    with criterion(8, "B3(3) j=3: radical 729, derived subgroup W of order 27, Q1 fails", 10.0):
        rep = standard_rep("B3(3)", 3)
        g = rep.group
        assert g.order == 729
        derived = g.derived_subgroup(g.generating_subset(range(g.order)))
        w = {u for u in range(g.order)
             if not any(any(r) for r in block_parameters(g.basis, adapted_matrix(g, u))[0])}
        assert len(derived) == 27 and set(derived) == w
        report = quotient_check(rep.embedding, sorted(w))
        assert not report.defines_quotient and report.q1_witness is not None


def test_criterion_09_2a6_derived_subgroup():
    with criterion(9, "2A6(2) j=3: derived subgroup 2^9, abelianized radical 2^6", 60.0):
        rep = standard_rep("2A6(2)", 3)
        assert rep.group.order == 2 ** 15
        ab = abelianization_check(rep)
        assert ab.derived_order == 2 ** 9 and ab.quotient_order == 2 ** 6


def test_criterion_10_symplectic_quadrangle_hull():
    with criterion(10, "hull of the natural W(2) embedding equals the C3(2) j=1 radical and is quadric", 5.0):
        emb = natural_embedding(FormedSpace(get_field(2), 4, "symplectic"))
        assert emb.geometry.num_points == 15
        res = compute_hull(emb)
        radical = standard_rep("C3(2)", 1).group.order
        assert res.order == radical == 32
        assert res.elementary_abelian
        assert quadric_type(hull_coordinates(res.table, 2), 2).is_quadric


def test_criterion_11_residue_restriction():
    with criterion(11, "C4(2) j=4 restricted to a point residue is the C3(2) j=3 rep", 60.0):
        rep = standard_rep("C4(2)", 4)
        b = rep.building
        point = Subspace.span([rep.A.rows[0]], b.field, b.space.dim)
        emb, _, _, fixing = restrict_embedding(rep, b.flag([(1, point)]))
        ident = residue_identification(rep, point)
        assert ident.ok, ident.witness
        assert emb.group.order == ident.residue_order == 64 and set(fixing) == set(emb.parent_elements)
        direct = standard_rep("C3(2)", 3)
        assert find_isomorphism(emb.geometry, direct.geometry) is not None
        assert ident.residue_rep.group.order == direct.group.order


def _criterion_12_embeddings():
    return {
        "quadratic n=3 q=2": veronese_quadratic(3, 2),
        "hermitian n=3 q=2": veronese_hermitian(3, 2),
        "wedge n=4 q=2": wedge_embedding(4, 2),
        "symplectic quadrangle q=2": natural_embedding(FormedSpace(get_field(2), 4, "symplectic")),
        "C3(2) j=3 unipotent": standard_rep("C3(2)", 3).embedding,
        "2A5(2) j=3 unipotent": standard_rep("2A5(2)", 3).embedding,
        "D4(2) j=4 unipotent": standard_rep("D4(2)", 4).embedding,
    }


def test_criterion_12_determinism():
    from shadowhull.experiments import run_experiment
    with criterion(12, "reports and coset tables identical across runs and kernels", 120.0):
        for label, emb in _criterion_12_embeddings().items():
            pres = build_presentation(emb)
            digests = {enumerate_cosets(pres, kernel=k).digest for k in ("compiled", "python") for _ in range(2)}
            assert digests == {FROZEN_DIGESTS[label]}, label
        for name in ("c3q2-dual-polar-hull", "quadratic-pg3-abelian-dim", "2a5q2-hull", "wedge-a3q2",
                     "w2-hull-quadric", "b3q3-derived", "c4-residue", "far-expansion-c3q2"):
            a, b = run_experiment(name), run_experiment(name)
            assert a.passed and a.digest() == b.digest(), name


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
