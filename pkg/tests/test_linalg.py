import itertools

from hypothesis import given, settings, strategies as st

from shadowhull import linalg as la
from shadowhull.gf import get_field

F2, F3, F4 = get_field(2), get_field(3), get_field(2, 2)


def matrices(q, rows, cols):
    return st.lists(st.lists(st.integers(0, q - 1), min_size=cols, max_size=cols),
                    min_size=rows, max_size=rows)


@given(matrices(3, 4, 5))
def test_rank_nullity(m):
    assert la.rank(m, F3) + len(la.right_kernel(m, 5, F3)) == 5
    for v in la.right_kernel(m, 5, F3):
        assert all(la.dot(row, v, F3) == 0 for row in m)


@given(matrices(4, 5, 3))
def test_left_kernel_annihilates(m):
    kern = la.left_kernel(m, F4)
    assert len(kern) == 5 - la.rank(m, F4)
    for c in kern:
        assert la.vec_mat(c, m, F4) == (0, 0, 0)


@given(matrices(3, 3, 3))
def test_inverse_when_invertible(m):
    if la.rank(m, F3) < 3:
        return
    inv = la.mat_inv(m, F3)
    assert la.mat_mul(m, inv, F3) == la.identity(3)


def test_span_vectors_counts_by_brute_force():
    basis = [(1, 0, 1, 0), (0, 1, 1, 1)]
    got = set(la.span_vectors(basis, F3))
    want = {tuple((a * x + b * y) % 3 for x, y in zip(*basis)) for a in range(3) for b in range(3)}
    assert got == want


@settings(max_examples=50)
@given(matrices(3, 3, 4))
def test_prime_rank_agrees_with_field_rank(m):
    import numpy as np
    assert la.prime_rank(np.array(m, dtype=np.int64), 3) == la.rank(m, F3)


def test_restriction_of_scalars_preserves_rank():
    for m in itertools.islice(itertools.product(range(4), repeat=4), 0, 256, 7):
        mat = [m[:2], m[2:]]
        big = la.to_prime_matrix(mat, F4)
        assert la.prime_rank(big, 2) == 2 * la.rank(mat, F4)


def test_coordinates_and_normalize():
    basis = [(1, 0, 2), (0, 1, 1)]
    v = la.vadd(la.vscale(2, basis[0], F3), basis[1], F3)
    assert la.coordinates(v, basis, F3) == (2, 1)
    assert la.coordinates((0, 0, 1), basis, F3) is None
    assert la.normalize((0, 2, 1), F3) == (0, 1, 2)
