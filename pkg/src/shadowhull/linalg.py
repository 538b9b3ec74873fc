"""Dense linear algebra over a :class:`~shadowhull.gf.Field`, on integer codes.

Vectors are tuples of field codes and matrices are tuples of row tuples.
The helpers at the bottom rewrite F_{p^2}-matrices as F_p-matrices (restriction
of scalars) so that batched group computations can run in numpy.
"""
from __future__ import annotations

from itertools import product

import numpy as np

from .gf import Field

Vec = tuple
Mat = tuple


def rref(rows, F: Field) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form with leading ones; zero rows dropped."""
    m = [list(r) for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    mul, sub, inv = F.mul_t, F.sub_t, F.inv_t
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, len(m)):
            if m[i][c]:
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        row = m[r]
        lead = row[c]
        if lead != 1:
            il = inv[lead]
            row = [mul[il][v] for v in row]
            m[r] = row
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                mf = mul[f]
                other = m[i]
                m[i] = [sub[other[t]][mf[row[t]]] for t in range(ncols)]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows, F: Field) -> int:
    return len(rref(rows, F)[0])


def right_kernel(rows, ncols: int, F: Field) -> list[tuple[int, ...]]:
    """Basis of {y : M y^T = 0}, one vector per free column, in column order."""
    red, pivots = rref(rows, F)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        y = [0] * ncols
        y[fc] = 1
        for row, pc in zip(red, pivots):
            y[pc] = F.neg(row[fc])
        basis.append(tuple(y))
    return basis


def left_kernel(rows, F: Field) -> list[tuple[int, ...]]:
    """Basis of {x : x M = 0} for the matrix with the given rows."""
    rows = [tuple(r) for r in rows]
    if not rows:
        return []
    return right_kernel(transpose(rows), len(rows), F)


def transpose(m) -> list[tuple[int, ...]]:
    return [tuple(col) for col in zip(*m)]


def vec_mat(v, m, F: Field) -> tuple[int, ...]:
    add, mul = F.add_t, F.mul_t
    ncols = len(m[0])
    out = [0] * ncols
    for a, row in zip(v, m):
        if a:
            ma = mul[a]
            for j in range(ncols):
                if row[j]:
                    out[j] = add[out[j]][ma[row[j]]]
    return tuple(out)


def mat_mul(a, b, F: Field) -> tuple[tuple[int, ...], ...]:
    return tuple(vec_mat(r, b, F) for r in a)


def identity(n: int) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def mat_inv(m, F: Field) -> tuple[tuple[int, ...], ...]:
    n = len(m)
    aug = [list(m[i]) + list(identity(n)[i]) for i in range(n)]
    red, pivots = rref(aug, F)
    if len(red) < n or pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    return tuple(tuple(r[n:]) for r in red)


def dot(u, v, F: Field) -> int:
    add, mul = F.add_t, F.mul_t
    s = 0
    for a, b in zip(u, v):
        if a and b:
            s = add[s][mul[a][b]]
    return s


def vadd(u, v, F: Field) -> tuple[int, ...]:
    add = F.add_t
    return tuple(add[a][b] for a, b in zip(u, v))


def vscale(c: int, v, F: Field) -> tuple[int, ...]:
    mc = F.mul_t[c]
    return tuple(mc[a] for a in v)


def coordinates(v, basis, F: Field) -> tuple[int, ...] | None:
    """Coefficients c with sum c_i basis_i = v, or None if v is outside the span."""
    k = len(basis)
    if k == 0:
        return () if not any(v) else None
    cols = transpose(list(basis) + [tuple(v)])
    red, pivots = rref(cols, F)
    if k in pivots:
        return None
    if len(pivots) < k:
        raise ValueError("basis is linearly dependent")
    return tuple(red[i][k] for i in range(k))


def span_vectors(basis, F: Field) -> list[tuple[int, ...]]:
    """All q^k vectors of the span, in lexicographic order of coefficient tuples."""
    if not basis:
        return []
    n = len(basis[0])
    out = []
    for coeffs in product(range(F.q), repeat=len(basis)):
        v = [0] * n
        for c, b in zip(coeffs, basis):
            if c:
                v = list(vadd(v, vscale(c, b, F), F))
        out.append(tuple(v))
    return out


def normalize(v, F: Field) -> tuple[int, ...]:
    """Scale so that the first nonzero entry is one."""
    for a in v:
        if a:
            return vscale(F.inv_t[a], v, F) if a != 1 else tuple(v)
    return tuple(v)


# --- restriction of scalars -------------------------------------------------

def scalar_block(F: Field, a: int) -> np.ndarray:
    """Matrix over F_p of right multiplication by ``a`` on the basis (1, x)."""
    if F.k == 1:
        return np.array([[a]], dtype=np.int64)
    rows = []
    for basis_code in (1, F.p):  # 1 and x
        rows.append(F.coeffs(F.mul(basis_code, a)))
    return np.array(rows, dtype=np.int64)


def block_table(F: Field) -> np.ndarray:
    """Array of shape (q, k, k) holding :func:`scalar_block` for every code."""
    return np.stack([scalar_block(F, a) for a in range(F.q)])


def to_prime_matrix(m, F: Field) -> np.ndarray:
    """F_p-matrix of the F_p-linear map v -> v m on F_q^rows."""
    arr = np.asarray(m, dtype=np.int64)
    return to_prime_batch(arr[None], F)[0]


def to_prime_batch(arr: np.ndarray, F: Field) -> np.ndarray:
    """Vectorized :func:`to_prime_matrix` over a stack of shape (N, r, c)."""
    k = F.k
    if k == 1:
        return arr.astype(np.int64) % F.p
    table = block_table(F)
    blocks = table[arr]  # (N, r, c, k, k)
    n, r, c = arr.shape
    return blocks.transpose(0, 1, 3, 2, 4).reshape(n, r * k, c * k)


def from_prime_batch(arr: np.ndarray, F: Field) -> np.ndarray:
    """Inverse of :func:`to_prime_batch` for matrices that are F_q-linear."""
    k = F.k
    if k == 1:
        return arr.astype(np.int64)
    n, rk, ck = arr.shape
    r, c = rk // k, ck // k
    blocks = arr.reshape(n, r, k, c, k).transpose(0, 1, 3, 2, 4)
    return blocks[..., 0, 0] + F.p * blocks[..., 0, 1]


def prime_vectors(rows, F: Field) -> np.ndarray:
    """F_p-basis of the F_q-span of ``rows``, as coordinate rows over F_p."""
    rows = [tuple(r) for r in rows]
    if not rows:
        return np.zeros((0, 0), dtype=np.int64)
    n = len(rows[0])
    out = []
    for r in rows:
        for t in range(F.k):
            scalar = 1 if t == 0 else F.p  # 1, then x
            v = vscale(scalar, r, F)
            coords = []
            for a in v:
                coords.extend(F.coeffs(a))
            out.append(coords)
    return np.array(out, dtype=np.int64).reshape(len(out), n * F.k)


def prime_rank(mat: np.ndarray, p: int) -> int:
    """Rank over F_p of an integer matrix."""
    from .gf import get_field
    return rank([tuple(int(x) for x in row) for row in np.asarray(mat) % p], get_field(p))


def prime_kernel_columns(rows: np.ndarray, p: int) -> np.ndarray:
    """Matrix H whose columns span {y : rows y = 0} over F_p."""
    from .gf import get_field
    rows = np.asarray(rows) % p
    ncols = rows.shape[1]
    ker = right_kernel([tuple(int(x) for x in r) for r in rows], ncols, get_field(p))
    if not ker:
        return np.zeros((ncols, 0), dtype=np.int64)
    return np.array(ker, dtype=np.int64).T
