"""Universal hulls of group embeddings by coset enumeration of the amalgam."""
from __future__ import annotations

import hashlib
import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product

import numpy as np

from . import linalg as la
from .errors import ContractViolation, ResourceLimitError, UnsupportedError
from .gf import get_field

if os.environ.get("SHADOWHULL_PURE_PYTHON") == "1":
    from . import _fallback as _kern
    KERNEL = "python"
else:
    try:
        from . import _kernels as _kern
        KERNEL = "compiled"
    except ImportError:  # extension not built
        from . import _fallback as _kern
        KERNEL = "python"

DEFAULT_MAX_COSETS = 2 ** 20
AMG_HEADER = "# shadowhull amalgam v1"


def kernel_module(name: str | None = None):
    """The kernel module to use: ``"compiled"``, ``"python"`` or the import-time default."""
    if name is None:
        return _kern
    if name == "python":
        from . import _fallback
        return _fallback
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel {name!r}")


# --- presentations ---------------------------------------------------------------

@dataclass
class Presentation:
    """Generators of prime order p; relators are signed index words (+(g+1) or -(g+1))."""

    ngens: int
    p: int
    relators: list[tuple[int, ...]]
    linear_relations: list[tuple[int, ...]] = field(default_factory=list)

    def columns(self) -> list[list[int]]:
        return [[2 * (abs(x) - 1) + (x < 0) for x in w] for w in self.relators]

    def to_amg(self) -> str:
        lines = [AMG_HEADER, f"generators {self.ngens}",
                 "orders " + " ".join([str(self.p)] * self.ngens),
                 f"relators {len(self.relators)}"]
        lines += [" ".join(str(x) for x in w) for w in self.relators]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_amg(cls, text: str) -> "Presentation":
        rows = [ln.strip() for ln in text.splitlines()]
        if not rows or rows[0] != AMG_HEADER:
            raise ValueError("not a shadowhull amalgam file (bad header)")
        body = [r for r in rows[1:] if r and not r.startswith("#")]
        fields = {}
        for key in ("generators", "orders", "relators"):
            if not body:
                raise ValueError(f"missing {key!r} line")
            parts = body.pop(0).split()
            if parts[0] != key:
                raise ValueError(f"expected {key!r}, found {parts[0]!r}")
            fields[key] = [int(x) for x in parts[1:]]
        ngens = fields["generators"][0]
        orders = fields["orders"]
        if len(orders) != ngens:
            raise ValueError("one order per generator expected")
        if len(set(orders)) > 1:
            raise ContractViolation("generators of different prime orders")
        if len(body) != fields["relators"][0]:
            raise ValueError("relator count does not match header")
        rels = [tuple(int(x) for x in r.split()) for r in body]
        for w in rels:
            if any(x == 0 or abs(x) > ngens for x in w):
                raise ValueError("relator refers to an unknown generator")
        return cls(ngens, orders[0] if orders else 2, rels)


def _line_coordinates(emb, li: int):
    """Coordinates of the point generators of a line with respect to a greedy basis.

    The basis consists of point generators taken in increasing point order; coordinates
    of the remaining points come from a breadth-first walk of the line image.
    """
    line = sorted(emb.geometry.lines[li])
    p = emb.p
    F = get_field(p)
    if emb.is_linear:
        vecs = []
        for x in line:
            b = emb.point_bases[x]
            if len(b) != 1:
                raise UnsupportedError("point images must be cyclic of prime order")
            vecs.append(tuple(b[0]))
        basis = []
        for v in vecs:
            if la.rank(basis + [v], F) > len(basis):
                basis.append(v)
        return [la.coordinates(v, basis, F) for v in vecs]
    from .grouprep import elementary_abelian_coordinates
    group = emb.group
    gens = [point_generator(emb, x) for x in line]
    _, coords = elementary_abelian_coordinates(group, emb.line_images[li], gens)
    return [coords[g] for g in gens]


def point_generator(emb, x: int) -> int:
    img = emb.point_images[x]
    if len(img) != emb.p:
        raise UnsupportedError("point images must be cyclic of prime order")
    return min(v for v in img if v != emb.group.identity)


def build_presentation(emb) -> Presentation:
    """Amalgam presentation: point generators of order p, commuting on lines,
    subject to the linear relations each line image imposes."""
    p = emb.p
    F = get_field(p)
    n = emb.geometry.num_points
    rels: list[tuple[int, ...]] = [tuple([x + 1] * p) for x in range(n)]
    seen_pairs = set()
    linear = []
    for li, line in enumerate(emb.geometry.lines):
        pts = sorted(line)
        for a, b in combinations(pts, 2):
            if (a, b) not in seen_pairs:
                seen_pairs.add((a, b))
                rels.append((-(a + 1), -(b + 1), a + 1, b + 1))
        coords = _line_coordinates(emb, li)
        order = sorted(line)
        for c in la.left_kernel(coords, F):
            word = []
            vec = [0] * n
            for x, k in zip(order, c):
                if k:
                    word += [x + 1] * k
                    vec[x] = k
            if word:
                rels.append(tuple(word))
                linear.append(tuple(vec))
    return Presentation(n, p, rels, linear)


def abelian_hull_dim(emb_or_pres) -> int:
    """Dimension over F_p of the abelianized hull: points minus the rank of the line relations."""
    pres = emb_or_pres if isinstance(emb_or_pres, Presentation) else build_presentation(emb_or_pres)
    rows = pres.linear_relations
    if pres.p == 2:
        packed = [sum(1 << i for i, v in enumerate(r) if v) for r in rows]
        r = _kern.gf2_rank(packed)
    else:
        r = la.rank(rows, get_field(pres.p)) if rows else 0
    return pres.ngens - r


# --- coset tables ----------------------------------------------------------------

@dataclass
class CosetTable:
    status: str
    order: int | None
    table: np.ndarray | None
    high_water: int
    kernel: str

    @property
    def digest(self) -> str | None:
        if self.table is None:
            return None
        h = hashlib.sha256()
        h.update(np.asarray(self.table.shape, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.table, dtype="<i4").tobytes())
        return h.hexdigest()


def standardize(rows) -> np.ndarray:
    """Renumber cosets in breadth-first order from coset 0, scanning columns in order."""
    rows = [list(r) for r in rows]
    n = len(rows)
    if n == 0:
        return np.zeros((0, 0), dtype=np.int32)
    ncols = len(rows[0])
    new = [-1] * n
    new[0] = 0
    order = [0]
    k = 1
    i = 0
    while i < len(order):
        c = order[i]
        i += 1
        for x in range(ncols):
            d = rows[c][x]
            if d >= 0 and new[d] < 0:
                new[d] = k
                k += 1
                order.append(d)
    out = np.full((k, ncols), -1, dtype=np.int32)
    for c in order:
        out[new[c]] = [new[d] if d >= 0 else -1 for d in rows[c]]
    return out


def enumerate_cosets(pres: Presentation, max_cosets: int = DEFAULT_MAX_COSETS,
                     kernel: str | None = None) -> CosetTable:
    mod = kernel_module(kernel)
    name = kernel or KERNEL
    status, rows, high = mod.coset_enumerate(pres.ngens, pres.columns(), max_cosets)
    if status != 0:
        return CosetTable("overflowed", None, None, int(high), name)
    table = standardize(rows)
    return CosetTable("complete", table.shape[0], table, int(high), name)


def todd_coxeter(pres: Presentation, max_cosets: int = DEFAULT_MAX_COSETS,
                 kernel: str | None = None) -> tuple[int | None, CosetTable]:
    """Order of the presented group (None on overflow) and its standardized coset table."""
    ct = enumerate_cosets(pres, max_cosets, kernel)
    return ct.order, ct


def generator_permutations(ct: CosetTable) -> np.ndarray:
    """Right-regular permutation of each generator: row g maps coset c to c * x_g."""
    return np.ascontiguousarray(ct.table[:, 0::2].T)


def is_elementary_abelian(order: int | None, pres: Presentation, table: CosetTable) -> bool | None:
    """Generators' permutations commute pairwise and have order p; None without a complete table."""
    if order is None or table.status != "complete":
        return None
    p = pres.p
    perms = generator_permutations(table)
    ident = np.arange(order)
    for a in range(perms.shape[0]):
        x = ident
        for _ in range(p):
            x = perms[a][x]
        if not np.array_equal(x, ident):
            return False
    for a, b in combinations(range(perms.shape[0]), 2):
        if not np.array_equal(perms[a][perms[b]], perms[b][perms[a]]):
            return False
    return True


def hull_coordinates(ct: CosetTable, p: int) -> list[tuple[int, ...]]:
    """For an elementary abelian hull, F_p-coordinates of every generator.

    The basis is chosen greedily among the generators in order.
    """
    perms = generator_permutations(ct)
    ng = perms.shape[0]
    coords: dict[int, tuple] = {0: ()}
    basis = []
    for g in range(ng):
        if int(perms[g][0]) in coords:
            continue
        basis.append(g)
        new = {}
        for c, v in coords.items():
            d = c
            for k in range(p):
                new[d] = v + (k,)
                d = int(perms[g][d])
        coords = new
    if len(coords) != ct.order:
        raise UnsupportedError("hull is not elementary abelian")
    return [coords[int(perms[g][0])] for g in range(ng)]


@dataclass
class HullResult:
    presentation: Presentation
    table: CosetTable
    order: int | None
    elementary_abelian: bool | None
    abelian_dim: int
    codomain_order: int

    @property
    def cover_degree(self) -> Fraction | None:
        if self.order is None:
            return None
        return Fraction(self.order, self.codomain_order)

    @property
    def digest(self) -> str | None:
        return self.table.digest


def compute_hull(emb, max_cosets: int = DEFAULT_MAX_COSETS, kernel: str | None = None,
                 strict: bool = False) -> HullResult:
    """Coset enumeration of the amalgam of an embedding.

    With ``strict``, overflow raises :class:`ResourceLimitError`; otherwise the
    result carries status ``"overflow"`` and the high-water mark.
    """
    pres = build_presentation(emb)
    order, ct = todd_coxeter(pres, max_cosets, kernel)
    if ct.status == "overflowed" and strict:
        raise ResourceLimitError(f"coset table exceeded {max_cosets} rows", ct.high_water)
    return HullResult(pres, ct, order, is_elementary_abelian(order, pres, ct),
                      abelian_hull_dim(pres), emb.codomain_order)


def cover_degree(rep, max_cosets: int = DEFAULT_MAX_COSETS) -> Fraction:
    """|hull| / |codomain| for a unipotent representation (or any embedding)."""
    emb = getattr(rep, "embedding", rep)
    res = compute_hull(emb, max_cosets, strict=True)
    return res.cover_degree


# --- quadric test -----------------------------------------------------------------

def quadratic_monomials(dim: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(dim) for j in range(i, dim)]


def quad_eval(coeffs, v, F) -> int:
    s = 0
    for (i, j), a in zip(quadratic_monomials(len(v)), coeffs):
        if a and v[i] and v[j]:
            s = F.add(s, F.mul(a, F.mul(v[i], v[j])))
    return s


@dataclass
class QuadricReport:
    is_quadric: bool
    form: tuple | None
    candidates: int


def quadric_type(vectors, p: int) -> QuadricReport:
    """Whether some nondegenerate quadratic form has exactly the given points as its singular points."""
    F = get_field(p)
    vectors = [tuple(v) for v in vectors]
    dim = len(vectors[0])
    mons = quadratic_monomials(dim)
    rows = [tuple(F.mul(v[i], v[j]) for i, j in mons) for v in vectors]
    sols = la.right_kernel(rows, len(mons), F)
    target = {la.normalize(v, F) for v in vectors}
    count = 0
    for combo in product(range(p), repeat=len(sols)):
        if not any(combo):
            continue
        coeffs = [0] * len(mons)
        for c, s in zip(combo, sols):
            if c:
                coeffs = list(la.vadd(coeffs, la.vscale(c, s, F), F))
        count += 1
        if not _nondegenerate(coeffs, dim, F):
            continue
        singular = set()
        for v in product(range(p), repeat=dim):
            if any(v) and quad_eval(coeffs, v, F) == 0:
                singular.add(la.normalize(v, F))
        if singular == target:
            return QuadricReport(True, tuple(coeffs), count)
    return QuadricReport(False, None, count)


def _nondegenerate(coeffs, dim, F) -> bool:
    """No nonzero singular vector in the radical of the polar form."""
    mons = quadratic_monomials(dim)
    gram = [[0] * dim for _ in range(dim)]
    for (i, j), a in zip(mons, coeffs):
        if i == j:
            gram[i][i] = F.add(gram[i][i], F.add(a, a))
        else:
            gram[i][j] = F.add(gram[i][j], a)
            gram[j][i] = F.add(gram[j][i], a)
    rad = la.right_kernel(gram, dim, F)
    if not rad:
        return True
    for v in la.span_vectors(rad, F):
        if any(v) and quad_eval(coeffs, v, F) == 0:
            return False
    return True
