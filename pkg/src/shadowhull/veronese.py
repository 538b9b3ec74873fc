"""Veronesean and Grassmann embeddings given by explicit coordinates, and their
identification with unipotent representations."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

from . import linalg as la
from .errors import ContractViolation, UnsupportedError
from .formspace import FormedSpace, Subspace, enumerate_isotropic
from .geometry import PointLineGeometry
from .gf import Field, get_field, field_of_order
from .grouprep import GroupEmbedding, elementary_abelian_coordinates, linear_embedding


# --- ambient projective geometries ----------------------------------------------

def projective_geometry(n: int, F: Field) -> tuple[PointLineGeometry, list[Subspace]]:
    """Points and lines of PG(n-1, F); points in canonical order."""
    space = FormedSpace(F, n, "linear")
    pts = enumerate_isotropic(space, 1)
    index = {s.rows[0]: i for i, s in enumerate(pts)}
    lines = []
    for ln in enumerate_isotropic(space, 2):
        members = {la.normalize(v, F) for v in la.span_vectors(ln.rows, F) if any(v)}
        lines.append(tuple(sorted(index[v] for v in members)))
    return PointLineGeometry(len(pts), lines, f"PG({n - 1},{F.q})"), pts


def grassmann_geometry(n: int, F: Field) -> tuple[PointLineGeometry, list[Subspace]]:
    """Lines of PG(n-1, F) as points; the pencils (point inside plane) as lines."""
    space = FormedSpace(F, n, "linear")
    lns = enumerate_isotropic(space, 2)
    index = {s: i for i, s in enumerate(lns)}
    lines = []
    for plane in enumerate_isotropic(space, 3):
        inside = [s for s in lns if _contains(plane, s, F)]
        for pt in enumerate_isotropic(space, 1):
            if not _contains(plane, pt, F):
                continue
            pencil = [index[s] for s in inside if _contains(s, pt, F)]
            lines.append(tuple(sorted(pencil)))
    return PointLineGeometry(len(lns), lines, f"A_{n - 1},2({F.q})"), lns


def _contains(big: Subspace, small: Subspace, F: Field) -> bool:
    return la.rank(list(big.rows) + list(small.rows), F) == big.dim


# --- matrix spaces ----------------------------------------------------------------

@dataclass(frozen=True)
class SymmetricMatrixSpace:
    """Symmetric n x n matrices; coordinates are the upper-triangular entries row by row."""

    n: int
    field: Field

    @property
    def dim(self) -> int:
        return self.n * (self.n + 1) // 2

    def coordinates(self, m) -> tuple[int, ...]:
        return tuple(m[i][j] for i in range(self.n) for j in range(i, self.n))

    def outer(self, v) -> tuple[tuple[int, ...], ...]:
        F = self.field
        return tuple(tuple(F.mul(a, b) for b in v) for a in v)


@dataclass(frozen=True)
class HermitianMatrixSpace:
    """Hermitian n x n matrices over F_{q^2}, as a vector space over F_q of dimension n^2.

    Coordinates: each diagonal entry contributes its constant coefficient,
    each entry above the diagonal both coefficients.
    """

    n: int
    field: Field

    @property
    def dim(self) -> int:
        return self.n * self.n

    def coordinates(self, m) -> tuple[int, ...]:
        F = self.field
        out = []
        for i in range(self.n):
            c = F.coeffs(m[i][i])
            if c[1]:
                raise ContractViolation("diagonal entry outside the subfield")
            out.append(c[0])
            for j in range(i + 1, self.n):
                out.extend(F.coeffs(m[i][j]))
        return tuple(out)

    def outer(self, v) -> tuple[tuple[int, ...], ...]:
        """The matrix conj(v)^T v."""
        F = self.field
        return tuple(tuple(F.mul(F.conj(a), b) for b in v) for a in v)

    def is_hermitian(self, m) -> bool:
        F = self.field
        return all(m[j][i] == F.conj(m[i][j]) for i in range(self.n) for j in range(self.n))


# --- embeddings -------------------------------------------------------------------

def _prime_basis(vec, F: Field) -> list[tuple[int, ...]]:
    """F_p-basis of the F_q-span of one vector with coordinates in F_q = F_p^k."""
    return [tuple(int(x) for x in r) for r in la.prime_vectors([vec], F)]


def veronese_quadratic(n: int, q: int) -> GroupEmbedding:
    """Point <v> of PG(n-1, q) goes to the span of v^T v in the symmetric matrices."""
    if n < 3:
        raise ContractViolation("needs n >= 3")
    F = field_of_order(q)
    geo, pts = projective_geometry(n, F)
    space = SymmetricMatrixSpace(n, F)
    bases = [_prime_basis(space.coordinates(space.outer(s.rows[0])), F) for s in pts]
    emb = linear_embedding(geo, F.p, bases, space.dim * F.k, labels=pts,
                           name=f"quadratic Veronesean n={n} q={q}")
    emb.label_field = F
    return emb


def veronese_hermitian(n: int, q: int) -> GroupEmbedding:
    """Point <v> of PG(n-1, q^2) goes to the F_q-span of conj(v)^T v."""
    if n < 3:
        raise ContractViolation("needs n >= 3")
    base = field_of_order(q)
    if base.k != 1:
        raise UnsupportedError("hermitian Veronesean is built over prime q only")
    F = get_field(base.p, 2)
    geo, pts = projective_geometry(n, F)
    space = HermitianMatrixSpace(n, F)
    bases = [[space.coordinates(space.outer(s.rows[0]))] for s in pts]
    emb = linear_embedding(geo, base.p, bases, space.dim, labels=pts,
                           name=f"hermitian Veronesean n={n} q={q}")
    emb.label_field = F
    return emb


def wedge_embedding(n: int, q: int) -> GroupEmbedding:
    """Line <v1, v2> of PG(n-1, q) goes to the span of v1 ^ v2 (Pluecker coordinates)."""
    if n < 3:
        raise ContractViolation("needs n >= 3")
    F = field_of_order(q)
    geo, lns = grassmann_geometry(n, F)
    bases = []
    for s in lns:
        u, v = s.rows
        w = tuple(F.sub(F.mul(u[i], v[j]), F.mul(u[j], v[i])) for i in range(n) for j in range(i + 1, n))
        bases.append(_prime_basis(w, F))
    emb = linear_embedding(geo, F.p, bases, n * (n - 1) // 2 * F.k, labels=lns,
                           name=f"wedge embedding n={n} q={q}")
    emb.label_field = F
    return emb


def natural_embedding(space: FormedSpace) -> GroupEmbedding:
    """Polar space of singular points and lines in its own vector space (prime fields)."""
    F = space.field
    if F.k != 1:
        raise UnsupportedError("natural embedding needs a prime field")
    pts = enumerate_isotropic(space, 1)
    index = {s.rows[0]: i for i, s in enumerate(pts)}
    lines = []
    for ln in enumerate_isotropic(space, 2):
        members = {la.normalize(v, F) for v in la.span_vectors(ln.rows, F) if any(v)}
        lines.append(tuple(sorted(index[v] for v in members)))
    geo = PointLineGeometry(len(pts), lines, f"polar {space.kind} {space.dim} {F.q}")
    emb = linear_embedding(geo, F.p, [[s.rows[0]] for s in pts], space.dim, labels=pts,
                           name=f"natural {space.kind} dim {space.dim}")
    emb.label_field = F
    return emb


# --- line-image shape checks ---------------------------------------------------------

@dataclass
class LineShapeReport:
    ok: bool
    line_dims: tuple[int, ...]
    points_per_line: tuple[int, ...]
    witness: object = None


def line_shape_check(emb: GroupEmbedding, degree: int = 1) -> LineShapeReport:
    """Each line image contains exactly the images of its own points, no three of which
    lie in a common 2-dimensional subspace over F_{p^degree}.

    For the quadratic Veronesean this is the conic property; for the hermitian
    one, the cap (elliptic quadric) property.  ``degree`` is the F_p-dimension
    of a point image.
    """
    F = get_field(emb.p)
    dims, counts = set(), set()
    witness = None
    for li, line in enumerate(emb.geometry.lines):
        lb = emb.line_bases[li]
        dims.add(len(lb) // degree)
        inside = [x for x in range(emb.geometry.num_points)
                  if la.rank(lb + emb.point_bases[x], F) == len(lb)]
        counts.add(len(inside))
        if sorted(inside) != sorted(line):
            witness = witness or ("foreign point in line image", li)
        for trio in combinations(line, 3):
            rows = [v for x in trio for v in emb.point_bases[x]]
            if la.rank(rows, F) <= 2 * degree:
                witness = witness or ("three points in a plane", li, trio)
                break
    return LineShapeReport(witness is None, tuple(sorted(dims)), tuple(sorted(counts)), witness)


def cap_check(emb: GroupEmbedding) -> LineShapeReport:
    return line_shape_check(emb)


def conic_check(emb: GroupEmbedding) -> LineShapeReport:
    return line_shape_check(emb)


# --- identification with unipotent representations ---------------------------------

@dataclass
class Identification:
    ok: bool
    candidate: str | None = None
    point_map: list[int] = field(default_factory=list)
    matrix: tuple | None = None
    witness: object = None


def _candidate_labels(rep, mode: str, frob: bool) -> list[Subspace] | None:
    """Label each local point by a subspace of F_q^dim(A) via coordinates in the e-basis of A."""
    b = rep.building
    F = b.field
    basis = rep.group.basis
    e_rows = list(basis.rows[:basis.n_e])
    out = []
    for fl in rep.point_flags:
        parts = [x for _, x in fl.parts if x.dim < rep.A.dim]
        if len(parts) != 1:
            return None
        coords = []
        for r in parts[0].rows:
            c = la.coordinates(r, e_rows, F)
            if c is None:
                return None
            coords.append(c)
        if mode == "annihilator":
            coords = la.right_kernel(coords, len(e_rows), F)
        if frob:
            coords = [tuple(F.conj(a) for a in c) for c in coords]
        out.append(Subspace.span(coords, F, len(e_rows)))
    return out


def identify_with_unipotent(v: GroupEmbedding, rep) -> Identification:
    """Explicit isomorphism from a coordinatized embedding onto a unipotent representation.

    A point bijection is taken from the coordinates of the minimal flags in a
    basis of A (directly or through the annihilator, optionally conjugated);
    the group map is then solved as an F_p-linear map sending each point
    generator to a multiple of the matching one, and checked on every line.
    """
    geo_v, geo_u = v.geometry, rep.geometry
    if geo_v.num_points != geo_u.num_points or len(geo_v.lines) != len(geo_u.lines):
        return Identification(False, witness={"kind": "geometries differ",
                                              "points": (geo_v.num_points, geo_u.num_points),
                                              "lines": (len(geo_v.lines), len(geo_u.lines))})
    if not v.is_linear or any(len(b) != 1 for b in v.point_bases):
        return Identification(False, witness={"kind": "point images not cyclic of prime order"})
    group = rep.group
    p = v.p
    F = get_field(p)
    gens = [min(x for x in img if x != group.identity) for img in rep.point_images]
    try:
        _, coords = elementary_abelian_coordinates(group, range(group.order), gens)
    except UnsupportedError as exc:
        return Identification(False, witness={"kind": "codomain not elementary abelian",
                                              "detail": str(exc)})
    d = v.group.dim
    e = len(next(iter(coords.values())))
    if d != e:
        return Identification(False, witness={"kind": "codomain dimensions differ", "dims": (d, e)})
    v_index = {s: i for i, s in enumerate(v.point_labels)}
    v_lines = {frozenset(l) for l in geo_v.lines}
    last = None
    for mode, frob in product(("annihilator", "coordinates"), (False, True)):
        if frob and rep.building.field.k == 1:
            continue
        name = mode + ("+conjugate" if frob else "")
        labels = _candidate_labels(rep, mode, frob)
        if labels is None:
            last = {"kind": "minimal flags not inside A", "candidate": name}
            continue
        alpha = [v_index.get(s) for s in labels]
        if None in alpha or len(set(alpha)) != len(alpha):
            last = {"kind": "point labels do not match", "candidate": name}
            continue
        bad = next((li for li, l in enumerate(geo_u.lines)
                    if frozenset(alpha[x] for x in l) not in v_lines), None)
        if bad is not None:
            last = {"kind": "line not mapped to a line", "candidate": name, "line": bad}
            continue
        inv = [0] * len(alpha)
        for i, a in enumerate(alpha):
            inv[a] = i
        mat = _solve_linear_map(v, [coords[gens[inv[a]]] for a in range(len(inv))], d, F)
        if mat is None:
            last = {"kind": "no invertible linear map", "candidate": name}
            continue
        bad = _check_lines(v, rep, coords, alpha, mat, F)
        if bad is not None:
            last = {"kind": "line image mismatch", "candidate": name, "line": bad}
            continue
        return Identification(True, name, alpha, tuple(tuple(r) for r in mat))
    return Identification(False, witness=last)


def _solve_linear_map(v, targets, d, F):
    """Matrix M with v_x M = mu_x t_x, mu_x nonzero, M invertible; None if impossible."""
    n = len(targets)
    nunk = d * d + n
    rows = []
    for x in range(n):
        src = v.point_bases[x][0]
        for c in range(d):
            row = [0] * nunk
            for r in range(d):
                row[r * d + c] = src[r]
            row[d * d + x] = F.neg(targets[x][c])
            rows.append(tuple(row))
    kern = la.right_kernel(rows, nunk, F)
    if not kern:
        return None
    trials = [kern[0]] if len(kern) > 4 else None
    combos = ([c for c in product(range(F.q), repeat=len(kern)) if any(c)]
              if trials is None else [(1,) + (0,) * (len(kern) - 1)])
    for combo in combos:
        sol = [0] * nunk
        for c, k in zip(combo, kern):
            if c:
                sol = list(la.vadd(sol, la.vscale(c, k, F), F))
        mat = [sol[r * d:(r + 1) * d] for r in range(d)]
        if la.rank(mat, F) == d:
            return mat
    return None


def _check_lines(v, rep, coords, alpha, mat, F):
    u_lines = rep.line_images
    v_line_of = {frozenset(l): i for i, l in enumerate(v.geometry.lines)}
    for li, line in enumerate(rep.geometry.lines):
        vl = v_line_of[frozenset(alpha[x] for x in line)]
        img = [la.vec_mat(r, mat, F) for r in v.line_bases[vl]]
        target = [coords[g] for g in u_lines[li]]
        if la.rank(img, F) != la.rank(target, F) or la.rank(img + target, F) != la.rank(target, F):
            return li
    return None
