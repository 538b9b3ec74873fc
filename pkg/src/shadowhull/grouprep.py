"""Concrete finite groups, group embeddings of point-line geometries, and the
unipotent representations attached to a pair of opposite elements of a building."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from . import linalg as la
from .errors import ContractViolation, UnsupportedError
from .formspace import Building, BuildingFlag, Subspace, apply
from .geometry import PointLineGeometry
from .gf import Field, get_field
from .shadowfar import LocalGeometry, is_flag, local_geometry_direct


# --- groups -------------------------------------------------------------------

class FiniteGroup:
    """A group of invertible matrices over F_p, fully enumerated.

    ``mats`` has shape (N, D, D).  When the group came from F_q-matrices by
    restriction of scalars, ``field`` records F_q so that elements can be
    turned back into F_q-matrices for acting on subspaces.
    """

    def __init__(self, mats: np.ndarray, p: int, field: Field | None = None, name: str = ""):
        self.p = p
        self.mats = (np.asarray(mats) % p).astype(np.uint8)
        self.field = field
        self.name = name
        n = self.mats.shape[0]
        self.index = {self.mats[i].tobytes(): i for i in range(n)}
        if len(self.index) != n:
            raise ContractViolation("duplicate group elements")
        eye = np.eye(self.mats.shape[1], dtype=np.uint8).tobytes()
        if eye not in self.index:
            raise ContractViolation("element list lacks the identity")
        self.identity = self.index[eye]
        self._inv: list[int] | None = None

    @property
    def order(self) -> int:
        return self.mats.shape[0]

    @property
    def degree(self) -> int:
        return self.mats.shape[1]

    def lookup(self, stack: np.ndarray) -> np.ndarray:
        """Indices of a stack of matrices (raises KeyError if one is not an element)."""
        stack = (np.asarray(stack) % self.p).astype(np.uint8)
        idx = self.index
        return np.fromiter((idx[m.tobytes()] for m in stack), dtype=np.int64, count=stack.shape[0])

    def try_lookup(self, stack: np.ndarray) -> list[int | None]:
        stack = (np.asarray(stack) % self.p).astype(np.uint8)
        return [self.index.get(m.tobytes()) for m in stack]

    def mul(self, a: int, b: int) -> int:
        m = self.mats[a].astype(np.int64) @ self.mats[b].astype(np.int64)
        return self.index[(m % self.p).astype(np.uint8).tobytes()]

    def left_multiply(self, g: int, elems) -> np.ndarray:
        elems = np.asarray(elems, dtype=np.int64)
        prod = np.matmul(self.mats[g].astype(np.int64), self.mats[elems].astype(np.int64))
        return self.lookup(prod)

    def right_multiply(self, elems, g: int) -> np.ndarray:
        elems = np.asarray(elems, dtype=np.int64)
        prod = np.matmul(self.mats[elems].astype(np.int64), self.mats[g].astype(np.int64))
        return self.lookup(prod)

    def inverse(self, a: int) -> int:
        if self._inv is None:
            self._inv = [-1] * self.order
        if self._inv[a] < 0:
            # the inverse is a power of the element
            x, prev = a, self.identity
            while x != self.identity:
                prev = x
                x = self.mul(x, a)
            self._inv[a] = prev
        return self._inv[a]

    def element_order(self, a: int) -> int:
        k, x = 1, a
        while x != self.identity:
            x = self.mul(x, a)
            k += 1
        return k

    def commutator(self, a: int, b: int) -> int:
        return self.mul(self.mul(self.inverse(a), self.inverse(b)), self.mul(a, b))

    def fq_matrix(self, a: int):
        """The element as a matrix over F_q (a tuple of row tuples)."""
        f = self.field or get_field(self.p)
        m = la.from_prime_batch(self.mats[a][None].astype(np.int64), f)[0]
        return tuple(tuple(int(x) for x in row) for row in m)

    def closure(self, gens, start=None) -> tuple[int, ...]:
        """Subgroup generated by ``gens`` (and the elements of ``start``)."""
        gens = sorted(set(int(g) for g in gens))
        seen = np.zeros(self.order, dtype=bool)
        seen[self.identity] = True
        frontier = [self.identity]
        if start is not None:
            for s in start:
                if not seen[s]:
                    seen[s] = True
                    frontier.append(int(s))
        while frontier:
            fr = np.array(frontier, dtype=np.int64)
            new = []
            for g in gens:
                for x in self.right_multiply(fr, g):
                    if not seen[x]:
                        seen[x] = True
                        new.append(int(x))
            frontier = new
        return tuple(int(i) for i in np.flatnonzero(seen))

    def generating_subset(self, candidates) -> list[int]:
        """Greedy generators drawn from ``candidates`` in the given order."""
        gens: list[int] = []
        current = np.zeros(self.order, dtype=bool)
        current[self.identity] = True
        for c in candidates:
            if not current[c]:
                gens.append(int(c))
                sub = self.closure(gens)
                current[:] = False
                current[list(sub)] = True
        return gens

    def is_abelian_set(self, elems) -> bool:
        elems = list(elems)
        for a, b in combinations(elems, 2):
            if self.mul(a, b) != self.mul(b, a):
                return False
        return True

    def derived_subgroup(self, gens) -> tuple[int, ...]:
        """Normal closure of the commutators of the given generating set."""
        comms = sorted({self.commutator(a, b) for a, b in combinations(gens, 2)} - {self.identity})
        sub = set(self.closure(comms))
        changed = True
        while changed:
            changed = False
            extra = []
            for g in gens:
                gi = self.inverse(g)
                for c in list(comms):
                    conj = self.mul(self.mul(gi, c), g)
                    if conj not in sub:
                        extra.append(conj)
            if extra:
                comms = sorted(set(comms) | set(extra))
                sub = set(self.closure(comms))
                changed = True
        return tuple(sorted(sub))

    def stabilizer_mask(self, sub: Subspace) -> np.ndarray:
        """Boolean array: which elements map the F_q-subspace ``sub`` onto itself."""
        f = self.field or get_field(self.p)
        if sub.dim == 0:
            return np.ones(self.order, dtype=bool)
        basis = la.prime_vectors(sub.rows, f)
        h = la.prime_kernel_columns(basis, self.p)
        if h.shape[1] == 0:
            return np.ones(self.order, dtype=bool)
        img = np.einsum("rd,nde->nre", basis, self.mats.astype(np.int64)) % self.p
        test = np.einsum("nre,ef->nrf", img, h) % self.p
        return ~test.reshape(self.order, -1).any(axis=1)

    def subgroup_group(self, elems, name: str = "") -> "FiniteGroup":
        elems = sorted(int(e) for e in elems)
        return FiniteGroup(self.mats[elems], self.p, self.field, name)


class VectorGroup:
    """The additive group of F_p^d; elements are base-p integer codes."""

    def __init__(self, p: int, dim: int, name: str = ""):
        self.p = p
        self.dim = dim
        self.name = name
        self.identity = 0
        self.field = None

    @property
    def order(self) -> int:
        return self.p ** self.dim

    def vector(self, a: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.dim):
            out.append(a % self.p)
            a //= self.p
        return tuple(reversed(out))

    def code(self, v) -> int:
        x = 0
        for c in v:
            x = x * self.p + (int(c) % self.p)
        return x

    def mul(self, a: int, b: int) -> int:
        if self.p == 2:
            return a ^ b
        return self.code(tuple((x + y) % self.p for x, y in zip(self.vector(a), self.vector(b))))

    def left_multiply(self, g: int, elems) -> np.ndarray:
        return np.array([self.mul(g, int(e)) for e in elems], dtype=np.int64)

    def inverse(self, a: int) -> int:
        return self.code(tuple((-x) % self.p for x in self.vector(a)))

    def element_order(self, a: int) -> int:
        return 1 if a == 0 else self.p

    def span_codes(self, basis) -> tuple[int, ...]:
        F = get_field(self.p)
        if not basis:
            return (0,)
        return tuple(sorted({self.code(v) for v in la.span_vectors([tuple(b) for b in basis], F)}))


# --- embeddings -----------------------------------------------------------------

@dataclass
class GroupEmbedding:
    """Subgroups attached to the points and lines of a geometry.

    Linear embeddings (into a :class:`VectorGroup`) keep F_p-bases of the
    images in ``point_bases``/``line_bases``; element lists are derived on
    demand.  Matrix-group embeddings store the element lists directly.
    """

    geometry: PointLineGeometry
    group: object
    p: int
    _point_images: list | None = None
    _line_images: list | None = None
    point_bases: list | None = None
    line_bases: list | None = None
    point_labels: list | None = None
    name: str = ""

    @property
    def is_linear(self) -> bool:
        return self.point_bases is not None

    @property
    def point_images(self) -> list[tuple[int, ...]]:
        if self._point_images is None:
            self._point_images = [self.group.span_codes(b) for b in self.point_bases]
        return self._point_images

    @property
    def line_images(self) -> list[tuple[int, ...]]:
        if self._line_images is None:
            self._line_images = [self.group.span_codes(b) for b in self.line_bases]
        return self._line_images

    @property
    def codomain_order(self) -> int:
        return self.group.order


def linear_embedding(geometry: PointLineGeometry, p: int, point_bases, dim: int,
                     labels=None, name: str = "") -> GroupEmbedding:
    """Embedding into F_p^dim; every line goes to the span of its point images."""
    F = get_field(p)
    pb = [la.rref([tuple(v) for v in b], F)[0] for b in point_bases]
    pb = [[tuple(r) for r in b] for b in pb]
    lb = []
    for line in geometry.lines:
        rows = [v for x in line for v in pb[x]]
        lb.append([tuple(r) for r in la.rref(rows, F)[0]])
    return GroupEmbedding(geometry, VectorGroup(p, dim), p, point_bases=pb, line_bases=lb,
                          point_labels=labels, name=name)


@dataclass
class EmbeddingAxiomReport:
    e1: bool
    e2: bool
    e3: bool
    e4: bool
    witnesses: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.e1 and self.e2 and self.e3 and self.e4

    def as_dict(self) -> dict:
        return {"E1": self.e1, "E2": self.e2, "E3": self.e3, "E4": self.e4}


def check_axioms(emb: GroupEmbedding) -> EmbeddingAxiomReport:
    """Exhaustive test of the four embedding axioms, with one witness per failure."""
    if emb.is_linear:
        return _check_axioms_linear(emb)
    g = emb.geometry
    group = emb.group
    w: dict = {}
    pts = [frozenset(x) for x in emb.point_images]
    lns = [frozenset(x) for x in emb.line_images]
    e = group.identity
    for i, s in enumerate(pts):
        if len(s) <= 1 or len(s) >= group.order:
            w.setdefault("E1", ("improper", i))
    for a, b in combinations(range(len(pts)), 2):
        if "E1" in w:
            break
        if pts[a] & pts[b] != {e}:
            w["E1"] = (a, b)
    for li, line in enumerate(g.lines):
        ls = set(line)
        for x in range(len(pts)):
            if (pts[x] <= lns[li]) != (x in ls):
                w.setdefault("E2", (x, li))
        gens = sorted({v for x in line for v in pts[x]})
        if set(group.closure(gens)) != lns[li]:
            w.setdefault("E3", li)
    allgens = sorted({v for s in pts for v in s})
    gen_set = group.generating_subset(allgens)
    if len(group.closure(gen_set)) != group.order:
        w["E4"] = len(group.closure(gen_set))
    return EmbeddingAxiomReport("E1" not in w, "E2" not in w, "E3" not in w, "E4" not in w, w)


def _check_axioms_linear(emb: GroupEmbedding) -> EmbeddingAxiomReport:
    F = get_field(emb.p)
    g = emb.geometry
    w: dict = {}
    pb = emb.point_bases
    dims = [len(b) for b in pb]
    dim = emb.group.dim
    for i, d in enumerate(dims):
        if d == 0 or d >= dim:
            w.setdefault("E1", ("improper", i))
    if "E1" not in w:
        seen: dict = {}
        for i, b in enumerate(pb):
            key = tuple(map(tuple, b))
            if key in seen:
                w["E1"] = (seen[key], i)
                break
            seen[key] = i
    if "E1" not in w:
        for a, b in combinations(range(len(pb)), 2):
            if la.rank(pb[a] + pb[b], F) != dims[a] + dims[b]:
                w["E1"] = (a, b)
                break
    for li, line in enumerate(g.lines):
        lb = emb.line_bases[li]
        r = len(lb)
        ls = set(line)
        for x in range(len(pb)):
            inside = la.rank(lb + pb[x], F) == r
            if inside != (x in ls):
                w.setdefault("E2", (x, li))
                break
        if la.rank([v for x in line for v in pb[x]], F) != r:
            w.setdefault("E3", li)
    total = la.rank([v for b in pb for v in b], F)
    if total != dim:
        w["E4"] = total
    return EmbeddingAxiomReport("E1" not in w, "E2" not in w, "E3" not in w, "E4" not in w, w)


# --- quotients -------------------------------------------------------------------

class QuotientGroup:
    """G/N for a normal subgroup N of an enumerated group; elements are coset ids."""

    def __init__(self, group, normal):
        self.base = group
        normal = sorted(int(x) for x in normal)
        self.normal = normal
        coset_of = [-1] * group.order
        reps = []
        for g in range(group.order):
            if coset_of[g] >= 0:
                continue
            cid = len(reps)
            reps.append(g)
            for x in group.left_multiply(g, normal):
                coset_of[int(x)] = cid
        self.coset_of = coset_of
        self.reps = reps
        self.identity = coset_of[group.identity]
        self.p = group.p
        self.field = None

    @property
    def order(self) -> int:
        return len(self.reps)

    def mul(self, a: int, b: int) -> int:
        return self.coset_of[self.base.mul(self.reps[a], self.reps[b])]

    def left_multiply(self, g: int, elems) -> np.ndarray:
        return np.array([self.mul(g, int(e)) for e in elems], dtype=np.int64)

    def inverse(self, a: int) -> int:
        return self.coset_of[self.base.inverse(self.reps[a])]

    def element_order(self, a: int) -> int:
        k, x = 1, a
        while x != self.identity:
            x = self.mul(x, a)
            k += 1
        return k

    def closure(self, gens) -> tuple[int, ...]:
        seen = {self.identity}
        frontier = [self.identity]
        while frontier:
            new = []
            for x in frontier:
                for g in gens:
                    y = self.mul(x, g)
                    if y not in seen:
                        seen.add(y)
                        new.append(y)
            frontier = new
        return tuple(sorted(seen))

    def generating_subset(self, candidates) -> list[int]:
        gens: list[int] = []
        cur = {self.identity}
        for c in candidates:
            if c not in cur:
                gens.append(c)
                cur = set(self.closure(gens))
        return gens


def is_normal(group, sub, gens) -> bool:
    s = set(sub)
    for g in gens:
        gi = group.inverse(g)
        for x in s:
            if group.mul(group.mul(gi, x), g) not in s:
                return False
    return True


@dataclass
class QuotientReport:
    defines_quotient: bool
    q1_witness: object = None
    q2_witness: object = None
    quotient: GroupEmbedding | None = None


def _product_set(group, a, b) -> frozenset:
    out = set()
    for x in a:
        out.update(int(v) for v in group.left_multiply(x, list(b)))
    return frozenset(out)


def quotient_check(emb: GroupEmbedding, normal) -> QuotientReport:
    """Test the two quotient conditions for a normal subgroup of the codomain."""
    group = emb.group
    normal = tuple(sorted(int(x) for x in normal))
    pts = emb.point_images
    gens = group.generating_subset(sorted({v for s in pts for v in s})) if hasattr(group, "generating_subset") else []
    if not is_normal(group, normal, gens):
        raise ContractViolation("subgroup is not normal in the codomain")
    ns = set(normal)
    e = group.identity
    q1 = None
    for kind, images in (("point", pts), ("line", emb.line_images)):
        for i, img in enumerate(images):
            extra = (ns & set(img)) - {e}
            if extra:
                q1 = (kind, i, min(extra))
                break
        if q1:
            break
    q2 = None
    adj = emb.geometry.adjacency
    cache: dict[int, frozenset] = {}
    for a, b in combinations(range(len(pts)), 2):
        if b in adj[a]:
            continue
        pa = cache.setdefault(a, _product_set(group, pts[a], normal))
        pb = cache.setdefault(b, _product_set(group, pts[b], normal))
        if pa & pb != frozenset(normal):
            q2 = (a, b)
            break
    rep = QuotientReport(q1 is None and q2 is None, q1, q2)
    if rep.defines_quotient:
        quo = QuotientGroup(group, normal)
        pimg = [tuple(sorted({quo.coset_of[x] for x in img})) for img in pts]
        limg = [tuple(sorted({quo.coset_of[x] for x in img})) for img in emb.line_images]
        rep.quotient = GroupEmbedding(emb.geometry, quo, emb.p, pimg, limg, name=emb.name + "/N")
    return rep


# --- unipotent radicals ---------------------------------------------------------

@dataclass
class AdaptedBasis:
    """Rows e (spanning the opposite element), w (the anisotropic remainder), f (spanning A*)."""

    rows: tuple
    n_e: int
    n_w: int
    n_f: int
    gram_w: tuple
    quad_w: tuple  # Q restricted to the w-block, as values on basis pairs (diag) when quadratic


def adapted_basis(b: Building, anchor: Subspace, opposite: Subspace) -> AdaptedBasis:
    F = b.field
    space = b.space
    if b.family == "A":
        rows = tuple(opposite.rows) + tuple(anchor.rows)
        if la.rank(rows, F) != space.dim:
            raise ContractViolation("elements are not complementary")
        return AdaptedBasis(rows, opposite.dim, 0, anchor.dim, (), ())
    f = [tuple(r) for r in anchor.rows]
    pairing = [[space.form(a, c) for c in f] for a in opposite.rows]
    try:
        pinv = la.mat_inv(pairing, F)
    except ValueError as exc:
        raise ContractViolation("elements are not opposite") from exc
    e = [tuple(r) for r in la.mat_mul(pinv, opposite.rows, F)]
    w = space.perp(e + f)
    gram_w = tuple(tuple(space.form(x, y) for y in w) for x in w)
    quad_w = tuple(space.quad_value(x) for x in w)
    return AdaptedBasis(tuple(e) + tuple(w) + tuple(f), len(e), len(w), len(f), gram_w, quad_w)


def _trace_one(F: Field) -> int:
    for t in range(F.q):
        if F.trace(t) == 1:
            return t
    raise UnsupportedError("no element of trace one")


def _unipotent_params(b: Building, basis: AdaptedBasis):
    """Parameter domains: list of (label, allowed codes) for the free entries."""
    F = b.field
    i, m = basis.n_e, basis.n_w
    kind = b.space.kind
    allf = tuple(range(F.q))
    params = []
    if kind == "linear":
        for a in range(basis.n_e):
            for c in range(basis.n_f):
                params.append((("S", a, c), allf))
        return params
    if kind == "symplectic":
        for a in range(i):
            for c in range(a, i):
                params.append((("K", a, c), allf))
    elif kind == "hermitian":
        trace_zero = tuple(t for t in allf if F.trace(t) == 0)
        for a in range(i):
            params.append((("K", a, a), trace_zero))
            for c in range(a + 1, i):
                params.append((("K", a, c), allf))
    else:  # orthogonal: alternating K
        for a in range(i):
            for c in range(a + 1, i):
                params.append((("K", a, c), allf))
    for a in range(i):
        for c in range(m):
            params.append((("X", a, c), allf))
    return params


def _unipotent_matrix(b: Building, basis: AdaptedBasis, values: dict, t0: int):
    """Block matrix [[I, X, S], [0, I, Y], [0, 0, I]] in the adapted basis."""
    F = b.field
    kind = b.space.kind
    i, m, nf = basis.n_e, basis.n_w, basis.n_f
    d = i + m + nf
    M = [[1 if r == c else 0 for c in range(d)] for r in range(d)]
    if kind == "linear":
        for (_, a, c), v in values.items():
            M[a][i + c] = v
        return M
    X = [[values.get(("X", a, c), 0) for c in range(m)] for a in range(i)]
    S = [[0] * i for _ in range(i)]
    neg, add, mul, conj = F.neg, F.add, F.mul, F.conj
    for (lab, a, c), v in values.items():
        if lab != "K":
            continue
        if kind == "symplectic":
            S[a][c] = v
            S[c][a] = v
        elif kind == "hermitian":
            S[a][c] = v
            if a != c:
                S[c][a] = neg(conj(v))
        else:
            S[a][c] = v
            S[c][a] = neg(v)
    if m:
        gw = basis.gram_w
        XG = [[0] * m for _ in range(i)]
        for a in range(i):
            for c in range(m):
                s = 0
                for dd in range(m):
                    s = add(s, mul(X[a][dd], gw[dd][c]))
                XG[a][c] = s
        # Z = X G_W conj(X)^T
        Z = [[0] * i for _ in range(i)]
        for a in range(i):
            for c in range(i):
                s = 0
                for dd in range(m):
                    s = add(s, mul(XG[a][dd], conj(X[c][dd])))
                Z[a][c] = s
        if kind == "symplectic":
            for a in range(i):
                for c in range(a + 1, i):
                    S[a][c] = add(S[a][c], Z[a][c])
        elif kind == "hermitian":
            for a in range(i):
                S[a][a] = add(S[a][a], mul(neg(Z[a][a]), t0))
                for c in range(a + 1, i):
                    S[a][c] = add(S[a][c], neg(Z[a][c]))
        else:
            space = b.space
            wrows = basis.rows[i:i + m]
            xs = [la.vec_mat(X[a], wrows, F) if m else () for a in range(i)]
            for a in range(i):
                S[a][a] = add(S[a][a], neg(space.quad_value(xs[a])))
                for c in range(a + 1, i):
                    S[a][c] = add(S[a][c], neg(space.form(xs[a], xs[c])))
        for a in range(i):
            for c in range(m):
                M[a][i + c] = X[a][c]
        # Y[c][a] = -conj((X G_W)[a][c])
        for c in range(m):
            for a in range(i):
                M[i + c][i + m + a] = neg(conj(XG[a][c]))
    for a in range(i):
        for c in range(nf):
            M[a][i + m + c] = S[a][c]
    return M


@lru_cache(maxsize=64)
def _adapted_stack(b_key, b: Building, basis_key, basis: AdaptedBasis):
    F = b.field
    params = _unipotent_params(b, basis)
    t0 = _trace_one(F) if F.k == 2 else 1
    labels = [lab for lab, _ in params]
    mats = []
    plist = []
    for combo in product(*[dom for _, dom in params]):
        values = {lab: v for lab, v in zip(labels, combo) if v}
        mats.append(_unipotent_matrix(b, basis, values, t0))
        plist.append(combo)
    arr = np.array(mats, dtype=np.int64).reshape(len(mats), b.space.dim, b.space.dim)
    return la.to_prime_batch(arr, F), tuple(labels), tuple(plist)


def unipotent_stack(b: Building, anchor: Subspace, opposite: Subspace | None = None):
    """Matrices (over F_p, standard coordinates) of the unipotent radical of the stabilizer of ``anchor``.

    Returns ``(stack, basis, labels, params)``.
    """
    F = b.field
    t_anchor = b.type_of(anchor)
    if opposite is None:
        topp = b.tau_op(t_anchor)
        cand = b.opposite_indices(topp, anchor)
        if not cand:
            raise ContractViolation("no opposite element found")
        opposite = b.elements(topp)[cand[0]]
    basis = adapted_basis(b, anchor, opposite)
    key = (b.space.kind, F.p, F.k, basis.n_e, basis.n_w, basis.n_f, basis.gram_w, basis.quad_w)
    # the adapted stack depends on the basis only through the w-block form data
    stack_ad, labels, params = _adapted_stack((b.family, b.rank, b.q, b.space.dim), b, key, _FrozenBasis(basis))
    P = la.to_prime_matrix(basis.rows, F)
    Pinv = la.to_prime_matrix(la.mat_inv(basis.rows, F), F)
    std = np.matmul(np.matmul(Pinv, stack_ad), P) % F.p
    return std, basis, labels, params


class _FrozenBasis:
    """Hashable view of an adapted basis keyed by its w-block form data only."""

    def __init__(self, basis: AdaptedBasis):
        self.basis = basis
        self.key = (basis.n_e, basis.n_w, basis.n_f, basis.gram_w, basis.quad_w)

    def __hash__(self):
        return hash(self.key)

    def __eq__(self, other):
        return isinstance(other, _FrozenBasis) and self.key == other.key

    def __getattr__(self, item):
        return getattr(self.basis, item)


def unipotent_radical(b: Building, anchor: Subspace, opposite: Subspace | None = None) -> FiniteGroup:
    """The unipotent radical of the stabilizer of ``anchor`` as an enumerated matrix group."""
    std, basis, labels, params = unipotent_stack(b, anchor, opposite)
    g = FiniteGroup(std, b.field.p, b.field, name=f"U({b.name})")
    g.basis = basis
    g.param_labels = labels
    g.params = params
    return g


# --- unipotent representations -------------------------------------------------

@dataclass
class UnipotentRep:
    building: Building
    j: int
    A: Subspace
    A_star: Subspace
    group: FiniteGroup
    embedding: GroupEmbedding
    local: LocalGeometry

    @property
    def point_flags(self) -> list[BuildingFlag]:
        return self.local.point_flags

    @property
    def line_flags(self) -> list[BuildingFlag]:
        return self.local.line_flags

    @property
    def point_images(self):
        return self.embedding.point_images

    @property
    def line_images(self):
        return self.embedding.line_images

    @property
    def geometry(self) -> PointLineGeometry:
        return self.embedding.geometry


def flag_stabilizer(group: FiniteGroup, flag: BuildingFlag) -> tuple[int, ...]:
    mask = np.ones(group.order, dtype=bool)
    for _, x in flag.parts:
        mask &= group.stabilizer_mask(x)
    return tuple(int(i) for i in np.flatnonzero(mask))


def unipotent_rep(b: Building, j: int, A: Subspace, A_star: Subspace,
                  group: FiniteGroup | None = None) -> UnipotentRep:
    """Send each point and line X of the local geometry at A to the elements fixing its minimal flag."""
    if not b.elements_opposite(j, A, A_star):
        raise ContractViolation("A and A* are not opposite")
    if group is None:
        group = unipotent_radical(b, A_star, A)
    local = local_geometry_direct(b, j, A)
    pimg = [flag_stabilizer(group, f) for f in local.point_flags]
    limg = [flag_stabilizer(group, f) for f in local.line_flags]
    emb = GroupEmbedding(local.geometry, group, group.p, pimg, limg,
                         name=f"unipotent {b.name} j={j}")
    return UnipotentRep(b, j, A, A_star, group, emb, local)


def standard_rep(name: str, j: int) -> UnipotentRep:
    """Unipotent representation at the first J-element and the first element opposite it."""
    b = Building.from_name(name)
    A = b.elements(j)[0]
    top = b.tau_op(j)
    A_star = b.elements(top)[b.opposite_indices(top, A)[0]]
    return unipotent_rep(b, j, A, A_star)


# --- sharp transitivity ----------------------------------------------------------

@dataclass
class TransitivityReport:
    ok: bool
    orbit_size: int
    opposite_count: int
    stabilizer_size: int
    per_flag_ok: bool = True
    witness: object = None


def sharp_transitivity_check(rep: UnipotentRep, elements=None, per_flag: bool = True) -> TransitivityReport:
    """Orbit of A under the radical equals the set of elements opposite A*, stabilizer trivial."""
    b, j, group = rep.building, rep.j, rep.group
    F = b.field
    elems = list(range(group.order)) if elements is None else sorted(elements)
    opp = set(b.opposite_indices(j, rep.A_star))
    a_idx = b.index_of(j, rep.A)
    images = {}
    stab = 0
    for u in elems:
        k = b.index_of(j, apply(group.fq_matrix(u), rep.A, F))
        images[u] = k
        if k == a_idx:
            stab += 1
    orbit = set(images.values())
    ok = orbit == opp and stab == 1 and len(elems) == len(opp)
    witness = None
    if not ok:
        witness = {"orbit": len(orbit), "opposite": len(opp), "stabilizer": stab,
                   "missing": sorted(opp - orbit)[:3]}
    rep_ok = True
    if per_flag and elements is None:
        masks = b.masks(j)
        for kind, flags, imgs in (("point", rep.point_flags, rep.point_images),
                                  ("line", rep.line_flags, rep.line_images)):
            for x, (fl, img) in enumerate(zip(flags, imgs)):
                sh = {i for i in opp if all(b.incident_masks(t, b.mask(s), j, masks[i]) for t, s in fl.parts)}
                orb = {images[u] for u in img}
                if orb != sh or len(img) != len(sh):
                    rep_ok = False
                    witness = witness or {"flag_kind": kind, "index": x, "orbit": len(orb), "expected": len(sh)}
                    break
    return TransitivityReport(ok and rep_ok, len(orbit), len(opp), stab, rep_ok, witness)


def sharp_transitivity_all(b: Building, j: int) -> dict:
    """For every A* of the opposite type: |op(A*)| = |U_{A*}| and U_{A*} is regular on op(A*).

    Regularity follows from: every element fixes A*, only the identity fixes
    one chosen element A opposite A*, and the counts agree (orbit-stabilizer).
    """
    top = b.tau_op(j)
    sizes = set()
    failures = []
    for idx, anchor in enumerate(b.elements(top)):
        opp = b.opposite_indices(j, anchor)
        A = b.elements(j)[opp[0]]
        std, _, _, _ = unipotent_stack(b, anchor, A)
        tmp = _StackView(std, b.field)
        fixes_anchor = tmp.stabilizer_mask(anchor).all()
        fix_a = int(tmp.stabilizer_mask(A).sum())
        sizes.add((len(opp), std.shape[0]))
        if not (fixes_anchor and fix_a == 1 and len(opp) == std.shape[0]):
            failures.append(idx)
    return {"anchors": len(b.elements(top)), "sizes": sorted(sizes), "failures": failures,
            "ok": not failures}


class _StackView:
    def __init__(self, std, field):
        self.mats = std
        self.p = field.p
        self.field = field
        self.order = std.shape[0]

    stabilizer_mask = FiniteGroup.stabilizer_mask


# --- restriction to residues ----------------------------------------------------

def restrict_embedding(rep: UnipotentRep, flag: BuildingFlag | None) -> tuple[GroupEmbedding, list[int], list[int], tuple[int, ...]]:
    """Restrict to the local points and lines whose shadows lie in the shadow of ``flag``.

    Returns the restricted embedding (codomain: the subgroup generated by the
    restricted images), the kept point and line indices, and the elements of
    the radical fixing ``flag``.
    """
    b = rep.building
    parts = list(flag.parts) if flag is not None else []
    if parts:
        if not is_flag(b, parts + [(rep.j, rep.A)]):
            raise ContractViolation("flag is not incident with A")
        residue_rank = b.rank - len({t for t, _ in parts})
        if residue_rank < 3:
            raise UnsupportedError("residue rank below 3")

    def inside(fl: BuildingFlag) -> bool:
        merged = dict(parts)
        for t, x in fl.parts:
            if t in merged and merged[t] != x:
                return False
            merged[t] = x
        return is_flag(b, merged.items())

    keep_p = [i for i, fl in enumerate(rep.point_flags) if inside(fl)]
    keep_l = [i for i, fl in enumerate(rep.line_flags) if inside(fl)]
    pos = {old: new for new, old in enumerate(keep_p)}
    lines = [tuple(pos[x] for x in rep.geometry.lines[li] if x in pos) for li in keep_l]
    geo = PointLineGeometry(len(keep_p), lines)
    group = rep.group
    gens = sorted({v for i in keep_p for v in rep.point_images[i]})
    sub = group.closure(gens)
    subgroup = group.subgroup_group(sub, name="restricted codomain")
    remap = lambda img: tuple(sorted(subgroup.index[group.mats[v].tobytes()] for v in img))
    emb = GroupEmbedding(geo, subgroup, group.p, [remap(rep.point_images[i]) for i in keep_p],
                         [remap(rep.line_images[i]) for i in keep_l], name="restriction")
    fixing = flag_stabilizer(group, flag) if parts else tuple(range(group.order))
    emb.parent_elements = sub
    return emb, keep_p, keep_l, fixing


# --- abelianization --------------------------------------------------------------

@dataclass
class AbelianizationReport:
    derived_order: int
    quotient_order: int
    b1: bool
    b2: bool
    b3: bool
    b4: bool
    b1_witness: object = None
    b2_witness: object = None
    point_quotient_orders: tuple = ()
    line_quotient_orders: tuple = ()
    abelianized: GroupEmbedding | None = None

    @property
    def defines_quotient(self) -> bool:
        return self.b1 and self.b2

    @property
    def ok(self) -> bool:
        return self.b1 and self.b2 and self.b3 and self.b4


def abelianization_check(rep: UnipotentRep) -> AbelianizationReport:
    emb = rep.embedding
    group = rep.group
    q = rep.building.field.q
    gens = group.generating_subset(sorted({v for s in emb.point_images for v in s}))
    derived = group.derived_subgroup(gens)
    ds = set(derived)
    e = group.identity
    b1w = None
    for kind, images in (("point", emb.point_images), ("line", emb.line_images)):
        for i, img in enumerate(images):
            if (ds & set(img)) - {e}:
                b1w = (kind, i)
                break
        if b1w:
            break
    b2w = None
    adj = emb.geometry.adjacency
    for a, c in combinations(range(len(emb.point_images)), 2):
        if c in adj[a]:
            continue
        pa = _product_set(group, emb.point_images[a], derived)
        pc = _product_set(group, emb.point_images[c], derived)
        if pa & pc != frozenset(derived):
            b2w = (a, c)
            break
    quo = QuotientGroup(group, derived)
    b3 = all(quo.element_order(x) in (1, group.p) for x in range(quo.order))

    def qorder(img):
        return len({quo.coset_of[v] for v in img})

    pq = tuple(sorted({qorder(img) for img in emb.point_images}))
    lq = tuple(sorted({qorder(img) for img in emb.line_images}))
    b4 = pq == (q,) and lq == (q * q,)
    rep_ = AbelianizationReport(len(derived), quo.order, b1w is None, b2w is None, b3, b4,
                                b1w, b2w, pq, lq)
    if rep_.defines_quotient:
        pimg = [tuple(sorted({quo.coset_of[v] for v in img})) for img in emb.point_images]
        limg = [tuple(sorted({quo.coset_of[v] for v in img})) for img in emb.line_images]
        rep_.abelianized = GroupEmbedding(emb.geometry, quo, group.p, pimg, limg,
                                          name=emb.name + " abelianized")
    return rep_


# --- coordinates of elementary abelian subgroups ---------------------------------

def elementary_abelian_coordinates(group, elems, basis_candidates):
    """Coordinates over F_p of the elements of an elementary abelian subgroup.

    The basis is chosen greedily from ``basis_candidates`` in order.  Returns
    ``(basis, coords)`` with ``coords`` mapping element -> tuple, or raises
    UnsupportedError if the subgroup is not elementary abelian.
    """
    p = group.p
    elems = set(int(x) for x in elems)
    basis: list[int] = []
    coords: dict[int, tuple] = {group.identity: ()}
    for c in basis_candidates:
        c = int(c)
        if c in coords:
            continue
        if group.element_order(c) != p:
            raise UnsupportedError("subgroup is not of exponent p")
        basis.append(c)
        new = {}
        for x, v in coords.items():
            y = x
            for k in range(p):
                new[y] = v + (k,)
                y = group.mul(y, c)
        coords = new
        if len(coords) != p ** len(basis):
            raise UnsupportedError("subgroup is not elementary abelian")
    if set(coords) != elems:
        raise UnsupportedError("candidates do not generate the subgroup")
    for a in basis:
        for b_ in basis:
            if group.mul(a, b_) != group.mul(b_, a):
                raise UnsupportedError("subgroup is not abelian")
    return basis, coords


def cover_degree_value(hull_order: int, codomain_order: int) -> Fraction:
    return Fraction(hull_order, codomain_order)


# --- explicit residue isomorphism ------------------------------------------------

@dataclass
class ResidueIdentification:
    ok: bool
    restricted_order: int
    residue_order: int
    stabilizer_matches: bool
    point_map: list[int] = field(default_factory=list)
    line_map: list[int] = field(default_factory=list)
    witness: object = None
    residue_rep: "UnipotentRep | None" = None


def residue_identification(rep: UnipotentRep, point: Subspace) -> ResidueIdentification:
    """Identify the restriction of ``rep`` to a point of A with the unipotent
    representation built directly in the residue of that point.

    The residue p^perp/p is coordinatized by a hyperbolic basis adapted to
    (A, A*), which makes it the standard formed space of the next smaller
    rank.  Elements fixing p act on p^perp/p; the induced matrices must form
    exactly the directly built radical, and point and line images must match.
    """
    b = rep.building
    F = b.field
    space = b.space
    if space.kind not in ("symplectic", "hyperbolic"):
        raise UnsupportedError("residue coordinates implemented for symplectic and hyperbolic spaces")
    if point.dim != 1 or la.rank(list(rep.A.rows) + list(point.rows), F) != rep.A.dim:
        raise ContractViolation("point must be a 1-space inside A")
    n = rep.A.dim
    if n != b.rank:
        raise UnsupportedError("residue identification needs A maximal")
    e_rows = [tuple(point.rows[0])]
    for r in rep.A.rows:
        if la.rank(e_rows + [tuple(r)], F) > len(e_rows):
            e_rows.append(tuple(r))
    fa = [tuple(r) for r in rep.A_star.rows]
    pairing = [[space.form(x, y) for y in fa] for x in e_rows]
    m = la.transpose(la.mat_inv(pairing, F))
    f_rows = [tuple(r) for r in la.mat_mul(m, fa, F)]
    perp_basis = [e_rows[0]] + e_rows[1:] + f_rows[1:]
    res_b = Building(b.family, b.rank - 1, b.q)
    # the adapted basis must be an isometry onto the standard residue space
    images = e_rows[1:] + f_rows[1:]
    for i, x in enumerate(images):
        for k, y in enumerate(images):
            if space.form(x, y) != res_b.space.gram[i][k]:
                raise ContractViolation("adapted basis is not standard")
        if space.quad_value(x) != res_b.space.quad_value(la.identity(len(images))[i]):
            raise ContractViolation("adapted basis is not standard")

    def project(v):
        c = la.coordinates(v, perp_basis, F)
        if c is None:
            raise ContractViolation("vector outside p-perp")
        return tuple(c[1:])

    def rho(sub: Subspace) -> Subspace:
        return Subspace.span([project(r) for r in sub.rows], F, res_b.space.dim)

    A3 = rho(rep.A)
    Astar3 = Subspace.span([project(r) for r in f_rows[1:]], F, res_b.space.dim)
    rep3 = unipotent_rep(res_b, rep.j - 1, A3, Astar3)
    flag = b.flag([(1, point)])
    emb, keep_p, keep_l, fixing = restrict_embedding(rep, flag)
    sub = emb.parent_elements
    group = rep.group
    result = ResidueIdentification(False, len(sub), rep3.group.order, set(sub) == set(fixing),
                                   residue_rep=rep3)
    # induced action on the residue
    psi = {}
    for u in sub:
        M = group.fq_matrix(u)
        rows = [project(la.vec_mat(c, M, F)) for c in images]
        key = la.to_prime_matrix(rows, F).astype(np.uint8).tobytes()
        k = rep3.group.index.get(key)
        if k is None:
            result.witness = {"kind": "induced matrix outside the residue radical", "element": u}
            return result
        psi[u] = k
    if len(set(psi.values())) != len(psi) or len(psi) != rep3.group.order:
        result.witness = {"kind": "induced map not bijective"}
        return result
    for u in sub:
        for v in sub:
            if psi[group.mul(u, v)] != rep3.group.mul(psi[u], psi[v]):
                result.witness = {"kind": "not a homomorphism", "pair": (u, v)}
                return result

    def flag_key(fl):
        return res_b.flag([(t - 1, rho(x)) for t, x in fl.parts if t > 1]).key()

    for kind, keep, flags3, imgs4, imgs3, target in (
            ("point", keep_p, rep3.point_flags, rep.point_images, rep3.point_images, result.point_map),
            ("line", keep_l, rep3.line_flags, rep.line_images, rep3.line_images, result.line_map)):
        index3 = {f.key(): i for i, f in enumerate(flags3)}
        flags4 = rep.point_flags if kind == "point" else rep.line_flags
        for i in keep:
            k = index3.get(flag_key(flags4[i]))
            if k is None:
                result.witness = {"kind": f"{kind} has no residue counterpart", "index": i}
                return result
            if {psi[x] for x in imgs4[i]} != set(imgs3[k]):
                result.witness = {"kind": f"{kind} image mismatch", "index": i}
                return result
            target.append(k)
        if sorted(target) != list(range(len(flags3))):
            result.witness = {"kind": f"{kind} map not bijective"}
            return result
    result.ok = result.stabilizer_matches
    return result


# --- block composition law ------------------------------------------------------------

def adapted_matrix(group: FiniteGroup, u: int):
    """Element ``u`` of a radical written in its adapted basis."""
    F = group.field
    P = group.basis.rows
    return la.mat_mul(la.mat_mul(P, group.fq_matrix(u), F), la.mat_inv(P, F), F)


def block_parameters(basis: AdaptedBasis, M):
    """The (X, S) blocks of an adapted unipotent matrix [[I, X, S], [0, I, Y], [0, 0, I]]."""
    i, m = basis.n_e, basis.n_w
    X = tuple(tuple(M[a][i:i + m]) for a in range(i))
    S = tuple(tuple(M[a][i + m:]) for a in range(i))
    return X, S


def y_block(b: Building, basis: AdaptedBasis, X):
    """The Y block forced by X: Y[c][a] = -conj((X G_W)[a][c])."""
    F = b.field
    i, m = basis.n_e, basis.n_w
    gw = basis.gram_w
    out = [[0] * i for _ in range(m)]
    for a in range(i):
        for c in range(m):
            s = 0
            for d in range(m):
                s = F.add(s, F.mul(X[a][d], gw[d][c]))
            out[c][a] = F.neg(F.conj(s))
    return tuple(tuple(r) for r in out)


def compose_parameters(b: Building, basis: AdaptedBasis, first, second):
    """Group law on (X, S) pairs: (X, S)(X', S') = (X + X', S + S' + X Y(X'))."""
    F = b.field
    X1, S1 = first
    X2, S2 = second
    Y2 = y_block(b, basis, X2)
    X = tuple(la.vadd(r1, r2, F) for r1, r2 in zip(X1, X2))
    XY = la.mat_mul(X1, Y2, F) if basis.n_w else tuple((0,) * basis.n_f for _ in range(basis.n_e))
    S = tuple(la.vadd(la.vadd(r1, r2, F), r3, F) for r1, r2, r3 in zip(S1, S2, XY))
    return X, S


def matrix_from_parameters(b: Building, basis: AdaptedBasis, X, S):
    i, m, nf = basis.n_e, basis.n_w, basis.n_f
    d = i + m + nf
    M = [[1 if r == c else 0 for c in range(d)] for r in range(d)]
    Y = y_block(b, basis, X) if m else ()
    for a in range(i):
        for c in range(m):
            M[a][i + c] = X[a][c]
        for c in range(nf):
            M[a][i + m + c] = S[a][c]
    for c in range(m):
        for a in range(i):
            M[i + c][i + m + a] = Y[c][a]
    return tuple(tuple(r) for r in M)
