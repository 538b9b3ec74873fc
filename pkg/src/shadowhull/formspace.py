"""Formed vector spaces, their isotropic subspaces and the classical buildings.

Coordinates are ``(x_1..x_n, y_1..y_n, z...)`` where ``x_i, y_i`` form
hyperbolic pairs and ``z`` spans the anisotropic remainder, if any.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg as la
from .errors import ContractViolation
from .gf import Field, UnsupportedFieldError, get_field, is_prime

KINDS = ("linear", "symplectic", "quadratic_odd", "hyperbolic", "minus", "hermitian")


def _anisotropic_coefficient(p: int) -> int:
    # smallest c making z1^2 + z1 z2 + c z2^2 anisotropic over F_p
    for c in range(p):
        if all((a * a + a * b + c * b * b) % p for a in range(p) for b in range(p) if (a, b) != (0, 0)):
            return c
    raise UnsupportedFieldError(f"no anisotropic binary form over F_{p}")


class FormedSpace:
    """F_q^dim with one of the supported reflexive forms (or none)."""

    def __init__(self, field: Field, dim: int, kind: str):
        if kind not in KINDS:
            raise ValueError(f"unknown form kind {kind!r}")
        self.field = field
        self.dim = dim
        self.kind = kind
        F = field
        n = dim // 2
        if kind == "hermitian" and F.k != 2:
            raise UnsupportedFieldError("hermitian forms need a quadratic extension field")
        if kind in ("symplectic", "hyperbolic", "minus") and dim % 2:
            raise ValueError(f"{kind} space needs even dimension")
        if kind == "quadratic_odd" and (dim % 2 == 0 or F.p == 2):
            raise ValueError("odd-dimensional quadrics need odd dimension and odd characteristic")
        quad = None
        gram = [[0] * dim for _ in range(dim)]
        if kind == "symplectic":
            for i in range(n):
                gram[i][n + i] = 1
                gram[n + i][i] = F.neg(1)
        elif kind in ("hyperbolic", "quadratic_odd", "minus"):
            h = n if kind != "minus" else n - 1
            quad = [[0] * dim for _ in range(dim)]
            for i in range(h):
                quad[i][h + i] = 1
            if kind == "quadratic_odd":
                quad[dim - 1][dim - 1] = 1
            if kind == "minus":
                a, b = dim - 2, dim - 1
                quad[a][a] = 1
                quad[a][b] = 1
                quad[b][b] = _anisotropic_coefficient(F.p) if F.k == 1 else None
                if quad[b][b] is None:
                    raise UnsupportedFieldError("minus quadrics are built over prime fields only")
            for i in range(dim):
                for j in range(dim):
                    gram[i][j] = F.add(quad[i][j], quad[j][i])
        elif kind == "hermitian":
            for i in range(n):
                gram[i][n + i] = 1
                gram[n + i][i] = 1
            if dim % 2:
                gram[dim - 1][dim - 1] = 1
        self.gram = tuple(tuple(r) for r in gram) if kind != "linear" else None
        self.quad = tuple(tuple(r) for r in quad) if quad is not None else None
        self.witt_index = {
            "linear": dim, "symplectic": n, "hyperbolic": n, "quadratic_odd": n,
            "minus": n - 1, "hermitian": n,
        }[kind]

    def __repr__(self) -> str:
        return f"FormedSpace(F_{self.field.q}, dim={self.dim}, kind={self.kind})"

    # --- forms -------------------------------------------------------------
    def form(self, u, v) -> int:
        """Bilinear (or sesquilinear, linear in ``u``) polar form."""
        F = self.field
        if self.gram is None:
            return 0
        vbar = [F.conj(b) for b in v] if self.kind == "hermitian" else v
        return la.dot(la.vec_mat(u, self.gram, F), vbar, F)

    def quad_value(self, v) -> int:
        F = self.field
        if self.quad is not None:
            s = 0
            for i, a in enumerate(v):
                if not a:
                    continue
                row = self.quad[i]
                for j in range(i, self.dim):
                    if row[j] and v[j]:
                        s = F.add(s, F.mul(row[j], F.mul(a, v[j])))
            return s
        if self.kind == "hermitian":
            return self.form(v, v)
        return 0

    def is_singular(self, v) -> bool:
        return self.quad_value(v) == 0

    def is_totally_isotropic(self, rows) -> bool:
        rows = [tuple(r) for r in rows]
        if self.kind == "linear":
            return True
        if not all(self.is_singular(r) for r in rows):
            return False
        return all(self.form(a, b) == 0 for i, a in enumerate(rows) for b in rows[i + 1:])

    def perp(self, rows) -> list[tuple[int, ...]]:
        """Basis of the orthogonal complement of the span of ``rows``."""
        F = self.field
        if self.gram is None:
            raise ContractViolation("a linear space has no orthogonal complement")
        # v is orthogonal to r iff r G conj(v)^T = 0; solve for conj(v), then conjugate.
        cons = [la.vec_mat(r, self.gram, F) for r in rows]
        ker = la.right_kernel(cons, self.dim, F) if cons else list(la.identity(self.dim))
        if self.kind == "hermitian":
            ker = [tuple(F.conj(a) for a in v) for v in ker]
        return ker

    def preserves(self, m) -> bool:
        """True iff the matrix m (acting on row vectors) is an isometry."""
        F = self.field
        if self.gram is None:
            return len(la.rref(m, F)[0]) == self.dim
        mbar = [[F.conj(a) for a in row] for row in m] if self.kind == "hermitian" else m
        lhs = la.mat_mul(la.mat_mul(m, self.gram, F), la.transpose(mbar), F)
        if lhs != self.gram:
            return False
        if self.quad is not None:
            for i in range(self.dim):
                if self.quad_value(m[i]) != self.quad[i][i]:
                    return False
        return True

    # --- point set -------------------------------------------------------------
    @cached_property
    def points(self) -> list[tuple[int, ...]]:
        """Normalized singular nonzero vectors (all of them for ``linear``), sorted."""
        F = self.field
        pts = []
        for lead in range(self.dim):
            tail = self.dim - lead - 1
            for code in range(F.q ** tail):
                v = [0] * self.dim
                v[lead] = 1
                c = code
                for j in range(self.dim - 1, lead, -1):
                    v[j] = c % F.q
                    c //= F.q
                v = tuple(v)
                if self.kind == "linear" or self.is_singular(v):
                    pts.append(v)
        pts.sort(key=lambda v: pack(v, F.q))
        return pts

    @cached_property
    def point_index(self) -> dict[tuple[int, ...], int]:
        return {v: i for i, v in enumerate(self.points)}

    @cached_property
    def _orth_masks(self) -> list[int]:
        """Bitmask (over point indices) of the points orthogonal to each point."""
        pts = self.points
        N = len(pts)
        if self.kind == "linear":
            full = (1 << N) - 1
            return [full] * N
        F = self.field
        P = np.array(pts, dtype=np.int64)
        mul = np.array(F.mul_t, dtype=np.int64)
        add = np.array(F.add_t, dtype=np.int64)
        G = np.array(self.gram, dtype=np.int64)
        # W = P G over F_q
        W = np.zeros_like(P)
        for a in range(self.dim):
            W = add[W, mul[P[:, a][:, None], G[a][None, :]]]
        conj = np.array([F.conj(a) for a in range(F.q)], dtype=np.int64)
        Pc = conj[P]
        acc = np.zeros((N, N), dtype=np.int64)
        for b in range(self.dim):
            acc = add[acc, mul[W[:, b][:, None], Pc[:, b][None, :]]]
        orth = acc == 0
        masks = []
        for row in orth:
            masks.append(int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little"))
        return masks

    def mask_of(self, rows) -> int:
        """Bitmask of the points lying in the span of ``rows``."""
        F = self.field
        idx = self.point_index
        m = 0
        for v in la.span_vectors(list(rows), F):
            if any(v):
                nv = la.normalize(v, F)
                i = idx.get(nv)
                if i is None:
                    raise ContractViolation("span contains a non-singular vector")
                m |= 1 << i
        return m

    @cached_property
    def _point_keys(self) -> np.ndarray:
        return np.array([pack(v, self.field.q) for v in self.points], dtype=np.int64)

    def masks_of(self, row_lists) -> list[int]:
        """Batched :meth:`mask_of` for subspaces of one dimension given in echelon form.

        With echelon rows, the combinations whose first nonzero coefficient is
        one are already normalized, so each point is hit exactly once.
        """
        row_lists = [list(r) for r in row_lists]
        if not row_lists:
            return []
        k = len(row_lists[0])
        if k == 0:
            return [0] * len(row_lists)
        F = self.field
        coeffs = np.array(_normalized_coefficients(F.q, k), dtype=np.int64)
        R = np.array(row_lists, dtype=np.int64)
        add = np.array(F.add_t, dtype=np.int64)
        mul = np.array(F.mul_t, dtype=np.int64)
        vecs = np.zeros((R.shape[0], coeffs.shape[0], self.dim), dtype=np.int64)
        for i in range(k):
            vecs = add[vecs, mul[coeffs[:, i][None, :, None], R[:, i][:, None, :]]]
        w = max(1, (F.q - 1).bit_length())
        keys = np.zeros(vecs.shape[:2], dtype=np.int64)
        for c in range(self.dim):
            keys = (keys << w) | vecs[:, :, c]
        table = self._point_keys
        pos = np.searchsorted(table, keys)
        pos = np.minimum(pos, len(table) - 1)
        if not (table[pos] == keys).all():
            raise ContractViolation("span contains a non-singular vector")
        hit = np.zeros((R.shape[0], len(table)), dtype=bool)
        np.put_along_axis(hit, pos, True, axis=1)
        packed = np.packbits(hit, axis=1, bitorder="little")
        return [int.from_bytes(row.tobytes(), "little") for row in packed]

    def perp_mask(self, sub: "Subspace") -> int:
        """Points of the space orthogonal to every row of a totally singular subspace."""
        masks = self._orth_masks
        idx = self.point_index
        m = (1 << len(self.points)) - 1
        for r in sub.rows:
            m &= masks[idx[r]]
        return m


def _normalized_coefficients(q: int, k: int) -> list[tuple[int, ...]]:
    out = []
    for lead in range(k):
        for tail in range(q ** (k - 1 - lead)):
            c = [0] * k
            c[lead] = 1
            for j in range(k - 1, lead, -1):
                c[j] = tail % q
                tail //= q
            out.append(tuple(c))
    return out


def pack(v, q: int) -> int:
    """Bit-packed encoding of a vector, first coordinate most significant."""
    w = max(1, (q - 1).bit_length())
    x = 0
    for a in v:
        x = (x << w) | a
    return x


class Subspace:
    """A subspace stored by its canonical reduced row echelon basis."""

    __slots__ = ("rows", "key", "dim_ambient")

    def __init__(self, rows, q: int, dim_ambient: int):
        self.rows = tuple(tuple(r) for r in rows)
        self.key = tuple(pack(r, q) for r in self.rows)
        self.dim_ambient = dim_ambient

    @classmethod
    def span(cls, rows, field: Field, dim_ambient: int | None = None) -> "Subspace":
        rows = [tuple(r) for r in rows]
        n = dim_ambient if dim_ambient is not None else len(rows[0])
        red, _ = la.rref(rows, field) if rows else ([], [])
        return cls(red, field.q, n)

    @property
    def dim(self) -> int:
        return len(self.rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, Subspace) and self.key == other.key and self.dim_ambient == other.dim_ambient

    def __hash__(self) -> int:
        return hash(self.key)

    def __lt__(self, other: "Subspace") -> bool:
        return self.key < other.key

    def __repr__(self) -> str:
        return f"Subspace({list(self.rows)})"

    @property
    def pivots(self) -> list[int]:
        out = []
        for r in self.rows:
            for j, a in enumerate(r):
                if a:
                    out.append(j)
                    break
        return out


def zero_subspace(space: FormedSpace) -> Subspace:
    return Subspace((), space.field.q, space.dim)


def enumerate_isotropic(space: FormedSpace, k: int) -> list[Subspace]:
    """All totally isotropic (singular) k-subspaces, sorted by canonical key.

    For a linear space every k-subspace qualifies.  Each subspace is generated
    exactly once: its echelon basis minus the last row is a smaller member
    of the list, and the last row is a point led by a fresh column.
    """
    F = space.field
    if k == 0:
        return [zero_subspace(space)]
    if k > space.witt_index or k < 0:
        return []
    pts = space.points
    orth = space._orth_masks
    lead_masks = [0] * space.dim
    for i, v in enumerate(pts):
        lead = next(j for j, a in enumerate(v) if a)
        lead_masks[lead] |= 1 << i
    level = [((v,), lead, orth[i]) for i, v in enumerate(pts)
             for lead in [next(j for j, a in enumerate(v) if a)]]
    for _ in range(k - 1):
        nxt = []
        for rows, last, om in level:
            for c in range(last + 1, space.dim):
                if any(r[c] for r in rows):
                    continue
                cand = om & lead_masks[c]
                while cand:
                    low = cand & -cand
                    i = low.bit_length() - 1
                    cand ^= low
                    nxt.append((rows + (pts[i],), c, om & orth[i]))
        level = nxt
    out = [Subspace(rows, F.q, space.dim) for rows, _, _ in level]
    out.sort()
    return out


# --- group elements -----------------------------------------------------------

@dataclass(frozen=True)
class GroupElement:
    matrix: tuple

    def check(self, space: FormedSpace) -> bool:
        return space.preserves(self.matrix)


def apply(g, x, field: Field | None = None):
    """Image of a subspace or flag under a matrix acting on row vectors."""
    m = g.matrix if isinstance(g, GroupElement) else g
    if isinstance(x, BuildingFlag):
        F = x.building.field
        return BuildingFlag(x.building, tuple((t, apply(m, s, F)) for t, s in x.parts))
    if field is None:
        raise ContractViolation("field required to apply a matrix to a subspace")
    if x.dim == 0:
        return x
    rows = [la.vec_mat(r, m, field) for r in x.rows]
    return Subspace.span(rows, field, x.dim_ambient)


def intersection_dim(a: Subspace, b: Subspace, field: Field) -> int:
    return a.dim + b.dim - la.rank(list(a.rows) + list(b.rows), field)


def contains(big: Subspace, small: Subspace, field: Field) -> bool:
    return la.rank(list(big.rows) + list(small.rows), field) == big.dim


# --- buildings ---------------------------------------------------------------

_NAME = re.compile(r"^(2?)([ABCD])(\d+)\((\d+)\)$")


@dataclass(frozen=True)
class BuildingFlag:
    building: "Building"
    parts: tuple  # ((type, Subspace), ...) sorted by type

    @property
    def types(self) -> tuple[int, ...]:
        return tuple(t for t, _ in self.parts)

    def part(self, t: int) -> Subspace:
        for tt, s in self.parts:
            if tt == t:
                return s
        raise KeyError(t)

    def key(self) -> tuple:
        return tuple((t, s.key) for t, s in self.parts)

    def __hash__(self) -> int:
        return hash(self.key())

    def __eq__(self, other) -> bool:
        return isinstance(other, BuildingFlag) and self.key() == other.key()


class Building:
    """A classical building modelled by subspaces of a formed space.

    Types are 1..rank.  For every family except D the type of an element is
    its dimension.  In type D_n the maximal singular subspaces split into two
    classes: type ``n`` holds the class of the first maximal in canonical order
    (label ``+``) and type ``n - 1`` holds the other class (label ``-``);
    singular (n-1)-spaces are flags of type {n-1, n}.
    """

    def __init__(self, family: str, rank: int, q: int, dim: int | None = None):
        self.family = family
        self.rank = rank
        self.q = q
        if not is_prime(q):
            raise UnsupportedFieldError("only prime-order base fields are supported")
        if family == "A":
            space = FormedSpace(get_field(q), rank + 1, "linear")
        elif family == "C":
            space = FormedSpace(get_field(q), 2 * rank, "symplectic")
        elif family == "B":
            space = FormedSpace(get_field(q), 2 * rank + 1, "quadratic_odd")
        elif family == "D":
            if rank < 3:
                raise UnsupportedFieldError("type D needs rank at least 3")
            space = FormedSpace(get_field(q), 2 * rank, "hyperbolic")
        elif family == "2A":
            space = FormedSpace(get_field(q, 2), dim if dim is not None else 2 * rank, "hermitian")
        elif family == "2D":
            space = FormedSpace(get_field(q), 2 * rank + 2, "minus")
        else:
            raise UnsupportedFieldError(f"unknown family {family!r}")
        self.space = space
        self.field = space.field
        if space.witt_index != rank and family != "A":
            raise ContractViolation("Witt index does not match the building rank")
        self._elements: dict[int, list[Subspace]] = {}
        self._index: dict[int, dict] = {}
        self._masks: dict[int, list[int]] = {}
        self.name = None

    @classmethod
    def from_name(cls, name: str) -> "Building":
        m = _NAME.match(name.strip())
        if not m:
            raise ValueError(f"cannot parse building name {name!r}")
        twisted, letter, num, q = m.group(1), m.group(2), int(m.group(3)), int(m.group(4))
        if twisted:
            if letter == "A":
                b = cls("2A", (num + 1) // 2, q, dim=num + 1)
            elif letter == "D":
                b = cls("2D", num - 1, q)
            else:
                raise ValueError(f"unsupported twisted family in {name!r}")
        else:
            b = cls(letter, num, q)
        b.name = name.strip()
        return b

    def __repr__(self) -> str:
        return f"Building({self.name or self.family + str(self.rank)})"

    @property
    def is_polar(self) -> bool:
        return self.family != "A"

    def tau_op(self, t: int) -> int:
        n = self.rank
        if self.family == "A":
            return n + 1 - t
        if self.family == "D" and n % 2 == 1 and t >= n - 1:
            return 2 * n - 1 - t
        return t

    def element_dim(self, t: int) -> int:
        if not 1 <= t <= self.rank:
            raise ContractViolation(f"type {t} outside 1..{self.rank}")
        if self.family == "D" and t >= self.rank - 1:
            return self.rank
        return t

    @cached_property
    def maximals(self) -> list[Subspace]:
        return enumerate_isotropic(self.space, self.space.witt_index)

    def type_d_class(self, m: Subspace) -> str:
        if self.family != "D":
            raise ContractViolation("oriflamme classes exist only in type D")
        return type_d_class(self.space, m, self.maximals[0])

    def elements(self, t: int) -> list[Subspace]:
        if t not in self._elements:
            if self.family == "D" and t >= self.rank - 1:
                want = "+" if t == self.rank else "-"
                els = [m for m in self.maximals if self.type_d_class(m) == want]
            elif self.family != "A" and t == self.rank:
                els = self.maximals
            else:
                els = enumerate_isotropic(self.space, self.element_dim(t))
            self._elements[t] = els
            self._index[t] = {s.key: i for i, s in enumerate(els)}
        return self._elements[t]

    def index_of(self, t: int, s: Subspace) -> int:
        self.elements(t)
        return self._index[t][s.key]

    def type_of(self, s: Subspace) -> int:
        """Type of a single element given as a subspace."""
        if self.family == "D" and s.dim == self.rank:
            return self.rank if self.type_d_class(s) == "+" else self.rank - 1
        return s.dim

    def masks(self, t: int) -> list[int]:
        if t not in self._masks:
            self._masks[t] = self.space.masks_of([s.rows for s in self.elements(t)])
        return self._masks[t]

    def mask(self, s: Subspace) -> int:
        return self.space.mask_of(s.rows)

    def incident(self, t1: int, x: Subspace, t2: int, y: Subspace) -> bool:
        F = self.field
        if t1 == t2:
            return x == y
        n = self.rank
        if self.family == "D" and {t1, t2} == {n - 1, n}:
            return intersection_dim(x, y, F) == n - 1
        if x.dim <= y.dim:
            return contains(y, x, F)
        return contains(x, y, F)

    def incident_masks(self, t1: int, m1: int, t2: int, m2: int) -> bool:
        """Incidence decided on point masks (valid for elements of this building)."""
        if t1 == t2:
            return m1 == m2
        n = self.rank
        if self.family == "D" and {t1, t2} == {n - 1, n}:
            return (m1 & m2).bit_count() == (self.q ** (n - 1) - 1) // (self.q - 1)
        inter = m1 & m2
        return inter == m1 or inter == m2

    def flag(self, parts) -> BuildingFlag:
        parts = tuple(sorted(parts, key=lambda p: p[0]))
        return BuildingFlag(self, parts)

    # --- opposition -------------------------------------------------------
    def elements_opposite(self, t: int, x: Subspace, y: Subspace) -> bool:
        """Are x (type t) and y (type tau_op(t)) opposite?  Decided by linear algebra."""
        F = self.field
        if self.family == "A":
            return la.rank(list(x.rows) + list(y.rows), F) == self.space.dim
        pairing = [[self.space.form(a, b) for b in y.rows] for a in x.rows]
        return la.rank(pairing, F) == x.dim

    def opposite_indices(self, t: int, anchor: Subspace) -> list[int]:
        """Indices of the type-t elements opposite ``anchor`` (of type tau_op(t))."""
        masks = self.masks(t)
        if self.family == "A":
            ref = self.mask(anchor)
        else:
            ref = self.space.perp_mask(anchor)
        return [i for i, m in enumerate(masks) if m & ref == 0]


def type_d_class(space: FormedSpace, m: Subspace, reference: Subspace) -> str:
    """Class label of a maximal singular subspace of a hyperbolic quadric."""
    if space.kind != "hyperbolic" or m.dim != space.witt_index or not space.is_totally_isotropic(m.rows):
        raise ContractViolation("type_d_class needs a maximal singular subspace of a hyperbolic quadric")
    codim = m.dim - intersection_dim(m, reference, space.field)
    return "+" if codim % 2 == 0 else "-"


def is_opposite(f: BuildingFlag, g: BuildingFlag) -> bool:
    """Opposition of flags, tested part by part on matching types."""
    b = f.building
    want = sorted(b.tau_op(t) for t in f.types)
    if sorted(g.types) != want:
        raise ContractViolation("flag types are not related by the opposition involution")
    for t, x in f.parts:
        if not b.elements_opposite(t, x, g.part(b.tau_op(t))):
            return False
    return True


def parse_building(name: str) -> Building:
    return Building.from_name(name)
