"""Shadow geometries of a building for a single type, local and far geometries,
and expansions of group embeddings."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

from . import linalg as la
from .errors import ContractViolation, ResourceLimitError
from .formspace import (Building, BuildingFlag, FormedSpace, Subspace, apply,
                        enumerate_isotropic)
from .geometry import PointLineGeometry

DEFAULT_GROUP_BOUND = 2 ** 20


# --- Coxeter diagram data ---------------------------------------------------

def diagram_edges(b: Building) -> dict[frozenset, int]:
    """Adjacent type pairs mapped to the gonality of their rank-2 residues."""
    n = b.rank
    edges: dict[frozenset, int] = {}
    if b.family == "D":
        for i in range(1, n - 2):
            edges[frozenset((i, i + 1))] = 3
        edges[frozenset((n - 2, n - 1))] = 3
        edges[frozenset((n - 2, n))] = 3
        return edges
    for i in range(1, n):
        edges[frozenset((i, i + 1))] = 3
    if b.family != "A" and n >= 2:
        edges[frozenset((n - 1, n))] = 4
    return edges


def gonality(b: Building, i: int, j: int) -> int:
    return diagram_edges(b).get(frozenset((i, j)), 2)


def panel_order(b: Building, i: int) -> int:
    """Number of type-i elements on a panel of cotype i, minus one."""
    q, n = b.q, b.rank
    if b.family == "2A":
        if i < n:
            return q * q
        return q if b.space.dim % 2 == 0 else q ** 3
    if b.family == "2D":
        return q if i < n else q * q
    return q


def neighbours(b: Building, i: int) -> set[int]:
    return {t for e in diagram_edges(b) if i in e for t in e if t != i}


def connected_sets(b: Building, j: int, size: int) -> list[tuple[int, ...]]:
    """Connected sets of types of the given size containing j, sorted."""
    found = {frozenset((j,))}
    for _ in range(size - 1):
        found = {s | {t} for s in found for x in s for t in neighbours(b, x) if t not in s}
    return sorted(tuple(sorted(s)) for s in found if len(s) == size)


def boundary(b: Building, d) -> tuple[int, ...]:
    d = set(d)
    return tuple(sorted({t for x in d for t in neighbours(b, x) if t not in d}))


def minimal_flag_types(b: Building, j: int, shadow_type: int) -> list[tuple[int, ...]]:
    """Types of the minimal flags whose J-shadows have the given shadow type."""
    if shadow_type == 1:
        return [(j,)]
    return [boundary(b, d) for d in connected_sets(b, j, shadow_type - 1)]


def star_condition(b: Building, j: int) -> bool:
    """Residual connectedness criterion for the far geometry, singleton J = {j}."""
    for i in range(1, b.rank + 1):
        if i == j:
            continue
        triple = (gonality(b, j, i), panel_order(b, j), panel_order(b, i))
        if triple in ((6, 2, 2), (8, 2, 4)):
            return False
    return True


# --- subspaces near a given element ----------------------------------------------

@lru_cache(maxsize=None)
def _linear_subspaces(q: int, d: int, k: int) -> tuple[tuple, ...]:
    from .gf import field_of_order
    F = field_of_order(q)
    return tuple(s.rows for s in enumerate_isotropic(FormedSpace(F, d, "linear"), k))


def subspaces_within(sub: Subspace, k: int, b: Building) -> list[Subspace]:
    F = b.field
    if k == sub.dim:
        return [sub]
    out = []
    for coeffs in _linear_subspaces(F.q, sub.dim, k):
        rows = la.mat_mul(coeffs, sub.rows, F)
        out.append(Subspace.span(rows, F, sub.dim_ambient))
    return sorted(out)


def _complement_rows(sub_rows, ambient_rows, F) -> list[tuple[int, ...]]:
    """Rows of ``ambient_rows`` extending ``sub_rows`` to a basis of the ambient span."""
    cur = [tuple(r) for r in sub_rows]
    extra = []
    r = la.rank(cur, F) if cur else 0
    for v in ambient_rows:
        if la.rank(cur + [tuple(v)], F) > r:
            cur.append(tuple(v))
            extra.append(tuple(v))
            r += 1
    return extra


def superspaces(sub: Subspace, k: int, b: Building) -> list[Subspace]:
    """Elements of dimension k of the building model containing ``sub``."""
    F = b.field
    space = b.space
    if k == sub.dim:
        return [sub]
    if b.family == "A":
        ambient = list(la.identity(space.dim))
    else:
        ambient = space.perp(sub.rows)
    comp = _complement_rows(sub.rows, ambient, F)
    out = []
    for coeffs in _linear_subspaces(F.q, len(comp), k - sub.dim):
        rows = list(sub.rows) + list(la.mat_mul(coeffs, comp, F))
        if b.family == "A" or space.is_totally_isotropic(rows):
            out.append(Subspace.span(rows, F, space.dim))
    return sorted(out)


def incident_elements(b: Building, t: int, a: Subspace, ta: int) -> list[Subspace]:
    """Type-t elements incident with the element ``a`` of type ``ta``."""
    n = b.rank
    if t == ta:
        return [a]
    if b.family == "D" and {t, ta} == {n - 1, n}:
        out = set()
        for hyper in subspaces_within(a, n - 1, b):
            for m in superspaces(hyper, n, b):
                if m != a:
                    out.add(m)
        return sorted(out)
    dt, da = b.element_dim(t), b.element_dim(ta)
    if dt < da:
        return subspaces_within(a, dt, b)
    cands = superspaces(a, dt, b)
    if b.family == "D" and t >= n - 1:
        cands = [m for m in cands if b.type_of(m) == t]
    return cands


def is_flag(b: Building, parts) -> bool:
    parts = list(parts)
    for (t1, x1), (t2, x2) in combinations(parts, 2):
        if not b.incident(t1, x1, t2, x2):
            return False
    return True


def flags_through(b: Building, j: int, a: Subspace, shadow_type: int) -> list[BuildingFlag]:
    """Minimal flags of the given shadow type whose shadow contains the J-element a."""
    out = []
    for types in minimal_flag_types(b, j, shadow_type):
        pools = [incident_elements(b, t, a, j) for t in types]
        for combo in _chains(b, types, pools):
            out.append(b.flag(combo))
    return out


def _chains(b: Building, types, pools):
    def rec(i, acc):
        if i == len(types):
            yield list(acc)
            return
        for x in pools[i]:
            if all(b.incident(types[i], x, t, y) for t, y in acc):
                acc.append((types[i], x))
                yield from rec(i + 1, acc)
                acc.pop()
    yield from rec(0, [])


# --- shadow geometry ------------------------------------------------------------

@dataclass
class Shadow:
    flag: BuildingFlag
    points: tuple[int, ...]
    mask: int


@dataclass
class ShadowGeometry:
    building: Building
    j: int
    points: list[Subspace]
    elements: dict[int, list[Shadow]]
    flag_index: dict[int, dict] = field(default_factory=dict)

    def counts(self) -> dict[int, int]:
        return {t: len(v) for t, v in sorted(self.elements.items())}

    def index_of_flag(self, t: int, flag: BuildingFlag) -> int:
        return self.flag_index[t][flag.key()]

    def shadow_mask(self, flag: BuildingFlag) -> int:
        """J-shadow of an arbitrary flag, as a bitmask over point indices."""
        b = self.building
        m = (1 << len(self.points)) - 1
        for t, x in flag.parts:
            m &= _incidence_mask(b, self.j, t, x)
        return m


def _incidence_mask(b: Building, j: int, t: int, x: Subspace) -> int:
    """Bitmask of the J-elements incident with x (type t)."""
    if t == j:
        return 1 << b.index_of(j, x)
    xm = b.mask(x)
    masks = b.masks(j)
    out = 0
    for i, m in enumerate(masks):
        if b.incident_masks(t, xm, j, m):
            out |= 1 << i
    return out


def _incidence_table(b: Building, j: int, t: int) -> list[int]:
    """Per type-t element, the bitmask of incident J-elements."""
    els = b.elements(t)
    jm = b.masks(j)
    if t == j:
        return [1 << i for i in range(len(els))]
    dt, dj = b.element_dim(t), b.element_dim(j)
    if dt < dj:
        # containment in a J-element: intersect over the basis points of x
        npts = len(b.space.points)
        through = [0] * npts
        for i, m in enumerate(jm):
            mm = m
            while mm:
                low = mm & -mm
                through[low.bit_length() - 1] |= 1 << i
                mm ^= low
        idx = b.space.point_index
        out = []
        for x in els:
            acc = (1 << len(jm)) - 1
            for r in x.rows:
                acc &= through[idx[r]]
            out.append(acc)
        return out
    tm = b.masks(t)
    out = []
    for xm in tm:
        acc = 0
        for i, m in enumerate(jm):
            if b.incident_masks(t, xm, j, m):
                acc |= 1 << i
        out.append(acc)
    return out


def shadow_geometry(b: Building, j: int, max_type: int = 3) -> ShadowGeometry:
    """J-shadow geometry for J = {j}, elements of shadow type 1..max_type."""
    if not 1 <= j <= b.rank:
        raise ContractViolation(f"type {j} outside 1..{b.rank}")
    points = b.elements(j)
    tables: dict[int, list[int]] = {}

    def table(t):
        if t not in tables:
            tables[t] = _incidence_table(b, j, t)
        return tables[t]

    elements: dict[int, list[Shadow]] = {}
    flag_index: dict[int, dict] = {}
    for st in range(1, max_type + 1):
        found: list[Shadow] = []
        seen: set[int] = set()
        for types in minimal_flag_types(b, j, st):
            for combo in _flags_of_type(b, types):
                m = (1 << len(points)) - 1
                for t, i in combo:
                    m &= table(t)[i]
                if m in seen or m == 0:
                    continue
                seen.add(m)
                flag = b.flag([(t, b.elements(t)[i]) for t, i in combo])
                found.append(Shadow(flag, _bits(m), m))
        elements[st] = found
        flag_index[st] = {s.flag.key(): k for k, s in enumerate(found)}
    return ShadowGeometry(b, j, points, elements, flag_index)


def point_line_geometry(sg: ShadowGeometry) -> PointLineGeometry:
    """Points and lines (shadow types 1 and 2) as a plain point-line geometry."""
    return PointLineGeometry(len(sg.points), [s.points for s in sg.elements[2]],
                             f"{sg.building.name} shadow j={sg.j}")


def _bits(m: int) -> tuple[int, ...]:
    out = []
    while m:
        low = m & -m
        out.append(low.bit_length() - 1)
        m ^= low
    return tuple(out)


def _flags_of_type(b: Building, types):
    """All flags of the given type as lists of (type, index), lexicographic."""
    if not types:
        yield []
        return
    first = types[0]
    rest = types[1:]
    masks = {t: b.masks(t) for t in types}
    for i in range(len(b.elements(first))):
        yield from _extend(b, rest, masks, [(first, i)])


def _extend(b, rest, masks, acc):
    if not rest:
        yield list(acc)
        return
    t = rest[0]
    for i, m in enumerate(masks[t]):
        if all(b.incident_masks(t, m, tt, masks[tt][ii]) for tt, ii in acc):
            acc.append((t, i))
            yield from _extend(b, rest[1:], masks, acc)
            acc.pop()


# --- local geometry ------------------------------------------------------------

@dataclass
class LocalGeometry:
    base: int
    geometry: PointLineGeometry
    point_shadows: list[int]
    line_shadows: list[int]
    point_flags: list[BuildingFlag]
    line_flags: list[BuildingFlag]


def local_geometry(sg: ShadowGeometry, a: int | Subspace) -> LocalGeometry:
    """Lines and planes of the shadow geometry through the point ``a`` (index or element)."""
    if isinstance(a, Subspace):
        a = sg.building.index_of(sg.j, a)
    bit = 1 << a
    pts = [k for k, s in enumerate(sg.elements[2]) if s.mask & bit]
    lns = [k for k, s in enumerate(sg.elements[3]) if s.mask & bit]
    pmasks = [sg.elements[2][k].mask for k in pts]
    lines = []
    for k in lns:
        lm = sg.elements[3][k].mask
        lines.append(tuple(i for i, pm in enumerate(pmasks) if pm & lm == pm))
    g = PointLineGeometry(len(pts), lines)
    return LocalGeometry(a, g, pts, lns, [sg.elements[2][k].flag for k in pts],
                         [sg.elements[3][k].flag for k in lns])


def local_geometry_direct(b: Building, j: int, a: Subspace) -> LocalGeometry:
    """Local geometry at a built from the subspaces near a, without the full shadow geometry.

    A point lies on a line iff the union of their minimal flags is a flag.
    """
    pflags = flags_through(b, j, a, 2)
    lflags = flags_through(b, j, a, 3)
    lines = []
    for lf in lflags:
        on = []
        for i, pf in enumerate(pflags):
            parts = {}
            ok = True
            for t, x in list(pf.parts) + list(lf.parts):
                if t in parts and parts[t] != x:
                    ok = False
                    break
                parts[t] = x
            if ok and is_flag(b, parts.items()):
                on.append(i)
        lines.append(tuple(on))
    g = PointLineGeometry(len(pflags), lines)
    return LocalGeometry(-1, g, [], [], pflags, lflags)


# --- far geometry -------------------------------------------------------------

@dataclass
class FarTruncation:
    building: Building
    j: int
    anchor: Subspace
    points: list[int]
    lines: list[int]
    planes: list[int]
    line_flags: list[BuildingFlag]
    plane_flags: list[BuildingFlag]
    star_ok: bool
    warnings: list[str]

    @property
    def point_mask(self) -> int:
        m = 0
        for p in self.points:
            m |= 1 << p
        return m

    def counts(self) -> dict[str, int]:
        return {"points": len(self.points), "lines": len(self.lines), "planes": len(self.planes)}


def far_truncation(b: Building, j: int, anchor: Subspace,
                   sg: ShadowGeometry | None = None) -> FarTruncation:
    """Points opposite ``anchor`` plus the nonempty traces of shadows of type 2 and 3."""
    if sg is None:
        sg = shadow_geometry(b, j)
    elif sg.building is not b or sg.j != j:
        raise ContractViolation("shadow geometry belongs to another building or type")
    ok = star_condition(b, j)
    warnings = [] if ok else ["residual connectedness criterion fails for this type"]
    pts = b.opposite_indices(j, anchor)
    far = 0
    for p in pts:
        far |= 1 << p
    traces = {}
    for st in (2, 3):
        masks, flags, seen = [], [], set()
        for s in sg.elements[st]:
            m = s.mask & far
            if m and m not in seen:
                seen.add(m)
                masks.append(m)
                flags.append(s.flag)
        traces[st] = (masks, flags)
    return FarTruncation(b, j, anchor, pts, traces[2][0], traces[3][0], traces[2][1],
                         traces[3][1], ok, warnings)


# --- expansions ------------------------------------------------------------------

@dataclass
class ExpansionGeometry:
    order: int
    lines: list[tuple[int, ...]]
    planes: list[tuple[int, ...]]
    line_source: list[tuple[int, int]]
    plane_source: list[tuple[int, int]]


def _cosets(group, sub: tuple[int, ...]) -> list[tuple[int, tuple[int, ...]]]:
    covered = bytearray(group.order)
    out = []
    for g in range(group.order):
        if covered[g]:
            continue
        coset = tuple(sorted(int(x) for x in group.left_multiply(g, sub)))
        for x in coset:
            covered[x] = 1
        out.append((g, coset))
    return out


def expansion(emb, bound: int = DEFAULT_GROUP_BOUND) -> ExpansionGeometry:
    """Points = group elements, lines and planes = left cosets of point and line images."""
    group = emb.group
    if group.order > bound:
        raise ResourceLimitError(f"group of order {group.order} exceeds bound {bound}")
    lines, lsrc, planes, psrc = [], [], [], []
    for x, img in enumerate(emb.point_images):
        for g, c in _cosets(group, img):
            lines.append(c)
            lsrc.append((x, g))
    for y, img in enumerate(emb.line_images):
        for g, c in _cosets(group, img):
            planes.append(c)
            psrc.append((y, g))
    return ExpansionGeometry(group.order, lines, planes, lsrc, psrc)


@dataclass
class FarMatch:
    ok: bool
    point_map: list[int] = field(default_factory=list)
    line_map: list[int] = field(default_factory=list)
    plane_map: list[int] = field(default_factory=list)
    counterexample: dict | None = None


def _mask_of(indices, phi) -> int:
    m = 0
    for v in indices:
        m |= 1 << phi[v]
    return m


def expansion_matches_far(rep, far: FarTruncation, sg: ShadowGeometry | None = None) -> FarMatch:
    """Verify that u -> u(A) induces an isomorphism from the expansion onto the far truncation."""
    b = rep.building
    F = b.field
    group = rep.group
    j = rep.j
    phi = []
    for u in range(group.order):
        img = apply(group.fq_matrix(u), rep.A, F)
        phi.append(b.index_of(j, img))
    far_pts = set(far.points)
    if len(set(phi)) != len(phi):
        return FarMatch(False, phi, counterexample={"kind": "point map not injective"})
    if set(phi) != far_pts:
        missing = sorted(far_pts - set(phi))[:1] + sorted(set(phi) - far_pts)[:1]
        return FarMatch(False, phi, counterexample={"kind": "point map not onto", "point": missing})
    ex = expansion(rep)
    result = FarMatch(True, phi)
    for kind, cosets, sources, flags, far_masks in (
            ("line", ex.lines, ex.line_source, rep.point_flags, far.lines),
            ("plane", ex.planes, ex.plane_source, rep.line_flags, far.planes)):
        lookup = {m: i for i, m in enumerate(far_masks)}
        image = []
        for c, (x, g) in zip(cosets, sources):
            m = _mask_of(c, phi)
            k = lookup.get(m)
            if k is None:
                result.ok = False
                result.counterexample = {"kind": f"{kind} coset has no far counterpart",
                                         "element": x, "representative": g}
                return result
            if sg is not None:
                moved = apply(group.fq_matrix(g), flags[x])
                if sg.shadow_mask(moved) & far.point_mask != m:
                    result.ok = False
                    result.counterexample = {"kind": f"{kind} image differs from shadow of moved flag",
                                             "element": x, "representative": g}
                    return result
            image.append(k)
        if len(set(image)) != len(image) or len(image) != len(far_masks):
            result.ok = False
            result.counterexample = {"kind": f"{kind} map is not a bijection",
                                     "cosets": len(image), "far": len(far_masks)}
            return result
        if kind == "line":
            result.line_map = image
        else:
            result.plane_map = image
    # incidence in both directions: coset inclusion versus trace inclusion
    line_sets = [_mask_of(c, range(group.order)) for c in ex.lines]
    plane_sets = [_mask_of(c, range(group.order)) for c in ex.planes]
    for li, ls in enumerate(line_sets):
        fl = far.lines[result.line_map[li]]
        for pi, ps in enumerate(plane_sets):
            fp = far.planes[result.plane_map[pi]]
            if (ls & ps == ls) != (fl & fp == fl):
                result.ok = False
                result.counterexample = {"kind": "incidence mismatch", "line": li, "plane": pi}
                return result
    return result
