"""Point-line geometries: validation, generated subspaces, hyperplanes."""
from __future__ import annotations

import json
import sys
from collections import deque
from dataclasses import dataclass, field


@dataclass
class PointLineGeometry:
    """Points are ``0..num_points-1``; each line is a sorted tuple of points."""

    num_points: int
    lines: list[tuple[int, ...]]
    name: str = ""
    _lines_at: list[list[int]] | None = field(default=None, repr=False, compare=False)
    _adj: list[set[int]] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.lines = [tuple(sorted(l)) for l in self.lines]

    @property
    def lines_at(self) -> list[list[int]]:
        if self._lines_at is None:
            at = [[] for _ in range(self.num_points)]
            for li, line in enumerate(self.lines):
                for p in line:
                    at[p].append(li)
            self._lines_at = at
        return self._lines_at

    @property
    def adjacency(self) -> list[set[int]]:
        """Collinearity graph."""
        if self._adj is None:
            adj = [set() for _ in range(self.num_points)]
            for line in self.lines:
                for p in line:
                    adj[p].update(line)
            for p in range(self.num_points):
                adj[p].discard(p)
            self._adj = adj
        return self._adj

    def to_json(self) -> str:
        return json.dumps({"points": self.num_points, "lines": [list(l) for l in self.lines]})

    @classmethod
    def from_json(cls, text: str) -> "PointLineGeometry":
        doc = json.loads(text)
        return cls(int(doc["points"]), [tuple(l) for l in doc["lines"]])


@dataclass
class AxiomReport:
    line_sizes: bool
    point_degrees: bool
    lines_meet_once: bool
    connected: bool
    witnesses: dict

    @property
    def ok(self) -> bool:
        return self.line_sizes and self.point_degrees and self.lines_meet_once and self.connected


def validate_geometry(g: PointLineGeometry) -> AxiomReport:
    """Check the four axioms of a point-line geometry, with one witness per failure."""
    w: dict = {}
    short = next((i for i, l in enumerate(g.lines) if len(l) < 2), None)
    if short is not None:
        w["line_sizes"] = short
    lonely = next((p for p in range(g.num_points) if len(g.lines_at[p]) < 2), None)
    if lonely is not None:
        w["point_degrees"] = lonely
    pair = None
    seen: dict[tuple[int, int], int] = {}
    for li, line in enumerate(g.lines):
        for a_i, a in enumerate(line):
            for b in line[a_i + 1:]:
                prev = seen.get((a, b))
                if prev is not None and prev != li:
                    pair = (prev, li)
                    break
                seen[(a, b)] = li
            if pair:
                break
        if pair:
            break
    if pair is not None:
        w["lines_meet_once"] = pair
    comps = _components(g, range(g.num_points))
    if len(comps) != 1:
        w["connected"] = [c[0] for c in comps[:2]]
    return AxiomReport("line_sizes" not in w, "point_degrees" not in w,
                       "lines_meet_once" not in w, "connected" not in w, w)


def _components(g: PointLineGeometry, allowed) -> list[list[int]]:
    allowed = set(allowed)
    adj = g.adjacency
    comps = []
    seen = set()
    for s in sorted(allowed):
        if s in seen:
            continue
        comp = [s]
        seen.add(s)
        dq = deque([s])
        while dq:
            x = dq.popleft()
            for y in sorted(adj[x]):
                if y in allowed and y not in seen:
                    seen.add(y)
                    comp.append(y)
                    dq.append(y)
        comps.append(sorted(comp))
    return comps


def generated_subspace(g: PointLineGeometry, seed) -> frozenset[int]:
    """Least subspace containing ``seed``: add every line meeting the set in two points."""
    current = set(seed)
    while True:
        grown = set(current)
        for line in g.lines:
            if sum(1 for p in line if p in current) >= 2:
                grown.update(line)
        if grown == current:
            return frozenset(current)
        current = grown


def is_subspace(g: PointLineGeometry, s) -> bool:
    s = set(s)
    return all(sum(1 for p in line if p in s) < 2 or set(line) <= s for line in g.lines)


def is_hyperplane(g: PointLineGeometry, h) -> bool:
    """Proper subspace meeting every line."""
    h = set(h)
    if len(h) >= g.num_points:
        return False
    if not all(any(p in h for p in line) for line in g.lines):
        return False
    return is_subspace(g, h)


def complement_connected(g: PointLineGeometry, h) -> bool:
    h = set(h)
    rest = [p for p in range(g.num_points) if p not in h]
    return len(_components(g, rest)) == 1 if rest else False


def is_maximal_subspace(g: PointLineGeometry, s) -> bool:
    """Brute force: no single extra point generates a proper subspace containing s."""
    s = frozenset(s)
    if not is_subspace(g, s) or len(s) == g.num_points:
        return False
    for p in range(g.num_points):
        if p not in s and len(generated_subspace(g, s | {p})) < g.num_points:
            return False
    return True


@dataclass
class SpanningData:
    parent: list[int]
    components: int
    diameter: int | None
    distances: list[int]


def spanning_structures(g: PointLineGeometry) -> SpanningData:
    """BFS tree from point 0 (neighbours in index order), component count, diameter.

    The diameter is None when the collinearity graph is disconnected.
    """
    adj = g.adjacency
    n = g.num_points
    parent = [-1] * n
    dist = [-1] * n
    if n:
        dist[0] = 0
        dq = deque([0])
        while dq:
            x = dq.popleft()
            for y in sorted(adj[x]):
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    parent[y] = x
                    dq.append(y)
    comps = len(_components(g, range(n)))
    diameter = None
    if comps == 1:
        diameter = max((max(bfs_distances(g, s)) for s in range(n)), default=0)
    return SpanningData(parent, comps, diameter, dist)


def bfs_distances(g: PointLineGeometry, source: int) -> list[int]:
    adj = g.adjacency
    dist = [-1] * g.num_points
    dist[source] = 0
    dq = deque([source])
    while dq:
        x = dq.popleft()
        for y in adj[x]:
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                dq.append(y)
    return dist


def _pair_lines(g: PointLineGeometry) -> dict[tuple[int, int], int]:
    out = {}
    for li, line in enumerate(g.lines):
        for a in line:
            for b in line:
                if a != b:
                    out[(a, b)] = li
    return out


def find_isomorphism(g1: PointLineGeometry, g2: PointLineGeometry) -> list[int] | None:
    """A point bijection mapping the lines of g1 onto the lines of g2, or None.

    Backtracking in breadth-first order of g1; each new point must keep
    collinearity with the mapped points and map the line joining them to a
    consistent image line.
    """
    if g1.num_points != g2.num_points or len(g1.lines) != len(g2.lines):
        return None
    if sorted(map(len, g1.lines)) != sorted(map(len, g2.lines)):
        return None
    n = g1.num_points
    if n == 0:
        return []

    def signature(g, p):
        return (len(g.lines_at[p]), len(g.adjacency[p]), tuple(sorted(len(g.lines[l]) for l in g.lines_at[p])))

    sig1 = [signature(g1, p) for p in range(n)]
    sig2 = [signature(g2, p) for p in range(n)]
    if sorted(sig1) != sorted(sig2):
        return None
    pl1, pl2 = _pair_lines(g1), _pair_lines(g2)
    order: list[int] = []
    seen = set()
    for s in range(n):
        if s in seen:
            continue
        seen.add(s)
        dq = deque([s])
        while dq:
            x = dq.popleft()
            order.append(x)
            for y in sorted(g1.adjacency[x]):
                if y not in seen:
                    seen.add(y)
                    dq.append(y)
    fmap = [-1] * n
    used = [False] * n
    lmap: dict[int, int] = {}
    lused: set[int] = set()

    def place(k: int) -> bool:
        if k == n:
            return True
        x = order[k]
        for y in range(n):
            if used[y] or sig2[y] != sig1[x]:
                continue
            added = []
            ok = True
            for a in order[:k]:
                fa = fmap[a]
                l1 = pl1.get((x, a))
                l2 = pl2.get((y, fa))
                if (l1 is None) != (l2 is None):
                    ok = False
                    break
                if l1 is None:
                    continue
                if l1 in lmap:
                    if lmap[l1] != l2:
                        ok = False
                        break
                elif l2 in lused:
                    ok = False
                    break
                else:
                    lmap[l1] = l2
                    lused.add(l2)
                    added.append(l1)
            if ok:
                fmap[x] = y
                used[y] = True
                if place(k + 1):
                    return True
                fmap[x] = -1
                used[y] = False
            for l1 in added:
                lused.discard(lmap.pop(l1))
        return False

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, n + 100))
    try:
        if not place(0):
            return None
    finally:
        sys.setrecursionlimit(limit)
    images = {frozenset(fmap[p] for p in line) for line in g1.lines}
    if images != {frozenset(line) for line in g2.lines}:
        return None
    return fmap
