"""Registered experiments: each reproduces one computed claim and checks it against expectations."""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Callable

from .errors import ContractViolation
from .formspace import Building, FormedSpace, Subspace
from .gf import get_field
from .grouprep import (abelianization_check, check_axioms, quotient_check, residue_identification,
                       restrict_embedding, sharp_transitivity_all, sharp_transitivity_check,
                       standard_rep)
from .hull import DEFAULT_MAX_COSETS, compute_hull, hull_coordinates, quadric_type
from .shadowfar import expansion_matches_far, far_truncation, shadow_geometry, star_condition
from .veronese import (identify_with_unipotent, line_shape_check, natural_embedding,
                       veronese_hermitian, veronese_quadratic, wedge_embedding)


@dataclass
class Experiment:
    name: str
    description: str
    anchor: str
    run: Callable[[dict], tuple[dict, dict, dict]]


@dataclass
class Report:
    experiment: str
    inputs: dict
    values: dict
    expected: dict
    hashes: dict
    wall_time: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self, with_time: bool = True) -> dict:
        d = {"experiment": self.experiment, "inputs": self.inputs, "values": self.values,
             "expected": self.expected, "hashes": self.hashes, "passed": self.passed,
             "failures": self.failures}
        if with_time:
            d["wall_time_ms"] = int(self.wall_time * 1000)
        return d

    def digest(self) -> str:
        text = json.dumps(self.as_dict(with_time=False), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()


REGISTRY: dict[str, Experiment] = {}


def experiment(name: str, description: str, anchor: str):
    def wrap(fn):
        REGISTRY[name] = Experiment(name, description, anchor, fn)
        return fn
    return wrap


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "numerator") and hasattr(v, "denominator") and not isinstance(v, (int, bool)):
        return int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return v


def run_experiment(name: str, config: dict | None = None) -> Report:
    if name not in REGISTRY:
        raise KeyError(name)
    config = dict(config or {})
    exp = REGISTRY[name]
    t0 = time.perf_counter()
    values, expected, hashes = exp.run(config)
    values, expected = _jsonable(values), _jsonable(expected)
    rep = Report(name, _jsonable({k: config[k] for k in sorted(config)}), values, expected,
                 hashes, time.perf_counter() - t0)
    for k, want in expected.items():
        if values.get(k) != want:
            rep.failures.append({"key": k, "expected": want, "got": values.get(k)})
    return rep


def _max_cosets(config) -> int:
    return int(config.get("max_cosets", DEFAULT_MAX_COSETS))


def _hull_values(emb, config, codomain_order=None):
    res = compute_hull(emb, _max_cosets(config), config.get("kernel"), strict=True)
    vals = {"hull_order": res.order, "abelian_dim": res.abelian_dim,
            "elementary_abelian": res.elementary_abelian}
    if codomain_order is not None:
        from fractions import Fraction
        vals["cover_degree"] = Fraction(res.order, codomain_order)
    return vals, res


# --- hull experiments -------------------------------------------------------------

@experiment("c3q2-dual-polar-hull", "Hull of the quadratic Veronesean of PG(2,2) against the C3(2) radical",
            "quadratic Veronesean of PG(2,2): elementary abelian hull of order 128, twice the C3(2) radical")
def _c3_hull(config):
    rep = standard_rep("C3(2)", 3)
    vals, res = _hull_values(veronese_quadratic(3, 2), config, rep.group.order)
    rvals, rres = _hull_values(rep.embedding, config, rep.group.order)
    vals["u_order"] = rep.group.order
    vals["unipotent_hull_order"] = rvals["hull_order"]
    expected = {"hull_order": 128, "u_order": 64, "cover_degree": 2, "elementary_abelian": True,
                "unipotent_hull_order": 128}
    return vals, expected, {"veronese": res.digest, "unipotent": rres.digest}


@experiment("quadratic-pg3-abelian-dim", "Abelian hull dimension of the quadratic Veronesean of PG(3,2)",
            "quadratic Veronesean of PG(3,2): abelian hull of dimension 15")
def _pg3(config):
    from .hull import abelian_hull_dim
    emb = veronese_quadratic(4, 2)
    return {"abelian_dim": abelian_hull_dim(emb), "points": emb.geometry.num_points}, \
        {"abelian_dim": 15, "points": 15}, {}


@experiment("2a5q2-hull", "Hull of the hermitian Veronesean of PG(2,4) against the 2A5(2) radical",
            "hermitian Veronesean of PG(2,4): hull order 2048, four times the 2A5(2) radical")
def _herm(config):
    rep = standard_rep("2A5(2)", 3)
    vals, res = _hull_values(veronese_hermitian(3, 2), config, rep.group.order)
    vals["u_order"] = rep.group.order
    rvals, rres = _hull_values(rep.embedding, config, rep.group.order)
    vals["unipotent_hull_order"] = rvals["hull_order"]
    expected = {"hull_order": 2048, "u_order": 512, "cover_degree": 4, "unipotent_hull_order": 2048}
    return vals, expected, {"veronese": res.digest, "unipotent": rres.digest}


@experiment("wedge-a3q2", "Wedge embedding of the line Grassmannian of PG(3,2) and the D4(2) radical",
            "the Grassmann embedding is its own hull and matches the D4(2) unipotent representation")
def _wedge(config):
    emb = wedge_embedding(4, 2)
    rep = standard_rep("D4(2)", 4)
    vals, res = _hull_values(emb, config, rep.group.order)
    ident = identify_with_unipotent(emb, rep)
    vals["iso_with_unipotent_D4"] = ident.ok
    vals["u_order"] = rep.group.order
    expected = {"hull_order": 64, "abelian_dim": 6, "cover_degree": 1, "iso_with_unipotent_D4": True}
    return vals, expected, {"wedge": res.digest}


@experiment("w2-hull-quadric", "Hull of the natural embedding of the symplectic quadrangle W(2)",
            "hull of a polar embedding equals the point radical of C3(2) and is quadric-type")
def _w2(config):
    emb = natural_embedding(FormedSpace(get_field(2), 4, "symplectic"))
    vals, res = _hull_values(emb, config)
    coords = hull_coordinates(res.table, 2)
    q_hull = quadric_type(coords, 2)
    q_nat = quadric_type([b[0] for b in emb.point_bases], 2)
    rep = standard_rep("C3(2)", 1)
    vals.update({"u_order_point_radical": rep.group.order, "hull_is_quadric": q_hull.is_quadric,
                 "natural_is_quadric": q_nat.is_quadric,
                 "orders_agree": vals["hull_order"] == rep.group.order})
    expected = {"hull_order": 32, "u_order_point_radical": 32, "orders_agree": True,
                "hull_is_quadric": True, "natural_is_quadric": False}
    return vals, expected, {"w2": res.digest}


@experiment("unipotent-hull-degrees", "Cover degrees of the unipotent representations",
            "cover degrees of the unipotent representations: C3(2) 2, 2A5(2) 4, D4(2) 1")
def _degrees(config):
    vals, hashes = {}, {}
    for name, j in (("C3(2)", 3), ("2A5(2)", 3), ("D4(2)", 4), ("C3(2)", 1)):
        rep = standard_rep(name, j)
        v, res = _hull_values(rep.embedding, config, rep.group.order)
        vals[f"{name}/j={j}"] = v["cover_degree"]
        hashes[f"{name}/j={j}"] = res.digest
    return vals, {"C3(2)/j=3": 2, "2A5(2)/j=3": 4, "D4(2)/j=4": 1, "C3(2)/j=1": 1}, hashes


# --- building-side experiments --------------------------------------------------------

@experiment("sharp-transitivity", "Radicals act regularly on opposite elements, for every anchor",
            "regularity of the unipotent radical on elements opposite A*")
def _sharp(config):
    vals = {}
    for name, j in (("C3(2)", 3), ("2A5(2)", 3), ("D4(2)", 4), ("A3(2)", 2)):
        r = sharp_transitivity_all(Building.from_name(name), j)
        vals[f"{name}/j={j}"] = r["ok"]
        vals[f"{name}/j={j}/anchors"] = r["anchors"]
        vals[f"{name}/j={j}/sizes"] = r["sizes"]
        vals[f"{name}/j={j}/flags"] = sharp_transitivity_check(standard_rep(name, j)).ok
    return vals, {k: True for k, v in vals.items() if isinstance(v, bool)}, {}


def _far_experiment(name: str, j: int):
    def run(config):
        rep = standard_rep(name, j)
        b = rep.building
        sg = shadow_geometry(b, j)
        far = far_truncation(b, j, rep.A_star, sg)
        match = expansion_matches_far(rep, far, sg)
        vals = {"far": far.counts(), "isomorphism": match.ok, "star_condition": star_condition(b, j)}
        return vals, {"isomorphism": True, "star_condition": True}, {}
    return run


experiment("far-expansion-c3q2", "Expansion of the C3(2) representation against the far geometry",
           "the expansion of the unipotent representation is the far geometry truncation")(
    _far_experiment("C3(2)", 3))
experiment("far-expansion-d4q2", "Expansion of the D4(2) representation against the far geometry",
           "the expansion of the unipotent representation is the far geometry truncation")(
    _far_experiment("D4(2)", 4))


@experiment("axiom-suite", "Embedding axioms for every constructed representation and Veronesean",
            "unipotent representations are embeddings")
def _axioms(config):
    vals = {}
    for name, j in (("C3(2)", 3), ("C3(2)", 1), ("2A5(2)", 3), ("D4(2)", 4), ("A3(2)", 2),
                    ("B3(3)", 3), ("2D4(2)", 3), ("C4(2)", 4)):
        vals[f"{name}/j={j}"] = check_axioms(standard_rep(name, j).embedding).ok
    for label, emb in (("quadratic-3-2", veronese_quadratic(3, 2)), ("quadratic-4-2", veronese_quadratic(4, 2)),
                       ("quadratic-3-3", veronese_quadratic(3, 3)), ("hermitian-3-2", veronese_hermitian(3, 2)),
                       ("wedge-4-2", wedge_embedding(4, 2))):
        vals[label] = check_axioms(emb).ok
    shapes = {"conic-3-2": line_shape_check(veronese_quadratic(3, 2)).ok,
              "cap-3-2": line_shape_check(veronese_hermitian(3, 2)).ok}
    vals.update(shapes)
    return vals, {k: True for k in vals}, {}


@experiment("b3q3-derived", "Derived subgroup of the B3(3) radical and the quotient conditions",
            "the derived subgroup W of the B3(3) radical does not define a quotient")
def _b3(config):
    rep = standard_rep("B3(3)", 3)
    ab = abelianization_check(rep)
    gens = rep.group.generating_subset(sorted({v for s in rep.point_images for v in s}))
    derived = rep.group.derived_subgroup(gens)
    q = quotient_check(rep.embedding, derived)
    vals = {"u_order": rep.group.order, "derived_order": len(derived),
            "q1_fails": q.q1_witness is not None, "q2_fails": q.q2_witness is not None,
            "b1": ab.b1, "b2": ab.b2, "b3": ab.b3, "b4": ab.b4}
    return vals, {"u_order": 729, "derived_order": 27, "q1_fails": True}, {}


@experiment("2a6q2-abelianization", "Derived subgroup and abelianization of the 2A6(2) radical",
            "2A6(2) radical: commutator subgroup of order 2^9, abelian quotient of order 2^6")
def _2a6(config):
    rep = standard_rep("2A6(2)", 3)
    ab = abelianization_check(rep)
    vals = {"u_order": rep.group.order, "derived_order": ab.derived_order,
            "quotient_order": ab.quotient_order, "b1": ab.b1, "b2": ab.b2, "b3": ab.b3, "b4": ab.b4}
    return vals, {"derived_order": 2 ** 9, "quotient_order": 2 ** 6}, {}


@experiment("c4-residue", "Restriction of the C4(2) representation to a point residue",
            "restriction to a residue is the unipotent representation of the residue")
def _c4(config):
    rep = standard_rep("C4(2)", 4)
    pt = Subspace.span([rep.A.rows[0]], rep.building.field, rep.building.space.dim)
    r = residue_identification(rep, pt)
    emb, kp, kl, _ = restrict_embedding(rep, None)
    vals = {"isomorphic": r.ok, "restricted_order": r.restricted_order,
            "residue_order": r.residue_order, "stabilizer_matches": r.stabilizer_matches,
            "identity_restriction": len(kp) == rep.geometry.num_points and len(kl) == len(rep.geometry.lines)}
    return vals, {"isomorphic": True, "restricted_order": 64, "residue_order": 64,
                  "stabilizer_matches": True, "identity_restriction": True}, {}


@experiment("shadow-counts", "Element counts of shadow, local and far geometries",
            "shadow geometry counts of classical buildings with their local and far geometries")
def _shadows(config):
    vals = {}
    for name, j in (("C3(2)", 3), ("A3(2)", 2), ("D4(2)", 4), ("2A5(2)", 3)):
        b = Building.from_name(name)
        sg = shadow_geometry(b, j)
        from .shadowfar import local_geometry
        A = b.elements(j)[0]
        lg = local_geometry(sg, A)
        far = far_truncation(b, j, A, sg)
        vals[f"{name}/j={j}"] = {"counts": list(sg.counts().values()),
                                 "local": [lg.geometry.num_points, len(lg.geometry.lines)],
                                 "far_points": far.counts()["points"]}
    expected = {"C3(2)/j=3": {"counts": [135, 315, 63], "local": [7, 7], "far_points": 64},
                "A3(2)/j=2": {"counts": [35, 105, 30], "local": [9, 6], "far_points": 16},
                "D4(2)/j=4": {"counts": [135, 1575, 2025], "local": [35, 105], "far_points": 64},
                "2A5(2)/j=3": {"counts": [891, 6237, 693], "local": [21, 21], "far_points": 512}}
    return vals, expected, {}


@experiment("veronese-identification", "Veroneseans identified with unipotent representations",
            "the unipotent representation is isomorphic to the quadratic or hermitian Veronesean")
def _ident(config):
    vals = {"quadratic-C3(2)": identify_with_unipotent(veronese_quadratic(3, 2), standard_rep("C3(2)", 3)).ok,
            "hermitian-2A5(2)": identify_with_unipotent(veronese_hermitian(3, 2), standard_rep("2A5(2)", 3)).ok,
            "quadratic-D4(2)": identify_with_unipotent(veronese_quadratic(3, 2), standard_rep("D4(2)", 4)).ok}
    return vals, {"quadratic-C3(2)": True, "hermitian-2A5(2)": True, "quadratic-D4(2)": False}, {}


@experiment("kernel-agreement", "Compiled and pure-Python coset enumeration give identical tables",
            "deterministic coset tables")
def _kernels(config):
    from .hull import KERNEL, build_presentation, todd_coxeter
    vals = {"default_kernel": KERNEL}
    hashes = {}
    for label, emb in (("quadratic-3-2", veronese_quadratic(3, 2)), ("wedge-4-2", wedge_embedding(4, 2)),
                       ("hermitian-3-2", veronese_hermitian(3, 2))):
        pres = build_presentation(emb)
        _, a = todd_coxeter(pres, _max_cosets(config), "python")
        try:
            _, b = todd_coxeter(pres, _max_cosets(config), "compiled")
            vals[label] = a.digest == b.digest
        except ImportError:
            vals[label] = None
        hashes[label] = a.digest
    expected = {k: True for k in vals if k != "default_kernel" and vals[k] is not None}
    return vals, expected, hashes


def catalog() -> list[dict]:
    return [{"name": e.name, "description": e.description, "anchor": e.anchor}
            for e in sorted(REGISTRY.values(), key=lambda e: e.name)]
