"""Command-line interface: direct computations and the experiment runner.

Exit codes: 0 success, 1 an expectation failed, 2 usage error, 3 resource bound exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor

from .errors import ContractViolation, ResourceLimitError, UnsupportedError
from .gf import UnsupportedFieldError

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3

DEFAULTS = {"emit": "json", "max_cosets": 2 ** 20, "parallel": False, "kernel": None}


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _flatten(prefix: str, value, out: list):
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], out)
    elif isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value):
        for i, v in enumerate(value):
            _flatten(f"{prefix}.{i}", v, out)
    else:
        out.append((prefix, json.dumps(value) if isinstance(value, list) else value))


def _csv(rows_by_record: list[tuple[str, dict]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["record", "key", "value"])
    for record, d in rows_by_record:
        flat: list = []
        _flatten("", d, flat)
        for k, v in flat:
            w.writerow([record, k, v])
    return buf.getvalue()


def _emit_list(value: str, allowed: set[str]) -> list[str]:
    keys = [k.strip() for k in value.split(",") if k.strip()]
    bad = [k for k in keys if k not in allowed]
    if bad or not keys:
        raise UsageError(f"unknown --emit field(s) {bad or value!r}; choose from {sorted(allowed)}")
    return keys


def _building(name: str):
    from .formspace import Building
    try:
        return Building.from_name(name)
    except (ValueError, UnsupportedFieldError) as exc:
        raise UsageError(str(exc)) from exc


# --- subcommands ---------------------------------------------------------------------

def cmd_shadow(args, cfg) -> int:
    from .shadowfar import shadow_geometry
    b = _building(args.building)
    sg = shadow_geometry(b, args.j)
    counts = {str(k): v for k, v in sg.counts().items()}
    if args.emit == "counts":
        print(" ".join(f"{k}:{v}" for k, v in counts.items()))
    else:
        print(_dump({"building": b.name, "j": args.j, "counts": counts}))
    return EXIT_OK


def cmd_far(args, cfg) -> int:
    from .shadowfar import far_truncation
    b = _building(args.building)
    top = b.tau_op(args.j)
    anchor = b.elements(top)[0]
    far = far_truncation(b, args.j, anchor)
    doc = {"building": b.name, "j": args.j, **far.counts(), "star_condition": far.star_ok,
           "warnings": far.warnings}
    if args.emit == "counts":
        print(" ".join(f"{k}:{v}" for k, v in far.counts().items()))
    else:
        print(_dump(doc))
    return EXIT_OK


def cmd_unipotent(args, cfg) -> int:
    from .grouprep import standard_rep
    keys = _emit_list(args.emit, {"order", "abelian", "derived-order", "axioms", "json"})
    rep = standard_rep(args.building, args.j)
    g = rep.group
    gens = g.generating_subset(sorted({v for s in rep.point_images for v in s}))
    out = {}
    for k in keys:
        if k == "order":
            out["order"] = g.order
        elif k == "abelian":
            out["abelian"] = g.is_abelian_set(gens)
        elif k == "derived-order":
            out["derived-order"] = len(g.derived_subgroup(gens))
        elif k in ("axioms", "json"):
            from .grouprep import check_axioms
            out["axioms"] = check_axioms(rep.embedding).as_dict()
    print(_dump(out))
    return EXIT_OK


def _veronese_embedding(kind: str, n: int, q: int):
    from .veronese import veronese_hermitian, veronese_quadratic, wedge_embedding
    builders = {"quadratic": veronese_quadratic, "hermitian": veronese_hermitian, "wedge": wedge_embedding}
    return builders[kind](n, q)


def cmd_veronese(args, cfg) -> int:
    from .hull import build_presentation
    emb = _veronese_embedding(args.kind, args.n, args.q)
    if args.emit == "amalgam":
        text = build_presentation(emb).to_amg()
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        line_dims = sorted({len(b) for b in emb.line_bases})
        print(_dump({"kind": args.kind, "n": args.n, "q": args.q, "points": emb.geometry.num_points,
                     "lines": len(emb.geometry.lines), "codomain_dim": emb.group.dim,
                     "line_dims": line_dims}))
    return EXIT_OK


def cmd_hull(args, cfg) -> int:
    from .hull import Presentation, abelian_hull_dim, is_elementary_abelian, todd_coxeter
    keys = _emit_list(args.emit, {"order", "abelian", "abelian-dim", "table-hash", "high-water"})
    if args.amalgam:
        try:
            with open(args.amalgam) as fh:
                pres = Presentation.from_amg(fh.read())
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
    elif args.kind:
        from .hull import build_presentation
        pres = build_presentation(_veronese_embedding(args.kind, args.n, args.q))
    else:
        raise UsageError("give --amalgam FILE or --kind with --n and --q")
    order, table = todd_coxeter(pres, cfg["max_cosets"], cfg["kernel"])
    out = {"status": table.status}
    for k in keys:
        if k == "order":
            out["order"] = order
        elif k == "abelian":
            out["abelian"] = is_elementary_abelian(order, pres, table)
        elif k == "abelian-dim":
            # amalgam files carry words only, not the per-line relation vectors
            out["abelian-dim"] = None if args.amalgam else abelian_hull_dim(pres)
        elif k == "table-hash":
            out["table-hash"] = table.digest
        elif k == "high-water":
            out["high-water"] = table.high_water
    print(_dump(out))
    if table.status != "complete":
        print(f"coset enumeration overflowed at {cfg['max_cosets']} rows "
              f"(high-water mark {table.high_water})", file=sys.stderr)
        return EXIT_RESOURCE
    return EXIT_OK


def _run_one(name: str, config: dict) -> dict:
    from .experiments import run_experiment
    try:
        return run_experiment(name, config).as_dict()
    except ResourceLimitError as exc:
        return {"experiment": name, "resource_error": str(exc), "high_water": exc.high_water,
                "passed": False}


def cmd_run(args, cfg) -> int:
    from .experiments import REGISTRY
    names = list(args.names or cfg.get("experiments") or [])
    if args.all:
        names = sorted(REGISTRY)
    if not names:
        raise UsageError("name at least one experiment or pass --all")
    unknown = [n for n in names if n not in REGISTRY]
    if unknown:
        raise UsageError(f"unknown experiment(s): {', '.join(unknown)}")
    config = {"max_cosets": cfg["max_cosets"]}
    if cfg["kernel"]:
        config["kernel"] = cfg["kernel"]
    if cfg["parallel"] and len(names) > 1:
        with ProcessPoolExecutor() as pool:
            reports = list(pool.map(_run_one, names, [config] * len(names)))
    else:
        reports = [_run_one(n, config) for n in names]
    if cfg["emit"] == "csv":
        sys.stdout.write(_csv([(r["experiment"], r) for r in reports]))
    else:
        print(_dump(reports if len(reports) > 1 else reports[0]))
    if any("resource_error" in r for r in reports):
        return EXIT_RESOURCE
    return EXIT_OK if all(r["passed"] for r in reports) else EXIT_FAILED


def cmd_list(args, cfg) -> int:
    from .experiments import catalog
    cat = catalog()
    if args.json or cfg["emit"] == "json":
        print(_dump(cat))
    elif cfg["emit"] == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "description", "anchor"])
        for e in cat:
            w.writerow([e["name"], e["description"], e["anchor"]])
        sys.stdout.write(buf.getvalue())
    else:
        for e in cat:
            print(f"{e['name']:28s} {e['description']}  [{e['anchor']}]")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shadowhull", description="Shadow geometries, unipotent embeddings and hulls.")
    p.add_argument("--config", help="JSON file with defaults (emit, max_cosets, parallel, kernel, experiments)")
    p.add_argument("--max-cosets", type=int, dest="max_cosets", default=None)
    p.add_argument("--kernel", choices=["compiled", "python"], default=None)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("shadow", help="element counts of a shadow geometry")
    s.add_argument("--building", required=True)
    s.add_argument("--j", type=int, required=True)
    s.add_argument("--emit", choices=["counts", "json"], default="json")
    s.set_defaults(func=cmd_shadow)

    s = sub.add_parser("far", help="far geometry truncation counts")
    s.add_argument("--building", required=True)
    s.add_argument("--j", type=int, required=True)
    s.add_argument("--emit", choices=["counts", "json"], default="json")
    s.set_defaults(func=cmd_far)

    s = sub.add_parser("unipotent", help="unipotent radical and representation data")
    s.add_argument("--building", required=True)
    s.add_argument("--j", type=int, required=True)
    s.add_argument("--emit", default="order,abelian,derived-order")
    s.set_defaults(func=cmd_unipotent)

    s = sub.add_parser("veronese", help="coordinatized embeddings")
    s.add_argument("--kind", choices=["quadratic", "hermitian", "wedge"], required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--emit", choices=["amalgam", "dims"], default="dims")
    s.add_argument("--output", help="write the amalgam file here instead of standard output")
    s.set_defaults(func=cmd_veronese)

    s = sub.add_parser("hull", help="coset enumeration of an amalgam")
    s.add_argument("--amalgam")
    s.add_argument("--kind", choices=["quadratic", "hermitian", "wedge"])
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--q", type=int, default=2)
    s.add_argument("--max-cosets", type=int, dest="sub_max_cosets", default=None)
    s.add_argument("--emit", default="order,abelian,table-hash")
    s.set_defaults(func=cmd_hull)

    s = sub.add_parser("run", help="run registered experiments")
    s.add_argument("names", nargs="*")
    s.add_argument("--all", action="store_true")
    s.add_argument("--emit", choices=["json", "csv"], default=None)
    s.add_argument("--parallel", action="store_true", default=None)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("list", help="catalog of experiments")
    s.add_argument("--json", action="store_true", default=None)
    s.add_argument("--emit", choices=["json", "csv", "text"], default=None)
    s.set_defaults(func=cmd_list)
    return p


def resolve_config(args) -> dict:
    """Flags override the config file, which overrides built-in defaults."""
    cfg = dict(DEFAULTS)
    cfg["emit"] = "text" if args.command == "list" else "json"
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(doc) - set(DEFAULTS) - {"experiments"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(doc)
    if getattr(args, "sub_max_cosets", None) is not None:
        cfg["max_cosets"] = args.sub_max_cosets
    elif args.max_cosets is not None:
        cfg["max_cosets"] = args.max_cosets
    if args.kernel is not None:
        cfg["kernel"] = args.kernel
    if args.command in ("run", "list") and getattr(args, "emit", None) is not None:
        cfg["emit"] = args.emit
    if args.command == "run" and args.parallel is not None:
        cfg["parallel"] = args.parallel
    if not isinstance(cfg["max_cosets"], int) or cfg["max_cosets"] < 1:
        raise UsageError("max_cosets must be a positive integer")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"shadowhull: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceLimitError as exc:
        print(f"shadowhull: {exc} (high-water mark {exc.high_water})", file=sys.stderr)
        return EXIT_RESOURCE
    except (ContractViolation, UnsupportedError, UnsupportedFieldError) as exc:
        print(f"shadowhull: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
