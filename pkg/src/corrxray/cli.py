"""Command line interface.

Every command prints a JSON report (and writes it with any artifacts under
``--out-dir``).  The exit status is 0 exactly when every check in the
report passed; usage and config errors exit with 2.  The worker count for
exploration comes from the ``CORRXRAY_WORKERS`` environment variable.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import __version__
from .biset import BisetElement, ConnectorSet, WreathRecursion, check_recursion
from .config import (
    SCHEMA_VERSION,
    CurvesConfig,
    LimitsetConfig,
    XrayConfig,
    canonical_json,
    digest,
    load_config,
)
from .groups import enumerate_ball, parse_word, word_str
from .orbits import (
    BudgetExceeded,
    attractor,
    check_contraction,
    dumps,
    explore,
    graph_to_dot,
    graph_to_json,
    node_norms,
)


class UsageError(Exception):
    pass


class _Timer:
    """Named wall-clock intervals, reported only on request."""

    def __init__(self):
        self.marks = {}

    @contextmanager
    def __call__(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.marks[name] = round(time.perf_counter() - t0, 3)


def _check(name: str, passed, detail="") -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def make_report(command: str, inputs_digest: str, results: dict, checks: list, timings=None) -> dict:
    rep = {
        "command": command,
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "inputs_digest": inputs_digest,
        "results": results,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
    if timings is not None:
        rep["timings"] = timings
    return rep


def _digest_of(data) -> str:
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()


class Output:
    """Writes artifacts below a directory; ``None`` disables writing."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir) if out_dir is not None else None
        self.written = []

    def write(self, name: str, text: str) -> None:
        if self.dir is None:
            return
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / name).write_text(text)
        self.written.append(name)


# --------------------------------------------------------------------------
# catalog, check, derive-recursion
# --------------------------------------------------------------------------


def cmd_catalog(args) -> dict:
    from .numerics.correspondence import catalog

    items = []
    for c in catalog():
        items.append({
            "name": c.name,
            "phi": str(c.phi.expr) if c.phi.exact else repr(c.phi),
            "rho": str(c.rho.expr) if c.rho.exact else repr(c.rho),
            "degree_phi": c.phi.degree,
            "degree_rho": c.rho.degree,
            "exact": c.exact,
            "cusps_T": len(c.cusps_T),
            "notes": c.notes,
        })
    return make_report("catalog", _digest_of({}), {"correspondences": items}, [])


def _catalog_name(name: str) -> str:
    from .numerics.correspondence import CATALOG_NAMES

    if name not in CATALOG_NAMES:
        raise UsageError(f"unknown correspondence {name!r}; choose from {', '.join(CATALOG_NAMES)}")
    return name


def cmd_check(args, timer=None) -> dict:
    from .facts import check

    names = [_catalog_name(n) for n in args.names]
    timer = timer or _Timer()
    results, checks = [], []
    for n in names:
        with timer(f"check:{n}"):
            r = check(n)
        results.append(r)
        checks += [_check(f"{n}:{c['name']}", c["passed"], c["detail"]) for c in r["checks"]]
    return make_report("check", _digest_of({"names": names}), {"correspondences": results}, checks)


def derive_report(name: str, density: int = 1) -> tuple:
    """``(results, checks)`` for the path-lifting derivation of ``name``."""
    from .numerics.correspondence import get
    from .numerics.recursion import derive_wreath_recursion, monodromy_check

    c = get(name)
    der = derive_wreath_recursion(c, density=density)
    mono = monodromy_check(c, der.recursion)
    res = der.to_json()
    res["monodromy"] = mono
    checks = [
        _check("recursion_consistent", not check_recursion(der.recursion)),
        _check("monodromy_matches_local_degrees", all(mono.values()), str(mono)),
        _check("lift_residual_small", der.max_residual < 1e-8, f"{der.max_residual:.3e}"),
    ]
    return res, checks


def cmd_derive(args, timer=None) -> dict:
    timer = timer or _Timer()
    out = Output(args.out_dir)
    if args.name == "z2i" or args.map:
        from .curves import derive_dynamical_biset

        expr = args.map or "t**2 + I"
        with timer("derive"):
            B, der, punct = derive_dynamical_biset(expr, density=args.density)
        res = der.to_json()
        res["correspondence"] = expr
        res["punctures"] = [[p.real, p.imag] for p in punct]
        viol = B.peripheral_violations()
        checks = [
            _check("recursion_consistent", not check_recursion(B.recursion)),
            _check("peripheral_cycles_peripheral", not viol, str(viol)),
            _check("lift_residual_small", der.max_residual < 1e-8, f"{der.max_residual:.3e}"),
        ]
        name = "z2i"
    else:
        name = _catalog_name(args.name)
        with timer("derive"):
            res, checks = derive_report(name, args.density)
    rep = make_report("derive-recursion", _digest_of({"name": name, "map": args.map, "density": args.density}),
                      res, checks)
    out.write(f"{name}.recursion.json", dumps(res))
    return rep


# --------------------------------------------------------------------------
# xray
# --------------------------------------------------------------------------


def _xray_sources(cfg: XrayConfig) -> tuple:
    if cfg.correspondence is not None:
        from .numerics.correspondence import get
        from .numerics.recursion import derive_wreath_recursion

        der = derive_wreath_recursion(get(_catalog_name(cfg.correspondence)), density=cfg.density)
        return der.recursion, der.connectors
    rec = WreathRecursion.from_json(cfg.recursion)
    if cfg.connectors is not None:
        X = ConnectorSet.from_json(cfg.connectors)
    else:
        X = ConnectorSet.basis(rec.degree, 0)
    X.validate(rec.degree)
    return rec, X


def run_xray(cfg: XrayConfig, out: Output, timer: _Timer) -> dict:
    from .hyperbolic import ThickThinParams, decompose

    with timer("recursion"):
        rec, X = _xray_sources(cfg)
    if cfg.seeds is not None:
        seeds = [parse_word(s) for s in cfg.seeds]
    else:
        seeds = enumerate_ball(cfg.seed_length, rec.rank)
    results = {
        "recursion": rec.to_json(),
        "connectors": X.to_json(),
        "n_seeds": len(set(seeds)),
    }
    checks = []
    try:
        with timer("explore"):
            g = explore(seeds, X, rec, max_nodes=cfg.budgets.max_nodes, max_depth=cfg.budgets.max_depth)
    except BudgetExceeded as e:
        g = e.graph
        results.update({"n_nodes": len(g), "frontier": len(g.frontier), "error": str(e)})
        out.write(f"{cfg.output}.graph.json", dumps(graph_to_json(g)))
        checks.append(_check("exploration_closed", False, str(e)))
        return {"results": results, "checks": checks}
    with timer("attractor"):
        rep = attractor(g)
    bp = complex(*cfg.basepoint)
    with timer("contraction"):
        norms = node_norms(g, bp)
        cr = check_contraction(g, norms, rep, N_max=cfg.contraction.N_max,
                               eps_grid=cfg.contraction.eps_grid, n_rays=cfg.contraction.n_rays)
    tt = ThickThinParams(cfg.thick_thin.delta, cfg.thick_thin.zeta, cfg.thick_thin.mu, bp)
    with timer("decompose"):
        decs = {}
        for w in rep.words[:cfg.decompose_limit]:
            d = decompose(w, tt)
            decs[word_str(w) or "e"] = {"norm": d.total, "segments": d.to_json()}
    results.update({
        "n_nodes": len(g),
        "n_edges": g.n_edges,
        "max_depth": int(g.depth.max()) if len(g) else 0,
        "attractor": [word_str(w) or "e" for w in rep.words],
        "attractor_size": len(rep.words),
        "forward_closed": rep.forward_closed,
        "entry_bound": rep.entry_bound,
        "contraction": cr.to_json(),
        "thick_thin": {"delta": tt.delta, "zeta": tt.zeta, "mu": tt.mu, "decompositions": decs},
    })
    checks += [
        _check("exploration_closed", g.closed, f"{len(g)} nodes"),
        _check("attractor_forward_closed", rep.forward_closed),
        _check("attractor_nonempty_or_no_seeds", len(rep.words) > 0 or len(g) == 0, f"{len(rep.words)} words"),
        _check("increment_bound_finite", np.isfinite(cr.xi), f"xi = {cr.xi:.6g}"),
        _check("contraction_envelope", cr.envelope_ok,
               f"N = {cr.N}, eps = {cr.epsilon}, kappa = {cr.kappa:.6g}, violations {cr.envelope_violations}"),
    ]
    out.write(f"{cfg.output}.graph.json", dumps(graph_to_json(g, rep)))
    out.write(f"{cfg.output}.attractor.dot", graph_to_dot(g, rep, only_attractor=True))
    return {"results": results, "checks": checks}


# --------------------------------------------------------------------------
# curves
# --------------------------------------------------------------------------


def run_curves(cfg: CurvesConfig, out: Output, timer: _Timer) -> dict:
    from .curves import DynamicalBiset, SlopeTable, curve_attractor, derive_dynamical_biset

    results = {}
    with timer("biset"):
        if cfg.recursion is not None:
            B = DynamicalBiset(WreathRecursion.from_json(cfg.recursion), "config")
            if B.recursion.rank != 3:
                raise UsageError("curve pullback needs a rank-3 recursion")
        else:
            punct = [complex(*p) for p in cfg.punctures] if cfg.punctures is not None else None
            B, der, ordered = derive_dynamical_biset(cfg.map_expr, punct, complex(*cfg.lift_basepoint),
                                                     cfg.density)
            results["map"] = cfg.map_expr
            results["punctures"] = [[p.real, p.imag] for p in ordered]
            results["max_residual"] = der.max_residual
    results["recursion"] = B.recursion.to_json()
    viol = B.peripheral_violations()
    h = cfg.table_height or max(8, cfg.bound)
    table = SlopeTable(h, cap=cfg.table_cap or max(64, 4 * cfg.bound))
    try:
        with timer("attractor"):
            ca = curve_attractor(B, cfg.bound, table=table, max_nodes=cfg.max_nodes)
    except BudgetExceeded as e:
        results["error"] = str(e)
        return {"results": results, "checks": [_check("exploration_closed", False, str(e))]}
    auto = ca.automaton_json()
    results["automaton"] = auto
    results["table_height"] = ca.table_height
    results["status"] = "all states fixed" if ca.all_fixed else "attractor"
    checks = [
        _check("biset_peripheral", not viol, str(viol)),
        _check("exploration_closed", ca.graph.closed, f"{len(ca.graph)} states"),
        _check("attractor_forward_closed", ca.report.forward_closed),
        _check("degree_conservation", ca.degree_ok),
        _check("all_curves_recognized", not ca.unrecognized, f"{len(ca.unrecognized)} states with unknown components"),
    ]
    out.write(f"{cfg.output}.automaton.json", dumps(auto))
    out.write(f"{cfg.output}.automaton.dot", ca.automaton_dot())
    return {"results": results, "checks": checks}


# --------------------------------------------------------------------------
# limitset
# --------------------------------------------------------------------------


def run_limitset(cfg: LimitsetConfig, out: Output, timer: _Timer) -> dict:
    from .numerics.correspondence import get
    from .numerics.limitset import backward_orbit_sample, hausdorff

    c = get(_catalog_name(cfg.correspondence))
    clouds, info, checks = [], [], []
    for k, (x, y) in enumerate(cfg.basepoints):
        s0 = complex(x, y)
        if c.cusps_S.contains(s0):
            raise UsageError(f"basepoint {s0} is a cusp")
        with timer(f"sample:{k}"):
            smp = backward_orbit_sample(c, s0, cfg.depth, seed=cfg.seed, budget=cfg.budget, samples=cfg.samples)
        clouds.append(smp)
        name = f"{cfg.output}.{k}.csv"
        out.write(name, smp.to_csv())
        info.append({"basepoint": [x, y], "mode": smp.mode, "points": len(smp.points), "total": smp.total,
                     "csv": name})
        if smp.mode == "full":
            checks.append(_check(f"cardinality_{k}", smp.total == c.degree ** cfg.depth,
                                 f"{smp.total} = {c.degree}^{cfg.depth}"))
    results = {"correspondence": c.name, "degree": c.degree, "depth": cfg.depth, "clouds": info}
    if len(clouds) == 2:
        d = hausdorff(clouds[0].points, clouds[1].points, seed=cfg.seed)
        results["hausdorff"] = d
        if cfg.hausdorff_bound is not None:
            checks.append(_check("hausdorff_below_bound", d < cfg.hausdorff_bound,
                                 f"{d:.6g} < {cfg.hausdorff_bound}"))
    return {"results": results, "checks": checks}


RUNNERS = {"xray": (XrayConfig, run_xray), "curves": (CurvesConfig, run_curves),
           "limitset": (LimitsetConfig, run_limitset)}


def run_config(kind: str, cfg, out_dir=None, timings: bool = False) -> dict:
    """Run a validated config and write the report next to its artifacts."""
    timer = _Timer()
    out = Output(out_dir)
    body = RUNNERS[kind][1](cfg, out, timer)
    rep = make_report(kind, digest(cfg), body["results"], body["checks"], timer.marks if timings else None)
    rep["artifacts"] = sorted(out.written + [f"{cfg.output}.report.json"]) if out.dir is not None else []
    out.write(f"{cfg.output}.report.json", dumps(rep))
    return rep


# --------------------------------------------------------------------------
# verify-all
# --------------------------------------------------------------------------

RABBIT_RECURSION = {
    "degree": 2,
    "rank": 2,
    "generators": [
        {"letter": "a", "perm": [0, 1], "cofactors": ["", "b"]},
        {"letter": "b", "perm": [1, 0], "cofactors": ["A", "B"]},
    ],
}


def cmd_verify_all(args, timer=None) -> dict:
    """Catalog facts, derivations and the small fixed runs."""
    from .facts import check
    from .numerics.correspondence import CATALOG_NAMES

    timer = timer or _Timer()
    checks, results = [], {}
    for n in CATALOG_NAMES:
        with timer(f"check:{n}"):
            r = check(n)
        checks += [_check(f"{n}:{c['name']}", c["passed"], c["detail"]) for c in r["checks"]]
        with timer(f"derive:{n}"):
            _, dc = derive_report(n)
        checks += [_check(f"{n}:derived:{c['name']}", c["passed"], c["detail"]) for c in dc]
    with timer("rabbit_fixture"):
        from .numerics.correspondence import get
        from .numerics.recursion import derive_wreath_recursion

        der = derive_wreath_recursion(get("rabbit"))
        fixed = WreathRecursion.from_json(RABBIT_RECURSION)
        checks.append(_check("rabbit:recursion_fixture", der.recursion == fixed,
                             str(der.recursion.to_json())))
        direction = der.connectors.direction
        checks.append(_check("rabbit:direction_slot", direction == BisetElement((), 1), str(direction)))
    with timer("xray"):
        body = run_xray(XrayConfig(correspondence="rabbit", seed_length=6), Output(None), timer)
    results["rabbit_attractor"] = body["results"].get("attractor")
    checks += [_check(f"xray:{c['name']}", c["passed"], c["detail"]) for c in body["checks"]]
    checks.append(_check("xray:rabbit_attractor_fixture",
                         body["results"].get("attractor") == ["e", "a", "b", "B"],
                         str(body["results"].get("attractor"))))
    if not args.quick:
        with timer("curves"):
            body = run_curves(CurvesConfig(bound=10), Output(None), timer)
        results["z2i_attractor"] = body["results"].get("automaton", {}).get("states")
        checks += [_check(f"curves:{c['name']}", c["passed"], c["detail"]) for c in body["checks"]]
        with timer("limitset"):
            body = run_limitset(LimitsetConfig(correspondence="cubic", depth=3, basepoints=[(0.3, 0.4)]),
                                Output(None), timer)
        checks += [_check(f"limitset:{c['name']}", c["passed"], c["detail"]) for c in body["checks"]]
    return make_report("verify-all", _digest_of({"quick": bool(args.quick)}), results, checks)


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="corrxray", description="X-ray iteration for self-correspondences "
                                "of the thrice-punctured sphere.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")
        if out:
            sp.add_argument("--out-dir", default=None, help="directory for the report and artifacts")

    sp = sub.add_parser("catalog", help="list the built-in correspondences")
    common(sp, out=False)
    sp = sub.add_parser("check", help="admissibility and stated facts of catalog correspondences")
    sp.add_argument("names", nargs="+")
    common(sp, out=False)
    sp = sub.add_parser("derive-recursion", help="wreath recursion by numerical path lifting")
    sp.add_argument("name", help="catalog name, or z2i for the polynomial z^2 + i")
    sp.add_argument("--map", default=None, help="polynomial in t for a dynamical biset")
    sp.add_argument("--density", type=int, default=1)
    common(sp)
    for name, help_ in (("xray", "explore X-ray orbits and their attractor"),
                        ("curves", "multicurve pullback attractor"),
                        ("limitset", "backward orbit point clouds")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="YAML or JSON config file")
        common(sp)
    sp = sub.add_parser("verify-all", help="run every built-in verification")
    sp.add_argument("--quick", action="store_true", help="skip the curve and limit set runs")
    common(sp, out=False)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    timer = _Timer()
    try:
        if args.command in RUNNERS:
            cfg = load_config(args.config, args.command)
            rep = run_config(args.command, cfg, args.out_dir, args.timings)
        else:
            fn = {"catalog": lambda a, t=None: cmd_catalog(a), "check": cmd_check,
                  "derive-recursion": cmd_derive, "verify-all": cmd_verify_all}[args.command]
            rep = fn(args, timer)
            if args.timings:
                rep["timings"] = timer.marks
    except (UsageError, ValidationError, ValueError, FileNotFoundError, KeyError) as e:
        print(f"corrxray {args.command}: error: {e}", file=sys.stderr)
        return 2
    sys.stdout.write(dumps(rep))
    return 0 if rep["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
