"""Stated numerical facts about the catalog correspondences, as checks.

Each ``facts_<name>`` returns a list of :class:`CheckItem`; ``check`` adds
them to the admissibility items.
"""

from __future__ import annotations

import math
from collections import Counter

import numpy as np

from .numerics.correspondence import (
    CheckItem,
    Correspondence,
    check_admissible,
    cusp_branches,
    cycles,
    fixed_points,
    get,
)
from .numerics.rational import INF, chordal, is_inf, local_degree, moebius_apply, preimages

TOL = 1e-9


def _near_set(found, expected, tol=TOL) -> bool:
    """Every expected point is matched by a found point and vice versa."""
    found, expected = list(found), list(expected)
    if len(found) != len(expected):
        return False
    return all(min(chordal(e, f) for f in found) <= tol for e in expected)


def _snap(z, tol=1e-12):
    return INF if chordal(z, INF) < tol else z


def _fmt(z) -> str:
    if is_inf(z):
        return "inf"
    z = complex(z)
    return f"{z.real:.12g}{z.imag:+.12g}i"


def facts_cubic(c: Correspondence) -> list:
    out = []
    r5 = math.sqrt(5) / 3
    cyc = cycles(c, 2)["cycles"]
    hit = [y for y in cyc if _near_set(y.t, [r5, -r5])]
    ok = bool(hit) and abs(hit[0].multiplier - 9 / 4) <= TOL
    detail = f"t = {[_fmt(t) for t in hit[0].t]}, multiplier {_fmt(hit[0].multiplier)}" if hit else "not found"
    out.append(CheckItem("two_cycle_pm_sqrt5_over_3_multiplier_9_4", ok, detail))
    rep_bad = [y for y in cyc if y.contradicts_repelling]
    out.append(CheckItem("two_cycles_repelling", not rep_bad, f"{len(cyc)} two-cycles"))
    fps = fixed_points(c)
    interior = [f for f in fps if not f.ideal]
    ideal_s = {(_fmt(f.s)) for f in fps if f.ideal}
    out.append(CheckItem("no_interior_fixed_point", not interior,
                         f"interior: {[_fmt(f.t) for f in interior]}"))
    s_vals = [f.s for f in fps if f.ideal]
    has01 = all(any(chordal(s, y) <= TOL for s in s_vals) for y in (0, 1))
    out.append(CheckItem("ideal_fixed_points_over_0_and_1", has01, f"s values {sorted(ideal_s)}"))
    crit = [p for p, _ in c.rho.critical_points()]
    out.append(CheckItem("rho_critical_points_pm_i_over_sqrt3",
                         _near_set(crit, [1j / math.sqrt(3), -1j / math.sqrt(3)]),
                         str([_fmt(p) for p in crit])))
    T = list(c.cusps_T.points)
    out.append(CheckItem("T_punctures_0_1_inf_pm_third_pm_1",
                         _near_set(T, [0, 1, INF, 1 / 3, -1 / 3, -1]),
                         str([_fmt(p) for p in T])))
    out.append(CheckItem("degrees_4_and_2", c.phi.degree == 4 and c.rho.degree == 2,
                         f"deg phi {c.phi.degree}, deg rho {c.rho.degree}"))
    return out


def facts_quintic(c: Correspondence) -> list:
    out = []
    for y in (0, 1, INF):
        imgs = [s for s, _ in c.F_inverse(y)]
        out.append(CheckItem(f"F_inverse_fixes_{_fmt(y)}", any(chordal(s, y) <= TOL for s in imgs),
                             f"{len(imgs)} images"))
    for y in (0, 1):
        br = cusp_branches(c, y)
        degs = sorted(int(b.branch_degree) if b.branch_degree.denominator == 1 else -1 for b in br)
        out.append(CheckItem(f"branch_local_degrees_at_{y}_are_2_and_4", degs == [2, 4],
                             str([(_fmt(b.point), str(b.branch_degree)) for b in br])))
    sup = all(b.rho_degree == 1 and b.degree >= 2 for y in (0, 1, INF) for b in cusp_branches(c, y))
    out.append(CheckItem("fixed_cusp_branches_superattracting", sup,
                         "each branch has deg rho = 1 and deg phi >= 2, so multiplier 0"))
    pre = preimages(c.rho, INF)
    ok = sorted(k for _, k in pre) == [1, 1] and _near_set([p for p, _ in pre], [0, INF])
    out.append(CheckItem("rho_preimage_of_inf_is_0_and_inf_simple", ok,
                         str([(_fmt(p), k) for p, k in pre])))
    d0, dinf = local_degree(c.phi, 0), local_degree(c.phi, INF)
    out.append(CheckItem("deg_phi_at_0_is_3", d0 == 3, str(d0)))
    out.append(CheckItem("deg_phi_at_inf_is_5", dinf == 5, str(dinf)))
    crit = [p for p, _ in c.rho.critical_points()]
    r = 3j / math.sqrt(5)
    out.append(CheckItem("rho_critical_points_pm_3i_over_sqrt5", _near_set(crit, [r, -r]),
                         str([_fmt(p) for p in crit])))
    return out


def facts_rabbit(c: Correspondence) -> list:
    fps = fixed_points(c)
    inner = [f for f in fps if not f.ideal]
    roots = np.roots([1, -1, 0, 1])
    ok = _near_set([f.t for f in inner], roots, 1e-9)
    return [
        CheckItem("interior_fixed_points_are_roots_of_t3_minus_t2_plus_1", ok,
                  str([_fmt(f.t) for f in inner])),
        CheckItem("fixed_point_residuals", all(f.residual < 1e-10 for f in fps),
                  f"max {max(f.residual for f in fps):.2e}"),
    ]


def facts_dendrite(c: Correspondence) -> list:
    fps = fixed_points(c)
    inner = [f.t for f in fps if not f.ideal]
    return [
        CheckItem("interior_fixed_points_pm_2i", _near_set(inner, [2j, -2j]), str([_fmt(t) for t in inner])),
        CheckItem("fixed_point_residuals", all(f.residual < 1e-10 for f in fps),
                  f"max {max(f.residual for f in fps):.2e}"),
    ]


def facts_lodge(c: Correspondence) -> list:
    """Normalizing the cusps commutes with preimages and local degrees."""
    nat, m = c.native, c.normalization
    ok_pre, ok_deg = True, True
    for w in (0.3 + 0.2j, -1.7 + 0.4j, 2.5 - 1.1j):
        a = sorted((moebius_apply(m, p) for p, _ in preimages(nat.phi, w)), key=lambda z: (z.real, z.imag))
        b = [p for p, _ in preimages(c.phi, moebius_apply(m, w))]
        ok_pre &= _near_set(b, a, 1e-8)
    for p in list(nat.cusps_T.points) + [0j]:
        q = _snap(moebius_apply(m, p))
        ok_deg &= local_degree(nat.phi, p) == local_degree(c.phi, q)
        ok_deg &= local_degree(nat.rho, p) == local_degree(c.rho, q)
    fp = [f for f in fixed_points(nat) if not f.ideal]
    return [
        CheckItem("normalization_commutes_with_preimages", ok_pre),
        CheckItem("normalization_preserves_local_degrees", ok_deg),
        CheckItem("native_fixed_point_0", any(abs(f.t) < 1e-12 for f in fp), str([_fmt(f.t) for f in fp])),
    ]


FACTS = {
    "rabbit": facts_rabbit,
    "dendrite": facts_dendrite,
    "lodge": facts_lodge,
    "quintic": facts_quintic,
    "cubic": facts_cubic,
}


def check(name: str) -> dict:
    """Admissibility plus the name-specific facts."""
    c = get(name)
    adm = check_admissible(c)
    items = adm.items + FACTS[name](c)
    return {
        "name": name,
        "exact": adm.exact,
        "degree_phi": c.phi.degree,
        "degree_rho": c.rho.degree,
        "checks": [{"name": i.name, "passed": bool(i.passed), "detail": i.detail} for i in items],
        "passed": all(i.passed for i in items),
    }


def fiber_degree_sums(c: Correspondence, extra=()) -> Counter:
    """Sum of local degrees over fibers of the cusps and a few generic points."""
    out = Counter()
    for y in [0, 1, INF, *extra]:
        out[_fmt(y)] = sum(local_degree(c.phi, p) for p, _ in preimages(c.phi, y))
    return out
