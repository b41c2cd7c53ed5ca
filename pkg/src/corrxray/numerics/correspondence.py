"""Correspondences ``phi, rho: T => S`` between punctured spheres.

The multivalued map is ``F = phi o rho^-1`` and its inverse, the one used
to pull back loops, is ``F^-1 = rho o phi^-1``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
import sympy as sp

from .rational import (
    INF,
    T,
    RationalMap,
    _cluster_roots,
    _complex_coeffs,
    _numeric_roots,
    _point_key,
    _trim,
    chordal,
    is_inf,
    local_degree,
    moebius_apply,
    moebius_inverse,
    preimages,
    to_complex,
    to_exact,
)


@dataclass
class CuspSet:
    """Finite set of sphere points.

    Exact sets are the roots of a squarefree polynomial ``poly`` over the
    Gaussian rationals, plus infinity when ``has_inf`` is set.  Inexact sets
    only carry ``points``.
    """

    points: list
    has_inf: bool
    poly: Optional[sp.Poly] = None

    @classmethod
    def exact(cls, expr, has_inf: bool) -> "CuspSet":
        p = sp.Poly(expr, T, domain=sp.QQ_I)
        if sp.degree(sp.gcd(p, p.diff(T))) > 0:
            raise ValueError("cusp polynomial must be squarefree")
        pts = []
        for f, _ in p.sqf_list()[1]:
            pts.extend(_numeric_roots(_complex_coeffs(f)))
        pts.sort(key=_point_key)
        if has_inf:
            pts.append(INF)
        return cls(pts, has_inf, p)

    @classmethod
    def numeric(cls, points) -> "CuspSet":
        pts = sorted((INF if is_inf(p) else complex(p) for p in points), key=_point_key)
        return cls(pts, any(is_inf(p) for p in pts), None)

    @property
    def is_exact(self) -> bool:
        return self.poly is not None

    def __len__(self) -> int:
        return len(self.points)

    def contains(self, z, tol: float = 1e-7) -> bool:
        return any(chordal(z, p) < tol for p in self.points)

    def nearest_distance(self, z) -> float:
        return min(chordal(z, p) for p in self.points)


# --------------------------------------------------------------------------


@dataclass
class Correspondence:
    name: str
    phi: RationalMap
    rho: RationalMap
    cusps_S: CuspSet
    cusps_T: CuspSet
    basepoint: Optional[complex] = None
    fixed_basis_point: Optional[complex] = None
    native: Optional["Correspondence"] = None
    normalization: Optional[tuple] = None
    notes: str = ""

    @property
    def degree(self) -> int:
        return self.phi.degree

    @property
    def exact(self) -> bool:
        return self.phi.exact and self.rho.exact and self.cusps_S.is_exact and self.cusps_T.is_exact

    def F_inverse(self, s) -> list:
        """All images of ``s`` under ``rho o phi^-1`` with multiplicity."""
        return [(self.rho(p), k) for p, k in preimages(self.phi, s)]


def _lodge_normalizer() -> tuple:
    w = cmath.exp(2j * math.pi / 3)
    wb = w.conjugate()
    # z -> (z - 1)(w - wb) / ((z - wb)(w - 1)): 1 -> 0, w -> 1, wb -> inf
    return ((w - wb), -(w - wb), (w - 1), -wb * (w - 1))


def _normalize(c: Correspondence, m: tuple, name: str) -> Correspondence:
    minv = moebius_inverse(m)
    phi = c.phi.compose_moebius(m, minv)
    rho = c.rho.compose_moebius(m, minv)
    s_pts = [moebius_apply(m, p) for p in c.cusps_S.points]
    t_pts = [moebius_apply(m, p) for p in c.cusps_T.points]
    snapped = []
    for p in s_pts:
        for target in (0j, 1 + 0j, INF):
            if chordal(p, target) < 1e-12:
                p = target
        snapped.append(p)
    fixed = moebius_apply(m, c.fixed_basis_point) if c.fixed_basis_point is not None else None
    bp = moebius_apply(m, c.basepoint) if c.basepoint is not None else None
    return Correspondence(
        name=name,
        phi=phi,
        rho=rho,
        cusps_S=CuspSet.numeric(snapped),
        cusps_T=CuspSet.numeric(t_pts),
        basepoint=bp,
        fixed_basis_point=fixed,
        native=c,
        normalization=m,
        notes=c.notes,
    )


def _rabbit() -> Correspondence:
    c = Correspondence(
        "rabbit",
        RationalMap.from_expr("1 - 1/t**2"),
        RationalMap.from_expr("t"),
        CuspSet.exact(T * (T - 1), True),
        CuspSet.exact(T * (T**2 - 1), True),
        notes="phi(t) = 1 - 1/t^2, rho = inclusion",
    )
    fp = _pick_upper([r for r in np.roots([1, -1, 0, 1])])
    c.basepoint = c.fixed_basis_point = fp
    return c


def _dendrite() -> Correspondence:
    c = Correspondence(
        "dendrite",
        RationalMap.from_expr("(-1 + 2/t)**2"),
        RationalMap.from_expr("t"),
        CuspSet.exact(T * (T - 1), True),
        CuspSet.exact(T * (T - 1) * (T - 2), True),
        notes="phi(t) = (-1 + 2/t)^2, rho = inclusion",
    )
    c.basepoint = c.fixed_basis_point = 2j
    return c


def lodge_native() -> Correspondence:
    return Correspondence(
        "lodge-native",
        RationalMap.from_expr("t*(t**3 + 2)/(2*t**3 + 1)"),
        RationalMap.from_expr("t**2"),
        CuspSet.exact(T**3 - 1, False),
        CuspSet.exact(T**6 - 1, False),
        basepoint=0j,
        fixed_basis_point=0j,
        notes="phi(t) = t(t^3+2)/(2t^3+1), rho(t) = t^2, cusps at cube roots of unity",
    )


def _lodge() -> Correspondence:
    return _normalize(lodge_native(), _lodge_normalizer(), "lodge")


def _quintic() -> Correspondence:
    t = T
    return Correspondence(
        "quintic",
        RationalMap.from_expr("(t-3)**2*(5*t+3)**4*(5*t**2+18*t-3)/(331776*t**3)"),
        RationalMap.from_expr("(-5*t**2 + 12*t + 9)/(24*t)"),
        CuspSet.exact(t * (t - 1), True),
        CuspSet.exact(
            t * (t - 3) * (t + 3) * (5 * t - 3) * (5 * t + 3)
            * (5 * t**2 + 18 * t - 3) * (5 * t**2 - 18 * t - 3),
            True,
        ),
        notes="critically fixed quintic with local degrees 2, 3, 3, 4",
    )


def _cubic() -> Correspondence:
    t = T
    return Correspondence(
        "cubic",
        RationalMap.from_expr("(1 + t)*(-1 + 3*t)**3/(16*t)"),
        RationalMap.from_expr("(-1 + 2*t + 3*t**2)/(4*t)"),
        CuspSet.exact(t * (t - 1), True),
        CuspSet.exact(t * (t - 1) * (t + 1) * (3 * t - 1) * (3 * t + 1), True),
        basepoint=0.3 + 0.4j,
        notes="critically fixed cubic with local degrees 2, 2, 2, 2",
    )


def _pick_upper(roots) -> complex:
    c = [complex(r) for r in roots if complex(r).imag > 1e-9]
    return sorted(c, key=lambda z: (-z.imag, z.real))[0]


_BUILDERS = {
    "rabbit": _rabbit,
    "dendrite": _dendrite,
    "lodge": _lodge,
    "quintic": _quintic,
    "cubic": _cubic,
}

CATALOG_NAMES = tuple(_BUILDERS)


def catalog() -> list:
    """The five explicit correspondences, normalized to ``cusps_S = {0,1,inf}``."""
    return [b() for b in _BUILDERS.values()]


def get(name: str) -> Correspondence:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown correspondence {name!r}; choose from {', '.join(CATALOG_NAMES)}")


# --------------------------------------------------------------------------
# admissibility
# --------------------------------------------------------------------------


@dataclass
class CheckItem:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class AdmissibilityReport:
    name: str
    exact: bool
    items: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(i.passed for i in self.items)

    def failed(self) -> list:
        return [i for i in self.items if not i.passed]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "exact": self.exact,
            "passed": self.passed,
            "items": [{"name": i.name, "passed": i.passed, "detail": i.detail} for i in self.items],
        }


def _sqf_part(p: sp.Poly) -> sp.Poly:
    if p.degree() <= 0:
        return p
    return sp.quo(p, sp.gcd(p, p.diff(T)))


def _divides(a: sp.Poly, b: sp.Poly) -> bool:
    return sp.rem(b, a).is_zero


def _compose_cusp_poly(cs: CuspSet, m: RationalMap) -> sp.Poly:
    """Numerator of ``C(m(t))``: vanishes exactly at the finite points
    mapped by ``m`` to the finite cusps of ``cs``."""
    coeffs = cs.poly.all_coeffs()[::-1]
    n = len(coeffs) - 1
    num, den = m.num_poly, m.den_poly
    out = sp.Poly(0, T, domain=sp.QQ_I)
    for k, ck in enumerate(coeffs):
        out += num**k * den ** (n - k) * ck
    return out


def _exact_in(cs: CuspSet, v) -> bool:
    if v is sp.zoo:
        return cs.has_inf
    return cs.poly.eval(v) == 0


def _exact_preimage_inside(m: RationalMap, target: CuspSet, source: CuspSet) -> tuple:
    """Whether ``m^-1(target)`` is contained in ``source``."""
    bad = []
    h = _sqf_part(_compose_cusp_poly(target, m))
    if h.degree() > 0 and not _divides(h, source.poly):
        bad.append("finite preimages of finite cusps")
    if target.has_inf:
        d = _sqf_part(m.den_poly)
        if d.degree() > 0 and not _divides(d, source.poly):
            bad.append("finite poles")
    if _exact_in(target, m.exact_value(sp.zoo)) and not source.has_inf:
        bad.append("infinity")
    return not bad, ", ".join(bad)


def _exact_image_inside(m: RationalMap, source: CuspSet, target: CuspSet) -> tuple:
    """Whether ``m(source)`` is contained in ``target``."""
    bad = []
    g = sp.gcd(source.poly, m.den_poly)
    if g.degree() > 0 and not target.has_inf:
        bad.append("a cusp maps to infinity")
    rest = sp.quo(source.poly, g)
    if rest.degree() > 0 and not _divides(rest, _compose_cusp_poly(target, m)):
        bad.append("a finite cusp maps outside")
    if source.has_inf and not _exact_in(target, m.exact_value(sp.zoo)):
        bad.append("infinity maps outside")
    return not bad, ", ".join(bad)


def _exact_critical_inside(m: RationalMap, cs: CuspSet) -> tuple:
    """Whether every critical point of ``m`` lies in ``cs``."""
    w = _sqf_part(m.wronskian_exact())
    ok_finite = w.degree() <= 0 or _divides(w, cs.poly)
    ok_inf = local_degree(m, INF) == 1 or cs.has_inf
    return ok_finite and ok_inf, "" if ok_finite and ok_inf else "critical point outside the cusp set"


def _numeric_preimage_inside(m, target, source, tol) -> bool:
    for s in target.points:
        for p, _ in preimages(m, s):
            if not source.contains(p, tol):
                return False
    return True


def _numeric_image_inside(m, source, target, tol) -> bool:
    return all(target.contains(m(p), tol) for p in source.points)


def _numeric_critical_inside(m, cs, tol) -> bool:
    return all(cs.contains(p, tol) for p, _ in m.critical_points())


def check_admissible(c: Correspondence, tol: float = 1e-7) -> AdmissibilityReport:
    """Itemized admissibility conditions, in exact arithmetic whenever the
    maps and cusp sets are exact."""
    exact = c.exact
    items = []
    S, Tc, phi, rho = c.cusps_S, c.cusps_T, c.phi, c.rho
    items.append(CheckItem("hyperbolic_S", len(S) >= 3, f"{len(S)} cusps"))
    items.append(CheckItem("hyperbolic_T", len(Tc) >= 3, f"{len(Tc)} cusps"))
    items.append(CheckItem("degree_phi_above_one", phi.degree > 1, f"deg phi = {phi.degree}"))
    items.append(CheckItem(
        "degree_rho_below_phi", rho.degree < phi.degree, f"deg rho = {rho.degree} < deg phi = {phi.degree}"
    ))
    if exact:
        ok, why = _exact_image_inside(phi, Tc, S)
        items.append(CheckItem("phi_maps_cusps_T_into_cusps_S", ok, why))
        ok, why = _exact_preimage_inside(phi, S, Tc)
        items.append(CheckItem("phi_preimage_of_cusps_S_in_cusps_T", ok, why))
        ok, why = _exact_preimage_inside(rho, S, Tc)
        items.append(CheckItem("rho_preimage_of_cusps_S_in_cusps_T", ok, why))
        ok, why = _exact_critical_inside(phi, Tc)
        items.append(CheckItem("phi_critical_values_in_cusps_S", ok, why))
        crit_ok, _ = _exact_critical_inside(rho, Tc)
        proper, _ = _exact_image_inside(rho, Tc, S)
    else:
        items.append(CheckItem("phi_maps_cusps_T_into_cusps_S", _numeric_image_inside(phi, Tc, S, tol), "numeric"))
        items.append(CheckItem("phi_preimage_of_cusps_S_in_cusps_T", _numeric_preimage_inside(phi, S, Tc, tol), "numeric"))
        items.append(CheckItem("rho_preimage_of_cusps_S_in_cusps_T", _numeric_preimage_inside(rho, S, Tc, tol), "numeric"))
        items.append(CheckItem("phi_critical_values_in_cusps_S", _numeric_critical_inside(phi, Tc, tol), "numeric"))
        crit_ok = _numeric_critical_inside(rho, Tc, tol)
        proper = _numeric_image_inside(rho, Tc, S, tol)
    reasons = []
    if not crit_ok:
        reasons.append("rho has a critical point in T")
    if not proper:
        reasons.append("a cusp of T maps into S")
    items.append(CheckItem("rho_not_a_covering", bool(reasons), "; ".join(reasons)))
    return AdmissibilityReport(c.name, exact, items)


# --------------------------------------------------------------------------
# fixed points, cycles, cusp branches
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedPoint:
    t: complex
    s: complex
    multiplicity: int
    ideal: bool
    residual: float


def _cross_poly_exact(c: Correspondence) -> sp.Poly:
    return c.phi.num_poly * c.rho.den_poly - c.rho.num_poly * c.phi.den_poly


def _cross_poly_c(c: Correspondence) -> np.ndarray:
    return np.polysub(np.polymul(c.phi.num_c, c.rho.den_c), np.polymul(c.rho.num_c, c.phi.den_c))


def fixed_points(c: Correspondence, tol: float = 1e-7) -> list:
    """Solutions of ``phi(t) = rho(t)`` on the sphere with multiplicity.

    Multiplicities add up to ``deg phi + deg rho``; the deficiency of the
    cross-multiplied polynomial is the multiplicity at infinity.  Each
    solution is tagged ideal when it is a cusp of ``T``; in exact mode this
    is decided by a gcd with the cusp polynomial.
    """
    total = c.phi.degree + c.rho.degree
    out = []
    if c.exact:
        e = _cross_poly_exact(c)
        for f, k in e.sqf_list()[1]:
            g = sp.gcd(f, c.cusps_T.poly)
            h = sp.quo(f, g)
            for part, ideal in ((g, True), (h, False)):
                for r in _numeric_roots(_complex_coeffs(part)):
                    out.append((r, k, ideal))
        deg = e.degree()
    else:
        e = _trim(_cross_poly_c(c))
        for r, k in _cluster_roots(np.roots(e)):
            out.append((r, k, c.cusps_T.contains(r, tol)))
        deg = len(e) - 1
    if total - deg > 0:
        out.append((INF, total - deg, c.cusps_T.has_inf))
    res = []
    for t, k, ideal in out:
        p, q = c.phi(t), c.rho(t)
        r = 0.0 if (is_inf(p) and is_inf(q)) else chordal(p, q)
        res.append(FixedPoint(t, p, k, ideal, r))
    res.sort(key=lambda f: (f.ideal, _point_key(f.t)))
    return res


@dataclass(frozen=True)
class Cycle:
    t: tuple
    s: tuple
    multiplier: complex
    interior: bool

    @property
    def contradicts_repelling(self) -> bool:
        return self.interior and abs(self.multiplier) <= 1.0


def _cycle_multiplier(c: Correspondence, ts) -> complex:
    m = 1 + 0j
    for t in ts:
        r = c.rho.derivative(t)
        if abs(r) < 1e-12:
            # rho is critical here, the branch of F is not locally univalent
            return complex(math.inf, 0.0)
        m *= c.phi.derivative(t) / r
    return m


def _newton_cycle(c: Correspondence, ts: np.ndarray, iters: int = 60) -> tuple:
    """Newton on ``phi(t_k) - rho(t_{k+1}) = 0``; returns ``(t, converged)``."""
    n = len(ts)
    ts = ts.astype(complex)
    for _ in range(iters):
        f = np.array([c.phi(ts[k]) - c.rho(ts[(k + 1) % n]) for k in range(n)])
        if not np.all(np.isfinite(f)):
            return ts, False
        J = np.zeros((n, n), dtype=complex)
        for k in range(n):
            J[k, k] += c.phi.derivative(ts[k])
            J[k, (k + 1) % n] -= c.rho.derivative(ts[(k + 1) % n])
        try:
            step = np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            return ts, False
        ts = ts - step
        if np.max(np.abs(step)) < 1e-15 * max(1.0, np.max(np.abs(ts))):
            return ts, True
    f = np.array([c.phi(ts[k]) - c.rho(ts[(k + 1) % n]) for k in range(n)])
    return ts, bool(np.all(np.isfinite(f)) and np.max(np.abs(f)) < 1e-11)


def _minimal_period(ts, tol=1e-9) -> int:
    n = len(ts)
    for p in range(1, n + 1):
        if n % p == 0 and all(abs(ts[k] - ts[(k + p) % n]) < tol * max(1, abs(ts[k])) for k in range(n)):
            return p
    return n


def _canonical_cycle(ts) -> tuple:
    n = len(ts)
    k = min(range(n), key=lambda j: (round(ts[j].real, 8), round(ts[j].imag, 8)))
    return tuple(ts[k:]) + tuple(ts[:k])


def _period_two_candidates(c: Correspondence) -> list:
    """Exact resultant elimination for ``phi(t0) = rho(t1), phi(t1) = rho(t0)``."""
    u, v = sp.symbols("u v")

    def cross(a, b):
        pn = c.phi.num_poly.as_expr().subs(T, a)
        pd = c.phi.den_poly.as_expr().subs(T, a)
        rn = c.rho.num_poly.as_expr().subs(T, b)
        rd = c.rho.den_poly.as_expr().subs(T, b)
        return sp.expand(pn * rd - rn * pd)

    e1, e2 = cross(u, v), cross(v, u)
    res = sp.Poly(sp.resultant(e1, e2, v), u, domain=sp.QQ_I)
    cands = []
    for f, _ in res.sqf_list()[1]:
        for r0 in _numeric_roots(_complex_coeffs(f)):
            p1 = sp.Poly(e1, v)
            coeffs = [complex(sp.N(cc.subs(u, r0))) for cc in p1.all_coeffs()]
            for r1 in np.roots(_trim(np.array(coeffs))):
                cands.append(np.array([r0, r1]))
    return cands


def cycles(c: Correspondence, period: int, seed: int = 0, starts: int = 400,
           tol: float = 1e-9) -> dict:
    """Cycles of ``F = phi o rho^-1`` of exact period ``period``.

    Solves ``rho(t_k) = s_k, phi(t_k) = s_{k+1}``; the multiplier is
    ``prod phi'(t_k) / rho'(t_k)``.  Exact maps with ``period <= 2`` are
    solved by resultant elimination followed by Newton refinement;
    otherwise deterministic multistart Newton is used.  Returns a dict with
    ``cycles`` and ``failed_starts``.
    """
    if period < 1:
        raise ValueError("period must be positive")
    if period == 1 or (period == 2 and c.exact):
        if period == 1:
            cands = [np.array([f.t]) for f in fixed_points(c) if not is_inf(f.t)]
        else:
            cands = _period_two_candidates(c)
    else:
        rng = np.random.default_rng(seed)
        cands = [
            (rng.normal(size=period) + 1j * rng.normal(size=period)) * 1.5 for _ in range(starts)
        ]
    found: dict = {}
    failed = 0
    for z in cands:
        if not np.all(np.isfinite(z)):
            continue
        ts, ok = _newton_cycle(c, np.asarray(z))
        if not ok:
            failed += 1
            continue
        if _minimal_period(ts) != period:
            continue
        key = tuple((round(t.real, 7), round(t.imag, 7)) for t in _canonical_cycle(list(ts)))
        if key in found:
            continue
        ts_c = _canonical_cycle([complex(t) for t in ts])
        ss = tuple(c.rho(t) for t in ts_c)
        interior = all(
            not c.cusps_T.contains(t, 1e-7) and not c.cusps_S.contains(s, 1e-7) for t, s in zip(ts_c, ss)
        )
        found[key] = Cycle(ts_c, ss, _cycle_multiplier(c, ts_c), interior)
    cyc = sorted(found.values(), key=lambda y: [_point_key(s) for s in y.s])
    return {"cycles": cyc, "failed_starts": failed}


@dataclass(frozen=True)
class LocalDegreeData:
    point: complex
    map_id: str
    degree: int
    rho_degree: int
    exponent: Fraction  # c/d: rho degree over phi degree

    @property
    def branch_degree(self) -> Fraction:
        """Local degree of the branch of ``phi o rho^-1`` through this cusp."""
        return Fraction(self.degree, self.rho_degree)


def cusp_branches(c: Correspondence, y) -> list:
    """Cusps ``x`` of ``T`` with ``phi(x) = rho(x) = y``, with local degrees
    ``d = deg(phi, x)`` and ``c = deg(rho, x)``."""
    out = []
    if c.exact:
        ye = to_exact(y)
        g = sp.gcd(c.phi.fiber_poly_exact(ye), c.rho.fiber_poly_exact(ye))
        pts = []
        for f, _ in _sqf_list(g):
            if f.degree() == 1:
                r = -f.all_coeffs()[1] / f.all_coeffs()[0]
                pts.append(sp.nsimplify(r))
            else:
                pts.extend(complex(r) for r in _numeric_roots(_complex_coeffs(f)))
        if c.phi.exact_value(sp.zoo) == ye and c.rho.exact_value(sp.zoo) == ye:
            pts.append(sp.zoo)
    else:
        pts = [p for p, _ in preimages(c.phi, y) if chordal(c.rho(p), y) < 1e-7]
    for p in pts:
        d = local_degree(c.phi, p)
        r = local_degree(c.rho, p)
        out.append(LocalDegreeData(to_complex(p), "phi", d, r, Fraction(r, d)))
    out.sort(key=lambda x: _point_key(x.point))
    return out


def _sqf_list(p: sp.Poly) -> list:
    if p.degree() <= 0:
        return []
    return p.sqf_list()[1]
