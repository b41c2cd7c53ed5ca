import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from corrxray.facts import check
from corrxray.groups import parse_word, word_str
from corrxray.numerics.correspondence import (
    CATALOG_NAMES,
    check_admissible,
    cusp_branches,
    cycles,
    fixed_points,
    get,
    lodge_native,
)
from corrxray.numerics.paths import (
    DEFAULT_STYLE,
    PathPolyline,
    arc,
    generator_loops,
    lift_path,
    moduli_cuts,
    word_loop,
)
from corrxray.numerics.rational import (
    INF,
    RationalMap,
    chordal,
    is_inf,
    local_degree,
    moebius_apply,
    moebius_inverse,
    parse_gaussian,
    preimages,
)

T = sp.Symbol("t")


def test_parse_gaussian():
    assert parse_gaussian("1/2+3/4*i") == sp.Rational(1, 2) + sp.Rational(3, 4) * sp.I
    assert parse_gaussian("-2") == -2


def test_chordal_metric():
    assert chordal(0, INF) == pytest.approx(2.0)
    assert chordal(1j, -1j) == pytest.approx(2.0)
    assert chordal(INF, INF) == 0.0
    assert chordal(1e300, INF) < 1e-290


@settings(max_examples=40, deadline=None)
@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_preimages_against_sympy(w):
    f = RationalMap.from_expr("(t-3)**2*(5*t+3)/(7*t**2 + 1)")
    pts = preimages(f, w)
    assert sum(k for _, k in pts) == 3
    for p, _ in pts:
        if not is_inf(p):
            assert chordal(f(p), w) < 1e-7
    poly = sp.Poly((T - 3) ** 2 * (5 * T + 3) - sp.nsimplify(w) * (7 * T**2 + 1), T)
    ref = [complex(r) for r in poly.nroots(n=30, maxsteps=500)]
    found = [p for p, k in pts for _ in range(k) if not is_inf(p)]
    for r in ref:
        assert min(abs(r - p) for p in found) < 1e-6 * max(1, abs(r))


def test_preimages_at_critical_value_and_infinity():
    f = RationalMap.from_expr("1 - 1/t**2")
    pts = dict((complex(p) if not is_inf(p) else "inf", k) for p, k in preimages(f, INF))
    assert pts == {0j: 2}
    pts = preimages(f, 1)
    assert len(pts) == 1 and is_inf(pts[0][0]) and pts[0][1] == 2


def test_local_degrees():
    f = RationalMap.from_expr("t**3*(t-1)**2/(2*t+1)")
    assert local_degree(f, 0) == 3
    assert local_degree(f, 1) == 2
    assert local_degree(f, INF) == 4
    assert local_degree(f, 0.3 + 0.1j) == 1


def test_riemann_hurwitz_for_catalog():
    for name in CATALOG_NAMES:
        c = get(name)
        for m in (c.phi, c.rho):
            total = sum(k for _, k in m.critical_points())
            assert total == 2 * m.degree - 2, (name, m)


def test_moebius_helpers():
    m = (1 + 1j, 2, 3, 1 - 2j)
    mi = moebius_inverse(m)
    for z in (0.3, -2 + 1j, INF):
        back = moebius_apply(mi, moebius_apply(m, z))
        assert chordal(back, z) < 1e-12


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_admissible(name):
    rep = check_admissible(get(name))
    assert rep.passed, rep.failed


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_catalog_facts(name):
    r = check(name)
    assert r["passed"], [c for c in r["checks"] if not c["passed"]]


def test_exactness_flags():
    assert get("rabbit").exact and get("cubic").exact and get("quintic").exact
    assert not get("lodge").exact  # normalized by an irrational Moebius map
    assert lodge_native().exact


def test_fixed_point_multiplicities_add_up():
    for name in CATALOG_NAMES:
        c = get(name)
        fps = fixed_points(c)
        assert sum(f.multiplicity for f in fps) == c.phi.degree + c.rho.degree
        assert max(f.residual for f in fps) < 1e-8


def test_cubic_cycle_direct():
    c = get("cubic")
    cyc = [y for y in cycles(c, 2)["cycles"] if y.interior]
    r = math.sqrt(5) / 3
    hit = [y for y in cyc if sorted(t.real for t in y.t) == pytest.approx([-r, r], abs=1e-9)]
    assert hit and hit[0].multiplier == pytest.approx(9 / 4, abs=1e-9)
    # the cycle closes: phi(t0) = rho(t1) and phi(t1) = rho(t0)
    t0, t1 = hit[0].t
    assert abs(c.phi(t0) - c.rho(t1)) < 1e-9 and abs(c.phi(t1) - c.rho(t0)) < 1e-9


def test_quintic_cusp_branches():
    c = get("quintic")
    degs = sorted(str(b.branch_degree) for b in cusp_branches(c, 0))
    assert degs == ["2", "4"]


def test_lift_of_circle_under_square():
    # the lift of the unit circle under t^2 from 1 ends at -1
    f = RationalMap.from_expr("t**2")
    circle = arc(0, 1.0, 0.0, 2 * math.pi, 400)
    circle[-1] = circle[0]
    p = lift_path(f, PathPolyline(circle, 1 + 0j), 1 + 0j)
    assert abs(p.end + 1) < 1e-10
    assert np.max(np.abs(np.abs(p.samples) - 1)) < 1e-9


def test_reading_generator_loops():
    cuts = moduli_cuts()
    loops = generator_loops(cuts, 0.5 + 0.5j, DEFAULT_STYLE)
    for w in ("a", "b", "aB", "abAB", "bbbA"):
        assert word_str(cuts.read(word_loop(loops, parse_word(w), 0.5 + 0.5j))) == w
    big = np.concatenate([[0.5 + 0.5j], 5 * np.exp(1j * np.linspace(math.pi / 4, math.pi / 4 + 2 * math.pi, 2000)),
                          [0.5 + 0.5j]])
    assert word_str(cuts.read(big)) == "ab"  # a big ccw circle is the inverse of the loop about infinity
