"""End-to-end acceptance checks, one test per criterion.

A summary line per criterion is printed at the end of the pytest run.
"""
import json
import math
import time

import numpy as np
import pytest

from corrxray.biset import BisetElement, ConnectorSet, WreathRecursion, xray_step
from corrxray.cli import RABBIT_RECURSION, main
from corrxray.curves import curve_attractor, derive_dynamical_biset, pullback_curve, slope_class
from corrxray.facts import check
from corrxray.groups import PANTS, conj_canonical, enumerate_ball, invert, multiply, power, random_word
from corrxray.hyperbolic import decompose, hyp_distance, is_parabolic, norm, roundabout_length, to_matrix
from corrxray.numerics.correspondence import CATALOG_NAMES, check_admissible, get
from corrxray.numerics.limitset import backward_orbit_sample, hausdorff
from corrxray.numerics.recursion import NumericBiset, derive_wreath_recursion
from corrxray.orbits import attractor, check_contraction, explore, node_norms
from corrxray.slippage import (
    bump_detour,
    proportion_far,
    slippage_check,
    triangle_detour,
    zigzag_detour,
)

RABBIT = WreathRecursion.from_json(RABBIT_RECURSION)


def _failed(result) -> list:
    return [c["name"] for c in result["checks"] if not c["passed"]]


@pytest.mark.criterion(1)
def test_criterion_01_cubic(record_property):
    t = time.perf_counter()
    r = check("cubic")
    dt = time.perf_counter() - t
    record_property("detail", f"{len(r['checks'])} facts in {dt:.2f} s")
    assert r["passed"], _failed(r)
    assert dt < 1.0


@pytest.mark.criterion(2)
def test_criterion_02_quintic(record_property):
    t = time.perf_counter()
    r = check("quintic")
    dt = time.perf_counter() - t
    record_property("detail", f"{len(r['checks'])} facts in {dt:.2f} s")
    assert r["passed"], _failed(r)
    assert dt < 1.0


@pytest.mark.criterion(3)
def test_criterion_03_admissibility(record_property):
    worst, bad = 0.0, {}
    for name in CATALOG_NAMES:
        t = time.perf_counter()
        rep = check_admissible(get(name))
        worst = max(worst, time.perf_counter() - t)
        if not rep.passed:
            bad[name] = rep.failed
    record_property("detail", f"{len(CATALOG_NAMES)} correspondences, slowest {worst:.2f} s")
    assert not bad, bad
    assert worst < 1.0


@pytest.mark.criterion(4)
def test_criterion_04_dual_oracle(record_property):
    t = time.perf_counter()
    compared, mismatches = 0, []
    for name in ("rabbit", "cubic"):
        der = derive_wreath_recursion(get(name))
        nb = NumericBiset(der.setup)
        rng = np.random.default_rng(2024)
        for _ in range(100):
            g = random_word(rng, 8)
            for i in range(der.recursion.degree):
                b = BisetElement((), i)
                if nb.right_action(b, g) != der.recursion.right_action(b, g):
                    mismatches.append((name, g, i))
            if nb.xray_step(g, der.connectors) != xray_step(g, der.connectors, der.recursion):
                mismatches.append((name, g, "xray"))
            compared += 1
    dt = time.perf_counter() - t
    record_property("detail", f"{compared} words, {len(mismatches)} mismatches, {dt:.0f} s")
    assert not mismatches, mismatches[:5]
    assert dt < 300


@pytest.mark.criterion(5)
def test_criterion_05_rabbit_xray_attractor(record_property):
    t = time.perf_counter()
    X = ConnectorSet.basis(2, 1)
    out = {}
    for n in (10, 12):
        g = explore(enumerate_ball(n, 2), X, RABBIT, max_nodes=2_000_000)
        assert g.closed
        rep = attractor(g)
        cr = check_contraction(g, node_norms(g), rep)
        out[n] = (rep, cr)
        assert rep.forward_closed
        assert np.isfinite(cr.xi)
        assert cr.envelope_ok, cr.envelope_violations
        # every ray is inside the attractor after entry_bound steps
        assert int(rep.entry.max()) == rep.entry_bound
    assert out[10][0].words == out[12][0].words
    dt = time.perf_counter() - t
    rep, cr = out[10]
    record_property("detail", f"attractor {len(rep.words)} words, N^ = {rep.entry_bound}, "
                              f"xi^ = {cr.xi:.4f}, kappa^ = {cr.kappa:.4f}, {dt:.0f} s")
    assert len(rep.words) > 0
    assert dt < 600


@pytest.mark.criterion(6)
def test_criterion_06_hyperbolic_suite(record_property):
    ball = enumerate_ball(8, 2)
    # symmetry is exact
    assert all(norm(w) == norm(invert(w)) for w in ball)
    # triangle inequality on all products landing in ball(8)
    small = enumerate_ball(4, 2)
    nrm = {w: norm(w) for w in ball}
    worst = max(nrm[multiply(u, v)] - nrm[u] - nrm[v] for u in small for v in small)
    assert worst <= 1e-9
    # parabolic trace iff peripheral
    for w in ball[1:]:
        assert is_parabolic(to_matrix(w)) == (PANTS.is_peripheral(conj_canonical(w)) is not None), w
    # roundabout length against the horocyclic endpoint distance
    for delta in (0.1, 0.5, 1.0):
        for n in (1, 10, 1000, 10**4, 10**6):
            direct = hyp_distance(0.25 + 1j / delta, 0.25 + n + 1j / delta)
            assert abs(roundabout_length(delta, n) - direct) <= 1e-9 * max(1.0, direct)
    # peripheral powers track 2 ln n
    ratios = [norm(power(w, 1024), bp) / (2 * math.log(1024)) for w, bp in (((1,), 2j), ((2,), 0.5j),
                                                                             ((1, 2), 1 + 0.5j))]
    assert all(abs(r - 1) <= 0.02 for r in ratios), ratios
    # thick-thin additivity
    gap = max(abs(decompose(w).length_sum() - nrm[w]) for w in ball[1::7])
    assert gap <= 1e-9
    record_property("detail", f"ball(8) = {len(ball)} words, triangle slack {worst:.2e}, "
                              f"additivity gap {gap:.1e}, power ratios {[round(r, 4) for r in ratios]}")


@pytest.mark.criterion(7)
def test_criterion_07_slippage(record_property):
    n, worst = 0, 0.0
    th = np.linspace(0.0, 3.0, 31)
    for L in (200.0, 500.0):
        for C in (0.5, 1.0, 2.0):
            paths = [triangle_detour(L, C, L / 2, 3.0), triangle_detour(L, C, L / 3, 0.2, side=-1),
                     bump_detour(L, C, L / 3, C / 4), zigzag_detour(L, C, 5)]
            for p in paths:
                r = slippage_check(L, C, p)
                assert r.max_distance <= math.log(4) + C / 2 + C
                assert r.max_parametrized_deviation <= math.log(4) + C / 2 + C
                worst = max(worst, r.max_distance / r.bound)
                prop = proportion_far(p, L, th)
                assert np.all(np.diff(prop) <= 1e-12)
                n += 1
    record_property("detail", f"{n} detours, max deviation {worst:.2f} of the bound")


@pytest.mark.criterion(8)
def test_criterion_08_z2i_curve_attractor(record_property):
    t = time.perf_counter()
    B, der, _ = derive_dynamical_biset()
    a20 = curve_attractor(B, 20)
    a40 = curve_attractor(B, 40)
    for ca in (a20, a40):
        assert ca.graph.closed and ca.report.forward_closed
        assert ca.degree_ok and not ca.unrecognized
    assert a20.states == a40.states
    # degree conservation recomputed curve by curve on every explored state
    for state in a40.graph.nodes:
        for s in state:
            assert sum(k for _, k in pullback_curve(B, slope_class(s))) == 2, s
    dt = time.perf_counter() - t
    record_property("detail", f"attractor {a20.automaton_json()['states']}, "
                              f"{len(a20.graph)}/{len(a40.graph)} states explored, {dt:.0f} s")
    assert dt < 600


@pytest.mark.criterion(9)
def test_criterion_09_backward_orbits(record_property):
    for name in CATALOG_NAMES:
        c = get(name)
        for n in range(4):
            smp = backward_orbit_sample(c, 0.3 + 0.4j, n)
            assert smp.mode == "full" and len(smp.points) == c.degree**n
    c = get("cubic")
    d = hausdorff(backward_orbit_sample(c, 0.3 + 0.4j, 8).points,
                  backward_orbit_sample(c, -0.7 + 1.1j, 8).points)
    record_property("detail", f"Hausdorff at n = 8: {d:.4f} (bound 0.1)")
    assert d < 0.1


def _run_cli(tmp_path, monkeypatch, workers, tag, verb, cfg):
    monkeypatch.setenv("CORRXRAY_WORKERS", str(workers))
    out = tmp_path / tag
    assert main([verb, cfg, "--out-dir", str(out)]) == 0
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


@pytest.mark.criterion(10)
def test_criterion_10_determinism(record_property, tmp_path, monkeypatch, capsys):
    rabbit = tmp_path / "rabbit.yaml"
    rabbit.write_text("correspondence: rabbit\nseed_length: 10\noutput: rabbit\n")
    z2i = tmp_path / "z2i.yaml"
    z2i.write_text("map: t**2 + I\nbound: 20\noutput: z2i\n")
    n_files = 0
    for verb, cfg in (("xray", rabbit), ("curves", z2i)):
        runs = [_run_cli(tmp_path, monkeypatch, w, f"{verb}{k}", verb, str(cfg))
                for k, w in enumerate((1, 1, 2))]
        assert runs[0] == runs[1] == runs[2]
        assert any(name.endswith(".dot") for name in runs[0])
        report = json.loads(runs[0][f"{cfg.stem}.report.json"])
        assert report["passed"]
        n_files += len(runs[0])
    capsys.readouterr()
    record_property("detail", f"{n_files} artifacts byte-identical over 3 runs (workers 1, 1, 2)")
