import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrxray.numerics.modular import (
    density,
    density_from_lambda,
    ellipk,
    modular_lambda,
    polyline_length,
    tau_of,
)

points = st.complex_numbers(min_magnitude=0.05, max_magnitude=20, allow_nan=False, allow_infinity=False).filter(
    lambda z: abs(z - 1) > 0.05)


@settings(max_examples=80, deadline=None)
@given(points)
def test_ellipk_against_mpmath(m):
    if m.imag == 0 and m.real >= 1:
        m += 1e-9j  # keep off the branch cut
    ref = complex(mpmath.ellipk(m))
    assert complex(ellipk(m)) == pytest.approx(ref, rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(points)
def test_density_against_mpmath(z):
    k1, k2 = mpmath.ellipk(z), mpmath.ellipk(1 - z)
    ref = float(mpmath.pi / (4 * abs(z) * abs(1 - z) * mpmath.re(k2 * mpmath.conj(k1))))
    assert float(density(z)) == pytest.approx(ref, rel=1e-10)


def test_density_two_routes_agree():
    for tau in (0.3 + 0.8j, -0.4 + 1.5j, 0.1 + 0.6j, 0.5 + 1j):
        z, rho = density_from_lambda(tau)
        assert float(density(z)) == pytest.approx(rho, rel=1e-10)


def test_tau_inverts_lambda():
    for z in (0.3 + 0.2j, -1.5 + 0.7j, 2.0 - 1.0j):
        lam, _ = modular_lambda(complex(tau_of(z)))
        assert lam == pytest.approx(z, rel=1e-10)


def test_density_symmetries():
    z = np.array([0.3 + 0.4j, -2 + 1j, 0.7 - 3j])
    rho = density(z)
    # z -> 1 - z and z -> 1/z permute the punctures
    assert density(1 - z) == pytest.approx(rho, rel=1e-12)
    assert density(1 / z) * np.abs(1 / z) ** 2 == pytest.approx(rho, rel=1e-12)
    assert density(np.conj(z)) == pytest.approx(rho, rel=1e-12)


def test_density_near_puncture_matches_cusp_model():
    # near 0, rho ~ 1 / (|z| log(16/|z|))
    for r in (1e-4, 1e-6):
        assert float(density(r)) * r * math.log(16 / r) == pytest.approx(1.0, rel=1e-3)


def test_polyline_length_of_circle_converges():
    circ = 0.3 * np.exp(1j * np.linspace(0, 2 * np.pi, 401)) + 0.5 + 0.5j
    coarse = polyline_length(circ[::4])
    fine = polyline_length(circ)
    assert fine == pytest.approx(coarse, rel=1e-3)
    assert polyline_length([0.2j]) == 0.0
