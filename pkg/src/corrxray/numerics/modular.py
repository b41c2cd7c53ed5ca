"""Hyperbolic metric of the sphere minus ``{0, 1, inf}``.

Two independent descriptions are provided.  The inverse of the modular
function is ``tau(z) = i K(1-z) / K(z)`` with complete elliptic integrals
computed by the arithmetic-geometric mean, which gives the density

    rho(z) = pi / (4 |z| |1-z| Re(K(1-z) conj K(z))).

The forward map is the theta quotient ``lambda(tau) = (theta_2/theta_3)^4``
with ``lambda'(tau) = i pi lambda (1 - lambda) theta_3^4``.
"""

from __future__ import annotations

import cmath
import math

import numpy as np


def agm(a, b, tol: float = 1e-16, max_iter: int = 60):
    """Arithmetic-geometric mean with the principal (right) choice of root.

    Works elementwise on arrays.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    for _ in range(max_iter):
        a1 = (a + b) / 2
        g = np.sqrt(a * b)
        # keep the root closer to the arithmetic mean
        g = np.where(np.abs(a1 - g) > np.abs(a1 + g), -g, g)
        a, b = a1, g
        if np.all(np.abs(a - b) <= tol * np.abs(a)):
            break
    return (a + b) / 2


def ellipk(m):
    """Complete elliptic integral of the first kind, parameter ``m``
    (principal branch, cut along ``[1, inf)``).

    >>> round(float(ellipk(0.5).real), 12)
    1.854074677301
    """
    m = np.asarray(m, dtype=complex)
    return np.pi / (2 * agm(np.ones_like(m), np.sqrt(1 - m)))


def tau_of(z):
    """A lift of ``z`` to the upper half plane."""
    z = np.asarray(z, dtype=complex)
    return 1j * ellipk(1 - z) / ellipk(z)


def density(z):
    """Hyperbolic density of the thrice-punctured sphere at ``z``."""
    z = np.asarray(z, dtype=complex)
    k1 = ellipk(z)
    k2 = ellipk(1 - z)
    return np.pi / (4 * np.abs(z) * np.abs(1 - z) * np.real(k2 * np.conj(k1)))


def theta_values(tau: complex, terms: int = 60) -> tuple:
    """``(theta_2, theta_3, theta_4)`` at nome ``q = exp(i pi tau)``."""
    q = cmath.exp(1j * math.pi * tau)
    n = np.arange(terms)
    t2 = 2 * np.sum(q ** ((n + 0.5) ** 2))
    t3 = 1 + 2 * np.sum(q ** ((n[1:]) ** 2))
    t4 = 1 + 2 * np.sum((-1.0) ** n[1:] * q ** ((n[1:]) ** 2))
    return complex(t2), complex(t3), complex(t4)


def modular_lambda(tau: complex) -> tuple:
    """``(lambda(tau), lambda'(tau))``."""
    t2, t3, _ = theta_values(tau)
    lam = (t2 / t3) ** 4
    return lam, 1j * math.pi * lam * (1 - lam) * t3 ** 4


def density_from_lambda(tau: complex) -> tuple:
    """``(z, rho(z))`` for ``z = lambda(tau)``, from the theta series."""
    lam, dlam = modular_lambda(tau)
    return lam, 1.0 / (tau.imag * abs(dlam))


def polyline_length(samples, sub: int = 4) -> float:
    """Hyperbolic length of a polyline by composite Simpson quadrature of
    the density on every segment (``sub`` panels per segment)."""
    z = np.asarray(samples, dtype=complex)
    if len(z) < 2:
        return 0.0
    a, b = z[:-1], z[1:]
    t = np.linspace(0.0, 1.0, 2 * sub + 1)
    w = np.ones(2 * sub + 1)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    w /= 3 * 2 * sub
    pts = a[:, None] + (b - a)[:, None] * t[None, :]
    return float(np.sum(density(pts) @ w * np.abs(b - a)))
