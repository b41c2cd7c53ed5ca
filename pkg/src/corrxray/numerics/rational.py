"""Rational maps of the Riemann sphere with exact or floating coefficients.

Exact maps keep their numerator and denominator as sympy polynomials over
the Gaussian rationals; every map also carries complex float coefficient
arrays for fast evaluation.  The point at infinity is the Python value
``INF``.
"""

from __future__ import annotations

import cmath
import math
import re
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import sympy as sp

T = sp.Symbol("t")
INF = complex(math.inf, 0.0)


class IllConditioned(ArithmeticError):
    """Roots too close to separate numerically."""


def is_inf(z) -> bool:
    if z is sp.zoo or z is sp.oo:
        return True
    if isinstance(z, (complex, float)):
        return cmath.isinf(z)
    return False


def parse_gaussian(s: str) -> sp.Expr:
    """Parse an exact Gaussian rational such as ``"1/2-3/4*i"``.

    >>> parse_gaussian("1/2-3/4*i")
    1/2 - 3*I/4
    """
    if not re.fullmatch(r"[0-9/+\-*i ().]*", s):
        raise ValueError(f"not a Gaussian rational: {s!r}")
    if "." in s:
        raise ValueError("decimals are inexact; set inexact: true")
    v = sp.nsimplify(sp.sympify(s.replace("i", "I"), rational=True))
    re_, im_ = sp.re(v), sp.im(v)
    if not (re_.is_Rational and im_.is_Rational):
        raise ValueError(f"not a Gaussian rational: {s!r}")
    return v


def to_exact(p):
    """Exact sympy value of a sphere point, ``sp.zoo`` for infinity, or
    ``None`` when ``p`` is a float."""
    if p is None:
        return None
    if is_inf(p):
        return sp.zoo
    if isinstance(p, (int, Fraction)):
        return sp.Rational(p.numerator, p.denominator) if isinstance(p, Fraction) else sp.Integer(p)
    if isinstance(p, sp.Basic):
        return p
    return None


def to_complex(p) -> complex:
    if is_inf(p):
        return INF
    if isinstance(p, sp.Basic):
        return complex(sp.N(p, 30))
    return complex(p)


def chordal(z, w) -> float:
    """Chordal distance on the Riemann sphere, in ``[0, 2]``.

    >>> chordal(0, INF), chordal(1e300, INF) < 1e-299
    (2.0, True)
    """
    zi, wi = is_inf(z), is_inf(w)
    if zi and wi:
        return 0.0
    if zi:
        return 2.0 / math.hypot(1.0, abs(w))
    if wi:
        return 2.0 / math.hypot(1.0, abs(z))
    # hypot keeps this finite for huge finite inputs
    return 2.0 * (abs(z - w) / math.hypot(1.0, abs(z))) / math.hypot(1.0, abs(w))


def chordal_array(z: np.ndarray, w) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if is_inf(w):
        return 2.0 / np.hypot(1.0, np.abs(z))
    return 2.0 * (np.abs(z - w) / np.hypot(1.0, np.abs(z))) / math.hypot(1.0, abs(w))


def _poly(expr) -> sp.Poly:
    return sp.Poly(expr, T, domain=sp.QQ_I)


class RationalMap:
    """``num(t) / den(t)`` on the Riemann sphere.

    Construct exact maps with :meth:`from_expr` or :meth:`from_coeffs`;
    inexact maps with :meth:`from_complex`.

    >>> m = RationalMap.from_expr("1 - 1/t**2")
    >>> m.degree, m(2.0)
    (2, (0.75+0j))
    """

    def __init__(self, num, den, exact: bool):
        self.exact = exact
        if exact:
            num, den = sp.Poly(num, T, domain=sp.QQ_I), sp.Poly(den, T, domain=sp.QQ_I)
            if den.is_zero:
                raise ZeroDivisionError("zero denominator")
            g = sp.gcd(num, den)
            if g.degree() > 0:
                num, den = sp.div(num, g)[0], sp.div(den, g)[0]
            lc = den.LC()
            num, den = num.quo_ground(lc), den.quo_ground(lc)
            self.num_poly, self.den_poly = num, den
            self.num_c = np.array([complex(sp.N(sp.sympify(c))) for c in _all_coeffs(num)], dtype=complex)
            self.den_c = np.array([complex(sp.N(sp.sympify(c))) for c in _all_coeffs(den)], dtype=complex)
        else:
            self.num_poly = self.den_poly = None
            self.num_c = np.trim_zeros(np.asarray(num, dtype=complex), "f") if np.any(num) else np.zeros(1, complex)
            self.den_c = np.trim_zeros(np.asarray(den, dtype=complex), "f")
            if len(self.den_c) == 0:
                raise ZeroDivisionError("zero denominator")
            s = self.den_c[0]
            self.num_c = self.num_c / s
            self.den_c = self.den_c / s
        self.deg_num = len(self.num_c) - 1 if np.any(self.num_c) else -1
        self.deg_den = len(self.den_c) - 1
        self.degree = max(self.deg_num, self.deg_den)
        self._dnum = np.polyder(self.num_c) if len(self.num_c) > 1 else np.zeros(1, complex)
        self._dden = np.polyder(self.den_c) if len(self.den_c) > 1 else np.zeros(1, complex)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_expr(cls, expr) -> "RationalMap":
        e = sp.together(sp.sympify(expr, locals={"t": T, "i": sp.I}))
        n, d = sp.fraction(e)
        return cls(sp.expand(n), sp.expand(d), exact=True)

    @classmethod
    def from_coeffs(cls, num: Sequence, den: Sequence) -> "RationalMap":
        """Exact map from coefficient lists, lowest degree first; entries
        are ints, Fractions, sympy numbers or Gaussian rational strings."""
        def conv(c):
            if isinstance(c, str):
                return parse_gaussian(c)
            return to_exact(c)
        n = sum(conv(c) * T**k for k, c in enumerate(num))
        d = sum(conv(c) * T**k for k, c in enumerate(den))
        return cls(sp.expand(n), sp.expand(d), exact=True)

    @classmethod
    def from_complex(cls, num: Sequence, den: Sequence) -> "RationalMap":
        """Inexact map from complex coefficient lists, lowest degree first."""
        return cls(np.asarray(num, dtype=complex)[::-1], np.asarray(den, dtype=complex)[::-1], exact=False)

    def expr(self):
        if not self.exact:
            raise ValueError("inexact map has no exact expression")
        return self.num_poly.as_expr() / self.den_poly.as_expr()

    def __repr__(self) -> str:
        if self.exact:
            return f"RationalMap({sp.sstr(self.expr())})"
        return f"RationalMap(inexact, degree {self.degree})"

    # -- evaluation ---------------------------------------------------------

    def __call__(self, z):
        if is_inf(z):
            return self.value_at_infinity()
        z = complex(z)
        d = np.polyval(self.den_c, z)
        n = np.polyval(self.num_c, z)
        if d == 0:
            return INF
        return complex(n / d)

    def eval_array(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.polyval(self.num_c, z) / np.polyval(self.den_c, z)

    def value_at_infinity(self):
        if self.deg_num > self.deg_den:
            return INF
        if self.deg_num < self.deg_den:
            return 0j
        return complex(self.num_c[0] / self.den_c[0])

    def derivative(self, z: complex) -> complex:
        n, d = np.polyval(self.num_c, z), np.polyval(self.den_c, z)
        dn, dd = np.polyval(self._dnum, z), np.polyval(self._dden, z)
        return complex((dn * d - n * dd) / (d * d))

    def derivative_array(self, z: np.ndarray) -> np.ndarray:
        n, d = np.polyval(self.num_c, z), np.polyval(self.den_c, z)
        dn, dd = np.polyval(self._dnum, z), np.polyval(self._dden, z)
        return (dn * d - n * dd) / (d * d)

    def exact_value(self, p):
        """Exact image of an exact point (sympy value; ``sp.zoo`` for infinity)."""
        p = to_exact(p)
        if p is sp.zoo:
            if self.num_poly.degree() > self.den_poly.degree():
                return sp.zoo
            if self.num_poly.degree() < self.den_poly.degree():
                return sp.Integer(0)
            return sp.nsimplify(self.num_poly.LC() / self.den_poly.LC())
        d = self.den_poly.eval(p)
        if d == 0:
            return sp.zoo
        return sp.simplify(self.num_poly.eval(p) / d)

    # -- algebra ------------------------------------------------------------

    def fiber_poly_c(self, w) -> np.ndarray:
        """Coefficients (highest first) of ``num - w den``, or ``den`` if
        ``w`` is infinity."""
        if is_inf(w):
            return self.den_c.copy()
        n, d = self.num_c, self.den_c
        size = max(len(n), len(d))
        out = np.zeros(size, dtype=complex)
        out[size - len(n):] += n
        out[size - len(d):] -= w * d
        return out

    def fiber_poly_exact(self, w) -> sp.Poly:
        w = to_exact(w)
        if w is sp.zoo:
            return self.den_poly
        return self.num_poly - self.den_poly * w

    def wronskian_exact(self) -> sp.Poly:
        """``num' den - num den'``; its roots are the finite critical points."""
        n, d = self.num_poly, self.den_poly
        return n.diff(T) * d - n * d.diff(T)

    def wronskian_c(self) -> np.ndarray:
        return np.polysub(np.polymul(self._dnum, self.den_c), np.polymul(self.num_c, self._dden))

    def critical_points(self) -> list:
        """Critical points with multiplicity (local degree minus one)."""
        if self.exact:
            w = self.wronskian_exact()
            pts = []
            for f, k in w.sqf_list()[1]:
                for r in _numeric_roots(_complex_coeffs(f)):
                    pts.append((r, k))
        else:
            pts = [(r, k) for r, k in _cluster_roots(np.roots(_trim(self.wronskian_c())))]
        e_inf = local_degree(self, INF) - 1
        if e_inf > 0:
            pts.append((INF, e_inf))
        return sorted(pts, key=lambda t: _point_key(t[0]))

    def compose_moebius(self, left: "Moebius2", right: "Moebius2") -> "RationalMap":
        """``left o self o right`` as an inexact map unless everything is exact."""
        n = self.num_c
        d = self.den_c
        deg = self.degree
        a, b, c, e = right
        # substitute t -> (a t + b) / (c t + e) and clear (c t + e)^deg
        lin_num = np.array([a, b], dtype=complex)
        lin_den = np.array([c, e], dtype=complex)

        def subst(poly):
            out = np.zeros(1, dtype=complex)
            k = len(poly) - 1
            for j, coef in enumerate(poly):
                power = k - j
                term = np.array([coef], dtype=complex)
                for _ in range(power):
                    term = np.polymul(term, lin_num)
                for _ in range(deg - power):
                    term = np.polymul(term, lin_den)
                out = np.polyadd(out, term)
            return out

        n2, d2 = subst(n), subst(d)
        la, lb, lc, le = left
        top = np.polyadd(la * n2, lb * d2)
        bot = np.polyadd(lc * n2, le * d2)
        return RationalMap(top, bot, exact=False)


Moebius2 = tuple  # (a, b, c, d) complex, acting by (a z + b) / (c z + d)


def moebius_apply(m: Moebius2, z):
    a, b, c, d = m
    if is_inf(z):
        return INF if c == 0 else a / c
    den = c * z + d
    if den == 0:
        return INF
    return (a * z + b) / den


def moebius_inverse(m: Moebius2) -> Moebius2:
    a, b, c, d = m
    return (d, -b, -c, a)


def _all_coeffs(p: sp.Poly) -> list:
    return [sp.sympify(c) for c in p.all_coeffs()]


def _complex_coeffs(p: sp.Poly) -> np.ndarray:
    return np.array([complex(sp.N(sp.sympify(c), 30)) for c in p.all_coeffs()], dtype=complex)


def _trim(c: np.ndarray, rel: float = 1e-14) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    if not np.any(c):
        return c[-1:]
    scale = np.max(np.abs(c))
    k = 0
    while k < len(c) - 1 and abs(c[k]) <= rel * scale:
        k += 1
    return c[k:]


def _point_key(z) -> tuple:
    if is_inf(z):
        return (1, 0.0, 0.0)
    return (0, round(z.real, 9), round(z.imag, 9))


def _newton_polish(coeffs: np.ndarray, r: complex, steps: int = 3) -> complex:
    d = np.polyder(coeffs)
    for _ in range(steps):
        dv = np.polyval(d, r)
        if dv == 0:
            break
        step = np.polyval(coeffs, r) / dv
        if not np.isfinite(step):
            break
        r = r - step
    return complex(r)


def _numeric_roots(coeffs: np.ndarray) -> list:
    """Simple roots of a squarefree polynomial, polished by Newton."""
    coeffs = _trim(coeffs)
    if len(coeffs) <= 1:
        return []
    return [_newton_polish(coeffs, r) for r in np.roots(coeffs)]


def taylor_coeffs(coeffs: np.ndarray, p: complex) -> np.ndarray:
    """Coefficients of ``c(p + h)`` in powers of ``h``, lowest first."""
    c = list(np.asarray(coeffs, dtype=complex))
    out = []
    while c:
        # synthetic division by (t - p)
        acc = 0j
        q = []
        for a in c:
            acc = acc * p + a
            q.append(acc)
        out.append(q.pop())
        c = q
    return np.array(out, dtype=complex)


def root_order(coeffs: np.ndarray, p: complex, rel: float = 1e-8) -> int:
    """Order of vanishing at ``p`` by the derivative-order test."""
    tc = taylor_coeffs(_trim(coeffs), p)
    scale = max(np.max(np.abs(tc)), 1e-300)
    scale_p = max(1.0, abs(p))
    for k, c in enumerate(tc):
        if abs(c) * scale_p ** k > rel * scale:
            return k
    return len(tc) - 1


def _cluster_roots(roots: Iterable[complex], rel: float = 2e-3) -> list:
    """Group numerically multiple roots; returns ``(center, size)``."""
    roots = [complex(r) for r in roots]
    used = [False] * len(roots)
    out = []
    for i, r in enumerate(roots):
        if used[i]:
            continue
        group = [r]
        used[i] = True
        for j in range(i + 1, len(roots)):
            if not used[j] and abs(roots[j] - r) <= rel * max(1.0, abs(r)):
                group.append(roots[j])
                used[j] = True
        out.append((complex(np.mean(group)), len(group)))
    return out


def preimages(m: RationalMap, w, tol: float = 1e-8) -> list:
    """Preimage multiset of a sphere point: ``[(point, multiplicity), ...]``.

    Exact maps at exact points use a squarefree factorization, so
    multiplicities are exact.  Otherwise roots are clustered and each
    cluster size is confirmed by the derivative-order test; disagreement
    raises :class:`IllConditioned`.  Infinity is counted by the degree
    deficiency of ``num - w den``.

    >>> preimages(RationalMap.from_expr("t**2"), 0)
    [(0j, 2)]
    """
    if m.degree < 1:
        raise ValueError("constant map")
    we = to_exact(w) if m.exact else None
    out = []
    if we is not None:
        h = m.fiber_poly_exact(we)
        finite_deg = h.degree() if not h.is_zero else -1
        for f, k in h.sqf_list()[1]:
            for r in _numeric_roots(_complex_coeffs(f)):
                out.append((r, k))
        deficiency = m.degree - max(finite_deg, 0)
    else:
        wc = to_complex(w)
        h = _trim(m.fiber_poly_c(wc))
        deficiency = m.degree - (len(h) - 1)
        if len(h) > 1:
            for c, k in _cluster_roots(np.roots(h)):
                if k > 1:
                    dk = root_order(h, c, rel=tol)
                    if dk != k:
                        raise IllConditioned(f"cluster of {k} roots near {c} has order {dk}")
                    c = _newton_polish(np.polyder(h, k - 1), c)
                else:
                    c = _newton_polish(h, c)
                out.append((c, k))
            centers = [c for c, _ in out]
            for i in range(len(centers)):
                for j in range(i + 1, len(centers)):
                    if abs(centers[i] - centers[j]) < 10 * tol * max(1.0, abs(centers[i])):
                        raise IllConditioned("preimages not separated")
    if deficiency > 0:
        out.append((INF, deficiency))
    out.sort(key=lambda t: _point_key(t[0]))
    if sum(k for _, k in out) != m.degree:
        raise IllConditioned("multiplicities do not add up to the degree")
    return out


def local_degree(m: RationalMap, p, tol: float = 1e-8) -> int:
    """Local degree of ``m`` at a sphere point.

    Exact when both the map and the point are exact.

    >>> local_degree(RationalMap.from_expr("t**3/(t-1)"), 0)
    3
    """
    pe = to_exact(p) if m.exact else None
    if pe is not None:
        n, d = m.num_poly, m.den_poly
        if pe is sp.zoo:
            dn, dd = n.degree(), d.degree()
            if dn > dd:
                return dn - dd
            c = n.LC() / d.LC() if dn == dd else 0
            h = n - d * c
            return dd - (h.degree() if not h.is_zero else -10**9)
        v = m.exact_value(pe)
        h = d if v is sp.zoo else n - d * v
        k = 0
        lin = sp.Poly(T - pe, T, domain=sp.QQ_I)
        while not h.is_zero and h.eval(pe) == 0:
            h = sp.div(h, lin)[0]
            k += 1
        return k
    if is_inf(p):
        if m.deg_num > m.deg_den:
            return m.deg_num - m.deg_den
        v = m.value_at_infinity()
        h = _trim(m.fiber_poly_c(v))
        return m.deg_den - (len(h) - 1)
    p = complex(p)
    v = m(p)
    return root_order(m.fiber_poly_c(v), p, rel=tol)
