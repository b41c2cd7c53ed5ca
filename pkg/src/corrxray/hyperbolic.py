"""Hyperbolic geometry of the thrice-punctured sphere through Gamma(2).

The deck group of the upper half plane over the thrice-punctured sphere
is the principal congruence subgroup Gamma(2).  Generators are sent to

    a -> [[1, 2], [0, 1]],    b -> [[1, 0], [-2, 1]],

so that ``ab`` (the inverse of the loop about infinity) is parabolic.
Matrix entries are Python integers, hence exact for any word length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .groups import Word


@dataclass(frozen=True)
class Moebius:
    """Integer matrix ``[[p, q], [r, s]]`` acting by fractional linear maps."""

    p: int
    q: int
    r: int
    s: int

    def __matmul__(self, o: "Moebius") -> "Moebius":
        return Moebius(
            self.p * o.p + self.q * o.r,
            self.p * o.q + self.q * o.s,
            self.r * o.p + self.s * o.r,
            self.r * o.q + self.s * o.s,
        )

    @property
    def det(self) -> int:
        return self.p * self.s - self.q * self.r

    @property
    def trace(self) -> int:
        return self.p + self.s

    def inverse(self) -> "Moebius":
        return Moebius(self.s, -self.q, -self.r, self.p)

    def in_gamma2(self) -> bool:
        return (
            self.det == 1
            and self.p % 2 == 1
            and self.s % 2 == 1
            and self.q % 2 == 0
            and self.r % 2 == 0
        )

    def __call__(self, z: complex) -> complex:
        return (self.p * z + self.q) / (self.r * z + self.s)

    def as_array(self) -> np.ndarray:
        return np.array([[self.p, self.q], [self.r, self.s]], dtype=float)

    def rows(self) -> list:
        return [[self.p, self.q], [self.r, self.s]]


IDENTITY = Moebius(1, 0, 0, 1)
GENERATOR_MATRICES = {1: Moebius(1, 2, 0, 1), 2: Moebius(1, 0, -2, 1)}
_LETTER_MATRIX = dict(GENERATOR_MATRICES)
_LETTER_MATRIX.update({-k: m.inverse() for k, m in GENERATOR_MATRICES.items()})


def to_matrix(w: Word) -> Moebius:
    """Gamma(2) matrix of a word over ``a, b``.

    >>> to_matrix((1,)).rows()
    [[1, 2], [0, 1]]
    >>> to_matrix((1, 2)).trace
    -2
    """
    p, q, r, s = 1, 0, 0, 1
    for x in w:
        m = _LETTER_MATRIX[x]
        p, q, r, s = p * m.p + q * m.r, p * m.q + q * m.s, r * m.p + s * m.r, r * m.q + s * m.s
    return Moebius(p, q, r, s)


def is_parabolic(m: Moebius) -> bool:
    return abs(m.trace) == 2 and m != IDENTITY and m != Moebius(-1, 0, 0, -1)


def hyp_distance(z: complex, w: complex) -> float:
    """Hyperbolic distance in the upper half plane.

    Uses ``2 asinh(|z - w| / (2 sqrt(Im z Im w)))``, which agrees with
    ``arccosh(1 + |z-w|^2 / (2 Im z Im w))`` and is accurate for nearby
    points.

    >>> round(hyp_distance(1j, 2j), 6)
    0.693147
    """
    if z.imag <= 0 or w.imag <= 0:
        raise ValueError("points must lie in the upper half plane")
    return 2.0 * math.asinh(abs(z - w) / (2.0 * (math.sqrt(z.imag) * math.sqrt(w.imag))))


def _frame(tau: complex) -> np.ndarray:
    """Real matrix in SL2 sending i to tau."""
    y = math.sqrt(tau.imag)
    return np.array([[y, tau.real / y], [0.0, 1.0 / y]])


def _frame_inv(tau: complex) -> np.ndarray:
    y = math.sqrt(tau.imag)
    return np.array([[1.0 / y, -tau.real / y], [0.0, y]])


def translation_length(m: Moebius, basepoint: complex = 1j) -> float:
    """``d(tau, m tau)`` computed as ``2 asinh(sqrt((F - 2) / 4))`` where
    ``F`` is the squared Frobenius norm of ``m`` conjugated to the frame
    at ``tau``.  At ``tau = i`` ``F - 2`` is an exact integer."""
    if basepoint == 1j:
        f2 = m.p * m.p + m.q * m.q + m.r * m.r + m.s * m.s - 2
        if f2 <= 0:
            return 0.0
        return 2.0 * math.asinh(math.sqrt(f2 / 4.0)) if f2 < 1e300 else math.acosh(f2 / 2.0 + 1.0)
    mp = _frame_inv(basepoint) @ m.as_array() @ _frame(basepoint)
    f2 = float(np.sum(mp * mp)) - 2.0
    return 2.0 * math.asinh(math.sqrt(max(f2, 0.0) / 4.0))


def norm(g: Word, basepoint: complex = 1j) -> float:
    """Hyperbolic norm: distance from the basepoint to its ``g``-translate."""
    if not g:
        return 0.0
    return translation_length(to_matrix(g), basepoint)


def roundabout_length(delta: float, winding: float) -> float:
    """Length of a roundabout crossing the cusp neighbourhood of
    circumference ``delta`` with winding number ``winding``:
    ``2 asinh(delta |winding| / 2)``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return 2.0 * math.asinh(delta * abs(winding) / 2.0)


# --------------------------------------------------------------------------
# cusps of Gamma(2)
# --------------------------------------------------------------------------

#: width of every cusp of Gamma(2) in SL2(Z) cusp coordinates
CUSP_WIDTH = 2


def sl2z_reduce(tau: complex, max_iter: int = 10_000) -> tuple:
    """Reduce ``tau`` to the standard fundamental domain of SL2(Z).

    Returns ``(N, w)`` with ``N`` an integer matrix of determinant one and
    ``w = N(tau)`` satisfying ``|Re w| <= 1/2`` and ``|w| >= 1`` up to
    rounding.
    """
    p, q, r, s = 1, 0, 0, 1
    w = complex(tau)
    for _ in range(max_iter):
        n = math.floor(w.real + 0.5)
        if n:
            w -= n
            p, q = p - n * r, q - n * s
        if abs(w) < 1.0 - 1e-15:
            w = -1.0 / w
            p, q, r, s = -r, -s, p, q
        else:
            return Moebius(p, q, r, s), w
    raise RuntimeError("SL2(Z) reduction did not terminate")


def cusp_of_chart(n: Moebius) -> tuple:
    """Cusp sent to infinity by ``n``, as a reduced pair ``(num, den)``
    with ``den >= 0`` (``(1, 0)`` is infinity)."""
    a, c = n.s, -n.r  # first column of n^{-1}
    if c < 0 or (c == 0 and a < 0):
        a, c = -a, -c
    return a, c


def cusp_chart(v: tuple) -> Moebius:
    """A matrix of SL2(Z) sending the cusp ``v = (p, q)`` to infinity."""
    p, q = v
    if q == 0:
        return IDENTITY
    g, x, y = _egcd(p, q)
    # x p + y q = 1; [[x, y], [-q, p]] sends p/q to infinity
    return Moebius(x, y, -q, p)


def _egcd(a: int, b: int) -> tuple:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        k, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - k * x1
        y0, y1 = y1, y0 - k * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def cusp_puncture(v: tuple) -> int:
    """Puncture of the thrice-punctured sphere under a cusp ``p/q``.

    With the generator matrices above, the cusps equivalent to infinity
    lie over the puncture 0 (letter ``a``), those equivalent to 0 over the
    puncture 1 (letter ``b``) and those equivalent to 1 over infinity.
    """
    p, q = v
    if q % 2 == 0:
        return 0
    if p % 2 == 0:
        return 1
    return 2


def cusp_str(v: tuple) -> str:
    p, q = v
    if q == 0:
        return "inf"
    if q == 1:
        return str(p)
    return f"{p}/{q}"


# --------------------------------------------------------------------------
# thick-thin decomposition
# --------------------------------------------------------------------------

#: length of the shortest closed geodesic on the thrice-punctured sphere
SYSTOLE = 2.0 * math.acosh(3.0)


class DegenerateGeometry(RuntimeError):
    """Geodesic tangent to a horoball boundary within tolerance."""


def max_cusp_height(tau: complex) -> float:
    """Largest height of ``tau`` over all cusps, in SL2(Z) cusp coordinates."""
    return sl2z_reduce(tau)[1].imag


@dataclass(frozen=True)
class ThickThinParams:
    """Cusp circumference ``delta``, separation ``zeta``, roundabout
    parameter ``mu`` and basepoint.

    In normalized cusp coordinates the neighbourhood of circumference
    ``delta`` is ``{Im w > 1/delta}`` modulo ``w -> w + 1``.  Since every
    cusp of Gamma(2) has width 2, in SL2(Z) coordinates this is the
    horoball of height ``H = 2/delta``.
    """

    delta: float = 0.25
    zeta: float | None = None
    mu: float = 0.0
    basepoint: complex = 1j

    def __post_init__(self) -> None:
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.basepoint.imag <= 0:
            raise ValueError("basepoint must lie in the upper half plane")
        bound = self.zeta_bound()
        if bound <= 0:
            raise ValueError("basepoint lies inside a cusp neighbourhood")
        if self.zeta is None:
            object.__setattr__(self, "zeta", 0.999 * bound)
        elif not 0 < self.zeta < bound:
            raise ValueError(f"zeta={self.zeta} violates the separation bound {bound:.6g}")

    @property
    def height(self) -> float:
        return CUSP_WIDTH / self.delta

    def zeta_bound(self) -> float:
        """Supremum of admissible separations.

        Distinct horoballs of height ``H`` are at distance at least ``2 ln H``,
        and the ``zeta``-neighbourhood of a horoball is the horoball of height
        ``H e^-zeta``, which stays embedded while ``zeta < ln H``.  The
        basepoint must also be ``zeta``-far from every horoball.
        """
        ln_h = math.log(self.height)
        to_base = ln_h - math.log(max_cusp_height(self.basepoint))
        return min(ln_h, to_base)

    def conditions(self) -> dict:
        """Status of each separation condition."""
        ln_h = math.log(self.height)
        z = self.zeta
        return {
            "horoballs_disjoint": self.height > 1.0,
            "neighbourhood_embedded": z < ln_h,
            "neighbourhoods_separated": 2 * z < 2 * ln_h,
            "basepoint_far": z <= ln_h - math.log(max_cusp_height(self.basepoint)),
            "delta_below_systole": self.delta < SYSTOLE,
        }


@dataclass(frozen=True)
class Segment:
    kind: str  # "thick" or "roundabout"
    length: float
    start: float
    end: float
    cusp: tuple | None = None
    puncture: int | None = None
    winding: int = 0
    displacement: float = 0.0

    def to_json(self) -> dict:
        if self.kind == "thick":
            return {"kind": "thick", "cusp": None, "winding": 0, "length": self.length}
        return {
            "kind": "roundabout",
            "cusp": self.puncture,
            "cusp_point": cusp_str(self.cusp),
            "winding": self.winding,
            "displacement": self.displacement,
            "length": self.length,
        }


@dataclass(frozen=True)
class ThickThinDecomposition:
    segments: tuple
    total: float
    params: ThickThinParams

    @property
    def roundabouts(self) -> list:
        return [s for s in self.segments if s.kind == "roundabout"]

    @property
    def thick(self) -> list:
        return [s for s in self.segments if s.kind == "thick"]

    @property
    def k(self) -> int:
        return len(self.roundabouts)

    def length_sum(self) -> float:
        return math.fsum(s.length for s in self.segments)

    def to_json(self) -> list:
        return [s.to_json() for s in self.segments]


class GeodesicChart:
    """Arclength chart of the geodesic from ``tau0`` to ``m(tau0)``.

    ``point(s) = F (i e^s)`` with ``F = A U`` where ``A`` sends ``i`` to
    ``tau0`` and ``U`` is the left rotation in the Cartan decomposition of
    ``A^-1 m A``.
    """

    def __init__(self, m: Moebius, tau0: complex):
        self.m = m
        self.tau0 = tau0
        self.length = translation_length(m, tau0)
        a = _frame(tau0)
        mp = _frame_inv(tau0) @ m.as_array() @ a
        u, _, vt = np.linalg.svd(mp)
        if np.linalg.det(u) < 0:
            u = u @ np.diag([1.0, -1.0])
        self.frame = a @ u

    def matrix_point(self, k: np.ndarray, s: float) -> complex:
        z = 1j * math.exp(s)
        return (k[0, 0] * z + k[0, 1]) / (k[1, 0] * z + k[1, 1])

    def point(self, s: float) -> complex:
        return self.matrix_point(self.frame, s)


def _horoball_interval(k: np.ndarray, height: float) -> tuple | None:
    """Interval of ``s`` with ``Im(K(i e^s)) > height`` for ``K`` in SL2(R)."""
    c, d = k[1, 0], k[1, 1]
    # Im K(iy) = y / (c^2 y^2 + d^2) > H  <=>  H c^2 y^2 - y + H d^2 < 0
    if abs(c) < 1e-300:
        return (math.log(height * d * d), math.inf)
    disc = 1.0 - 4.0 * height * height * c * c * d * d
    if abs(disc) < 1e-12:
        raise DegenerateGeometry("geodesic tangent to a horoball boundary")
    if disc < 0:
        return None
    r = math.sqrt(disc)
    y_lo = 2.0 * height * d * d / (1.0 + r)
    y_hi = (1.0 + r) / (2.0 * height * c * c)
    return (math.log(y_lo), math.log(y_hi))


def _mat_int(m: Moebius, f: np.ndarray) -> np.ndarray:
    return np.array([[m.p, m.q], [m.r, m.s]], dtype=float) @ f


@dataclass(frozen=True)
class _Crossing:
    s_in: float
    s_out: float
    cusp: tuple
    displacement: float


def _crossing_from(chart: GeodesicChart, nv: Moebius, height: float) -> tuple | None:
    """Interval and displacement of the chart geodesic through the horoball
    ``{Im nv(tau) > height}``."""
    k = _mat_int(nv, chart.frame)
    iv = _horoball_interval(k, height)
    if iv is None:
        return None
    lo, hi = iv
    hi = min(hi, chart.length)
    if hi <= max(lo, 0.0):
        return None
    zi, zo = chart.matrix_point(k, lo), chart.matrix_point(k, hi)
    return lo, hi, (zo.real - zi.real) / CUSP_WIDTH


def horoball_crossings(g: Word, params: ThickThinParams) -> tuple:
    """All horoballs of height ``2/delta`` met by the geodesic of ``g``.

    Returns ``(length, crossings)`` sorted along the geodesic.  The
    geodesic is marched with steps that cannot skip a horoball: at a point
    whose maximal cusp height is ``y`` (attained at the cusp ``v``), every
    other cusp has height at most ``1/y``, so no other horoball is reached
    within distance ``ln H + ln y``.  The horoball of ``v`` itself is
    intersected exactly.  Points in the far half of the geodesic are
    computed from the reversed geodesic of ``g^-1`` so that all cusp charts
    have small integer entries.
    """
    m = to_matrix(g)
    minv = m.inverse()
    tau0 = params.basepoint
    fwd = GeodesicChart(m, tau0)
    back = GeodesicChart(minv, tau0)
    L = fwd.length
    H = params.height
    found: dict = {}
    s = 0.0
    margin = 0.25
    while s < L:
        near = s <= L / 2
        if near:
            n, w = sl2z_reduce(fwd.point(s))
            v = cusp_of_chart(n)
        else:
            n, w = sl2z_reduce(back.point(L - s))
            v = cusp_of_chart(n @ minv)
        step = math.log(H) + math.log(w.imag) - margin
        if step <= 0:
            raise DegenerateGeometry("march step is not positive; delta too large")
        nxt = s + step
        if v not in found:
            nv = cusp_chart(cusp_of_chart(n))
            hit = _crossing_from(fwd if near else back, nv, H)
            if hit is not None:
                lo, hi, disp = hit
                if not near:
                    # reversed parametrization: s = L - t
                    lo, hi, disp = L - hi, L - lo, -disp
                found[v] = _Crossing(lo, hi, v, disp)
                if lo < nxt:
                    nxt = max(nxt, hi)
        s = nxt
    return L, sorted(found.values(), key=lambda c: c.s_in)


def decompose(g: Word, params: ThickThinParams | None = None) -> ThickThinDecomposition:
    """Thick-thin decomposition of the geodesic from the basepoint to its
    ``g``-translate.

    Roundabouts shorter than ``params.mu`` are absorbed into the adjacent
    thick segments.
    """
    params = params or ThickThinParams()
    if not g:
        return ThickThinDecomposition((Segment("thick", 0.0, 0.0, 0.0),), 0.0, params)
    L, crossings = horoball_crossings(g, params)
    rounds = []
    for c in crossings:
        seg = Segment(
            "roundabout",
            c.s_out - c.s_in,
            c.s_in,
            c.s_out,
            cusp=c.cusp,
            puncture=cusp_puncture(c.cusp),
            winding=int(round(c.displacement)),
            displacement=c.displacement,
        )
        if seg.length >= params.mu:
            rounds.append(seg)
    segs = []
    pos = 0.0
    for r in rounds:
        segs.append(Segment("thick", r.start - pos, pos, r.start))
        segs.append(r)
        pos = r.end
    segs.append(Segment("thick", L - pos, pos, L))
    return ThickThinDecomposition(tuple(segs), L, params)


def winding_number(entry: complex, exit: complex, delta: float, tol: float = 1e-9) -> int:
    """Winding number of a horoball segment given in normalized cusp
    coordinates (stabilizer ``w -> w + 1``, horoball ``Im w > 1/delta``).

    Counterclockwise about the cusp counts as positive.

    >>> winding_number(0.3 + 4j, 5.3 + 4j, 0.25)
    5
    """
    h = 1.0 / delta
    for z in (entry, exit):
        if abs(z.imag - h) > tol * max(1.0, h):
            raise ValueError("segment endpoints must lie on the horoball boundary")
    return int(round(exit.real - entry.real))


def thick_thin_gap(dec: ThickThinDecomposition) -> float:
    """``|g| - (sum |l_i| + 2 sum log+ |winding_i|)``."""
    thick = math.fsum(s.length for s in dec.thick)
    thin = math.fsum(2.0 * math.log(max(abs(r.displacement), 1.0)) for r in dec.roundabouts)
    return dec.total - thick - thin


def geodesic_points(z1: complex, z2: complex, n: int) -> np.ndarray:
    """``n`` points, equally spaced in arclength, on the geodesic from
    ``z1`` to ``z2``."""
    a = _frame(z1)
    ai = _frame_inv(z1)
    w2 = (ai[0, 0] * z2 + ai[0, 1]) / ai[1, 1]
    d = hyp_distance(1j, w2)
    if d == 0:
        return np.full(n, z1, dtype=complex)
    # a matrix B with B(i) = w2 has Cartan form U diag V^T, so the geodesic
    # from i to w2 is U(i e^s)
    u, _, _ = np.linalg.svd(_frame(w2))
    if np.linalg.det(u) < 0:
        u = u @ np.diag([1.0, -1.0])
    f = a @ u
    zs = 1j * np.exp(np.linspace(0.0, d, n))
    out = (f[0, 0] * zs + f[0, 1]) / (f[1, 0] * zs + f[1, 1])
    out[0], out[-1] = z1, z2
    return out


def polyline_length(points: Sequence[complex]) -> float:
    pts = np.asarray(points, dtype=complex)
    if len(pts) < 2:
        return 0.0
    a, b = pts[:-1], pts[1:]
    return float(np.sum(2.0 * np.arcsinh(np.abs(a - b) / (2.0 * (np.sqrt(a.imag) * np.sqrt(b.imag))))))
