"""Detours near long geodesics and the quasigeodesic slippage bound.

All constructions live in the chart where the geodesic is the segment of
the imaginary axis from ``i`` to ``i e^L``.  A point of the upper half
plane at signed distance ``u`` from the axis, with foot point ``i e^t``,
is ``e^t (tanh u + i sech u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hyperbolic import geodesic_points, polyline_length


def axis_point(t: float, u: float = 0.0) -> complex:
    """Point with foot ``i e^t`` at signed distance ``u`` from the axis."""
    return math.exp(t) * complex(math.tanh(u), 1.0 / math.cosh(u))


def distance_to_axis_segment(z: np.ndarray, L: float) -> np.ndarray:
    """Distance from points to the geodesic segment from ``i`` to ``i e^L``."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    inside = (r >= 1.0) & (r <= math.exp(L))
    d_line = np.arcsinh(np.abs(z.real) / z.imag)
    e0 = 1j
    e1 = 1j * math.exp(L)
    d0 = 2 * np.arcsinh(np.abs(z - e0) / (2 * (np.sqrt(z.imag) * math.sqrt(e0.imag))))
    d1 = 2 * np.arcsinh(np.abs(z - e1) / (2 * (np.sqrt(z.imag) * math.sqrt(e1.imag))))
    return np.where(inside, d_line, np.minimum(d0, d1))


def _segment(z1: complex, z2: complex, step: float) -> np.ndarray:
    d = polyline_length([z1, z2])
    n = max(2, int(math.ceil(d / step)) + 1)
    return geodesic_points(z1, z2, n)


def _join(parts: list) -> np.ndarray:
    out = [parts[0]]
    for p in parts[1:]:
        out.append(p[1:])
    return np.concatenate(out)


def straight_path(L: float, step: float = 0.05) -> np.ndarray:
    return _segment(axis_point(0.0), axis_point(L), step)


def triangle_detour(L: float, C: float, at: float, half_width: float, step: float = 0.05,
                    side: int = 1) -> np.ndarray:
    """Replace ``[at - h, at + h]`` of the axis by two geodesic legs through
    an apex chosen so that the extra length is exactly ``C``.

    With apex at distance ``z`` above ``i e^at``, each leg has length
    ``l`` with ``cosh l = cosh h cosh z``; the condition ``2l - 2h = C``
    gives ``cosh z = cosh(h + C/2) / cosh h``.
    """
    h = half_width
    z = math.acosh(math.cosh(h + C / 2) / math.cosh(h))
    p0, p1 = axis_point(at - h), axis_point(at + h)
    apex = axis_point(at, side * z)
    return _join([
        _segment(axis_point(0.0), p0, step),
        _segment(p0, apex, step),
        _segment(apex, p1, step),
        _segment(p1, axis_point(L), step),
    ])


def bump_detour(L: float, C: float, at: float, height: float, step: float = 0.05,
                side: int = 1) -> np.ndarray:
    """Leave the axis perpendicularly, follow the equidistant curve at
    distance ``z = height`` and come back.

    The extra length is ``2z + w (cosh z - 1)`` for a bump of axial width
    ``w``; ``w`` is solved so that it equals ``C``.  Requires ``z < C/2``.
    """
    z = height
    if not 0 < z < C / 2:
        raise ValueError("bump height must lie in (0, C/2)")
    w = (C - 2 * z) / (math.cosh(z) - 1.0)
    t0, t1 = at - w / 2, at + w / 2
    nz = max(2, int(math.ceil(z / step)) + 1)
    nw = max(2, int(math.ceil(w * math.cosh(z) / step)) + 1)
    us = np.linspace(0.0, side * z, nz)
    ts = np.linspace(t0, t1, nw)
    up = np.array([axis_point(t0, u) for u in us])
    across = np.array([axis_point(t, side * z) for t in ts])
    down = np.array([axis_point(t1, u) for u in us[::-1]])
    return _join([
        _segment(axis_point(0.0), axis_point(t0), step),
        up, across, down,
        _segment(axis_point(t1), axis_point(L), step),
    ])


def zigzag_detour(L: float, C: float, pieces: int, step: float = 0.05) -> np.ndarray:
    """Spread the slack over ``pieces`` alternating triangle detours."""
    c = C / pieces
    gap = L / (pieces + 1)
    h = min(gap / 4, 2.0)
    parts = []
    pos = axis_point(0.0)
    for k in range(pieces):
        at = gap * (k + 1)
        z = math.acosh(math.cosh(h + c / 2) / math.cosh(h))
        p0, p1 = axis_point(at - h), axis_point(at + h)
        apex = axis_point(at, (1 if k % 2 == 0 else -1) * z)
        parts += [_segment(pos, p0, step), _segment(p0, apex, step), _segment(apex, p1, step)]
        pos = p1
    parts.append(_segment(pos, axis_point(L), step))
    return _join(parts)


def _arclength(path: np.ndarray) -> np.ndarray:
    a, b = path[:-1], path[1:]
    d = 2.0 * np.arcsinh(np.abs(a - b) / (2.0 * (np.sqrt(a.imag) * np.sqrt(b.imag))))
    return np.concatenate([[0.0], np.cumsum(d)])


@dataclass(frozen=True)
class SlippageReport:
    L: float
    C: float
    path_length: float
    max_distance: float
    max_parametrized_deviation: float
    bound: float
    preconditions: dict = field(default_factory=dict)

    @property
    def within_bound(self) -> bool:
        return self.max_distance <= self.bound

    @property
    def preconditions_met(self) -> bool:
        return all(self.preconditions.values())


def slippage_check(L: float, C: float, path: np.ndarray) -> SlippageReport:
    """Compare a path from ``i`` to ``i e^L`` with the geodesic.

    ``max_distance`` is the largest distance from a sample to the geodesic
    segment; ``max_parametrized_deviation`` compares the path and the
    geodesic both parametrized proportionally to arclength.  The
    preconditions are reported, not enforced.
    """
    path = np.asarray(path, dtype=complex)
    length = float(_arclength(path)[-1])
    dist = distance_to_axis_segment(path, L)
    s = _arclength(path)
    frac = s / s[-1] if s[-1] > 0 else s
    geo = 1j * np.exp(frac * L)
    dev = 2.0 * np.arcsinh(np.abs(path - geo) / (2.0 * (np.sqrt(path.imag) * np.sqrt(geo.imag))))
    pre = {
        "long_geodesic": L > 100 + 100 * C,
        "endpoints_match": abs(path[0] - 1j) < 1e-9 and abs(path[-1] - 1j * math.exp(L)) < 1e-9 * math.exp(L),
        "slack_respected": length <= L + C + 1e-9,
    }
    return SlippageReport(
        L=L,
        C=C,
        path_length=length,
        max_distance=float(dist.max()),
        max_parametrized_deviation=float(dev.max()),
        bound=math.log(4.0) + C / 2 + C,
        preconditions=pre,
    )


def proportion_far(path: np.ndarray, L: float, thresholds) -> np.ndarray:
    """Fraction of the path length at distance at least each threshold
    from the geodesic (by segment midpoints)."""
    path = np.asarray(path, dtype=complex)
    a, b = path[:-1], path[1:]
    seg = 2.0 * np.arcsinh(np.abs(a - b) / (2.0 * (np.sqrt(a.imag) * np.sqrt(b.imag))))
    mid_d = 0.5 * (distance_to_axis_segment(a, L) + distance_to_axis_segment(b, L))
    total = seg.sum()
    return np.array([seg[mid_d >= c0].sum() / total for c0 in thresholds])


def fit_decay_base(thresholds, proportions, C: float, L: float) -> float | None:
    """Least-squares fit of ``a`` in ``p = (C/L) a^-C0`` over positive
    proportions; ``None`` when fewer than two usable points."""
    t = np.asarray(thresholds, dtype=float)
    p = np.asarray(proportions, dtype=float)
    ok = p > 0
    if ok.sum() < 2:
        return None
    y = np.log(p[ok]) - math.log(C / L)
    slope = float(np.sum(t[ok] * y) / np.sum(t[ok] ** 2))
    return math.exp(-slope)
