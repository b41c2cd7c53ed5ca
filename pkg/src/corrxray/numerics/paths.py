"""Polylines, path lifting under rational maps, and reading loops as words.

Loops in a punctured sphere are read against a cut system: one ray from
each finite puncture to infinity, pairwise disjoint.  Crossing the ray of
puncture ``k`` in the positive sense (the sense of a counterclockwise loop
around the puncture) contributes the letter of ``k``; crossing it the
other way contributes the inverse letter.  A sample lying exactly on a
ray counts as lying on its left side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..groups import Word, reduce_letters
from .rational import RationalMap, chordal, chordal_array, is_inf


class BranchAmbiguity(RuntimeError):
    """Two tracked preimages came too close to continue safely."""


class ResidualError(RuntimeError):
    """Corrector failed to converge."""


class CutCrossingError(RuntimeError):
    """A path passed too close to a puncture to read it reliably."""


@dataclass
class PathPolyline:
    """Ordered samples of a path; ``over`` holds the base path values when
    the polyline is a lift."""

    samples: np.ndarray
    basepoint: Optional[complex] = None
    over: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=complex)

    @property
    def start(self) -> complex:
        return complex(self.samples[0])

    @property
    def end(self) -> complex:
        return complex(self.samples[-1])

    @property
    def closed(self) -> bool:
        return abs(self.samples[0] - self.samples[-1]) <= 1e-12 * max(1.0, abs(self.samples[0]))

    def reversed(self) -> "PathPolyline":
        over = None if self.over is None else self.over[::-1].copy()
        return PathPolyline(self.samples[::-1].copy(), self.basepoint, over)

    def __len__(self) -> int:
        return len(self.samples)


def concat(*paths) -> PathPolyline:
    """Concatenate polylines whose endpoints match."""
    parts = []
    for p in paths:
        s = p.samples if isinstance(p, PathPolyline) else np.asarray(p, dtype=complex)
        if len(s) == 0:
            continue
        if parts:
            prev = parts[-1][-1]
            if abs(prev - s[0]) > 1e-9 * max(1.0, abs(prev)):
                raise ValueError(f"paths do not match: {prev} vs {s[0]}")
            s = s[1:]
        parts.append(s)
    samples = np.concatenate(parts) if parts else np.zeros(0, complex)
    bp = paths[0].basepoint if paths and isinstance(paths[0], PathPolyline) else None
    return PathPolyline(samples, bp)


def segment(z0: complex, z1: complex, step: float) -> np.ndarray:
    n = max(2, int(math.ceil(abs(z1 - z0) / step)) + 1)
    return z0 + (z1 - z0) * np.linspace(0.0, 1.0, n)


def arc(center: complex, radius: float, start_angle: float, sweep: float, n: int) -> np.ndarray:
    th = start_angle + sweep * np.linspace(0.0, 1.0, n)
    return center + radius * np.exp(1j * th)


def resample(samples: np.ndarray, max_step: float) -> np.ndarray:
    """Insert points so that consecutive samples are at most ``max_step`` apart."""
    out = [samples[:1]]
    for a, b in zip(samples[:-1], samples[1:]):
        n = int(math.ceil(abs(b - a) / max_step))
        if n > 1:
            out.append(a + (b - a) * np.linspace(0.0, 1.0, n + 1)[1:])
        else:
            out.append(np.array([b]))
    return np.concatenate(out)


# --------------------------------------------------------------------------
# lifting
# --------------------------------------------------------------------------


@dataclass
class LiftResult:
    lifts: np.ndarray  # shape (D, n)
    over: np.ndarray  # shape (n,)
    residual: float
    steps: int
    halvings: int

    def path(self, k: int) -> PathPolyline:
        return PathPolyline(self.lifts[k], None, self.over)


def _horner(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    r = np.full_like(z, c[0])
    for a in c[1:]:
        r = r * z + a
    return r


def _pairwise_min(z: np.ndarray) -> np.ndarray:
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, np.inf)
    return d.min(axis=1)


def lift_all(phi: RationalMap, gamma: np.ndarray, starts: Sequence[complex], *,
             image: Optional[RationalMap] = None, image_cusps: Sequence = (),
             eta: float = 0.2, initial_fraction: float = 2.0 ** -8,
             sep_factor: float = 3.0, max_halvings: int = 40,
             tol: float = 1e-10) -> LiftResult:
    """Lift ``gamma`` under ``phi`` from every start point simultaneously.

    Predictor-corrector continuation of the roots of ``num - w den`` as
    ``w`` runs along ``gamma``.  A step is accepted only when the corrector
    converges, the corrector displacement is at most ``1/sep_factor`` of
    the separation between tracked roots, and no root moves by more than a
    third of its distance to the others; otherwise the step is halved.
    When ``image`` is given, steps are further refined until consecutive
    image points are closer (chordally) than ``eta`` times their distance
    to ``image_cusps``, so the image polylines are faithful.
    """
    gamma = np.asarray(gamma, dtype=complex)
    z = np.array(starts, dtype=complex)
    if len(z) == 0:
        raise ValueError("no start points")
    total = float(np.sum(np.abs(np.diff(gamma)))) if len(gamma) > 1 else 0.0
    max_dw = max(total * initial_fraction, 1e-12)
    num, den = phi.num_c, phi.den_c
    dnum, dden = np.polyder(num) if len(num) > 1 else np.zeros(1), np.polyder(den) if len(den) > 1 else np.zeros(1)

    def H(zz, w):
        return _horner(num, zz) - w * _horner(den, zz)

    def Hz(zz, w):
        return _horner(dnum, zz) - w * _horner(dden, zz)

    def correct(zz, w):
        for _ in range(8):
            hz = Hz(zz, w)
            step = H(zz, w) / hz
            zz = zz - step
            if np.all(np.abs(step) <= 1e-14 * np.maximum(1.0, np.abs(zz))):
                break
        return zz

    w0 = gamma[0]
    z = correct(z, w0)
    if len(z) > 1 and np.min(_pairwise_min(z)) < 1e-8:
        raise BranchAmbiguity("start points are not distinct preimages")
    scale0 = np.maximum(1.0, np.abs(_horner(den, z)))
    if np.max(np.abs(H(z, w0)) / scale0) > 1e-8:
        raise ResidualError("start points are not preimages of the path start")
    cusps = list(image_cusps)

    def image_ok(za, zb):
        if image is None:
            return True
        ia, ib = image.eval_array(za), image.eval_array(zb)
        da = np.min([chordal_array(ia, c) for c in cusps], axis=0) if cusps else 1.0
        with np.errstate(invalid="ignore", over="ignore"):
            step = 2.0 * np.abs(ia - ib) / np.sqrt((1.0 + np.abs(ia) ** 2) * (1.0 + np.abs(ib) ** 2))
        return bool(np.all(step <= eta * da))

    lifts = [z.copy()]
    over = [w0]
    halvings = 0
    steps = 0
    w = w0
    for target in gamma[1:]:
        while w != target:
            dw = target - w
            h = 1.0
            if abs(dw) > max_dw:
                h = max_dw / abs(dw)
            for _ in range(max_halvings):
                wt = target if h >= 1.0 else w + h * dw
                pred = z + (wt - w) * _horner(den, z) / Hz(z, w)
                zc = correct(pred, wt)
                ok = np.all(np.isfinite(zc))
                if ok:
                    r = np.max(np.abs(zc - pred)) if len(z) else 0.0
                    if len(z) > 1:
                        sep_new = _pairwise_min(zc)
                        sep_old = _pairwise_min(z)
                        ok = (
                            sep_factor * r <= np.min(sep_new)
                            and np.all(np.abs(zc - z) <= sep_old / 3.0)
                        )
                    if ok:
                        res = np.abs(H(zc, wt)) / np.maximum(1.0, np.abs(_horner(den, zc)))
                        ok = np.max(res) <= tol * max(1.0, abs(wt))
                    if ok:
                        ok = image_ok(z, zc)
                if ok:
                    break
                h *= 0.5
                halvings += 1
            else:
                raise BranchAmbiguity(f"step control failed near w = {w}")
            z = zc
            w = wt
            lifts.append(z.copy())
            over.append(w)
            steps += 1
    L = np.array(lifts).T
    ov = np.array(over)
    res = float(np.max(np.abs(phi.eval_array(L) - ov[None, :]))) if L.size else 0.0
    return LiftResult(L, ov, res, steps, halvings)


def lift_path(phi: RationalMap, gamma: PathPolyline, z0: complex, **kw) -> PathPolyline:
    """Unique lift of ``gamma`` under ``phi`` starting at ``z0``.

    All preimages of the starting point are tracked together so that
    branch jumps are detected.
    """
    from .rational import preimages

    w0 = gamma.start
    fib = preimages(phi, w0)
    if any(k > 1 for _, k in fib):
        raise BranchAmbiguity("path starts at a critical value")
    pts = [p for p, _ in fib if not is_inf(p)]
    k = int(np.argmin([abs(p - z0) for p in pts]))
    if abs(pts[k] - z0) > 1e-6 * max(1.0, abs(z0)):
        raise ValueError("z0 is not a preimage of the path start")
    pts[0], pts[k] = pts[k], pts[0]
    pts[0] = complex(z0)
    out = lift_all(phi, gamma.samples, pts, **kw)
    p = out.path(0)
    p.basepoint = z0
    return p


# --------------------------------------------------------------------------
# cut systems
# --------------------------------------------------------------------------


@dataclass
class CutSystem:
    """Disjoint rays ``p_k + t d_k`` (``t >= 0``), one per finite puncture.

    ``letters[k]`` is the generator read when crossing ray ``k`` positively.
    """

    punctures: tuple
    directions: tuple
    letters: tuple
    margin: float = 1e-9

    def read(self, samples, check: bool = True) -> Word:
        """Word of a closed polyline (or of a polyline whose endpoints lie
        off the cuts)."""
        z = samples.samples if isinstance(samples, PathPolyline) else np.asarray(samples, dtype=complex)
        if len(z) < 2:
            return ()
        a, b = z[:-1], z[1:]
        events = []  # (segment index, parameter, letter)
        for p, d, x in zip(self.punctures, self.directions, self.letters):
            ua = (a - p) / d
            ub = (b - p) / d
            up_a = ua.imag >= 0
            up_b = ub.imag >= 0
            idx = np.nonzero(up_a != up_b)[0]
            if check:
                self._check_near(a, b, p)
            for i in idx:
                ya, yb = ua[i].imag, ub[i].imag
                s = ya / (ya - yb) if ya != yb else 0.0
                xr = ua[i].real + s * (ub[i].real - ua[i].real)
                if xr > 0:
                    events.append((int(i), float(s), x if yb >= 0 else -x))
                elif xr == 0:
                    raise CutCrossingError("path passes through a puncture")
        events.sort(key=lambda e: (e[0], e[1]))
        return reduce_letters(e[2] for e in events)

    def _check_near(self, a: np.ndarray, b: np.ndarray, p: complex) -> None:
        ab = b - a
        L2 = np.abs(ab) ** 2
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.clip(np.real((p - a) * np.conj(ab)) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
        dist = np.abs(a + s * ab - p)
        if np.min(dist) < self.margin:
            raise CutCrossingError(f"path passes within {np.min(dist):.3g} of puncture {p}")

    def crosses(self, samples: np.ndarray) -> bool:
        """Whether a polyline meets any ray (ignoring direction)."""
        z = np.asarray(samples, dtype=complex)
        a, b = z[:-1], z[1:]
        for p, d in zip(self.punctures, self.directions):
            ua, ub = (a - p) / d, (b - p) / d
            idx = np.nonzero((ua.imag >= 0) != (ub.imag >= 0))[0]
            for i in idx:
                ya, yb = ua[i].imag, ub[i].imag
                s = ya / (ya - yb) if ya != yb else 0.0
                if ua[i].real + s * (ub[i].real - ua[i].real) >= 0:
                    return True
        return False

    def min_puncture_distance(self, samples: np.ndarray) -> float:
        z = np.asarray(samples, dtype=complex)
        out = math.inf
        if len(z) < 2:
            return float(min(abs(z[0] - p) for p in self.punctures)) if len(z) else out
        a, b = z[:-1], z[1:]
        ab = b - a
        L2 = np.abs(ab) ** 2
        for p in self.punctures:
            with np.errstate(invalid="ignore", divide="ignore"):
                s = np.clip(np.real((p - a) * np.conj(ab)) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
            out = min(out, float(np.min(np.abs(a + s * ab - p))))
        return out


#: cuts for the sphere minus {0, 1, inf}: (-inf, 0] and [1, +inf)
def moduli_cuts() -> CutSystem:
    return CutSystem((0j, 1 + 0j), (-1 + 0j, 1 + 0j), (1, 2))


def parallel_cuts(punctures: Sequence[complex], letters: Sequence[int],
                  candidates: int = 72, min_clearance: float = 0.1) -> CutSystem:
    """Parallel rays in a common direction; the first candidate direction
    whose rays keep ``min_clearance`` from the other punctures is used,
    otherwise the clearest one."""
    pts = [complex(p) for p in punctures]
    best, best_clear = None, -1.0
    for k in range(candidates):
        theta = -math.pi / 2 + 0.3 + 2 * math.pi * k / candidates
        d = complex(math.cos(theta), math.sin(theta))
        clear = math.inf
        for i, p in enumerate(pts):
            for j, q in enumerate(pts):
                if i != j:
                    u = (q - p) / d
                    clear = min(clear, abs(u.imag) if u.real > 0 else abs(u))
        if clear >= min_clearance:
            best = d
            break
        if clear > best_clear:
            best, best_clear = d, clear
    return CutSystem(tuple(pts), tuple(best for _ in pts), tuple(letters))


# --------------------------------------------------------------------------
# generator loops
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LoopStyle:
    """Shape parameters of generator loops."""

    radius: float = 0.25
    start_angle: float = 0.0  # offset of the circle start from the side opposite the ray
    circle_samples: int = 160
    step: float = 0.01
    hubs: tuple = ()  # preferred waypoints, tried before the automatic ones


DEFAULT_STYLE = LoopStyle()
ALT_STYLE = LoopStyle(radius=0.17, start_angle=0.6, circle_samples=211, step=0.0123,
                      hubs=(0.5 + 1.3j, 0.5 - 1.3j, -0.7 + 0.9j))


def _clear(cuts: CutSystem, path: np.ndarray, margin: float) -> bool:
    return not cuts.crosses(path[:-1] if len(path) > 2 else path[:1]) and cuts.min_puncture_distance(path) > margin


def _stem(cuts: CutSystem, base: complex, target: complex, style: LoopStyle, margin: float) -> np.ndarray:
    """Polyline from ``base`` to ``target`` meeting no cut, except possibly
    at its final point."""
    direct = segment(base, target, style.step)
    if not style.hubs and _stem_ok(cuts, direct, margin):
        return direct
    auto = []
    for r in (0.5, 1.0, 2.0, 4.0):
        for k in range(16):
            auto.append(target + r * np.exp(2j * math.pi * (k + 0.5) / 16))
    for hub in list(style.hubs) + [None] + auto:
        if hub is None:
            cand = direct
        else:
            cand = np.concatenate([segment(base, hub, style.step), segment(hub, target, style.step)[1:]])
        if _stem_ok(cuts, cand, margin):
            return cand
    raise RuntimeError(f"no stem from {base} to {target} avoids the cuts")


def _stem_ok(cuts: CutSystem, stem: np.ndarray, margin: float) -> bool:
    if cuts.min_puncture_distance(stem) <= margin:
        return False
    # the final sample sits on the near side of its circle; ignore it
    return not cuts.crosses(stem[:-1])


def generator_loop(cuts: CutSystem, base: complex, k: int, style: LoopStyle = DEFAULT_STYLE) -> PathPolyline:
    """Counterclockwise loop, based at ``base``, around puncture ``k``."""
    p, d = cuts.punctures[k], cuts.directions[k]
    ang0 = math.atan2((-d).imag, (-d).real) + style.start_angle
    q = p + style.radius * complex(math.cos(ang0), math.sin(ang0))
    stem = _stem(cuts, base, q, style, style.radius / 2)
    circ = arc(p, style.radius, ang0, 2 * math.pi, style.circle_samples)
    circ[-1] = circ[0]
    loop = np.concatenate([stem, circ[1:], stem[::-1][1:]])
    word = cuts.read(loop)
    if word != (cuts.letters[k],):
        raise RuntimeError(f"generator loop {k} reads {word}")
    return PathPolyline(loop, base)


def generator_loops(cuts: CutSystem, base: complex, style: LoopStyle = DEFAULT_STYLE) -> dict:
    """Loops for each generator letter (and reversed loops for inverses)."""
    out = {}
    for k, x in enumerate(cuts.letters):
        g = generator_loop(cuts, base, k, style)
        out[x] = g
        out[-x] = g.reversed()
    return out


def word_loop(loops: dict, w: Word, base: complex) -> PathPolyline:
    """Concatenation of generator loops spelling ``w``."""
    if not w:
        return PathPolyline(np.array([base, base]), base)
    return concat(*[loops[x] for x in w])


def avoiding_path(start: complex, end: complex, obstacles: Sequence[complex], step: float,
                  margin: float = 0.05) -> np.ndarray:
    """Straight segment, bent around any obstacle closer than ``margin``."""
    if abs(end - start) < 1e-15:
        return np.array([start, end])
    seg = segment(start, end, step)
    bad = [o for o in obstacles if not is_inf(o) and np.min(np.abs(seg - o)) < margin]
    if not bad:
        return seg
    mid = (start + end) / 2
    nrm = 1j * (end - start) / abs(end - start)
    for scale in (0.25, -0.25, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0):
        hub = mid + scale * abs(end - start) * nrm
        cand = np.concatenate([segment(start, hub, step), segment(hub, end, step)[1:]])
        if all(np.min(np.abs(cand - o)) >= margin for o in obstacles if not is_inf(o)):
            return cand
    raise RuntimeError("could not route a path around the cusps")
