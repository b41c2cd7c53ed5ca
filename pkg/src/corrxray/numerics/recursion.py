"""Wreath recursions of correspondences from numerical path lifting.

The biset of ``(phi, rho)`` consists of pairs (preimage ``t'`` of the
basepoint under ``phi``, homotopy class of a path in the sphere from the
basepoint to ``rho(t')``).  A basis is fixed by one path per preimage; the
generator data are then read off by lifting each generator loop from every
preimage, pushing the lift forward by ``rho`` and closing up with the basis
paths.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ..biset import BisetElement, ConnectorSet, WreathRecursion
from ..groups import Alphabet, PANTS, Word, conj_canonical, invert, multiply, power, word_str
from .correspondence import Correspondence, fixed_points
from .paths import (
    ALT_STYLE,
    DEFAULT_STYLE,
    CutSystem,
    LoopStyle,
    PathPolyline,
    avoiding_path,
    concat,
    generator_loops,
    lift_all,
    moduli_cuts,
    word_loop,
)
from .rational import INF, RationalMap, chordal, is_inf, local_degree, preimages


class NoBasepoint(ValueError):
    pass


@dataclass
class LiftingSetup:
    """Everything the numerical biset needs: basepoint, preimages, basis
    paths, cuts and the image cusps."""

    phi: RationalMap
    rho: RationalMap
    basepoint: complex
    points: tuple  # phi-preimages of the basepoint, in slot order
    basis_paths: tuple  # basis_paths[i] runs from basepoint to rho(points[i])
    cuts: CutSystem
    image_cusps: tuple
    fixed_slot: Optional[int]
    direction_slot: int
    lift_fraction: float = 2.0 ** -8

    @property
    def degree(self) -> int:
        return len(self.points)

    def lift(self, loop: np.ndarray):
        return lift_all(self.phi, loop, self.points, image=self.rho,
                        image_cusps=self.image_cusps, initial_fraction=self.lift_fraction)

    def slot_of(self, z: complex) -> int:
        d = [abs(z - p) for p in self.points]
        k = int(np.argmin(d))
        gap = sorted(d)[1] if len(d) > 1 else math.inf
        if d[k] > 1e-6 or gap < 1e-4:
            raise RuntimeError(f"lift endpoint {z} does not match a unique preimage")
        return k

    def closing_word(self, image_path: np.ndarray, i: int, j: int) -> Word:
        """Word of ``basis_i . image_path . reverse(basis_j)``."""
        loop = np.concatenate([self.basis_paths[i], image_path[1:], self.basis_paths[j][::-1][1:]])
        return self.cuts.read(loop)


@dataclass
class Derivation:
    name: str
    setup: LiftingSetup
    recursion: WreathRecursion
    connectors: ConnectorSet
    max_residual: float
    steps: int
    style: LoopStyle = DEFAULT_STYLE

    def to_json(self) -> dict:
        s = self.setup
        return {
            "correspondence": self.name,
            "basepoint": [s.basepoint.real, s.basepoint.imag],
            "preimages": [[complex(p).real, complex(p).imag] for p in s.points],
            "fixed_slot": s.fixed_slot,
            "direction_slot": s.direction_slot,
            "recursion": self.recursion.to_json(),
            "connectors": self.connectors.to_json(),
            "max_residual": self.max_residual,
        }


def _pick_basepoint(c: Correspondence) -> tuple:
    """(basepoint, fixed point in T or None)."""
    if c.fixed_basis_point is not None:
        t = complex(c.fixed_basis_point)
        return complex(c.rho(t)), t
    if c.basepoint is not None:
        return complex(c.basepoint), None
    inner = [f for f in fixed_points(c) if not f.ideal and not is_inf(f.t)]
    if not inner:
        raise NoBasepoint(f"{c.name}: no interior fixed point and no basepoint supplied")
    inner.sort(key=lambda f: (-f.t.imag, f.t.real))
    return complex(inner[0].s), complex(inner[0].t)


def setup_lifting(c: Correspondence, basepoint: Optional[complex] = None,
                  fixed_point: Optional[complex] = None, *, step: float = 0.01,
                  lift_fraction: float = 2.0 ** -8) -> LiftingSetup:
    """Preimages of the basepoint and auto-generated basis paths.

    The slot of the fixed point (``phi(t) = rho(t) = basepoint``) gets the
    constant path and becomes the direction; without a fixed point the
    direction is slot 0.
    """
    if basepoint is None:
        basepoint, fixed_point = _pick_basepoint(c)
    base = complex(basepoint)
    pts = tuple(complex(p) for p, k in preimages(c.phi, base))
    if len(pts) != c.degree:
        raise RuntimeError(f"basepoint {base} is a critical value of phi")
    fixed_slot = None
    if fixed_point is not None:
        d = [abs(p - fixed_point) for p in pts]
        fixed_slot = int(np.argmin(d))
        if d[fixed_slot] > 1e-8 or abs(c.rho(pts[fixed_slot]) - base) > 1e-8:
            raise ValueError("fixed point is not a preimage of the basepoint that rho fixes")
    obstacles = [complex(p) for p in c.cusps_S.points if not is_inf(p)]
    paths = []
    for i, p in enumerate(pts):
        end = complex(c.rho(p))
        if i == fixed_slot:
            paths.append(np.array([base, base]))
        else:
            paths.append(avoiding_path(base, end, obstacles, step))
    return LiftingSetup(
        phi=c.phi,
        rho=c.rho,
        basepoint=base,
        points=pts,
        basis_paths=tuple(paths),
        cuts=moduli_cuts(),
        image_cusps=tuple(c.cusps_S.points) + ((INF,) if c.cusps_S.has_inf else ()),
        fixed_slot=fixed_slot,
        direction_slot=fixed_slot if fixed_slot is not None else 0,
        lift_fraction=lift_fraction,
    )


def derive_from_setup(setup: LiftingSetup, name: str = "", style: LoopStyle = DEFAULT_STYLE,
                      rank: int = 2) -> Derivation:
    loops = generator_loops(setup.cuts, setup.basepoint, style)
    perms, cofs = {}, {}
    worst, steps = 0.0, 0
    for s in range(1, rank + 1):
        res = setup.lift(loops[s].samples)
        worst = max(worst, res.residual)
        steps += res.steps
        images = setup.rho.eval_array(res.lifts)
        perm, cof = [], []
        for i in range(setup.degree):
            j = setup.slot_of(res.lifts[i, -1])
            perm.append(j)
            cof.append(setup.closing_word(images[i], i, j))
        perms[s] = tuple(perm)
        cofs[s] = tuple(cof)
    rec = WreathRecursion(setup.degree, rank, perms, cofs)
    X = ConnectorSet.basis(setup.degree, setup.direction_slot)
    return Derivation(name, setup, rec, X, worst, steps, style)


def derive_wreath_recursion(c: Correspondence, basepoint: Optional[complex] = None,
                            fixed_point: Optional[complex] = None, *,
                            style: LoopStyle = DEFAULT_STYLE, density: int = 1) -> Derivation:
    """Wreath recursion and basis connector set of ``c``.

    ``density`` refines every sampling step (loops, basis paths and lifting
    steps) by that factor; the output must not depend on it.
    """
    st = replace(style, circle_samples=style.circle_samples * density, step=style.step / density)
    setup = setup_lifting(c, basepoint, fixed_point, step=0.01 / density,
                          lift_fraction=2.0 ** -8 / density)
    return derive_from_setup(setup, c.name, st)


# --------------------------------------------------------------------------
# the numerical side of the dual oracle
# --------------------------------------------------------------------------


class NumericBiset:
    """Right action and X-ray steps computed by lifting whole word loops.

    Loops are drawn in an independent style so that agreement with the
    algebraic recursion is a genuine check of homotopy invariance.
    """

    def __init__(self, setup: LiftingSetup, style: LoopStyle = ALT_STYLE):
        self.setup = setup
        self.loops = generator_loops(setup.cuts, setup.basepoint, style)
        self._last = None  # (word, lift) of the most recent loop

    def lift_word(self, g: Word):
        """Lift of the loop of ``g`` from every basis point, reused across slots."""
        if self._last is None or self._last[0] != g:
            loop = word_loop(self.loops, g, self.setup.basepoint).samples
            self._last = (g, self.setup.lift(loop))
        return self._last[1]

    def element_path(self, b: BisetElement) -> np.ndarray:
        """Path representing ``b = h . x_i``: the loop of ``h`` then basis path ``i``."""
        h = word_loop(self.loops, b.head, self.setup.basepoint).samples
        return np.concatenate([h, self.setup.basis_paths[b.index][1:]])

    def act(self, b: BisetElement, g: Word) -> tuple:
        """``b . g`` as (path, slot)."""
        s = self.setup
        res = self.lift_word(tuple(g))
        i = b.index
        j = s.slot_of(res.lifts[i, -1])
        image = s.rho.eval_array(res.lifts[i])
        path = np.concatenate([self.element_path(b), image[1:]])
        return path, j, res.residual

    def right_action(self, b: BisetElement, g: Word) -> BisetElement:
        path, j, _ = self.act(b, g)
        loop = np.concatenate([path, self.setup.basis_paths[j][::-1][1:]])
        return BisetElement(self.setup.cuts.read(loop), j)

    def xray_step(self, g: Word, X: ConnectorSet) -> list:
        path, j, _ = self.act(X.direction, g)
        out = []
        for cid, x in enumerate(X.connectors):
            if x.index != j:
                continue
            back = self.element_path(x)[::-1]
            out.append((self.setup.cuts.read(np.concatenate([path, back[1:]])), cid))
        return out


# --------------------------------------------------------------------------
# monodromy consistency
# --------------------------------------------------------------------------


def expected_cycle_classes(c: Correspondence, alphabet: Alphabet = PANTS) -> dict:
    """For each generator, the multiset of (cycle length, class of the
    pushed-forward cycle loop) predicted by local degrees.

    A cycle of length ``d`` surrounds a preimage ``x`` of the generator's
    cusp with ``deg(phi, x) = d``; its loop is pushed to the peripheral
    class of ``rho(x)`` raised to ``deg(rho, x)``, or is trivial when
    ``rho(x)`` is not a cusp.
    """
    cusp_pts = [0j, 1 + 0j, INF]
    out = {}
    for s in range(1, alphabet.rank + 1):
        y = cusp_pts[s - 1]
        items = []
        for x, d in preimages(c.phi, y):
            r = c.rho(x)
            k = None
            for idx, p in enumerate(cusp_pts):
                if chordal(r, p) < 1e-7:
                    k = idx
            if k is None:
                cls = conj_canonical((), False)
            else:
                e = local_degree(c.rho, x)
                cls = conj_canonical(power(alphabet.peripheral_words[k], e), False)
            items.append((d, cls))
        out[s] = Counter(items)
    return out


def observed_cycle_classes(rec: WreathRecursion) -> dict:
    out = {}
    for s in range(1, rec.rank + 1):
        items = []
        for cyc in rec.cycles((s,)):
            b = rec.right_action(BisetElement((), cyc[0]), (s,) * len(cyc))
            items.append((len(cyc), conj_canonical(b.head, False)))
        out[s] = Counter(items)
    return out


def monodromy_check(c: Correspondence, rec: WreathRecursion) -> dict:
    """Per generator: whether observed and predicted cycle classes agree."""
    exp = expected_cycle_classes(c)
    obs = observed_cycle_classes(rec)
    return {word_str((s,)): exp[s] == obs[s] for s in exp}
