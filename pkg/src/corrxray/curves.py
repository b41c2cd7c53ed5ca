"""Curves on the four-punctured sphere and their pullback under a map.

Generators ``a, b, c`` are loops about the finite punctures ``p1, p2, p3``
and ``(abc)^-1`` is the loop about ``p4``.  Simple closed curves are named
by slopes: ``0/1`` is ``ab`` (around ``p1, p2``), ``1/0`` is ``bc`` and
``1/1`` is ``ac``.  Two half twists move slopes like Moebius maps:

* ``L``: ``a -> abA, b -> a, c -> c`` acts as ``x -> x/(x+1)``,
* ``R``: ``a -> a, b -> c, c -> Cbc`` acts as ``x -> x+1``,

so every slope is reached from the three base slopes along its
Stern-Brocot path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .biset import BisetElement, WreathRecursion
from .groups import (
    FOUR_PUNCTURED,
    ConjClass,
    Word,
    apply_morphism,
    conj_canonical,
    cyclic_reduce,
    parse_word,
    power,
    word_str,
)
from .orbits import AttractorReport, OrbitGraph, attractor, explore_relation

NONESSENTIAL = "nonessential"
UNRECOGNIZED = "unrecognized"


class Slope(NamedTuple):
    p: int
    q: int

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"

    @classmethod
    def make(cls, p: int, q: int) -> "Slope":
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        g = math.gcd(p, q)
        if g != 1:
            raise ValueError(f"{p}/{q} is not in lowest terms")
        return cls(p, q)

    @classmethod
    def parse(cls, s: str) -> "Slope":
        p, q = s.split("/")
        return cls.make(int(p), int(q))

    @property
    def height(self) -> int:
        return max(abs(self.p), self.q)


# half twists as automorphisms of <a, b, c>
L_MOVE = {1: (1, 2, -1), 2: (1,), 3: (3,)}
R_MOVE = {1: (1,), 2: (3,), 3: (-3, 2, 3)}
L_INV = {1: (2,), 2: (-2, 1, 2), 3: (3,)}
R_INV = {1: (1,), 2: (2, 3, -2), 3: (2,)}

MOVES = {"L": L_MOVE, "R": R_MOVE, "l": L_INV, "r": R_INV}

#: Moebius action of each move on slopes, as integer matrices on (p, q)
MOVE_MATRICES = {
    "L": ((1, 0), (1, 1)),
    "R": ((1, 1), (0, 1)),
    "l": ((1, 0), (-1, 1)),
    "r": ((1, -1), (0, 1)),
}

BASE_WORDS = {
    Slope(0, 1): (1, 2),
    Slope(1, 0): (2, 3),
    Slope(1, 1): (1, 3),
}


def move_slope(m: str, s: Slope) -> Slope:
    (x, y), (z, w) = MOVE_MATRICES[m]
    return Slope.make(x * s.p + y * s.q, z * s.p + w * s.q)


def apply_moves(moves: str, w: Word) -> Word:
    """Apply the moves right to left (the last letter acts first)."""
    for m in reversed(moves):
        w = cyclic_reduce(apply_morphism(MOVES[m], w))
    return w


def stern_brocot_moves(s: Slope) -> tuple:
    """``(moves, base)`` with ``s = moves(base)`` along the Stern-Brocot path.

    >>> stern_brocot_moves(Slope(2, 3))
    ('LR', Slope(p=1, q=1))
    >>> stern_brocot_moves(Slope(-1, 2))
    ('l', Slope(p=-1, q=1))
    """
    if s in BASE_WORDS:
        return "", s
    p, q = s
    sign = 1 if p > 0 else -1
    p = abs(p)
    out = []
    while (p, q) not in ((1, 1), (0, 1), (1, 0)):
        if p > q:
            out.append("R")
            p -= q
        else:
            out.append("L")
            q -= p
    if sign < 0:
        # x -> -x conjugates R to r and L to l; the base 0/1 or 1/0 is fixed
        out = [m.lower() for m in out]
        if (p, q) == (1, 1):
            return "".join(out), Slope(-1, 1)
    return "".join(out), Slope(p, q)


_WORD_CACHE: dict = {}


def slope_word(s: Slope) -> Word:
    """Cyclically reduced word of the curve of slope ``s``.

    >>> word_str(slope_word(Slope(0, 1))), word_str(slope_word(Slope(1, 0)))
    ('ab', 'bc')
    """
    s = Slope.make(*s)
    if s in _WORD_CACHE:
        return _WORD_CACHE[s]
    if s in BASE_WORDS:
        w = BASE_WORDS[s]
    elif s == Slope(-1, 1):
        w = apply_moves("r", BASE_WORDS[Slope(0, 1)])
    else:
        moves, base = stern_brocot_moves(s)
        w = apply_moves(moves[0], slope_word(move_slope_inverse(moves[0], s)))
    _WORD_CACHE[s] = w
    return w


def move_slope_inverse(m: str, s: Slope) -> Slope:
    inv = {"L": "l", "l": "L", "R": "r", "r": "R"}[m]
    return move_slope(inv, s)


def slope_class(s: Slope) -> ConjClass:
    return conj_canonical(slope_word(s), True)


def slopes_up_to(bound: int) -> list:
    """All slopes ``p/q`` with ``|p|, q <= bound``, ordered by height then value."""
    out = []
    for q in range(0, bound + 1):
        for p in range(-bound, bound + 1):
            if q == 0 and p != 1:
                continue
            if math.gcd(p, q) == 1:
                out.append(Slope(p, q))
    out.sort(key=lambda s: (s.height, s.q, s.p))
    return out


class SlopeTable:
    """Unoriented curve classes of all slopes up to a height, deepened on
    demand by doubling the height up to ``cap``."""

    def __init__(self, height: int = 8, cap: int = 64):
        self.height = 0
        self.cap = cap
        self.table: dict = {}
        self.unrecognized: dict = {}
        self.extend(height)

    def extend(self, height: int) -> None:
        for s in slopes_up_to(height):
            if s.height > self.height:
                self.table[slope_class(s)] = s
        self.height = max(self.height, height)
        self.unrecognized.clear()

    def lookup(self, c: ConjClass):
        """Slope of ``c``, :data:`NONESSENTIAL` or :data:`UNRECOGNIZED`."""
        if not c.word or FOUR_PUNCTURED.is_peripheral(c) is not None:
            return NONESSENTIAL
        key = c if c.unoriented else conj_canonical(c.word, True)
        while True:
            s = self.table.get(key)
            if s is not None:
                return s
            if key in self.unrecognized or self.height >= self.cap:
                self.unrecognized[key] = True
                return UNRECOGNIZED
            self.extend(min(self.cap, 2 * self.height))


def classify(c: ConjClass, table: SlopeTable):
    return table.lookup(c)


# --------------------------------------------------------------------------
# pullback
# --------------------------------------------------------------------------


@dataclass
class DynamicalBiset:
    """Wreath recursion of a degree ``D`` map over ``<a, b, c>``."""

    recursion: WreathRecursion
    name: str = ""

    @property
    def degree(self) -> int:
        return self.recursion.degree

    def peripheral_violations(self) -> list:
        """Cycle products of peripheral generators that are not peripheral."""
        bad = []
        for w in FOUR_PUNCTURED.peripheral_words:
            for comp, k in pullback_word(self, w):
                cls = conj_canonical(comp, False)
                if cls.word and FOUR_PUNCTURED.is_peripheral(cls) is None:
                    bad.append((word_str(w), word_str(comp), k))
        return bad


def pullback_word(B: DynamicalBiset, w: Word) -> list:
    """``(component word, cycle length)`` for each cycle of ``w``'s slot
    permutation, in order of the least slot of each cycle."""
    rec = B.recursion
    out = []
    for cyc in rec.cycles(w):
        k = len(cyc)
        b = rec.right_action(BisetElement((), cyc[0]), power(w, k))
        out.append((b.head, k))
    return out


def pullback_curve(B: DynamicalBiset, c: ConjClass) -> list:
    """Raw components of the preimage: ``(class, degree over c)`` pairs."""
    return [(conj_canonical(h, True), k) for h, k in pullback_word(B, c.word)]


def state_str(state: tuple) -> str:
    return "{" + ", ".join(str(s) for s in state) + "}"


def canonical_state(slopes: Iterable[Slope]) -> tuple:
    return tuple(sorted(set(slopes), key=lambda s: (s.q, s.p)))


@dataclass
class PullbackResult:
    state: tuple
    unrecognized: list
    degree_ok: bool


def pullback_multicurve(B: DynamicalBiset, state: Sequence[Slope], table: SlopeTable) -> PullbackResult:
    out, unrec = [], []
    ok = True
    for s in state:
        comps = pullback_curve(B, slope_class(s))
        ok &= sum(k for _, k in comps) == B.degree
        for cls, _ in comps:
            r = table.lookup(cls)
            if isinstance(r, Slope):
                out.append(r)
            elif r == UNRECOGNIZED:
                unrec.append(word_str(cls.word))
    return PullbackResult(canonical_state(out), unrec, ok)


class _PullbackStep:
    """Picklable ``state -> [(pullback state, 0)]``."""

    def __init__(self, B: DynamicalBiset, table: SlopeTable):
        self.B = B
        self.table = table

    def __call__(self, state: tuple) -> list:
        return [(pullback_multicurve(self.B, state, self.table).state, 0)]


@dataclass
class CurveAttractor:
    graph: OrbitGraph
    report: AttractorReport
    states: list  # attractor states
    degree_ok: bool
    unrecognized: dict
    all_fixed: bool
    table_height: int

    def automaton_json(self) -> dict:
        g = self.graph
        members = set(self.report.members.tolist())
        return {
            "states": [state_str(s) for s in self.states],
            "transitions": [
                [state_str(g.nodes[i]), state_str(g.nodes[int(g.successors(i)[0])])]
                for i in sorted(members, key=lambda i: _state_key(g.nodes[i]))
            ],
            "n_explored": len(g),
            "entry_bound": self.report.entry_bound,
            "forward_closed": self.report.forward_closed,
            "degree_conservation": self.degree_ok,
            "all_states_fixed": self.all_fixed,
            "unrecognized": {state_str(k): v for k, v in sorted(self.unrecognized.items(),
                                                                key=lambda kv: _state_key(kv[0]))},
        }

    def automaton_dot(self) -> str:
        g = self.graph
        members = sorted(self.report.members.tolist(), key=lambda i: _state_key(g.nodes[i]))
        name = {i: f"s{k}" for k, i in enumerate(members)}
        lines = ["digraph curves {"]
        for i in members:
            lines.append(f'  {name[i]} [label="{state_str(g.nodes[i])}"];')
        for i in members:
            j = int(g.successors(i)[0])
            lines.append(f"  {name[i]} -> {name[j]};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _state_key(state: tuple) -> tuple:
    return (len(state), tuple((s.q, s.p) for s in state))


def curve_attractor(B: DynamicalBiset, bound: int, *, table: Optional[SlopeTable] = None,
                    max_nodes: int = 200_000, workers: Optional[int] = None) -> CurveAttractor:
    """Orbit closure of multicurve pullback from every single slope with
    ``|p|, q <= bound``; the empty multicurve is a state."""
    table = table or SlopeTable(max(8, bound), cap=max(64, 4 * bound))
    seeds = [(s,) for s in slopes_up_to(bound)]
    g = explore_relation(seeds, _PullbackStep(B, table), max_nodes=max_nodes, workers=workers)
    rep = attractor(g, key=_state_key)
    # diagnostics in a serial pass so that the step stays stateless
    degree_ok, unrec = True, {}
    for state in g.nodes:
        r = pullback_multicurve(B, state, table)
        degree_ok &= r.degree_ok
        if r.unrecognized:
            unrec[state] = r.unrecognized
    fixed = all(int(g.successors(i)[0]) == i for i in range(len(g)))
    return CurveAttractor(g, rep, rep.words, degree_ok, unrec, fixed, table.height)


# --------------------------------------------------------------------------
# the biset of z^2 + i from path lifting
# --------------------------------------------------------------------------


def z2i_postcritical() -> tuple:
    """Finite postcritical points ``i -> i - 1 -> -i -> i - 1``."""
    return (1j, -1 + 1j, -1j)


def derive_dynamical_biset(expr: str = "t**2 + I", punctures: Sequence[complex] = None,
                           basepoint: complex = 0.9 - 0.35j, density: int = 1):
    """Wreath recursion of a polynomial map in the dynamical plane.

    Cuts are parallel rays from the finite punctures; the generators are
    relabeled so that a large counterclockwise loop reads a cyclic rotation
    of ``abc``, which makes ``(abc)^-1`` the loop about infinity.
    Returns ``(DynamicalBiset, Derivation, ordered punctures)``.
    """
    from dataclasses import replace as _replace

    from .numerics.paths import DEFAULT_STYLE, avoiding_path, parallel_cuts, resample
    from .numerics.rational import INF, RationalMap, preimages
    from .numerics.recursion import LiftingSetup, derive_from_setup

    pts = list(punctures if punctures is not None else z2i_postcritical())
    f = RationalMap.from_expr(expr)
    cuts = parallel_cuts(pts, (1, 2, 3))
    big = resample(np.concatenate([[basepoint, 10 * basepoint / abs(basepoint)],
                                   10 * basepoint / abs(basepoint)
                                   * np.exp(1j * np.linspace(0, 2 * np.pi, 4001))[1:],
                                   [basepoint]]), 0.05)
    order = cyclic_reduce(cuts.read(big))
    if sorted(order) != [1, 2, 3]:
        raise RuntimeError(f"large loop reads {word_str(order)}")
    ordered = [pts[x - 1] for x in order]
    cuts = parallel_cuts(ordered, (1, 2, 3))
    check = cuts.read(big)
    if cyclic_reduce(check) not in {(1, 2, 3), (2, 3, 1), (3, 1, 2)}:
        raise RuntimeError(f"relabeled large loop reads {word_str(check)}")
    pre = tuple(complex(p) for p, _ in preimages(f, basepoint))
    obstacles = ordered
    step = 0.01 / density
    paths = tuple(avoiding_path(basepoint, p, obstacles, step) for p in pre)
    setup = LiftingSetup(
        phi=f,
        rho=RationalMap.from_expr("t"),
        basepoint=complex(basepoint),
        points=pre,
        basis_paths=paths,
        cuts=cuts,
        image_cusps=tuple(ordered) + (INF,),
        fixed_slot=None,
        direction_slot=0,
        lift_fraction=2.0 ** -8 / density,
    )
    style = _replace(DEFAULT_STYLE, circle_samples=DEFAULT_STYLE.circle_samples * density,
                     step=DEFAULT_STYLE.step / density)
    der = derive_from_setup(setup, expr, style, rank=3)
    return DynamicalBiset(der.recursion, expr), der, tuple(ordered)
