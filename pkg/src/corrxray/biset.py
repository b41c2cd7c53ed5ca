"""Left-free bisets given by wreath recursions, and the X-ray step.

A biset element ``h . x_i`` is stored as ``BisetElement(head=h, index=i)``
with indices ``0 .. D-1``.  The right action of a generator ``s`` is

    x_i . s = c[s][i] . x_{perm[s][i]},

extended to words letter by letter, so ``(h, i) . s = (h c[s][i], perm[s][i])``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .groups import EMPTY, Word, invert, multiply, parse_word, word_str


class BisetElement(NamedTuple):
    head: Word
    index: int

    def __str__(self) -> str:
        return f"({word_str(self.head) or 'e'}, {self.index})"


class WreathRecursion:
    """Per-generator permutation and cofactors of a left-free biset.

    ``perms[s][i]`` is the image of slot ``i`` and ``cofactors[s][i]`` the
    group element ``c[s][i]``; data for inverse letters is derived.

    >>> rec = WreathRecursion(2, 1, {1: (1, 0)}, {1: ((), (1,))})
    >>> rec.right_action(BisetElement((), 0), (1, 1))
    BisetElement(head=(1,), index=0)
    """

    def __init__(self, degree: int, rank: int, perms: dict, cofactors: dict):
        if degree < 1:
            raise ValueError("degree must be positive")
        self.degree = degree
        self.rank = rank
        self.perms = {int(k): tuple(int(x) for x in v) for k, v in perms.items()}
        self.cofactors = {int(k): tuple(tuple(w) for w in v) for k, v in cofactors.items()}
        for s in range(1, rank + 1):
            if s not in self.perms or s not in self.cofactors:
                raise ValueError(f"missing data for generator {s}")
            p = self.perms[s]
            if sorted(p) != list(range(degree)):
                raise ValueError(f"generator {s}: {p} is not a permutation of 0..{degree - 1}")
            if len(self.cofactors[s]) != degree:
                raise ValueError(f"generator {s}: need {degree} cofactors")
            for w in self.cofactors[s]:
                if any(x == 0 or abs(x) > rank for x in w):
                    raise ValueError(f"generator {s}: cofactor {w} outside rank {rank}")
        self._perm = {}
        self._cof = {}
        for s in range(1, rank + 1):
            p = self.perms[s]
            self._perm[s] = p
            self._cof[s] = self.cofactors[s]
            inv = [0] * degree
            for i, j in enumerate(p):
                inv[j] = i
            self._perm[-s] = tuple(inv)
            # x_i . s^-1 = c[s][j]^-1 . x_j with j = perm[s]^-1(i)
            self._cof[-s] = tuple(invert(self.cofactors[s][inv[i]]) for i in range(degree))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, WreathRecursion)
            and self.degree == other.degree
            and self.rank == other.rank
            and self.perms == other.perms
            and self.cofactors == other.cofactors
        )

    def __repr__(self) -> str:
        return f"WreathRecursion(degree={self.degree}, rank={self.rank})"

    def right_action(self, b: BisetElement, w: Word) -> BisetElement:
        stack = list(b.head)
        i = b.index
        perm, cof = self._perm, self._cof
        for x in w:
            for y in cof[x][i]:
                if stack and stack[-1] == -y:
                    stack.pop()
                else:
                    stack.append(y)
            i = perm[x][i]
        return BisetElement(tuple(stack), i)

    def permutation(self, w: Word) -> tuple:
        """Image of every slot under the right action of ``w``."""
        out = []
        for i in range(self.degree):
            j = i
            for x in w:
                j = self._perm[x][j]
            out.append(j)
        return tuple(out)

    def cycles(self, w: Word) -> list:
        """Cycles of the slot permutation of ``w``, each starting at its
        least slot."""
        p = self.permutation(w)
        seen = [False] * self.degree
        out = []
        for i in range(self.degree):
            if seen[i]:
                continue
            cyc = []
            j = i
            while not seen[j]:
                seen[j] = True
                cyc.append(j)
                j = p[j]
            out.append(tuple(cyc))
        return out

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "rank": self.rank,
            "generators": [
                {
                    "letter": word_str((s,)),
                    "perm": list(self.perms[s]),
                    "cofactors": [word_str(w) for w in self.cofactors[s]],
                }
                for s in range(1, self.rank + 1)
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "WreathRecursion":
        perms, cofs = {}, {}
        for g in data["generators"]:
            s = parse_word(g["letter"])
            if len(s) != 1 or s[0] < 0:
                raise ValueError(f"bad generator letter {g['letter']!r}")
            perms[s[0]] = tuple(g["perm"])
            cofs[s[0]] = tuple(parse_word(w) for w in g["cofactors"])
        return cls(int(data["degree"]), int(data["rank"]), perms, cofs)


@dataclass(frozen=True)
class ConnectorSet:
    """Finite set of connectors containing a basis, and the direction ``f``."""

    connectors: tuple
    direction: BisetElement
    _by_index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        by = {}
        for cid, x in enumerate(self.connectors):
            by.setdefault(x.index, []).append((cid, invert(x.head)))
        object.__setattr__(self, "_by_index", {k: tuple(v) for k, v in by.items()})

    @classmethod
    def basis(cls, degree: int, direction_index: int) -> "ConnectorSet":
        return cls(
            tuple(BisetElement(EMPTY, i) for i in range(degree)),
            BisetElement(EMPTY, direction_index),
        )

    def validate(self, degree: int) -> None:
        present = {x.index for x in self.connectors}
        missing = set(range(degree)) - present
        if missing:
            raise ValueError(f"connectors miss basis slots {sorted(missing)}")
        if not 0 <= self.direction.index < degree:
            raise ValueError("direction index out of range")

    def for_index(self, i: int) -> tuple:
        return self._by_index.get(i, ())

    @property
    def is_basis(self) -> bool:
        return len(self.connectors) == len(self._by_index)

    def to_json(self) -> dict:
        return {
            "connectors": [[word_str(x.head), x.index] for x in self.connectors],
            "direction": [word_str(self.direction.head), self.direction.index],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConnectorSet":
        return cls(
            tuple(BisetElement(parse_word(h), int(i)) for h, i in data["connectors"]),
            BisetElement(parse_word(data["direction"][0]), int(data["direction"][1])),
        )


def xray_step(g: Word, X: ConnectorSet, rec: WreathRecursion) -> list:
    """Branches of one X-ray step: all ``(g', connector id)`` with
    ``f . g = g' . x``.

    >>> rec = WreathRecursion(2, 1, {1: (1, 0)}, {1: ((), (1,))})
    >>> xray_step((1, 1), ConnectorSet.basis(2, 0), rec)
    [((1,), 0)]
    """
    b = rec.right_action(X.direction, g)
    return [(multiply(b.head, inv_h), cid) for cid, inv_h in X.for_index(b.index)]


def conjugate_direction(rec: WreathRecursion, f: BisetElement, h: Word) -> BisetElement:
    """Biset element ``h . f . h^-1``."""
    return rec.right_action(BisetElement(multiply(h, f.head), f.index), invert(h))


def identity_recursion(degree: int, rank: int) -> WreathRecursion:
    """Trivial permutations and cofactors ``c[s][i] = s``; every slot of the
    right action of ``w`` has cofactor ``w``."""
    return WreathRecursion(
        degree,
        rank,
        {s: tuple(range(degree)) for s in range(1, rank + 1)},
        {s: tuple((s,) for _ in range(degree)) for s in range(1, rank + 1)},
    )


def check_recursion(rec: WreathRecursion, words: Sequence[Word] = ()) -> list:
    """Violations of the right-action identities on generators and on the
    given words (empty when the recursion is consistent)."""
    bad = []
    for s in range(1, rec.rank + 1):
        for i in range(rec.degree):
            b = BisetElement(EMPTY, i)
            for w in ((s, -s), (-s, s)):
                if rec.right_action(b, w) != b:
                    bad.append(f"slot {i}: {word_str(w)} acts nontrivially")
    for u in words:
        for i in range(rec.degree):
            b = BisetElement(EMPTY, i)
            if rec.right_action(rec.right_action(b, u), invert(u)) != b:
                bad.append(f"slot {i}: {word_str(u)} is not invertible")
    return bad
