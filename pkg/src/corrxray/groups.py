"""Free-group words, conjugacy classes and peripheral structure.

Letters are small signed integers: ``1, 2, 3`` are the generators
``a, b, c`` and negative integers their inverses.  Words are tuples of
letters kept freely reduced.

>>> w = parse_word("abA")
>>> w
(1, 2, -1)
>>> word_str(multiply(w, parse_word("aB")))
'a'
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

Word = tuple  # tuple[int, ...], freely reduced

EMPTY: Word = ()

_LETTERS = "abcdefgh"


class BallTooLarge(RuntimeError):
    """Raised when a requested word ball exceeds the configured cap."""


def letter_char(x: int) -> str:
    ch = _LETTERS[abs(x) - 1]
    return ch if x > 0 else ch.upper()


def word_str(w: Sequence[int]) -> str:
    """Serialize a word; the identity is written as the empty string."""
    return "".join(letter_char(x) for x in w)


def parse_word(s: str) -> Word:
    """Parse a string over ``a, b, c, A, B, C`` (capitals are inverses).

    The strings ``""``, ``"e"`` and ``"1"`` denote the identity.
    """
    s = s.strip()
    if s in ("", "e", "1"):
        return EMPTY
    out = []
    for ch in s:
        k = _LETTERS.find(ch.lower())
        if k < 0:
            raise ValueError(f"bad letter {ch!r} in word {s!r}")
        out.append(k + 1 if ch.islower() else -(k + 1))
    return reduce_letters(out)


def reduce_letters(letters: Iterable[int]) -> Word:
    """Freely reduce an arbitrary letter sequence."""
    stack: list = []
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


def push_letters(stack: list, letters: Iterable[int]) -> None:
    """Append letters to a reduced stack in place, cancelling as we go."""
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)


def multiply(u: Word, v: Word) -> Word:
    """Product of two reduced words.

    >>> word_str(multiply(parse_word("ab"), parse_word("Ba")))
    'aa'
    """
    if not u:
        return v
    if not v:
        return u
    k = 0
    n = min(len(u), len(v))
    while k < n and u[-1 - k] == -v[k]:
        k += 1
    return u[: len(u) - k] + v[k:]


def invert(u: Word) -> Word:
    """Inverse word: reversed with flipped signs."""
    return tuple(-x for x in reversed(u))


def power(u: Word, k: int) -> Word:
    if k < 0:
        return power(invert(u), -k)
    out: Word = EMPTY
    for _ in range(k):
        out = multiply(out, u)
    return out


def product(words: Iterable[Word]) -> Word:
    stack: list = []
    for w in words:
        push_letters(stack, w)
    return tuple(stack)


def cyclic_reduce(u: Word) -> Word:
    """Strip matching inverse letters from both ends."""
    i, j = 0, len(u) - 1
    while i < j and u[i] == -u[j]:
        i += 1
        j -= 1
    return u[i : j + 1]


def _letter_key(x: int) -> int:
    # order a < A < b < B < c < C
    return 2 * abs(x) - (1 if x > 0 else 0)


def _word_key(w: Sequence[int]) -> tuple:
    return tuple(_letter_key(x) for x in w)


def shortlex_key(w: Sequence[int]) -> tuple:
    """Sort key: by length, then lexicographically with a < A < b < B."""
    return (len(w), _word_key(w))


def least_rotation(u: Word) -> Word:
    """Lexicographically least rotation (Booth's algorithm, linear time).

    >>> word_str(least_rotation(parse_word("baBa")))
    'abaB'
    """
    n = len(u)
    if n <= 1:
        return u
    s = _word_key(u) * 2
    f = [-1] * (2 * n)
    k = 0
    for j in range(1, 2 * n):
        sj = s[j]
        i = f[j - k - 1]
        while i != -1 and sj != s[k + i + 1]:
            if sj < s[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if sj != s[k + i + 1]:  # i == -1
            if sj < s[k]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return u[k:] + u[:k]


@dataclass(frozen=True)
class ConjClass:
    """Canonical representative of a conjugacy class.

    ``word`` is cyclically reduced and is the least rotation; when
    ``unoriented`` is set the class of the inverse is identified too and
    ``word`` is the least among both orientations.
    """

    word: Word
    unoriented: bool = False

    def __str__(self) -> str:
        return word_str(self.word) or "e"

    @property
    def is_trivial(self) -> bool:
        return not self.word


def conj_canonical(u: Word, up_to_inversion: bool = False) -> ConjClass:
    """Canonical conjugacy class of ``u``.

    >>> str(conj_canonical(parse_word("baB")))
    'a'
    >>> x, y = parse_word("abAB"), parse_word("baBA")
    >>> conj_canonical(x, True) == conj_canonical(y, True)
    True
    """
    c = least_rotation(cyclic_reduce(tuple(u)))
    if up_to_inversion:
        ci = least_rotation(invert(c))
        if _word_key(ci) < _word_key(c):
            c = ci
    return ConjClass(c, up_to_inversion)


@dataclass(frozen=True)
class Alphabet:
    """Free group of a punctured sphere with one peripheral word per puncture.

    The product of the peripheral words, in puncture order, is trivial.
    """

    rank: int
    peripheral_words: tuple
    puncture_names: tuple

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError("rank must be positive")
        if len(self.peripheral_words) != len(self.puncture_names):
            raise ValueError("one name per puncture required")
        for w in self.peripheral_words:
            if any(abs(x) > self.rank or x == 0 for x in w):
                raise ValueError(f"peripheral word {word_str(w)} not over rank {self.rank}")
        if product(self.peripheral_words):
            raise ValueError("product of peripheral words is not trivial")

    def is_peripheral(self, c: ConjClass) -> Optional[tuple]:
        """Return ``(puncture index, exponent)`` if ``c`` is a nonzero power
        of a peripheral class, else ``None``.

        >>> PANTS.is_peripheral(conj_canonical(parse_word("aaa")))
        (0, 3)
        >>> PANTS.is_peripheral(conj_canonical(parse_word("ab")))
        (2, -1)
        """
        w = c.word
        if not w:
            return None
        for idx, p in enumerate(self.peripheral_words):
            core = cyclic_reduce(p)
            m = len(core)
            if m == 0 or len(w) % m:
                continue
            k = len(w) // m
            for sign in (1, -1):
                cand = conj_canonical(power(core, sign * k), c.unoriented)
                if cand.word == w:
                    return idx, sign * k
        return None

    def check_word(self, w: Word) -> None:
        for x in w:
            if x == 0 or abs(x) > self.rank:
                raise ValueError(f"letter {x} outside rank {self.rank}")


#: thrice-punctured sphere: a about 0, b about 1, (ab)^-1 about infinity
PANTS = Alphabet(2, ((1,), (2,), (-2, -1)), ("0", "1", "inf"))

#: four-punctured sphere: a, b, c about the finite punctures, (abc)^-1 about the last
FOUR_PUNCTURED = Alphabet(3, ((1,), (2,), (3,), (-3, -2, -1)), ("p1", "p2", "p3", "p4"))


def is_peripheral(c: ConjClass, alphabet: Alphabet = PANTS) -> Optional[tuple]:
    return alphabet.is_peripheral(c)


def ball_size(L: int, rank: int) -> int:
    """Number of reduced words of length at most ``L``.

    >>> ball_size(3, 2)
    53
    """
    if L <= 0:
        return 1
    return 1 + sum(2 * rank * (2 * rank - 1) ** (k - 1) for k in range(1, L + 1))


def enumerate_ball(L: int, rank: int = 2, cap: int = 5_000_000) -> list:
    """All reduced words of length at most ``L`` in shortlex order."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    n = ball_size(L, rank)
    if n > cap:
        raise BallTooLarge(f"ball of radius {L} has {n} words, cap is {cap}")
    letters = sorted([x for g in range(1, rank + 1) for x in (g, -g)], key=_letter_key)
    out = [EMPTY]
    layer = [EMPTY]
    for _ in range(L):
        nxt = []
        for w in layer:
            last = w[-1] if w else 0
            for x in letters:
                if x != -last:
                    nxt.append(w + (x,))
        out.extend(nxt)
        layer = nxt
    return out


def random_word(rng, max_len: int, rank: int = 2, min_len: int = 0) -> Word:
    """Uniformly random reduced word with length in ``[min_len, max_len]``."""
    n = int(rng.integers(min_len, max_len + 1))
    out: list = []
    while len(out) < n:
        x = int(rng.integers(1, rank + 1)) * (1 if rng.random() < 0.5 else -1)
        if out and out[-1] == -x:
            continue
        out.append(x)
    return tuple(out)


def apply_morphism(images: dict, w: Word) -> Word:
    """Apply the endomorphism ``generator -> images[generator]`` to ``w``."""
    stack: list = []
    for x in w:
        img = images[abs(x)]
        push_letters(stack, img if x > 0 else invert(img))
    return tuple(stack)
