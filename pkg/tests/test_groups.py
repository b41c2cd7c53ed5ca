import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from corrxray.groups import (
    FOUR_PUNCTURED,
    PANTS,
    Alphabet,
    BallTooLarge,
    apply_morphism,
    ball_size,
    conj_canonical,
    cyclic_reduce,
    enumerate_ball,
    invert,
    least_rotation,
    multiply,
    parse_word,
    power,
    random_word,
    reduce_letters,
    shortlex_key,
    word_str,
)

letters2 = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=24)
letters3 = st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), max_size=24)


def words(letters=letters2):
    return letters.map(reduce_letters)


def is_reduced(w):
    return all(w[i] != -w[i + 1] for i in range(len(w) - 1))


def test_parse_and_print():
    assert parse_word("aBba") == (1, 1)
    assert word_str(parse_word("abAB")) == "abAB"
    assert parse_word("") == ()
    with pytest.raises(ValueError):
        parse_word("a1")


def test_generator_convention_relation():
    # the loop about infinity is (ab)^-1, so abc = 1 with c = (ab)^-1
    c = PANTS.peripheral_words[2]
    assert multiply(multiply((1,), (2,)), c) == ()


@given(letters2)
def test_reduction_is_idempotent_and_reduced(xs):
    w = reduce_letters(xs)
    assert is_reduced(w)
    assert reduce_letters(w) == w


@given(words(), words(), words())
def test_multiplication_associative(u, v, w):
    assert multiply(multiply(u, v), w) == multiply(u, multiply(v, w))


@given(words())
def test_inverse(u):
    assert multiply(u, invert(u)) == ()
    assert multiply(invert(u), u) == ()


@given(words(), st.integers(-4, 4), st.integers(-4, 4))
def test_power_law(u, j, k):
    assert multiply(power(u, j), power(u, k)) == power(u, j + k)


@given(words(), words())
def test_conjugacy_class_invariant(u, h):
    v = multiply(multiply(h, u), invert(h))
    assert conj_canonical(u) == conj_canonical(v)
    assert conj_canonical(u, True) == conj_canonical(invert(v), True)


@given(words())
def test_cyclic_reduce_is_cyclically_reduced(u):
    c = cyclic_reduce(u)
    assert is_reduced(c)
    assert not c or c[0] != -c[-1]


def _brute_least_rotation(u):
    rots = [u[k:] + u[:k] for k in range(len(u))] or [u]
    return min(rots, key=shortlex_key)


@given(st.lists(st.sampled_from([1, -1, 2, -2, 3]), max_size=16))
def test_least_rotation_matches_brute_force(xs):
    u = tuple(xs)
    assert least_rotation(u) == _brute_least_rotation(u)


def test_least_rotation_periodic_word():
    u = parse_word("abab")
    assert least_rotation(u) == u


def test_ball_sizes():
    for L in range(6):
        assert len(enumerate_ball(L, 2)) == ball_size(L, 2)
    assert ball_size(8, 2) == 1 + 4 * (3**8 - 1) // 2
    words8 = enumerate_ball(3, 2)
    assert len(set(words8)) == len(words8)
    assert words8 == sorted(words8, key=shortlex_key)
    with pytest.raises(BallTooLarge):
        enumerate_ball(20, 2, cap=1000)


def test_random_word_reduced_and_in_range():
    rng = np.random.default_rng(3)
    for _ in range(200):
        w = random_word(rng, 8)
        assert is_reduced(w) and len(w) <= 8


def test_peripheral_classes():
    assert PANTS.is_peripheral(conj_canonical(parse_word("aaa"))) == (0, 3)
    assert PANTS.is_peripheral(conj_canonical(parse_word("BAB"))) is None
    assert PANTS.is_peripheral(conj_canonical(parse_word("abab"))) == (2, -2)
    assert FOUR_PUNCTURED.is_peripheral(conj_canonical(parse_word("CBA"))) == (3, 1)
    assert FOUR_PUNCTURED.is_peripheral(conj_canonical(parse_word("ab"))) is None


def test_alphabet_rejects_nontrivial_product():
    with pytest.raises(ValueError):
        Alphabet(2, ((1,), (2,), (1, 2)), ("x", "y", "z"))


@given(words(letters3), words(letters3))
def test_morphism_is_homomorphism(u, v):
    images = {1: parse_word("abA"), 2: parse_word("a"), 3: parse_word("c")}
    assert apply_morphism(images, multiply(u, v)) == multiply(apply_morphism(images, u), apply_morphism(images, v))
