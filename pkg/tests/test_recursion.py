import numpy as np
import pytest

from corrxray.biset import BisetElement, WreathRecursion, check_recursion, xray_step
from corrxray.cli import RABBIT_RECURSION
from corrxray.groups import random_word
from corrxray.numerics.correspondence import CATALOG_NAMES, get
from corrxray.numerics.recursion import NumericBiset, derive_wreath_recursion, monodromy_check


@pytest.fixture(scope="module")
def derived():
    return {n: derive_wreath_recursion(get(n)) for n in CATALOG_NAMES}


def test_rabbit_fixture(derived):
    der = derived["rabbit"]
    assert der.recursion == WreathRecursion.from_json(RABBIT_RECURSION)
    assert der.connectors.direction == BisetElement((), 1)
    assert der.setup.fixed_slot == 1


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_derived_recursion_is_consistent(derived, name):
    der = derived[name]
    assert der.recursion.degree == get(name).degree
    assert not check_recursion(der.recursion)
    assert der.max_residual < 1e-8
    assert der.connectors.is_basis


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_monodromy_matches_local_degrees(derived, name):
    mono = monodromy_check(get(name), derived[name].recursion)
    assert all(mono.values()), mono


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_stable_under_refinement(derived, name):
    assert derive_wreath_recursion(get(name), density=2).recursion == derived[name].recursion


def test_cubic_uses_slot_zero_without_fixed_point(derived):
    der = derived["cubic"]
    assert der.setup.fixed_slot is None
    assert der.connectors.direction.index == 0


@pytest.mark.parametrize("name", ["rabbit", "dendrite"])
def test_numeric_action_agrees_on_a_sample(derived, name):
    der = derived[name]
    nb = NumericBiset(der.setup)
    rng = np.random.default_rng(11)
    for _ in range(6):
        g = random_word(rng, 5)
        for i in range(der.recursion.degree):
            b = BisetElement((), i)
            assert nb.right_action(b, g) == der.recursion.right_action(b, g)
        assert nb.xray_step(g, der.connectors) == xray_step(g, der.connectors, der.recursion)
