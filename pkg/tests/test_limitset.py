import numpy as np
import pytest

from corrxray.numerics.correspondence import CATALOG_NAMES, get
from corrxray.numerics.limitset import backward_orbit_sample, hausdorff, inverse_images, to_sphere
from corrxray.numerics.rational import chordal

BASE = 0.3 + 0.4j  # not a cusp of any catalog entry


@pytest.mark.parametrize("name", CATALOG_NAMES)
@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_full_tree_cardinality(name, n):
    c = get(name)
    smp = backward_orbit_sample(c, BASE, n)
    assert smp.mode == "full"
    assert smp.total == c.degree**n == len(smp.points)


def test_inverse_images_agree_with_scalar_route():
    c = get("quintic")
    s = np.array([0.3 + 0.4j, -2 + 1j, 5j])
    rows = inverse_images(c, s)
    for w, row in zip(s, rows):
        ref = [v for v, k in c.F_inverse(w) for _ in range(k)]
        for v in ref:
            assert min(chordal(v, x) for x in row) < 1e-8


def test_sampled_mode_when_tree_is_large():
    c = get("cubic")
    smp = backward_orbit_sample(c, 0.3 + 0.4j, 12, seed=4, budget=1000, samples=500)
    assert smp.mode == "sampled" and len(smp.points) == 500
    again = backward_orbit_sample(c, 0.3 + 0.4j, 12, seed=4, budget=1000, samples=500)
    assert np.array_equal(smp.points, again.points)


def test_csv_rows():
    c = get("cubic")
    text = backward_orbit_sample(c, 0.3 + 0.4j, 0).to_csv()
    assert text.splitlines() == ["re,im,multiplicity", "0.3,0.4,1"]
    text = backward_orbit_sample(c, 0.3 + 0.4j, 3).to_csv()
    assert len(text.splitlines()) == 1 + 64


def test_sphere_embedding_is_chordal():
    z = np.array([0.3 + 0.4j, -2 + 1j, complex("inf")])
    P = to_sphere(z)
    assert np.linalg.norm(P[0] - P[1]) == pytest.approx(chordal(z[0], z[1]))
    assert np.linalg.norm(P[0] - P[2]) == pytest.approx(chordal(z[0], z[2]))
    assert hausdorff(z, z) == 0.0


def test_accumulation_independent_of_basepoint():
    c = get("cubic")
    d = [hausdorff(backward_orbit_sample(c, 0.3 + 0.4j, n).points,
                   backward_orbit_sample(c, -0.7 + 1.1j, n).points) for n in (4, 6, 8)]
    assert d[0] > d[1] > d[2]
    assert d[2] < 0.1
