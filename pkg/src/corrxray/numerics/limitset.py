"""Backward orbits of ``F^-1 = rho o phi^-1`` and their accumulation."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .correspondence import Correspondence
from .rational import RationalMap, is_inf, preimages


@dataclass
class BackwardSample:
    points: np.ndarray  # complex; inf allowed
    multiplicity: np.ndarray  # int
    depth: int
    mode: str  # "full" or "sampled"
    degree: int

    @property
    def total(self) -> int:
        return int(self.multiplicity.sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "multiplicity"])
        for z, k in zip(self.points, self.multiplicity):
            if is_inf(z):
                w.writerow(["inf", "inf", int(k)])
            else:
                w.writerow([repr(float(z.real)), repr(float(z.imag)), int(k)])
        return buf.getvalue()


def _fiber_roots(phi: RationalMap, s: np.ndarray) -> np.ndarray:
    """All ``phi``-preimages of each point in ``s`` (rows), by batched
    companion matrices.  Rows whose fiber polynomial drops degree are
    handled by the scalar routine."""
    num, den = phi.num_c, phi.den_c
    d = phi.degree
    n = np.zeros(d + 1, dtype=complex)
    m = np.zeros(d + 1, dtype=complex)
    n[d + 1 - len(num):] = num
    m[d + 1 - len(den):] = den
    P = n[None, :] - s[:, None] * m[None, :]
    lead = P[:, 0]
    scale = np.max(np.abs(P), axis=1)
    ok = np.abs(lead) > 1e-10 * scale
    out = np.empty((len(s), d), dtype=complex)
    if np.any(ok):
        Q = P[ok] / lead[ok, None]
        C = np.zeros((int(ok.sum()), d, d), dtype=complex)
        C[:, 0, :] = -Q[:, 1:]
        if d > 1:
            C[:, np.arange(1, d), np.arange(d - 1)] = 1.0
        out[ok] = np.linalg.eigvals(C)
    for r in np.nonzero(~ok)[0]:
        pts = []
        for p, k in preimages(phi, complex(s[r])):
            pts += [p] * k
        out[r] = pts
    return out


def _apply(rho: RationalMap, z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    fin = np.isfinite(z)
    out[fin] = rho.eval_array(z[fin])
    for i in np.nonzero(~fin)[0]:
        out[i] = rho(complex("inf"))
    return out


def inverse_images(c: Correspondence, s: np.ndarray) -> np.ndarray:
    """Rows of ``rho(phi^-1(s))`` with multiplicity, shape ``(len(s), D)``."""
    roots = _fiber_roots(c.phi, np.asarray(s, dtype=complex))
    return _apply(c.rho, roots.ravel()).reshape(roots.shape)


def backward_orbit_sample(c: Correspondence, s0: complex, n: int, seed: int = 0,
                          budget: int = 1 << 18, samples: int = 1 << 14) -> BackwardSample:
    """All ``n``-fold images of ``s0`` under ``F^-1`` (each leaf of the
    preimage tree is one point of multiplicity one), or ``samples`` random
    root-to-leaf branches when the tree exceeds ``budget`` leaves."""
    if n < 0:
        raise ValueError("depth must be non-negative")
    D = c.degree
    if D ** n <= budget:
        pts = np.array([complex(s0)])
        for _ in range(n):
            pts = inverse_images(c, pts).ravel()
        return BackwardSample(pts, np.ones(len(pts), dtype=np.int64), n, "full", D)
    rng = np.random.default_rng(seed)
    pts = np.full(samples, complex(s0))
    for _ in range(n):
        imgs = inverse_images(c, pts)
        pick = rng.integers(0, D, size=samples)
        pts = imgs[np.arange(samples), pick]
    return BackwardSample(pts, np.ones(samples, dtype=np.int64), n, "sampled", D)


def to_sphere(z: np.ndarray) -> np.ndarray:
    """Stereographic image on the unit sphere, so Euclidean distance is
    the chordal distance."""
    z = np.asarray(z, dtype=complex)
    fin = np.isfinite(z)
    out = np.zeros((len(z), 3))
    zf = z[fin]
    r2 = np.abs(zf) ** 2
    out[fin, 0] = 2 * zf.real / (1 + r2)
    out[fin, 1] = 2 * zf.imag / (1 + r2)
    out[fin, 2] = (r2 - 1) / (1 + r2)
    out[~fin, 2] = 1.0
    return out


def hausdorff(a: np.ndarray, b: np.ndarray, seed: int = 0) -> float:
    """Symmetric Hausdorff distance in the chordal metric."""
    A, B = to_sphere(a), to_sphere(b)
    return max(directed_hausdorff(A, B, seed=seed)[0], directed_hausdorff(B, A, seed=seed)[0])
