"""Random test data: forms, super operators, signature (n, 2) spaces and chart points."""
from __future__ import annotations

import numpy as np

from .exterior import GradedForm, degree_array
from .geometry import Chart, base_point, h_section_jet, random_u
from .quadlattice import Lattice, QuadraticSpace
from .superalg import SuperFiber, SuperOperator

REFERENCE_GRAMS = {
    "A1": [[2]],
    "A2": [[2, -1], [-1, 2]],
    "D1": [[2, 0, 0], [0, -2, 0], [0, 0, -2]],
    "UU": [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    "D2": [[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, -2, 0], [0, 0, 0, -6]],
    "A1neg": [[-2]],
}


def reference_lattice(name):
    return Lattice(QuadraticSpace(REFERENCE_GRAMS[name]))


def random_form(rng, n, degree=None, scale=1.0):
    """Random complex GradedForm, optionally homogeneous of total degree ``degree``."""
    size = 1 << (2 * n)
    a = rng.normal(scale=scale, size=size) + 1j * rng.normal(scale=scale, size=size)
    if degree is not None:
        a = np.where(degree_array(n) == degree, a, 0)
    return GradedForm(n, a)


def random_operator(rng, rkF, n, parity=None, scale=1.0, nilpotent=False):
    """Random SuperOperator; ``parity`` 0/1 restricts to homogeneous entries.

    With ``nilpotent`` the degree-0 part is a multiple of the identity, as
    super_exp requires.
    """
    fiber = SuperFiber(rkF)
    D = fiber.dim
    size = 1 << (2 * n)
    e = rng.normal(scale=scale, size=(D, D, size)) + 1j * rng.normal(scale=scale, size=(D, D, size))
    if parity is not None:
        p = fiber.parity
        tot = (p[:, None, None] + p[None, :, None] + degree_array(n)[None, None, :]) % 2
        e = np.where(tot == parity, e, 0)
    if nilpotent:
        e[:, :, 0] = rng.normal() * np.eye(D)
    return SuperOperator(fiber, n, e)


def random_space(rng, n, spread=0.3):
    """A^T diag(1,..,1,-1,-1) A for a random A near the identity."""
    A = np.eye(n + 2) + spread * rng.normal(size=(n + 2, n + 2))
    return A.T @ np.diag([1.0] * n + [-1.0, -1.0]) @ A


def random_setup(rng, n, radius=0.3):
    """(gram, chart, u) with a random space and a random chart point near the base point."""
    gram = random_space(rng, n)
    chart = Chart(base_point(gram))
    return gram, chart, random_u(chart, rng, radius)


def random_vector(rng, chart, u, hmin=0.1, positive=False, tries=1000):
    """Random real v with h_z(s_v) > hmin (and Q(v, v) > 0 if ``positive``)."""
    m = chart.gram.shape[0]
    for _ in range(tries):
        v = rng.normal(size=m)
        if positive and v @ chart.gram @ v <= 0:
            continue
        if h_section_jet(chart, v, u).value.real > hmin:
            return v
    raise RuntimeError("could not sample a vector with the requested h")


def moderate_vector(rng, chart, u, q=0.5):
    """Random real v rescaled to q_z(v) = q, so that phi(v) is of moderate size."""
    from .geometry import majorant_at
    v = rng.normal(size=chart.gram.shape[0])
    return v * np.sqrt(q / majorant_at(chart.point(u)).q(v))


def random_rotation(rng, r):
    """Random element of SO(r)."""
    q, _ = np.linalg.qr(rng.normal(size=(r, r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
