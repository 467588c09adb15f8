"""Slow reference implementations used to cross-check the fast paths.

Nothing here is used by the main computations; the routines are written
independently of the code they check.
"""
from __future__ import annotations

import itertools

import numpy as np
from scipy.linalg import expm

from .superalg import SuperOperator


def _sign_and_degree(n):
    size = 1 << (2 * n)
    deg = np.array([bin(k).count("1") for k in range(size)])
    sign = np.zeros((size, size))
    for a in range(size):
        for b in range(size):
            if a & b:
                continue
            # bubble-sort count: pairs (i in a, j in b) with i > j
            inv = sum(1 for i in range(2 * n) for j in range(2 * n)
                      if (a >> i & 1) and (b >> j & 1) and i > j)
            sign[a, b] = -1.0 if inv % 2 else 1.0
    return sign, deg


def flattened_operator(M):
    """Matrix of left multiplication by M on (forms) (x) E.

    Row/column index (form mask, fiber index).  Sections are written
    omega (x) e; the Koszul rule moves the endomorphism part of M past omega.
    """
    n = M.n
    D = M.fiber.dim
    S = 1 << (2 * n)
    p = M.fiber.parity
    sign, deg = _sign_and_degree(n)
    F = np.zeros((S, D, S, D), dtype=complex)
    for i in range(D):
        for j in range(D):
            for a in np.flatnonzero(M.entries[i, j]):
                coeff = M.entries[i, j, a]
                for b in range(S):
                    if a & b:
                        continue
                    koszul = -1.0 if ((p[i] + p[j]) * deg[b]) % 2 else 1.0
                    F[a | b, i, b, j] += coeff * sign[a, b] * koszul
    return F.reshape(S * D, S * D)


def dense_super_exp(M):
    """exp(M) via scipy's dense expm of the flattened representation."""
    n = M.n
    D = M.fiber.dim
    S = 1 << (2 * n)
    E = expm(flattened_operator(M)).reshape(S, D, S, D)
    # exp(M) applied to 1 (x) e_j recovers column j
    entries = np.transpose(E[:, :, 0, :], (1, 2, 0))
    return SuperOperator(M.fiber, n, entries)


def box_scan(basis, mu, M, R, box=None):
    """All v = basis @ (mu + k) with 0.5 v^T M v <= R, by scanning a box of k.

    The box is taken from the bounding box of the ellipsoid unless given.
    Returns lattice coordinate vectors (mu + k) as a set of tuples of rounded floats.
    """
    basis = np.asarray(basis, dtype=float)
    mu = np.asarray(mu, dtype=float)
    A = basis.T @ np.asarray(M, dtype=float) @ basis
    m = A.shape[0]
    if box is None:
        # |x_i| <= sqrt(2R (A^{-1})_ii) on the ellipsoid x^T A x <= 2R
        half = np.sqrt(2 * R * np.diag(np.linalg.inv(A))) + 1
        lo = np.floor(-half - mu).astype(int)
        hi = np.ceil(half - mu).astype(int)
    else:
        lo, hi = -np.full(m, box), np.full(m, box)
    found = set()
    for k in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
        x = mu + np.array(k)
        if 0.5 * x @ A @ x <= R:
            found.add(tuple(np.round(x, 12)))
    return found
