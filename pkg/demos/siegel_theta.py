"""Scalar Siegel theta functions for U + U and diag(2, -2, -2).

Evaluates the vector-valued theta, checks the S and T transformation laws
against the finite Weil representation, and reads off Fourier coefficients.
"""
import numpy as np

from supertheta.geometry import Chart, base_point, majorant_at
from supertheta.quadlattice import count_representations, discriminant_group
from supertheta.sampling import reference_lattice
from supertheta.theta import (
    SiegelTerms,
    fourier_coefficient,
    fourier_direct,
    modularity_residual,
    theta_siegel_scalar,
)

for name in ("UU", "D1"):
    L = reference_lattice(name)
    disc = discriminant_group(L)
    z = Chart(base_point(L.space.gram)).point(np.full(L.m - 2, 0.2 + 0.1j))
    th = theta_siegel_scalar(0.25 + 1j, L, z, tol=1e-10)
    print(f"{name}: |L'/L| = {disc.order}, radius {th.R:.1f}, {th.npoints} points, tail {th.tail:.1e}")
    for mu, val in zip(disc.reps, th.values):
        print("   coset", [str(x) for x in mu], f"{val:.10f}")
    for word in ("T", "S", "STS"):
        print(f"   residual for {word}: {modularity_residual(word, 0.25 + 1j, L, z, 1e-10, disc=disc):.2e}")

# Fourier coefficients at the base point of U + U, where q_z(v) = |v|^2 / 2
L = reference_lattice("UU")
z = base_point(L.space.gram)
terms = SiegelTerms(L, z, None, 20.0)
for n in range(4):
    c = fourier_coefficient(terms, n, 1, 1.0)
    d = fourier_direct(L, z, None, n, 1.0, 20.0)
    count, _ = count_representations(L, [[n]], None, majorant_at(z), 20.0)
    print(f"n = {n}: quadrature {c.real:.12e}, direct {d.real:.12e}, {count} vectors with Q(v)/2 = n")
