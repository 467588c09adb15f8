from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from supertheta.errors import GeometryInconsistencyError, InvalidArgument
from supertheta.geometry import Chart, base_point, majorant_at
from supertheta.oracles import box_scan
from supertheta.quadlattice import (
    Lattice,
    Majorant,
    QuadraticSpace,
    count_representations,
    discriminant_group,
    enumerate_ball,
    majorant_gram,
)
from supertheta.sampling import random_setup, reference_lattice


def test_space_validation():
    with pytest.raises(InvalidArgument, match=r"\(2,1\)"):
        QuadraticSpace([[2, 1], [0, 2]])
    with pytest.raises(InvalidArgument):
        QuadraticSpace([[1, 1], [1, 1]])
    assert QuadraticSpace([[2, 0, 0], [0, -2, 0], [0, 0, -2]]).signature == (1, 2)


def test_lattice_must_be_even():
    with pytest.raises(InvalidArgument, match="not even"):
        Lattice(QuadraticSpace([[1]]))
    with pytest.raises(InvalidArgument):
        Lattice(QuadraticSpace([[2, Fraction(1, 2)], [Fraction(1, 2), 2]]))


def test_discriminant_orders():
    assert discriminant_group(reference_lattice("D1")).order == 8
    assert discriminant_group(reference_lattice("UU")).order == 1
    assert discriminant_group(reference_lattice("A2")).order == 3


def test_discriminant_of_a1():
    disc = discriminant_group(reference_lattice("A1"))
    assert disc.reps == [[Fraction(0)], [Fraction(1, 2)]]
    assert disc.qvals == [Fraction(0), Fraction(1, 4)]
    assert disc.level == 4
    assert disc.neg_index == [0, 1]


def test_discriminant_of_a2():
    disc = discriminant_group(reference_lattice("A2"))
    assert sorted(disc.qvals) == [0, Fraction(1, 3), Fraction(1, 3)]
    assert disc.level == 3
    # pairing table is symmetric and b(x, x) = 2 q(x) mod 1
    for i in range(3):
        for j in range(3):
            assert disc.pairings[i][j] == disc.pairings[j][i]
        assert disc.pairings[i][i] == (2 * disc.qvals[i]) % 1


def test_discriminant_with_nonstandard_basis():
    # the same lattice A1 + A1 presented in a sheared basis
    space = QuadraticSpace([[2, 0], [0, 2]])
    L = Lattice(space, [[1, 1], [0, 1]])
    disc = discriminant_group(L)
    assert disc.order == 4
    assert sorted(disc.qvals) == [0, Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)]


def test_enumerate_small_examples():
    L = Lattice(QuadraticSpace([[2, 0], [0, 2]]))
    M = Majorant(2 * np.eye(2))  # q(v) = |v|^2
    v = enumerate_ball(L, None, M, 1.5)
    assert {tuple(x) for x in v} == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}
    assert enumerate_ball(L, None, M, 0.0).tolist() == [[0.0, 0.0]]
    # deterministic lexicographic order
    v2 = enumerate_ball(L, None, M, 1.5)
    assert np.array_equal(v, v2)
    keys = [tuple(x) for x in v]
    assert keys == sorted(keys)


def test_enumerate_rejects_degenerate_majorant():
    L = reference_lattice("A1")
    with pytest.raises(InvalidArgument):
        enumerate_ball(L, None, [[0.0]], 1.0)
    with pytest.raises(InvalidArgument):
        enumerate_ball(L, None, [[1.0]], -1.0)


def test_enumerate_matches_box_scan(rng):
    space = QuadraticSpace([[2, 0, 0], [0, 2, 0], [0, 0, -2]])
    for _ in range(3):
        while True:
            B = rng.integers(-2, 3, size=(3, 3))
            if round(abs(np.linalg.det(B))) != 0:
                break
        L = Lattice(space, B.tolist())
        A = rng.normal(size=(3, 3))
        M = A @ A.T + 0.5 * np.eye(3)
        disc = discriminant_group(L)
        for i in (0, disc.order - 1):
            mu = disc.rep_float(i)
            c = np.linalg.solve(L.basis, mu)
            _, x = enumerate_ball(L, mu, Majorant(M), 10.0, return_coords=True)
            got = {tuple(np.rint(p - c).astype(int)) for p in x}
            ref = {tuple(np.rint(np.array(p) - c).astype(int)) for p in box_scan(L.basis, c, M, 10.0)}
            assert got == ref and len(got) == x.shape[0]


def _r4(k):
    # Jacobi: number of representations of k as a sum of four squares
    if k == 0:
        return 1
    return 8 * sum(d for d in range(1, k + 1) if k % d == 0 and d % 4)


def test_enumeration_count_four_squares():
    # U + U at its base point has q(v) = |v|^2 / 2 with |.| euclidean in the standard basis
    L = reference_lattice("UU")
    M = majorant_at(base_point(L.space.gram))
    assert np.allclose(M.M, np.eye(4), atol=1e-14)
    for R in (5.0, 10.0):
        expect = sum(_r4(k) for k in range(int(2 * R) + 1))
        assert enumerate_ball(L, None, M, R).shape[0] == expect
    assert sum(_r4(k) for k in range(11)) == 569


def test_count_representations_a1():
    L = reference_lattice("A1")
    n, sols = count_representations(L, [[1]], None, Majorant([[2.0]]), 100.0)
    assert n == 2
    assert sorted(float(s[0][0]) for s in sols) == [-1.0, 1.0]


def test_count_representations_hyperbolic_plane():
    L = Lattice(QuadraticSpace([[0, 1], [1, 0]]))
    M = np.eye(2)
    n, sols = count_representations(L, [[1]], None, Majorant(M), 10.0)
    # brute force: v = (a, b), Q(v, v) = 2ab = 2 and |v|^2 / 2 <= 10
    brute = [(a, b) for a in range(-5, 6) for b in range(-5, 6) if a * b == 1 and (a * a + b * b) / 2 <= 10]
    assert n == len(brute) == 2
    assert {tuple(s[0]) for s in sols} == set(brute)


def test_count_representations_genus_two_consistency():
    L = reference_lattice("D2")
    M = majorant_at(base_point(L.space.gram))
    T = [[1, 0], [0, -1]]  # not positive semidefinite
    n, sols = count_representations(L, T, None, M, 6.0)
    G = L.space.gram
    for s in sols:
        assert np.allclose(s @ G @ s.T, 2 * np.array(T))
    assert n > 0


def test_majorant_gram_examples():
    space = QuadraticSpace([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]])
    z0 = base_point(space.gram)
    M = majorant_at(z0)
    assert np.allclose(M.M, np.eye(4), atol=1e-14)
    assert abs(M.q(np.array([1.0, 0, 0, 0])) - 0.5) < 1e-15
    P = QuadraticSpace([[2, 1], [1, 2]])
    assert np.allclose(majorant_gram(P, np.zeros((2, 2))).M, P.gram)
    with pytest.raises(GeometryInconsistencyError):
        majorant_gram(space, np.zeros((4, 4)))


def test_enumeration_symmetric_for_two_torsion_cosets():
    for name in ("D1", "D2"):
        L = reference_lattice(name)
        disc = discriminant_group(L)
        M = majorant_at(Chart(base_point(L.space.gram)).point(np.full(L.m - 2, 0.1j)))
        for i in range(disc.order):
            if disc.neg_index[i] != i:
                continue
            v = enumerate_ball(L, disc.rep_float(i), M, 6.0)
            a = {tuple(np.round(x, 9) + 0.0) for x in v}
            assert a == {tuple(np.round(-x, 9) + 0.0) for x in v}


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3))
def test_majorant_dominates(seed, n):
    rng = np.random.default_rng(seed)
    gram, chart, u = random_setup(rng, n)
    M = majorant_at(chart.point(u))
    v = rng.normal(size=(200, n + 2))
    q = M.q(v)
    half = 0.5 * np.einsum("ni,ij,nj->n", v, gram, v)
    assert np.all(q > 0)
    assert np.all(np.abs(half) <= q * (1 + 1e-10))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_discriminant_order_is_det(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 4))
    G = np.triu(rng.integers(-1, 2, size=(m, m)), 1)
    G = G + G.T + np.diag(rng.choice([-4, -2, 2, 4], size=m))
    det = round(abs(np.linalg.det(G)))
    if det == 0 or det > 128:
        return
    disc = discriminant_group(Lattice(QuadraticSpace(G.tolist())))
    assert disc.order == det
    assert len(set(disc.coords)) == det
