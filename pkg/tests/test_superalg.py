import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from supertheta.errors import DecompositionError, InvalidArgument
from supertheta.exterior import GradedForm, du, dubar, wedge
from supertheta.oracles import dense_super_exp, flattened_operator
from supertheta.sampling import random_form, random_operator
from supertheta.superalg import (
    SuperFiber,
    SuperOperator,
    adjoint,
    contraction,
    induced_metric,
    koszul_differential,
    koszul_rotate,
    mul,
    mutated_koszul,
    super_exp,
    supertrace,
    tensor,
)

seeds = st.integers(0, 2**32 - 1).map(lambda s: np.random.default_rng(s))


def test_fiber_layout():
    f = SuperFiber(3)
    assert f.dim == 8
    assert list(f.degrees) == [0, 1, 1, 1, 2, 2, 2, 3]
    assert list(f.parity) == [0, 1, 1, 1, 0, 0, 0, 1]


def test_identity_is_neutral(rng):
    M = random_operator(rng, 2, 2)
    one = SuperOperator.identity(M.fiber, 2)
    assert mul(one, M).allclose(M)
    assert mul(M, one).allclose(M)


def test_koszul_sign_on_odd_one_forms():
    # M = omega (x) u, N = eta (x) v with u, v odd: MN = -(omega ^ eta) (x) uv
    f = SuperFiber(1)
    n = 1
    u = np.array([[0, 1], [0, 0]])
    v = np.array([[0, 0], [1, 0]])
    om, eta = du(0, n), dubar(0, n)
    M = SuperOperator.from_form_matrix(f, n, [[om * x for x in row] for row in u])
    N = SuperOperator.from_form_matrix(f, n, [[eta * x for x in row] for row in v])
    uv = u @ v
    expect = SuperOperator.from_form_matrix(f, n, [[wedge(om, eta) * (-x) for x in row] for row in uv])
    assert mul(M, N).allclose(expect)


def test_scalar_operators_multiply_as_matrices(rng):
    f = SuperFiber(2)
    A, B = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
    prod = mul(SuperOperator.from_matrix(f, 1, A), SuperOperator.from_matrix(f, 1, B))
    assert prod.allclose(SuperOperator.from_matrix(f, 1, A @ B))


def test_supertrace_examples():
    f = SuperFiber(1)
    assert supertrace(SuperOperator.identity(f, 1)) == GradedForm(1)
    assert supertrace(SuperOperator.from_matrix(f, 1, np.diag([2.0, 3.0]))) == GradedForm.scalar(1, -1)


def test_supertrace_of_odd_endomorphism_vanishes(rng):
    # odd endomorphism part (parity-changing blocks), arbitrary form coefficients
    for rk in (1, 2, 3):
        M = random_operator(rng, rk, 2)
        p = M.fiber.parity
        e = np.where((p[:, None] != p[None, :])[:, :, None], M.entries, 0)
        assert supertrace(SuperOperator(M.fiber, 2, e)).norm() == 0


def test_super_exp_of_scalar():
    f = SuperFiber(2)
    M = SuperOperator.from_matrix(f, 1, -2 * np.pi * np.eye(4))
    assert super_exp(M).allclose(SuperOperator.identity(f, 1) * np.exp(-2 * np.pi), atol=1e-18)


def test_super_exp_of_nilpotent_form():
    f = SuperFiber(1)
    w = wedge(du(0, 1), dubar(0, 1))
    M = SuperOperator.form_times_identity(f, w)
    assert super_exp(M).allclose(SuperOperator.identity(f, 1) + M)


def test_super_exp_rejects_bad_input(rng):
    with pytest.raises(InvalidArgument):
        super_exp(random_operator(rng, 1, 1, parity=1))
    f = SuperFiber(1)
    with pytest.raises(DecompositionError):
        super_exp(SuperOperator.from_matrix(f, 1, np.diag([1.0, 2.0])))


@pytest.mark.parametrize("n,rk", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_super_exp_matches_dense_expm(rng, n, rk):
    for _ in range(3):
        M = random_operator(rng, rk, n, 0, scale=0.7, nilpotent=True)
        a, b = super_exp(M), dense_super_exp(M)
        assert (a - b).norm() / b.norm() < 1e-10


def test_flattened_representation_is_multiplicative(rng):
    M = random_operator(rng, 2, 1, 0)
    N = random_operator(rng, 2, 1, 1)
    lhs = flattened_operator(mul(M, N))
    rhs = flattened_operator(M) @ flattened_operator(N)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_koszul_differential_examples():
    d = koszul_differential(((3.0,),))
    assert d.entries[0, 1, 0] == 3.0
    assert mul(d, d).norm() == 0
    # r = 2: d(e1 ^ e2) = s1 e2 - s2 e1
    s1, s2 = 2.0, 5.0
    d = koszul_differential(((s1,), (s2,)))
    f = d.fiber
    top = f.index[0b11]
    assert d.entries[f.index[0b10], top, 0] == s1
    assert d.entries[f.index[0b01], top, 0] == -s2
    assert koszul_differential(((0.0,), (0.0,))).norm() == 0
    with pytest.raises(InvalidArgument):
        koszul_differential(((1.0, 2.0), (1.0,)))


def test_adjoint_examples(rng):
    f = SuperFiber(1)
    G = induced_metric([[4.0]])
    assert np.allclose(G, np.diag([1.0, 4.0]))
    one = SuperOperator.identity(f, 0)
    assert adjoint(one, G).allclose(one)
    c = 0.3 - 1.2j
    s = contraction(f, 0, 0) * c
    sstar = adjoint(s, G)
    A, B = s.entries[:, :, 0], sstar.entries[:, :, 0]
    for _ in range(5):
        x = rng.normal(size=2) + 1j * rng.normal(size=2)
        y = rng.normal(size=2) + 1j * rng.normal(size=2)
        # <s* x, y> = <x, s y> for <a, b> = b^dagger G a
        assert abs(np.vdot(y, G @ (B @ x)) - np.vdot(A @ y, G @ x)) < 1e-12
    # the creation entry is conj(c) / |e|^2
    assert abs(B[1, 0] - np.conj(c) / 4) < 1e-15
    assert adjoint(sstar, G).allclose(s)
    with pytest.raises(InvalidArgument):
        adjoint(s, np.diag([1.0, -1.0]))


def test_koszul_rotate(rng):
    secs = ((1.0 + 2j,), (-0.5j,))
    rot, W = koszul_rotate(np.eye(2), secs, 0)
    assert W.allclose(SuperOperator.identity(W.fiber, 0))
    th = 0.7
    h = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    rot, W = koszul_rotate(h, secs, 0)
    top = W.fiber.index[0b11]
    assert abs(W.entries[top, top, 0] - 1) < 1e-15
    d_rot = koszul_differential(tuple(tuple(r) for r in rot), 0)
    Winv = SuperOperator.from_matrix(W.fiber, 0, np.linalg.inv(W.entries[:, :, 0]))
    assert mul(mul(W, d_rot), Winv).allclose(koszul_differential(secs, 0), atol=1e-14)
    with pytest.raises(InvalidArgument):
        koszul_rotate(2 * np.eye(2), secs, 0)
    with pytest.raises(InvalidArgument):
        koszul_rotate(np.diag([1.0, -1.0]), secs, 0)


def test_tensor_basics(rng):
    f1, f2 = SuperFiber(1), SuperFiber(2)
    I = tensor(SuperOperator.identity(f1, 1), SuperOperator.identity(f2, 1))
    assert I.allclose(SuperOperator.identity(SuperFiber(3), 1))
    for pm in (0, 1):
        for pn in (0, 1):
            M = random_operator(rng, 1, 1, pm)
            N = random_operator(rng, 2, 1, pn)
            assert tensor(M, N).parity() == ("odd" if (pm + pn) % 2 else "even")


def test_chern_product_law(rng):
    for n in (1, 2):
        A = random_operator(rng, 1, n, 0, scale=0.6, nilpotent=True)
        B = random_operator(rng, 1, n, 0, scale=0.6, nilpotent=True)
        big = (tensor(A, SuperOperator.identity(B.fiber, n))
               + tensor(SuperOperator.identity(A.fiber, n), B))
        lhs = supertrace(super_exp(big))
        rhs = wedge(supertrace(super_exp(A)), supertrace(super_exp(B)))
        assert (lhs - rhs).norm() <= 1e-10 * max(1.0, rhs.norm())


@settings(max_examples=30, deadline=None)
@given(seed=seeds, n=st.integers(1, 2), rk=st.integers(1, 2), pm=st.integers(0, 1), pn=st.integers(0, 1))
def test_supertrace_kills_supercommutators(seed, n, rk, pm, pn):
    M = random_operator(seed, rk, n, pm)
    N = random_operator(seed, rk, n, pn)
    lhs = supertrace(mul(M, N))
    rhs = supertrace(mul(N, M)) * (-1) ** (pm * pn)
    assert (lhs - rhs).norm() <= 1e-12 * max(1.0, lhs.norm())


def test_mutation_breaks_cyclicity(rng):
    worst = 0.0
    with mutated_koszul():
        for n in (1, 2):
            for pm in (0, 1):
                for pn in (0, 1):
                    M = random_operator(rng, 2, n, pm)
                    N = random_operator(rng, 2, n, pn)
                    rhs = supertrace(mul(N, M)) * (-1) ** (pm * pn)
                    worst = max(worst, (supertrace(mul(M, N)) - rhs).norm())
    assert worst > 1e-3


@settings(max_examples=20, deadline=None)
@given(seed=seeds, n=st.integers(0, 2), r=st.integers(1, 3))
def test_koszul_differential_squares_to_zero(seed, n, r):
    secs = tuple((float(x),) for x in seed.normal(size=r))
    d = koszul_differential(secs, n)
    assert mul(d, d).norm() == 0
    secs = tuple((random_form(seed, n, 0) + random_form(seed, n, 2),) for _ in range(r)) if n else secs
    d = koszul_differential(secs, n)
    assert mul(d, d).norm() <= 8 * np.finfo(float).eps * max(1.0, d.norm()) ** 2
