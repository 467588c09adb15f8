import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from supertheta.errors import InvalidArgument, OutsideDomainError
from supertheta.geometry import (
    Chart,
    DomainPoint,
    Jet2,
    Subdomain,
    base_point,
    component_sign,
    frame_metric_jet,
    group_apply,
    h_quadratic,
    h_section_jet,
    majorant_at,
    negative_projection,
    pullback_jet,
    random_orthogonal,
    section_jet,
)
from supertheta.sampling import random_setup


def standard(n):
    return np.diag([1.0] * n + [-1.0, -1.0])


def e(k, m):
    x = np.zeros(m)
    x[k] = 1.0
    return x


def _shift(u, k, h):
    n = u.size
    d = np.zeros(n, dtype=complex)
    d[k % n] = h if k < n else 1j * h
    return u + d


def fd_check(func, jet, u, step=1e-4):
    """Worst relative error of the jet's gradient and Hessian against central differences."""
    m = 2 * u.size
    worst = 0.0
    scale = max(1.0, np.max(np.abs(jet.hess)), np.max(np.abs(jet.grad)))
    for a in range(m):
        g = (func(_shift(u, a, step)) - func(_shift(u, a, -step))) / (2 * step)
        worst = max(worst, abs(g - jet.grad[a]) / scale)
        for b in range(m):
            f = lambda sa, sb: func(_shift(_shift(u, a, sa * step), b, sb * step))  # noqa: E731
            h = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * step**2)
            worst = max(worst, abs(h - jet.hess[a, b]) / scale)
    return worst


def test_standard_base_point():
    for n in (1, 2, 3):
        z0 = base_point(standard(n))
        assert np.allclose(z0.w, e(n, n + 2) + 1j * e(n + 1, n + 2))
        chart = Chart(z0)
        assert np.allclose(chart.w(np.zeros(n)), z0.w)
        _, wj, _ = chart.w_jets(np.zeros(n))
        assert np.allclose(wj, chart.b)


def test_domain_point_validation():
    G = standard(1)
    with pytest.raises(InvalidArgument):
        DomainPoint(np.array([1.0, 0, 0]), G)
    with pytest.raises(OutsideDomainError):
        # real isotropic vector: Q(w, conj w) = 0
        DomainPoint(np.array([1.0, 1.0, 0.0]), G)
    with pytest.raises(InvalidArgument):
        DomainPoint(np.zeros(3), G)


def test_chart_is_isotropic(rng):
    for n in (1, 2, 3):
        gram, chart, _ = random_setup(rng, n)
        for _ in range(100):
            u = 0.5 * (rng.normal(size=n) + 1j * rng.normal(size=n))
            w = chart.w(u)
            assert abs(w @ gram @ w) < 1e-12 * max(1.0, np.vdot(w, w).real)


def test_chart_coordinates_roundtrip(rng):
    gram, chart, u = random_setup(rng, 3)
    z = chart.point(u)
    assert np.allclose(chart.coordinates(z), u)
    assert np.allclose(chart.coordinates(DomainPoint(z.w * (2 - 1j), gram)), u)


def test_outside_chart():
    chart = Chart(base_point(standard(1)))
    with pytest.raises(OutsideDomainError):
        chart.point(np.array([2.0]))
    with pytest.raises(OutsideDomainError):
        frame_metric_jet(chart, np.array([2.0j]))


def test_frame_metric_at_base_point():
    for n in (1, 2):
        chart = Chart(base_point(standard(n)))
        H = frame_metric_jet(chart, np.zeros(n))
        assert abs(H.value - 4) < 1e-15


def test_section_values():
    n = 2
    chart = Chart(base_point(standard(n)))
    u0 = np.zeros(n)
    assert abs(section_jet(chart, e(0, n + 2), u0).value) < 1e-15
    assert abs(section_jet(chart, e(n, n + 2), u0).value + 1) < 1e-15


def test_h_values():
    n = 2
    G = standard(n)
    chart = Chart(base_point(G))
    u0 = np.zeros(n)
    assert abs(h_section_jet(chart, e(0, n + 2), u0).value) < 1e-15
    assert abs(h_section_jet(chart, e(n, n + 2), u0).value - 1) < 1e-15
    z0 = chart.point(u0)
    assert np.allclose(negative_projection(z0, e(n, n + 2)), e(n, n + 2))
    assert np.allclose(negative_projection(z0, e(0, n + 2)), 0)


def test_h_homogeneous(rng):
    _, chart, u = random_setup(rng, 2)
    v = rng.normal(size=4)
    for t in (0.5, 3.0):
        assert abs(h_section_jet(chart, t * v, u).value - t**2 * h_section_jet(chart, v, u).value) < 1e-12


def test_section_is_holomorphic(rng):
    _, chart, u = random_setup(rng, 3)
    s = section_jet(chart, rng.normal(size=5), u)
    assert np.all(s.fub == 0)
    assert np.all(s.fuub == 0)


def test_jets_match_differences(rng):
    for n in (1, 2):
        gram, chart, u = random_setup(rng, n)
        v = rng.normal(size=n + 2)
        assert fd_check(lambda uu: frame_metric_jet(chart, uu).value, frame_metric_jet(chart, u), u) < 1e-6
        assert fd_check(lambda uu: section_jet(chart, v, uu).value, section_jet(chart, v, u), u) < 1e-6
        assert fd_check(lambda uu: h_section_jet(chart, v, uu).value, h_section_jet(chart, v, u), u) < 1e-6
        logH = frame_metric_jet(chart, u).log()
        assert fd_check(lambda uu: np.log(frame_metric_jet(chart, uu).value), logH, u) < 1e-6


def test_jet_algebra():
    x = Jet2(2.0, np.array([1.0, 0.5]), np.array([[0.3, 0.1], [0.1, -0.2]]))
    y = x * x.reciprocal()
    assert abs(y.value - 1) < 1e-15 and np.allclose(y.grad, 0) and np.allclose(y.hess, 0)
    z = (x / x.conj()).log()
    assert np.allclose(z.grad, 0, atol=1e-15)


def test_negative_projection_properties(rng):
    gram, chart, u = random_setup(rng, 2)
    z = chart.point(u)
    for v in rng.normal(size=(20, 4)):
        p = negative_projection(z, v)
        assert np.allclose(negative_projection(z, p), p)
        assert p @ gram @ p <= 1e-12
        assert abs(h_section_jet(chart, v, u).value.real + p @ gram @ p) < 1e-10 * max(1, abs(p @ gram @ p))
    Hq = h_quadratic(z)
    v = rng.normal(size=4)
    assert abs(v @ Hq @ v - h_section_jet(chart, v, u).value.real) < 1e-10


def test_majorant_positive(rng):
    for k in range(20):
        _, chart, u = random_setup(rng, 1 + k % 3)
        np.linalg.cholesky(majorant_at(chart.point(u)).M)


def test_group_examples():
    n = 2
    G = standard(n)
    z0 = base_point(G)
    chart = Chart(z0)
    val, jac, hess = pullback_jet(np.eye(n + 2), chart, chart)
    assert np.allclose(val, 0) and np.allclose(jac, np.eye(n)) and np.allclose(hess, 0)
    th = 0.4
    g = np.eye(n + 2)
    g[n:, n:] = [[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]]
    assert np.allclose(group_apply(g, z0).w, np.exp(-1j * th) * z0.w)
    swap = np.eye(n + 2)[[1, 0, 2, 3]]
    assert np.allclose(group_apply(swap, z0).w, z0.w)
    with pytest.raises(InvalidArgument):
        group_apply(2 * np.eye(n + 2), z0)


def test_component_sign():
    G = standard(1)
    z0 = base_point(G)
    assert component_sign(z0, z0) == 1
    assert component_sign(DomainPoint(np.conj(z0.w), G), z0) == -1


def test_subdomain_examples():
    n = 3
    G = standard(n)
    z0 = base_point(G)
    w = e(0, n + 2)
    sub = Subdomain(w, z0)
    ev = np.linalg.eigvalsh(sub.gram_sub)
    assert (np.sum(ev > 0), np.sum(ev < 0)) == (n - 1, 2)
    _, v1, v2 = sub.split(w)
    assert np.allclose(v1, 0) and np.allclose(v2, w)
    _, v1, v2 = sub.split(e(1, n + 2))
    assert np.allclose(v2, 0)
    with pytest.raises(InvalidArgument):
        Subdomain(e(n, n + 2), z0)  # negative vector
    with pytest.raises(InvalidArgument):
        Subdomain(e(0, n + 2) + 0.5 * e(n, n + 2), z0)  # z0 not orthogonal


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3))
def test_h_is_equivariant(seed, n):
    rng = np.random.default_rng(seed)
    gram, chart, u = random_setup(rng, n)
    z = chart.point(u)
    g = random_orthogonal(gram, rng)
    cz, cgz = Chart(z), Chart(group_apply(g, z))
    zero = np.zeros(n)
    for v in rng.normal(size=(5, n + 2)):
        a = h_section_jet(cz, v, zero).value.real
        b = h_section_jet(cgz, g @ v, zero).value.real
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a))
