"""The quadric model of the SO(n,2) period domain.

Points are isotropic lines [w] in V_C with Q(w, conj w) < 0.  Around a base
point w0 we use the quadratic chart

    w(u) = w0 + sum_j u_j b_j - 1/2 (sum_ij Q(b_i, b_j) u_i u_j) c,

where c = conj(w0) / Q(w0, conj w0) is the hyperbolic partner of w0 and the b_j
span {w0, c}^perp.  Because w(u) is a polynomial of degree 2, every jet below is
exact.  Real chart coordinates are ordered (x_1..x_n, y_1..y_n), u = x + iy.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm, null_space

from .errors import GeometryInconsistencyError, InvalidArgument, OutsideDomainError
from .exterior import GradedForm
from .quadlattice import QuadraticSpace, majorant_gram


def _gram(space):
    if isinstance(space, QuadraticSpace):
        return space.gram
    g = np.asarray(space, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise InvalidArgument("gram matrix must be square")
    return g


def bilinear(gram, a, b):
    """Complex-bilinear extension of Q."""
    return np.asarray(a) @ gram @ np.asarray(b)


# ---------------------------------------------------------------------------
# 2-jets of scalar fields

class Jet2:
    """Value, real gradient and real Hessian of a complex function of 2n real variables."""

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad, hess):
        self.value = complex(value)
        self.grad = np.asarray(grad, dtype=complex)
        self.hess = np.asarray(hess, dtype=complex)

    @property
    def n(self):
        return self.grad.size // 2

    @staticmethod
    def _P(n):
        I = np.eye(n)
        return np.block([[I, I], [1j * I, -1j * I]])

    @classmethod
    def from_wirtinger(cls, value, fu, fub, fuu, fuub, fubub):
        """Build from d/du, d/dubar and the three blocks of second derivatives.

        ``fuub[j, k]`` is d^2 f / du_j dubar_k.
        """
        fu = np.asarray(fu, dtype=complex)
        n = fu.size
        P = cls._P(n)
        W = np.block([[fuu, fuub], [np.asarray(fuub).T, fubub]])
        return cls(value, P @ np.concatenate([fu, fub]), P @ W @ P.T)

    @classmethod
    def constant(cls, n, value):
        return cls(value, np.zeros(2 * n), np.zeros((2 * n, 2 * n)))

    # Wirtinger views
    def _wirt(self):
        n = self.n
        Pinv = np.linalg.inv(self._P(n))
        g = Pinv @ self.grad
        W = Pinv @ self.hess @ Pinv.T
        return g[:n], g[n:], W[:n, :n], W[:n, n:], W[n:, n:]

    @property
    def fu(self):
        return self._wirt()[0]

    @property
    def fub(self):
        return self._wirt()[1]

    @property
    def fuub(self):
        return self._wirt()[3]

    @property
    def fuu(self):
        return self._wirt()[2]

    # arithmetic (product/quotient rules in real coordinates)
    def __add__(self, o):
        if not isinstance(o, Jet2):
            return Jet2(self.value + o, self.grad, self.hess)
        return Jet2(self.value + o.value, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if not isinstance(o, Jet2):
            return Jet2(self.value * o, self.grad * o, self.hess * o)
        g1, g2 = self.grad, o.grad
        return Jet2(self.value * o.value,
                    self.value * g2 + o.value * g1,
                    self.value * o.hess + o.value * self.hess
                    + np.outer(g1, g2) + np.outer(g2, g1))

    __rmul__ = __mul__

    def reciprocal(self):
        f = self.value
        if f == 0:
            raise ZeroDivisionError("reciprocal of a jet with zero value")
        g = self.grad
        return Jet2(1 / f, -g / f**2, -self.hess / f**2 + 2 * np.outer(g, g) / f**3)

    def __truediv__(self, o):
        if not isinstance(o, Jet2):
            return self * (1.0 / o)
        return self * o.reciprocal()

    def log(self):
        f = self.value
        g = self.grad
        return Jet2(np.log(f), g / f, self.hess / f - np.outer(g, g) / f**2)

    def conj(self):
        return Jet2(np.conj(self.value), np.conj(self.grad), np.conj(self.hess))

    # forms
    def del_form(self):
        """The (1,0)-form sum_j f_{u_j} du_j."""
        n = self.n
        fu = self.fu
        return GradedForm(n, {(1 << j, 0): fu[j] for j in range(n)})

    def delbar_form(self):
        n = self.n
        fub = self.fub
        return GradedForm(n, {(0, 1 << j): fub[j] for j in range(n)})

    def d_form(self):
        return self.del_form() + self.delbar_form()

    def ddbar_form(self):
        """del delbar f = sum_jk f_{u_j ubar_k} du_j ^ dubar_k (so delbar del f is its negative)."""
        n = self.n
        W = self.fuub
        return GradedForm(n, {(1 << j, 1 << k): W[j, k] for j in range(n) for k in range(n)})


# ---------------------------------------------------------------------------
# points and charts

class DomainPoint:
    """A point [w] of the period domain, Q(w, w) = 0 and Q(w, conj w) < 0."""

    __slots__ = ("w", "gram")

    def __init__(self, w, space, atol=1e-10):
        gram = _gram(space)
        w = np.asarray(w, dtype=complex)
        if w.shape != (gram.shape[0],):
            raise InvalidArgument("representative has the wrong length")
        nrm = np.real(np.vdot(w, w))
        if nrm == 0:
            raise InvalidArgument("zero vector does not define a point")
        if abs(bilinear(gram, w, w)) > atol * nrm * max(1.0, np.abs(gram).max()):
            raise InvalidArgument("representative is not isotropic: Q(w, w) != 0")
        if np.real(bilinear(gram, w, np.conj(w))) >= 0:
            raise OutsideDomainError("Q(w, conj w) >= 0: not in the period domain")
        self.w = w
        self.gram = gram

    @property
    def m(self):
        return self.w.size

    @property
    def n(self):
        return self.w.size - 2

    def __repr__(self):
        return f"DomainPoint(w={np.round(self.w, 6)})"


def diagonalizing_basis(space):
    """Real P with P^T G P = diag(1..1, -1, -1); columns sorted deterministically."""
    G = _gram(space)
    ev, V = np.linalg.eigh(G)
    # fix signs: the largest entry of every eigenvector is made positive
    for k in range(V.shape[1]):
        j = np.argmax(np.abs(V[:, k]))
        if V[j, k] < 0:
            V[:, k] = -V[:, k]
    pos = [k for k in range(ev.size) if ev[k] > 0]
    neg = [k for k in range(ev.size) if ev[k] < 0]
    if len(neg) != 2:
        raise InvalidArgument(f"need signature (n, 2), got {len(pos)} positive and {len(neg)} negative")
    lead = lambda k: int(np.argmax(np.abs(V[:, k])))  # noqa: E731
    pos.sort(key=lead)
    neg.sort(key=lead)
    order = pos + neg
    return V[:, order] / np.sqrt(np.abs(ev[order]))


def base_point(space):
    """z0 = P(e_{n+1} + i e_{n+2}) for the diagonalizing basis P."""
    P = diagonalizing_basis(space)
    n = P.shape[0] - 2
    return DomainPoint(P[:, n] + 1j * P[:, n + 1], space)


class Chart:
    """Quadratic holomorphic chart centred at ``base``."""

    def __init__(self, base, b=None):
        self.base = base
        G = base.gram
        self.gram = G
        w0 = base.w
        self.c = np.conj(w0) / bilinear(G, w0, np.conj(w0))
        if abs(bilinear(G, w0, self.c) - 1) > 1e-10:
            raise GeometryInconsistencyError("degenerate hyperbolic partner")
        n = base.n
        if b is None:
            b = self._complement_basis(G, w0, n)
        self.b = np.asarray(b, dtype=float)  # shape (n, m)
        self.Bq = self.b @ G @ self.b.T

    @staticmethod
    def _complement_basis(G, w0, n):
        """Real Q-orthonormal basis of span(Re w0, Im w0)^perp (positive definite there)."""
        plane = np.stack([w0.real, w0.imag], axis=1)
        Gp = plane.T @ G @ plane  # negative definite 2x2
        out = []
        for k in range(G.shape[0]):
            x = np.zeros(G.shape[0])
            x[k] = 1.0
            x = x - plane @ np.linalg.solve(Gp, plane.T @ G @ x)
            for y in out:
                x = x - (y @ G @ x) * y
            q = x @ G @ x
            if q > 1e-8:
                out.append(x / np.sqrt(q))
            if len(out) == n:
                break
        if len(out) != n:
            raise GeometryInconsistencyError("could not build a chart basis")
        return np.array(out).reshape(n, G.shape[0])

    @property
    def n(self):
        return self.b.shape[0]

    def w(self, u):
        u = np.asarray(u, dtype=complex)
        return self.base.w + u @ self.b - 0.5 * (u @ self.Bq @ u) * self.c

    def w_jets(self, u):
        """(w, dw/du_j as rows, d^2w/du_j du_k as an (n, n, m) array)."""
        u = np.asarray(u, dtype=complex)
        w = self.w(u)
        wj = self.b - np.outer(self.Bq @ u, self.c)
        wjk = -self.Bq[:, :, None] * self.c[None, None, :]
        return w, wj, wjk

    def point(self, u):
        w = self.w(u)
        if np.real(bilinear(self.gram, w, np.conj(w))) >= 0:
            raise OutsideDomainError(f"chart point u={u} is outside the period domain")
        return DomainPoint(w, self.gram)

    def coordinates(self, z):
        """Chart coordinates of the point z (inverse of ``w``)."""
        w = z.w if isinstance(z, DomainPoint) else np.asarray(z, dtype=complex)
        s = bilinear(self.gram, w, self.c)
        if abs(s) < 1e-12 * np.linalg.norm(w):
            raise OutsideDomainError("point is at infinity for this chart")
        wt = w / s
        return np.linalg.solve(self.Bq, self.b @ self.gram @ wt)


def make_chart(z, space=None):
    if not isinstance(z, DomainPoint):
        z = DomainPoint(z, space)
    return Chart(z)


def random_u(chart, rng, radius=0.3):
    """A random chart coordinate of modulus at most ``radius`` per entry (inside the domain)."""
    for _ in range(100):
        u = radius * (rng.uniform(-1, 1, chart.n) + 1j * rng.uniform(-1, 1, chart.n))
        try:
            chart.point(u)
            return u
        except OutsideDomainError:
            radius *= 0.5
    raise GeometryInconsistencyError("could not sample a chart point")


# ---------------------------------------------------------------------------
# jets of the frame metric and sections

def frame_metric_jet(chart, u):
    """Jet of H(u) = -2 Q(w(u), conj w(u))."""
    G = chart.gram
    w, wj, wjk = chart.w_jets(u)
    wb = np.conj(w)
    H = -2 * np.real(bilinear(G, w, wb))
    if H <= 0:
        raise OutsideDomainError(f"H(u) = {H} <= 0 at u={u}")
    Hu = -2 * wj @ G @ wb
    Hub = np.conj(Hu)
    Huub = -2 * wj @ G @ np.conj(wj).T
    Huu = -2 * np.einsum("jkm,ml,l->jk", wjk, G, wb)
    return Jet2.from_wirtinger(H, Hu, Hub, Huu, Huub, np.conj(Huu))


def section_jet(chart, v, u):
    """Jet of sigma(u) = Q(w(u), v); holomorphic in u."""
    G = chart.gram
    v = np.asarray(v, dtype=float)
    w, wj, wjk = chart.w_jets(u)
    n = chart.n
    s = bilinear(G, w, v)
    su = wj @ G @ v
    suu = np.einsum("jkm,ml,l->jk", wjk, G, v)
    z = np.zeros((n, n))
    return Jet2.from_wirtinger(s, su, np.zeros(n), suu, z, z)


def h_section_jet(chart, v, u):
    """Jet of h(s_v) = 4 |sigma|^2 / H."""
    s = section_jet(chart, v, u)
    H = frame_metric_jet(chart, u)
    return (s * s.conj()) * 4.0 / H


def negative_projection(z, v):
    """Orthogonal projection of v onto the negative plane (L_z + conj L_z) real part."""
    G = z.gram
    w = z.w
    a = bilinear(G, v, np.conj(w)) / bilinear(G, w, np.conj(w))
    return 2 * np.real(a * w)


def negative_projection_matrix(z):
    G = z.gram
    w = z.w
    return 2 * np.real(np.outer(w, np.conj(w)) @ G) / np.real(bilinear(G, w, np.conj(w)))


def h_quadratic(z):
    """Gram matrix of v -> h_z(s_v) = -Q(pr^- v, pr^- v)."""
    P = negative_projection_matrix(z)
    Hq = -P.T @ z.gram @ P
    return 0.5 * (Hq + Hq.T)


def majorant_at(z, space=None):
    return majorant_gram(z.gram if space is None else space, h_quadratic(z))


# ---------------------------------------------------------------------------
# group action

def check_orthogonal(g, space, atol=1e-10):
    G = _gram(space)
    g = np.asarray(g, dtype=float)
    if g.shape != G.shape:
        raise InvalidArgument("group element has the wrong size")
    scale = max(1.0, np.abs(G).max()) * max(1.0, np.linalg.norm(g, 2)) ** 2
    err = np.max(np.abs(g.T @ G @ g - G)) / scale
    if err > atol:
        raise InvalidArgument(f"g is not Q-orthogonal (residual {err:.2e})")
    return g


def random_orthogonal(space, rng, scale=0.3):
    """exp(G^{-1} A) with A antisymmetric: a random element of the identity component."""
    G = _gram(space)
    m = G.shape[0]
    A = rng.normal(scale=scale, size=(m, m))
    A = A - A.T
    X = np.linalg.solve(G, A)
    X *= min(1.0, 1.0 / np.linalg.norm(X, 2))  # keep g well conditioned
    return expm(X)


def group_apply(g, z, atol=1e-10):
    g = check_orthogonal(g, z.gram, atol)
    return DomainPoint(g @ z.w, z.gram)


def component_sign(z, ref):
    """+1 if z lies in the same connected component as ``ref``, -1 otherwise."""
    G = z.gram
    x = np.stack([z.w.real, z.w.imag], axis=1)
    f = np.stack([ref.w.real, ref.w.imag], axis=1)
    return int(np.sign(np.linalg.det(x.T @ G @ f)))


def transition_jet(linear, src, dst, u0=None):
    """2-jet at u0 of u -> dst-coordinates of [linear @ src.w(u)].

    Returns (value (n'), jacobian (n', n), hessian (n', n, n)); the map is
    holomorphic, so these are the complex derivatives.
    """
    linear = np.asarray(linear, dtype=float)
    u0 = np.zeros(src.n, dtype=complex) if u0 is None else np.asarray(u0, dtype=complex)
    w, wj, wjk = src.w_jets(u0)
    p, pj, pjk = linear @ w, wj @ linear.T, wjk @ linear.T
    Gd = dst.gram
    l, lj, ljk = p @ Gd @ dst.c, pj @ Gd @ dst.c, pjk @ Gd @ dst.c
    bG = dst.b @ Gd  # (n', m)
    N, Nj, Njk = bG @ p, pj @ bG.T, pjk @ bG.T  # (n'), (n, n'), (n, n, n')
    if abs(l) < 1e-14:
        raise OutsideDomainError("image point is at infinity for the target chart")
    val = N / l
    jac = Nj / l - np.outer(lj, N) / l**2  # (n, n')
    hess = (Njk / l
            - (Nj[:, None, :] * lj[None, :, None] + Nj[None, :, :] * lj[:, None, None]) / l**2
            - ljk[:, :, None] * N[None, None, :] / l**2
            + 2 * np.einsum("i,j,k->ijk", lj, lj, N) / l**3)
    Binv = np.linalg.inv(dst.Bq)
    val = Binv @ val
    jac = (jac @ Binv.T).T
    hess = np.einsum("ijk,lk->lij", hess, Binv)
    return val, jac, hess


def pullback_jet(g, chart_gz, chart_z, u0=None):
    """Transition jet of chart_gz o g o chart_z^{-1} at u0 (default 0)."""
    g = check_orthogonal(g, chart_z.gram)
    return transition_jet(g, chart_z, chart_gz, u0)


# ---------------------------------------------------------------------------
# sub-domains D_w for w of positive length

class Subdomain:
    """The sub-domain of points orthogonal to ``w_vec``, charted at z."""

    def __init__(self, w_vec, z, atol=1e-9):
        G = z.gram
        w_vec = np.asarray(w_vec, dtype=float)
        qq = w_vec @ G @ w_vec
        if qq <= 0:
            raise InvalidArgument("Q(w, w) must be positive")
        if abs(bilinear(G, z.w, w_vec)) > atol * np.linalg.norm(z.w) * np.linalg.norm(G @ w_vec):
            raise InvalidArgument("the point is not in the sub-domain of w")
        self.w_vec = w_vec
        self.qq = qq
        self.gram = G
        self.B = null_space((G @ w_vec)[None, :])  # m x (m-1)
        self.gram_sub = self.B.T @ G @ self.B
        self.gram_sub = 0.5 * (self.gram_sub + self.gram_sub.T)
        y = np.linalg.lstsq(self.B, z.w, rcond=None)[0]
        self.point_sub = DomainPoint(y, self.gram_sub)
        self.chart_sub = Chart(self.point_sub)
        self.chart = Chart(z)

    def split(self, v):
        """(v' in sub-coordinates, v' in V, v'') with v = v' + v''."""
        v = np.asarray(v, dtype=float)
        v2 = (v @ self.gram @ self.w_vec) / self.qq * self.w_vec
        v1 = v - v2
        return np.linalg.lstsq(self.B, v1, rcond=None)[0], v1, v2

    def transition(self, u0=None):
        """Jet of the inclusion from the sub-chart into the ambient chart at z."""
        return transition_jet(self.B, self.chart_sub, self.chart, u0)


def subdomain_chart(w_vec, z):
    return Subdomain(w_vec, z)
