"""Superconnection Chern forms phi0, phi, psi on the SO(n,2) domain.

The superconnection on Lambda(L^r) is written in the frame given by the chart
vector w(u) of the tautological line L (metric |w|^2 = H/4), so everything is
defined on the Hodge loci as well.  With theta = del log H,

    omega = A + X,  A = diag(k theta) on Lambda^k,
    X = i sqrt(2 pi) (S + S*),   S = Koszul differential of sigma_i = Q(w, v_i),

and the curvature is d(omega) + omega.omega with d applied entrywise.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidArgument, NearLocusError
from .exterior import GradedForm, conjugate, pullback, star_rescale, wedge
from .geometry import frame_metric_jet, h_section_jet, section_jet
from .superalg import (
    SuperFiber,
    SuperOperator,
    contraction,
    creation,
    mul,
    number_operator,
    super_exp,
    super_exp_split,
    supertrace,
    tensor,
)
from .weilrep import gram_of

SQ2PI = np.sqrt(2 * np.pi)


def _vectors(vs):
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    return vs


def _op(fiber, n, parts):
    """Sum of form (x) constant-matrix terms."""
    e = np.zeros((fiber.dim, fiber.dim, 1 << (2 * n)), dtype=complex)
    for form, mat in parts:
        e += mat[:, :, None] * form.array[None, None, :]
    return SuperOperator(fiber, n, e)


def curvature_L(chart, u):
    """Curvature delbar del log H of the tautological line (a (1,1)-form)."""
    return -frame_metric_jet(chart, u).log().ddbar_form()


def curvature_L_trivialized(chart, u, v, threshold=1e-8):
    """The same curvature computed in the s_v^{-1} trivialization (needs h(s_v) > 0)."""
    h = h_section_jet(chart, v, u)
    hv = h.value.real
    if hv <= threshold:
        raise NearLocusError(f"h(s_v) = {hv:.3g} is too small for the trivialized formula")
    dh, dbh = h.del_form(), h.delbar_form()
    return wedge(dbh, dh) / hv**2 + h.ddbar_form() / hv


class Superconnection:
    """Connection and odd parts of the superconnection at one chart point."""

    def __init__(self, chart, u, vs):
        vs = _vectors(vs)
        self.n = n = chart.n
        self.r = r = vs.shape[0]
        self.vs = vs
        self.fiber = fiber = SuperFiber(r)
        Hj = frame_metric_jet(chart, u)
        logH = Hj.log()
        self.G = G = Hj.value.real / 4.0
        self.theta = logH.del_form()
        self.Theta = -logH.ddbar_form()  # delbar del log H
        sig = [section_jet(chart, v, u) for v in vs]
        self.sigma = np.array([s.value for s in sig])
        self.h = np.abs(self.sigma) ** 2 / G
        iota = [contraction(fiber, i, n).entries[:, :, 0] for i in range(r)]
        cre = [creation(fiber, i, n).entries[:, :, 0] for i in range(r)]
        kdiag = np.diag(fiber.degrees.astype(float))
        one = GradedForm.scalar(n, 1.0)
        ic = 1j * SQ2PI
        # coefficient jets of S*: conj(sigma) / G = 4 conj(sigma) / H
        sstar = [s.conj() * 4.0 / Hj for s in sig]
        self.A = _op(fiber, n, [(self.theta, kdiag)])
        self.X = _op(fiber, n, [(one * (ic * s.value), iota[i]) for i, s in enumerate(sig)]
                     + [(one * (ic * s.value), cre[i]) for i, s in enumerate(sstar)])
        self.dA = _op(fiber, n, [(self.Theta, kdiag)])
        self.dX = _op(fiber, n, [(s.d_form() * ic, iota[i]) for i, s in enumerate(sig)]
                      + [(s.d_form() * ic, cre[i]) for i, s in enumerate(sstar)])
        # pieces used by the nilpotency checks
        self._sig, self._sstar, self._iota, self._cre, self._kdiag = sig, sstar, iota, cre, kdiag

    def curvature(self):
        omega = self.A + self.X
        curv = self.dA + self.dX + mul(omega, omega)
        # the degree-0 part is -2 pi sum h * id; store it exactly as a scalar
        e = np.array(curv.entries)
        c = -2 * np.pi * float(np.sum(self.h))
        d0 = e[:, :, 0]
        if np.max(np.abs(d0 - c * np.eye(self.fiber.dim))) > 1e-9 * max(1.0, abs(c)):
            raise InvalidArgument("degree-0 part of the curvature is not scalar")
        e[:, :, 0] = c * np.eye(self.fiber.dim)
        return SuperOperator(self.fiber, self.n, e)

    def nilpotency_residuals(self):
        """Max-norms of (delbar + i sqrt(2pi) S)^2 and (del_L + i sqrt(2pi) S*)^2.

        For an operator D = d'' + Y with d'' a derivation of type (0,1) or (1,0)
        acting entrywise, D^2 = d''(Y) + Y.Y (+ curvature of d'', zero here).
        """
        fiber, n = self.fiber, self.n
        ic = 1j * SQ2PI
        one = GradedForm.scalar(n, 1.0)
        S = _op(fiber, n, [(one * (ic * s.value), self._iota[i]) for i, s in enumerate(self._sig)])
        dbS = _op(fiber, n, [(s.delbar_form() * ic, self._iota[i]) for i, s in enumerate(self._sig)])
        res1 = (dbS + mul(S, S)).norm()
        Ss = _op(fiber, n, [(one * (ic * s.value), self._cre[i]) for i, s in enumerate(self._sstar)])
        dSs = _op(fiber, n, [(s.del_form() * ic, self._cre[i]) for i, s in enumerate(self._sstar)])
        # del theta = del del log H = 0 and A.A = 0, so only the terms with S* remain
        res2 = (dSs + mul(self.A, Ss) + mul(Ss, self.A) + mul(Ss, Ss)).norm()
        return res1, res2


def superconnection_curvature(chart, u, vs):
    return Superconnection(chart, u, vs).curvature()


def _gauss(vs, gram):
    return np.exp(-np.pi * np.trace(gram_of(vs, gram)))


def phi0_at(chart, u, vs):
    """phi0(v_1..v_r) = tr_s exp(curvature)."""
    return supertrace(super_exp(superconnection_curvature(chart, u, vs)))


def phi0_split(chart, u, vs):
    """(c, P) with phi0 = e^c * P; useful when e^c underflows."""
    c, P = super_exp_split(superconnection_curvature(chart, u, vs))
    return c, supertrace(P)


def phi_at(chart, u, vs):
    return phi0_at(chart, u, vs) * _gauss(vs, chart.gram)


def psi0_at(chart, u, v):
    vs = _vectors(v)
    if vs.shape[0] != 1:
        raise InvalidArgument("psi is defined for a single vector")
    curv = superconnection_curvature(chart, u, vs)
    return supertrace(mul(number_operator(curv.fiber, curv.n), super_exp(curv)))


def psi_at(chart, u, v):
    return psi0_at(chart, u, v) * _gauss(v, chart.gram)


def phi2_explicit(chart, u, v, threshold=1e-8):
    """Degree-2 part of phi(v) from the closed formula in h = h(s_v) (needs h > 0)."""
    v = np.asarray(v, dtype=float)
    h = h_section_jet(chart, v, u)
    hv = h.value.real
    if hv <= threshold:
        raise NearLocusError(f"h(s_v) = {hv:.3g} is too small for the explicit formula")
    dh, dbh = h.del_form(), h.delbar_form()
    dbd = -h.ddbar_form()
    bracket = -wedge(dbh, dh) / hv**2 + dbd / hv + wedge(dh, dbh) * (2 * np.pi / hv)
    return bracket * np.exp(-np.pi * (v @ chart.gram @ v + 2 * hv))


def phi0_tensor_route(chart, u, vs):
    """phi0(v_1..v_r) from graded tensor products of the single-vector curvatures."""
    vs = _vectors(vs)
    curv = superconnection_curvature(chart, u, vs[:1])
    for v in vs[1:]:
        c2 = superconnection_curvature(chart, u, v[None, :])
        curv = (tensor(curv, SuperOperator.identity(c2.fiber, c2.n))
                + tensor(SuperOperator.identity(curv.fiber, curv.n), c2))
    return supertrace(super_exp(curv))


def chern_top_todd(chart, u):
    """(c_top, Td^{-1}) of the dual line: c_top = -curvature, Td^{-1} = (1 - e^{-x})/x."""
    x = -curvature_L(chart, u)
    todd_inv = GradedForm.scalar(x.n, 1.0)
    term = todd_inv
    k = 1
    while True:
        term = wedge(term, x) * (-1.0 / (k + 1))
        if not np.any(term.array):
            break
        todd_inv = todd_inv + term
        k += 1
    return x, todd_inv


def reality_residual(form):
    """|star(a) - conj(star(a))| for a sum of (p,p)-forms."""
    a = star_rescale(form)
    return (a - conjugate(a)).norm()


# ---------------------------------------------------------------------------
# numeric derivatives of form-valued fields

class FormField:
    """u -> GradedForm on a chart, with metadata about how it was built."""

    def __init__(self, func, n, **meta):
        self.func = func
        self.n = n
        self.meta = meta

    def __call__(self, u):
        return self.func(np.asarray(u, dtype=complex))


def _shift(u, k, h):
    n = u.size
    du = np.zeros(n, dtype=complex)
    if k < n:
        du[k] = h
    else:
        du[k - n] = 1j * h
    return u + du


def _dx_forms(n):
    """dx_j and dy_j as GradedForms (j = 0..n-1)."""
    from .exterior import du, dubar
    dx = [(du(j, n) + dubar(j, n)) * 0.5 for j in range(n)]
    dy = [(du(j, n) - dubar(j, n)) * (-0.5j) for j in range(n)]
    return dx + dy


def exterior_derivative_numeric(field, chart, u, step=1e-3):
    """d of a form field by central differences in the 2n real coordinates."""
    u = np.asarray(u, dtype=complex)
    n = chart.n
    out = GradedForm(n)
    for k, dk in enumerate(_dx_forms(n)):
        deriv = (field(_shift(u, k, step)) - field(_shift(u, k, -step))) / (2 * step)
        out = out + wedge(dk, deriv)
    return out


def ddbar_numeric(field, chart, u, step=1e-3):
    """del delbar of a form field: sum_jk du_j ^ dubar_k ^ f_{u_j ubar_k} by central differences."""
    u = np.asarray(u, dtype=complex)
    n = chart.n
    m = 2 * n
    f0 = field(u).array
    cache = {}

    def f(a, sa, b, sb):
        key = (a, sa, b, sb)
        if key not in cache:
            uu = _shift(_shift(u, a, sa * step), b, sb * step) if b is not None else _shift(u, a, sa * step)
            cache[key] = field(uu).array
        return cache[key]

    D2 = np.zeros((m, m, f0.size), dtype=complex)
    for a in range(m):
        D2[a, a] = (f(a, 1, None, 0) - 2 * f0 + f(a, -1, None, 0)) / step**2
        for b in range(a + 1, m):
            D2[a, b] = D2[b, a] = (f(a, 1, b, 1) - f(a, 1, b, -1) - f(a, -1, b, 1)
                                   + f(a, -1, b, -1)) / (4 * step**2)
    out = np.zeros(f0.size, dtype=complex)
    for j in range(n):
        for k in range(n):
            fuub = 0.25 * (D2[j, k] + D2[n + j, n + k] + 1j * (D2[j, n + k] - D2[n + j, k]))
            mono = GradedForm.monomial(n, hol=(j,), anti=(k,))
            out = out + wedge(mono, GradedForm(n, fuub)).array
    return GradedForm(n, out)


def phi_field(chart, vs):
    return FormField(lambda u: phi_at(chart, u, vs), chart.n, vectors=_vectors(vs))


def closedness_residual(chart, u, vs, step=1e-3):
    return exterior_derivative_numeric(phi_field(chart, vs), chart, u, step).norm()


def restriction_check(sub, v, u=None):
    """|phi(v) pulled back to the sub-domain - e^{-pi Q(v'',v'')} phi_sub(v')| (max-norm)."""
    v = np.asarray(v, dtype=float)
    u_sub = np.zeros(sub.chart_sub.n, dtype=complex) if u is None else np.asarray(u, dtype=complex)
    val, jac, _ = sub.transition(u_sub)
    big = pullback(phi_at(sub.chart, val, v), jac)
    y, _, v2 = sub.split(v)
    rhs = phi_at(sub.chart_sub, u_sub, y) * np.exp(-np.pi * (v2 @ sub.gram @ v2))
    return (big - rhs).norm()


def invariance_residual(g, chart_z, u, chart_gz, vs):
    """|g^* phi(g v) - phi(v)| at the point chart_z.w(u)."""
    from .geometry import pullback_jet
    vs = _vectors(vs)
    val, jac, _ = pullback_jet(g, chart_gz, chart_z, u)
    lhs = pullback(phi_at(chart_gz, val, vs @ np.asarray(g).T), jac)
    return (lhs - phi_at(chart_z, u, vs)).norm()


def double_transgression_residual(chart, u, v, t, dt_rel=1e-4, step=1e-3):
    """|-(1/t) del delbar psi0(t^{1/2} v) - d/dt phi0(t^{1/2} v)|."""
    if t <= 0:
        raise InvalidArgument("t must be positive")
    v = np.asarray(v, dtype=float)
    field = FormField(lambda uu: psi0_at(chart, uu, np.sqrt(t) * v), chart.n)
    lhs = ddbar_numeric(field, chart, u, step) * (-1.0 / t)
    dt = dt_rel * t
    rhs = (phi0_at(chart, u, np.sqrt(t + dt) * v) - phi0_at(chart, u, np.sqrt(t - dt) * v)) / (2 * dt)
    return (lhs - rhs).norm()


def decay_profile(chart, u, vs, ts):
    """log |phi0(t v)| (max-norm over coefficients) for t in ``ts``, robust to underflow."""
    out = []
    for t in ts:
        c, P = phi0_split(chart, u, np.asarray(vs) * t)
        nrm = P.norm()
        out.append(c.real + np.log(nrm) if nrm > 0 else -np.inf)
    return np.array(out)


__all__ = [
    "FormField", "Superconnection", "chern_top_todd", "closedness_residual", "curvature_L",
    "curvature_L_trivialized", "ddbar_numeric", "decay_profile", "double_transgression_residual",
    "exterior_derivative_numeric", "invariance_residual", "phi0_at", "phi0_split",
    "phi0_tensor_route", "phi2_explicit", "phi_at", "phi_field", "psi0_at", "psi_at",
    "reality_residual", "restriction_check", "superconnection_curvature",
]
