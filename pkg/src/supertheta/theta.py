"""Truncated theta series over mu + L and the numerical experiments built on them.

Sums are taken over the points of mu + L inside a majorant ball q_z(v) <= R,
listed in the deterministic enumeration order and reduced with a fixed
pairwise tree, so results do not depend on how the work is split between
threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chernforms import decay_profile, ddbar_numeric, FormField, phi0_at, psi0_at
from .errors import InvalidArgument, ResolutionError, TruncationError
from .exterior import GradedForm
from .geometry import h_section_jet, majorant_at, negative_projection_matrix
from .quadlattice import discriminant_group, enumerate_ball
from .weilrep import finite_weil, gtau_translate, mobius, word_matrix


def pairwise_sum(x):
    """Sum along axis 0 with a fixed balanced tree (zero padding to a power of two)."""
    x = np.asarray(x)
    if x.shape[0] == 0:
        return np.zeros(x.shape[1:], dtype=x.dtype)
    size = 1 << int(np.ceil(np.log2(x.shape[0]))) if x.shape[0] > 1 else 1
    if size != x.shape[0]:
        pad = np.zeros((size - x.shape[0],) + x.shape[1:], dtype=x.dtype)
        x = np.concatenate([x, pad])
    while x.shape[0] > 1:
        x = x[0::2] + x[1::2]
    return x[0]


@dataclass
class ThetaValue:
    values: list  # one entry (complex or GradedForm) per coset
    R: float
    tail: float
    tau: complex
    z: np.ndarray
    mu: list
    npoints: int
    extra: dict = field(default_factory=dict)

    def vector(self):
        return np.array(self.values)


def initial_radius(tol, y_min, M_min=1.0):
    """Starting radius for the doubling loop."""
    return max(5.0, -np.log(tol) / (2 * np.pi * y_min * M_min))


def _coset_list(L, cosets, disc):
    if disc is None:
        disc = discriminant_group(L)
    if cosets is None:
        cosets = list(range(disc.order))
    return disc, cosets


def _map(func, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(func, items))
    return [func(x) for x in items]


# ---------------------------------------------------------------------------
# scalar Siegel theta

class SiegelTerms:
    """Points of mu + L with q_z(v) <= R and the data needed to evaluate the Siegel Gaussian."""

    def __init__(self, L, z, mu, R, max_points=None):
        self.L = L
        self.z = z
        self.R = R
        M = majorant_at(z)
        v, x = enumerate_ball(L, mu, M, R, return_coords=True)
        if max_points is not None and v.shape[0] > max_points:
            raise TruncationError(f"{v.shape[0]} lattice points exceed the cap {max_points}",
                                  radius=R, npoints=v.shape[0])
        self.v = v
        self.q = M.q(v)
        P = negative_projection_matrix(z)
        G = z.gram
        vm = v @ P.T
        vp = v - vm
        self.Qp = np.einsum("ni,ij,nj->n", vp, G, vp)
        self.Qm = np.einsum("ni,ij,nj->n", vm, G, vm)
        # Q(v, v) from lattice coordinates: small rationals, so the T-phase is accurate
        self.Qvv = np.einsum("ni,ij,nj->n", x, L.gram_int.astype(float), x)

    def terms(self, tau, mask=None):
        tau = complex(tau)
        x, y = tau.real, tau.imag
        phase = np.exp(1j * np.pi * self.Qvv * x) if x else 1.0
        t = np.exp(-np.pi * y * (self.Qp - self.Qm)) * phase
        t = np.asarray(t * np.ones_like(self.Qp), dtype=complex)
        return t if mask is None else t[mask]

    def __call__(self, tau):
        return complex(pairwise_sum(self.terms(tau)))


def _siegel_one(args):
    L, z, mu, tau, tol, max_points, R0 = args
    R = R0
    tail = None
    for _ in range(9):
        try:
            terms = SiegelTerms(L, z, mu, 2 * R, max_points)
        except TruncationError as exc:
            raise TruncationError(str(exc), radius=2 * R, tail=tail, npoints=exc.npoints) from None
        inner = terms.q <= R
        s_in = complex(pairwise_sum(terms.terms(tau, inner)))
        s_out = complex(pairwise_sum(terms.terms(tau)))
        tail = abs(s_out - s_in)
        if tail < tol / 2:
            return s_out, 2 * R, tail, terms.v.shape[0]
        R *= 2
    raise TruncationError(f"tolerance {tol} not reached; tail {tail:.3g} at R={R}",
                          radius=R, tail=tail, npoints=terms.v.shape[0])


def theta_siegel_scalar(tau, L, z, tol=1e-8, cosets=None, disc=None, workers=1,
                        max_points=2_000_000):
    """Vector-valued Siegel theta sum_v e^{pi i Q(v+,v+) tau + pi i Q(v-,v-) conj(tau)}."""
    tau = complex(tau)
    if tau.imag <= 0:
        raise InvalidArgument("tau must lie in the upper half plane")
    disc, cosets = _coset_list(L, cosets, disc)
    R0 = initial_radius(tol, tau.imag, majorant_at(z).min_eig)
    jobs = [(L, z, disc.rep_float(i), tau, tol, max_points, R0) for i in cosets]
    res = _map(_siegel_one, jobs, workers)
    return ThetaValue(values=[r[0] for r in res], R=max(r[1] for r in res),
                      tail=max(r[2] for r in res), tau=tau, z=z.w,
                      mu=[disc.reps[i] for i in cosets], npoints=sum(r[3] for r in res))


def weight_factor(g, tau, n):
    """(c tau + d)^{n/2} (c conj(tau) + d) for the scalar Siegel theta of signature (n, 2)."""
    a, b, c, d = np.asarray(g).ravel()
    return np.sqrt(complex(c * tau + d)) ** n * (c * np.conj(tau) + d)


def predicted_transform(word, tau, theta_fn, rep, n):
    """rho(word) applied to theta at tau, through the chain of generator identities.

    ``word`` is read as a product g_1 g_2 ... g_k acting on tau; for each generator
    theta(g tau') = weight(g, tau') rho(g) theta(tau').
    """
    mats = {"S": rep.S_matrix, "T": rep.T_matrix}
    value = np.asarray(theta_fn(tau), dtype=complex)
    cur = complex(tau)
    for ch in reversed(word):
        g = word_matrix(ch)
        value = weight_factor(g, cur, n) * (mats[ch] @ value)
        cur = mobius(g, cur)
    return value, cur


def modularity_residual(word, tau, L, z, tol=1e-8, disc=None, workers=1):
    """max_mu |theta(gamma tau) - (weight factor) rho(gamma) theta(tau)| for the scalar theta."""
    if disc is None:
        disc = discriminant_group(L)
    rep = finite_weil(disc)
    n = L.m - 2

    def theta_fn(t):
        return theta_siegel_scalar(t, L, z, tol, disc=disc, workers=workers).vector()

    pred, gtau = predicted_transform(word, tau, theta_fn, rep, n)
    direct = theta_fn(gtau)
    return float(np.max(np.abs(direct - pred)))


def weight_exponent(L, z, ys=(0.5, 0.8, 1.25, 2.0), tol=1e-10, disc=None):
    """Fitted k in |theta(i/y)| = y^k |theta(iy)| (S is unitary, so only the weight shows).

    For signature (n, 2) the expected value is n/2 + 1.
    """
    if disc is None:
        disc = discriminant_group(L)
    ys = np.asarray(ys, dtype=float)
    ratios = []
    for y in ys:
        a = theta_siegel_scalar(1j / y, L, z, tol, disc=disc).vector()
        b = theta_siegel_scalar(1j * y, L, z, tol, disc=disc).vector()
        ratios.append(np.log(np.linalg.norm(a) / np.linalg.norm(b)))
    A = np.stack([np.log(ys), np.ones_like(ys)], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.array(ratios), rcond=None)
    return float(coef[0])


# ---------------------------------------------------------------------------
# Fourier coefficients

def x_period(disc, cosets):
    from math import lcm
    out = 1
    for i in cosets:
        out = lcm(out, disc.qvals[i].denominator)
    return out


def fourier_coefficient(theta_fn, n, lam, y, samples=64, tol=1e-12, x0=0.0):
    """Coefficient of e^{2 pi i n x} in theta(x + iy) on [x0, x0 + lam), by the trapezoid rule.

    The rule is repeated with twice as many samples; a change larger than
    ``tol`` (relative to max(1, |c|)) signals aliasing.
    """
    if samples <= 0 or samples & (samples - 1):
        raise InvalidArgument("samples must be a power of two")

    def rule(N):
        xs = x0 + lam * np.arange(N) / N
        vals = np.array([theta_fn(complex(x, y)) for x in xs])
        w = np.exp(-2j * np.pi * float(n) * xs)
        return complex(pairwise_sum(vals * w) / N)

    c1 = rule(samples)
    c2 = rule(2 * samples)
    if abs(c1 - c2) > tol * max(1.0, abs(c2)):
        raise ResolutionError(f"coefficient moved by {abs(c1 - c2):.3g} when samples doubled")
    return c2


def fourier_direct(L, z, mu, n, y, R):
    """sum over v in mu + L with Q(v) = n and q_z(v) <= R of the Siegel Gaussian at iy."""
    from .quadlattice import count_representations
    M = majorant_at(z)
    _, sols = count_representations(L, [[n]], [mu], M, R)
    if not sols:
        return 0j
    v = np.array([s[0] for s in sols])
    P = negative_projection_matrix(z)
    vm = v @ P.T
    vp = v - vm
    G = z.gram
    Qp = np.einsum("ni,ij,nj->n", vp, G, vp)
    Qm = np.einsum("ni,ij,nj->n", vm, G, vm)
    return complex(pairwise_sum(np.exp(-np.pi * y * (Qp - Qm)).astype(complex)))


# ---------------------------------------------------------------------------
# form-valued theta

def _form_terms(L, mu, chart, u, R, max_points=None):
    z = chart.point(u)
    M = majorant_at(z)
    v = enumerate_ball(L, mu, M, R)
    if max_points is not None and v.shape[0] > max_points:
        raise TruncationError(f"{v.shape[0]} lattice points exceed the cap {max_points}",
                              radius=R, npoints=v.shape[0])
    return v, M.q(v)


def form_theta_fixed(tau, vectors, chart, u, kind="phi"):
    """sum over the given vectors of omega(g_tau) phi(v) (or psi), as a GradedForm."""
    gram = chart.gram
    f0 = phi0_at if kind == "phi" else psi0_at
    terms = [gtau_translate(tau, v[None, :], lambda s: f0(chart, u, s), gram).array for v in vectors]
    if not terms:
        return GradedForm(chart.n)
    return GradedForm(chart.n, pairwise_sum(np.array(terms)))


def theta_form(tau, L, mu, chart, u=None, tol=1e-6, kind="phi", max_points=20000):
    """Truncated theta(tau; mu + L) of phi (or psi) at the chart point u, genus 1.

    Includes the det(y)^{-m/4} normalization of the definition.
    """
    tau = complex(tau)
    u = np.zeros(chart.n, dtype=complex) if u is None else np.asarray(u, dtype=complex)
    m = chart.gram.shape[0]
    y = tau.imag
    R = initial_radius(tol, y, majorant_at(chart.point(u)).min_eig)
    tail = np.inf
    for _ in range(9):
        v, q = _form_terms(L, mu, chart, u, 2 * R, max_points)
        inner = v[q <= R]
        s_in = form_theta_fixed(tau, inner, chart, u, kind) * y ** (-m / 4)
        s_out = form_theta_fixed(tau, v, chart, u, kind) * y ** (-m / 4)
        tail = (s_out - s_in).norm()
        if tail < tol / 2:
            return ThetaValue(values=[s_out], R=2 * R, tail=tail, tau=tau,
                              z=chart.w(u), mu=[mu], npoints=v.shape[0])
        R *= 2
    raise TruncationError(f"form theta: tail {tail:.3g} above {tol}", radius=R, tail=tail)


def lowering_residual(L, mu, chart, u, tau, R=3.0, dtau_rel=1e-4, step=1e-3, vectors=None):
    """|2 i y^2 d/dtaubar Theta_phi - del delbar Theta_psi| on a fixed set of lattice vectors.

    Theta_phi = sum e^{pi i Q(v,v) tau} phi0(y^{1/2} v) and
    Theta_psi = y sum e^{pi i Q(v,v) tau} psi0(y^{1/2} v).
    """
    tau = complex(tau)
    u = np.asarray(u, dtype=complex)
    if vectors is None:
        vectors, _ = _form_terms(L, mu, chart, u, R)
    m = chart.gram.shape[0]

    def theta_phi(t, uu):
        return form_theta_fixed(t, vectors, chart, uu, "phi") * t.imag ** (-m / 4)

    def theta_psi(t, uu):
        return form_theta_fixed(t, vectors, chart, uu, "psi") * t.imag ** (1 - m / 4)

    y = tau.imag
    h = dtau_rel * y
    dx = (theta_phi(tau + h, u) - theta_phi(tau - h, u)) / (2 * h)
    dy = (theta_phi(tau + 1j * h, u) - theta_phi(tau - 1j * h, u)) / (2 * h)
    lhs = (dx + dy * 1j) * (0.5 * 2j * y**2)
    rhs = ddbar_numeric(FormField(lambda uu: theta_psi(tau, uu), chart.n), chart, u, step)
    return (lhs - rhs).norm()


# ---------------------------------------------------------------------------
# decay and localization

def fit_decay(ts, logs):
    """Least-squares fit logs ~ -a t^2 + b log t + c; returns (a, b, c)."""
    ts = np.asarray(ts, dtype=float)
    A = np.stack([-ts**2, np.log(ts), np.ones_like(ts)], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.asarray(logs, dtype=float), rcond=None)
    return tuple(float(c) for c in coef)


def growth_degree(chart, u, vs, ts=None, rel=1e-8):
    """Degree in t of the polynomial e^{2 pi t^2 sum h} phi0(t v), by a least-squares fit.

    The prefactor of the Gaussian is a polynomial in t; this fits every
    coefficient against t^0..t^{2n+2} and returns the highest power whose
    contribution on the grid is above ``rel`` of the largest value.
    """
    n = chart.n
    if ts is None:
        ts = np.linspace(1.0, 20.0, 40)
    ts = np.asarray(ts, dtype=float)
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    from .chernforms import phi0_split
    rows = []
    for t in ts:
        _, P = phi0_split(chart, u, vs * t)
        rows.append(P.array)
    Y = np.array(rows)
    deg = 2 * n + 2
    x = ts / ts.max()  # scaled variable keeps the Vandermonde system well conditioned
    V = np.vander(x, deg + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, Y, rcond=None)
    size = np.max(np.abs(coef), axis=1)
    top = np.max(np.abs(Y))
    present = np.flatnonzero(size > rel * top)
    return int(present.max()) if present.size else 0


def localization_scan(chart, us, vs, ts):
    """Rows (path index, t, h, log|phi0(t v)|) along a path of chart points."""
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    rows = []
    for k, u in enumerate(us):
        h = sum(h_section_jet(chart, v, u).value.real for v in vs)
        logs = decay_profile(chart, u, vs, ts)
        for t, lg in zip(ts, logs):
            rows.append({"index": k, "t": float(t), "h": float(h), "log_abs_phi0": float(lg)})
    return rows


def decay_rate(chart, u, vs, ts=None):
    """(fitted Gaussian rate, predicted 2 pi sum h) for |phi0(t v)| at one point."""
    if ts is None:
        ts = np.linspace(1.0, 20.0, 40)
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    h = sum(h_section_jet(chart, v, u).value.real for v in vs)
    a, _, _ = fit_decay(ts, decay_profile(chart, u, vs, ts))
    return a, 2 * np.pi * h


def decay_slope(chart, u, vs, ts=None):
    """Slope in log t of log|phi(t v)| + 2 pi q_z(t v) (polynomial growth exponent)."""
    if ts is None:
        ts = np.linspace(1.0, 20.0, 40)
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    z = chart.point(u)
    M = majorant_at(z)
    q = sum(M.q(v) for v in vs)
    G = chart.gram
    Qsum = sum(v @ G @ v for v in vs)
    logs = decay_profile(chart, u, vs, ts) - np.pi * Qsum * ts**2 + 2 * np.pi * q * ts**2
    A = np.stack([np.log(ts), np.ones_like(ts)], axis=1)
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    return float(coef[0])


__all__ = [
    "SiegelTerms", "ThetaValue", "decay_rate", "decay_slope", "fit_decay", "growth_degree", "form_theta_fixed",
    "fourier_coefficient", "fourier_direct", "localization_scan", "lowering_residual",
    "modularity_residual", "pairwise_sum", "predicted_transform", "theta_form",
    "theta_siegel_scalar", "weight_factor", "x_period",
]

