"""The invariant suite: one named check per invariant, each returning a measured residual.

``run_suite(seed)`` evaluates every check with a generator derived from a single
seed and reports pass/fail against the check's tolerance.  The checks are
sized to run in about a minute in total; the acceptance tests run the larger
versions.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import chernforms as cf
from .errors import InvalidArgument
from .exterior import GradedForm, conjugate, project_degree, wedge
from .geometry import (
    Chart,
    base_point,
    group_apply,
    h_section_jet,
    majorant_at,
    negative_projection,
    random_orthogonal,
)
from .oracles import dense_super_exp
from .quadlattice import Lattice, QuadraticSpace, discriminant_group, enumerate_ball
from .sampling import (
    random_form,
    random_operator,
    random_rotation,
    random_setup,
    moderate_vector,
    random_vector,
    reference_lattice,
)
from .superalg import (
    SuperOperator,
    koszul_differential,
    koszul_rotate,
    mul,
    super_exp,
    supertrace,
    tensor,
)
from .theta import (
    decay_rate,
    growth_degree,
    fourier_coefficient,
    fourier_direct,
    form_theta_fixed,
    modularity_residual,
    SiegelTerms,
    theta_siegel_scalar,
)
from .weilrep import finite_weil, gtau_translate, relation_residuals


@dataclass
class Check:
    name: str
    module: str
    tol: float
    func: object  # rng -> residual


@dataclass
class CheckResult:
    name: str
    module: str
    residual: float
    tol: float
    passed: bool
    seconds: float
    error: str = ""

    def as_dict(self):
        return dict(self.__dict__)


CHECKS = []


def check(name, module, tol):
    def deco(f):
        CHECKS.append(Check(name, module, tol, f))
        return f
    return deco


def _rel(a, b):
    return (a - b).norm() / max(1e-300, b.norm(), a.norm())


# exterior ------------------------------------------------------------------

@check("graded_commutativity", "exterior", 1e-14)
def _graded_comm(rng):
    worst = 0.0
    for n in (1, 2, 3):
        for p in range(2 * n + 1):
            for q in range(2 * n + 1 - p):
                a, b = random_form(rng, n, p), random_form(rng, n, q)
                lhs, rhs = wedge(a, b), wedge(b, a) * (-1) ** (p * q)
                worst = max(worst, (lhs - rhs).norm() / max(1.0, lhs.norm()))
    return worst


@check("wedge_associativity", "exterior", 1e-12)
def _assoc(rng):
    worst = 0.0
    for n in (1, 2, 3):
        for _ in range(5):
            a, b, c = (random_form(rng, n) for _ in range(3))
            worst = max(worst, (wedge(wedge(a, b), c) - wedge(a, wedge(b, c))).norm())
    return worst


@check("degree_decomposition", "exterior", 1e-15)
def _decomp(rng):
    worst = 0.0
    for n in (1, 2, 3):
        a = random_form(rng, n)
        total = GradedForm(n)
        for k in range(2 * n + 1):
            pk = project_degree(a, k)
            worst = max(worst, (project_degree(pk, k) - pk).norm())
            total = total + pk
        worst = max(worst, (total - a).norm())
    return worst


@check("conjugate_wedge", "exterior", 1e-12)
def _conj(rng):
    worst = 0.0
    for n in (1, 2, 3):
        a, b = random_form(rng, n), random_form(rng, n)
        worst = max(worst, (conjugate(wedge(a, b)) - wedge(conjugate(a), conjugate(b))).norm())
        worst = max(worst, (conjugate(conjugate(a)) - a).norm())
    return worst


# superalg ------------------------------------------------------------------

@check("supertrace_cyclicity", "superalg", 1e-12)
def _str_cyc(rng):
    worst = 0.0
    for n in (1, 2):
        for rk in (1, 2):
            for pm in (0, 1):
                for pn in (0, 1):
                    M = random_operator(rng, rk, n, pm)
                    N = random_operator(rng, rk, n, pn)
                    lhs = supertrace(mul(M, N))
                    rhs = supertrace(mul(N, M)) * (-1) ** (pm * pn)
                    worst = max(worst, (lhs - rhs).norm() / max(1.0, lhs.norm()))
    return worst


@check("koszul_square_zero", "superalg", 0.0)
def _kos_sq(rng):
    # real scalar sections: s_i s_j - s_j s_i cancels exactly in floating point
    worst = 0.0
    for n in (0, 1, 2):
        for r in (1, 2, 3):
            secs = tuple((float(rng.normal()),) for _ in range(r))
            d = koszul_differential(secs, n)
            worst = max(worst, mul(d, d).norm())
    return worst


@check("koszul_square_zero_forms", "superalg", 8 * np.finfo(float).eps)
def _kos_sq_forms(rng):
    # complex or form-valued sections: zero up to rounding of products and sums
    worst = 0.0
    for n in (1, 2):
        for r in (2, 3):
            secs = tuple((random_form(rng, n, 0) + random_form(rng, n, 2),) for _ in range(r))
            d = koszul_differential(secs, n)
            worst = max(worst, mul(d, d).norm() / d.norm() ** 2)
    return worst


@check("super_exp_dense", "superalg", 1e-10)
def _sexp(rng):
    worst = 0.0
    for n in (1, 2):
        for rk in (1, 2):
            M = random_operator(rng, rk, n, 0, scale=0.5, nilpotent=True)
            a, b = super_exp(M), dense_super_exp(M)
            worst = max(worst, (a - b).norm() / b.norm())
    return worst


@check("chern_product_law", "superalg", 1e-10)
def _chern_prod(rng):
    worst = 0.0
    for n in (1, 2):
        A = random_operator(rng, 1, n, 0, scale=0.5, nilpotent=True)
        B = random_operator(rng, 1, n, 0, scale=0.5, nilpotent=True)
        big = tensor(A, SuperOperator.identity(B.fiber, n)) + tensor(SuperOperator.identity(A.fiber, n), B)
        lhs = supertrace(super_exp(big))
        rhs = wedge(supertrace(super_exp(A)), supertrace(super_exp(B)))
        worst = max(worst, (lhs - rhs).norm() / max(1.0, rhs.norm()))
    return worst


# quadlattice ---------------------------------------------------------------

@check("majorant_bounds", "quadlattice", 1e-10)
def _maj(rng):
    worst = 0.0
    for n in (1, 2, 3):
        gram, chart, u = random_setup(rng, n)
        M = majorant_at(chart.point(u))
        v = rng.normal(size=(1000, n + 2))
        q = M.q(v)
        half = 0.5 * np.einsum("ni,ij,nj->n", v, gram, v)
        worst = max(worst, float(np.max(np.abs(half) - q)) / 1.0, 0.0)
        if np.any(q <= 0):
            return np.inf
    return worst


@check("enumeration_symmetry", "quadlattice", 0.0)
def _enum_sym(rng):
    bad = 0
    for name in ("D1", "UU", "D2"):
        L = reference_lattice(name)
        disc = discriminant_group(L)
        z = base_point(L.space.gram)
        M = majorant_at(z)
        for i in range(disc.order):
            if disc.neg_index[i] != i:
                continue
            v = enumerate_ball(L, disc.rep_float(i), M, 6.0)
            a = {tuple(np.round(x, 9)) for x in v}
            b = {tuple(np.round(-x, 9) + 0.0) for x in v}
            bad += len(a ^ b)
    return float(bad)


@check("discriminant_order", "quadlattice", 0.0)
def _disc_order(rng):
    bad = done = 0
    while done < 10:
        m = int(rng.integers(1, 4))
        off = rng.integers(-1, 2, size=(m, m))
        G = np.triu(off, 1)
        G = G + G.T + np.diag(rng.choice([-4, -2, 2, 4], size=m))
        det = round(abs(np.linalg.det(G)))
        if det == 0 or det > 128:
            continue
        L = Lattice(QuadraticSpace(G.tolist()))
        bad += abs(discriminant_group(L).order - det)
        done += 1
    return float(bad)


# geometry ------------------------------------------------------------------

@check("h_consistency", "geometry", 1e-10)
def _h_cons(rng):
    worst = 0.0
    for n in (1, 2, 3):
        gram, chart, u = random_setup(rng, n)
        z = chart.point(u)
        for v in rng.normal(size=(100, n + 2)):
            vm = negative_projection(z, v)
            h1 = h_section_jet(chart, v, u).value.real
            h2 = -vm @ gram @ vm
            worst = max(worst, abs(h1 - h2) / max(1.0, abs(h2)))
    return worst


@check("majorant_positive", "geometry", 0.0)
def _maj_pos(rng):
    bad = 0
    for k in range(20):
        _, chart, u = random_setup(rng, 1 + k % 3)
        try:
            np.linalg.cholesky(majorant_at(chart.point(u)).M)
        except np.linalg.LinAlgError:
            bad += 1
    return float(bad)


@check("jets_vs_differences", "geometry", 1e-6)
def _jets(rng):
    worst = 0.0
    step = 1e-4
    for n in (1, 2):
        gram, chart, u = random_setup(rng, n)
        v = rng.normal(size=n + 2)
        J = h_section_jet(chart, v, u)

        def f(uu):
            return h_section_jet(chart, v, uu).value

        for k in range(2 * n):
            e = np.zeros(n, dtype=complex)
            e[k % n] = step if k < n else 1j * step
            fd = (f(u + e) - f(u - e)) / (2 * step)
            worst = max(worst, abs(fd - J.grad[k]) / max(1.0, abs(J.grad[k])))
            fd2 = (f(u + e) - 2 * f(u) + f(u - e)) / step**2
            worst = max(worst, abs(fd2 - J.hess[k, k]) / max(1.0, abs(J.hess[k, k])))
    return worst


@check("h_equivariance", "geometry", 1e-10)
def _h_eq(rng):
    worst = 0.0
    for n in (1, 2, 3):
        gram, chart, u = random_setup(rng, n)
        z = chart.point(u)
        g = random_orthogonal(gram, rng)
        gz = group_apply(g, z)
        cz, cgz = Chart(z), Chart(gz)
        zero = np.zeros(n)
        for v in rng.normal(size=(10, n + 2)):
            a = h_section_jet(cz, v, zero).value.real
            b = h_section_jet(cgz, g @ v, zero).value.real
            worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    return worst


# chernforms ----------------------------------------------------------------

@check("phi_closed", "chernforms", 1e-5)
def _closed(rng):
    worst = 0.0
    for n in (2, 3):
        _, chart, u = random_setup(rng, n)
        v = moderate_vector(rng, chart, u)
        worst = max(worst, cf.closedness_residual(chart, u, v))
    return worst


@check("phi_invariance", "chernforms", 1e-8)
def _ginv(rng):
    worst = 0.0
    for n in (1, 2):
        gram, chart, u = random_setup(rng, n)
        z = chart.point(u)
        chart_z = Chart(z)
        v = random_vector(rng, chart_z, np.zeros(n))
        for _ in range(2):
            g = random_orthogonal(gram, rng)
            chart_gz = Chart(group_apply(g, z))
            worst = max(worst, cf.invariance_residual(g, chart_z, np.zeros(n), chart_gz, [v]))
    return worst


@check("phi_rotation", "chernforms", 1e-10)
def _rot(rng):
    worst = 0.0
    for n in (2, 3):
        _, chart, u = random_setup(rng, n)
        vs = np.array([moderate_vector(rng, chart, u) for _ in range(2)])
        h = random_rotation(rng, 2)
        a = cf.phi_at(chart, u, h.T @ vs)
        b = cf.phi_at(chart, u, vs)
        worst = max(worst, _rel(a, b))
        # the Koszul isometry intertwines the two differentials
        secs = tuple((GradedForm.scalar(n, s),) for s in rng.normal(size=2) + 1j * rng.normal(size=2))
        rot, W = koszul_rotate(h, secs, n)
        lhs = mul(mul(W, koszul_differential(tuple(tuple(r) for r in rot), n)), _inverse(W))
        worst = max(worst, (lhs - koszul_differential(secs, n)).norm())
    return worst


def _inverse(W):
    return SuperOperator.from_matrix(W.fiber, W.n, np.linalg.inv(W.entries[:, :, 0]))


@check("phi_wedge_law", "chernforms", 1e-10)
def _wedge_law(rng):
    worst = 0.0
    for n in (2, 3):
        _, chart, u = random_setup(rng, n)
        v1, v2 = moderate_vector(rng, chart, u), moderate_vector(rng, chart, u)
        gauss = np.exp(-np.pi * (v1 @ chart.gram @ v1 + v2 @ chart.gram @ v2))
        tensor_route = cf.phi0_tensor_route(chart, u, [v1, v2]) * gauss
        wedge_route = wedge(cf.phi_at(chart, u, v1), cf.phi_at(chart, u, v2))
        worst = max(worst, _rel(tensor_route, wedge_route))
        worst = max(worst, _rel(cf.phi_at(chart, u, [v1, v2]), wedge_route))
    return worst


@check("phi_low_degrees_vanish", "chernforms", 64 * np.finfo(float).eps)
def _low(rng):
    worst = 0.0
    for n in (1, 2):
        _, chart, u = random_setup(rng, n)
        for r in (1, 2):
            vs = [random_vector(rng, chart, u) for _ in range(r)]
            c, P = cf.phi0_split(chart, u, vs)
            scale = max(1.0, float(np.max(np.abs(super_exp(cf.superconnection_curvature(chart, u, vs)).entries))) * np.exp(-c.real))
            for k in range(r):
                worst = max(worst, project_degree(P, 2 * k).norm() / scale)
    return worst


@check("phi_zero_todd", "chernforms", 1e-10)
def _todd(rng):
    worst = 0.0
    for n in (1, 2, 3):
        _, chart, u = random_setup(rng, n)
        ctop, tinv = cf.chern_top_todd(chart, u)
        a = cf.phi_at(chart, u, np.zeros(n + 2))
        worst = max(worst, (a - wedge(ctop, tinv)).norm())
    return worst


@check("phi_reality", "chernforms", 1e-12)
def _real(rng):
    worst = 0.0
    for n in (1, 2, 3):
        _, chart, u = random_setup(rng, n)
        v = random_vector(rng, chart, u)
        a = cf.phi_at(chart, u, v)
        worst = max(worst, cf.reality_residual(a) / max(1.0, a.norm()))
    return worst


@check("phi_explicit_degree2", "chernforms", 1e-8)
def _explicit(rng):
    worst = 0.0
    for n in (1, 2, 3):
        _, chart, u = random_setup(rng, n)
        v = random_vector(rng, chart, u)
        a = project_degree(cf.phi_at(chart, u, v), 2)
        worst = max(worst, _rel(a, cf.phi2_explicit(chart, u, v)))
    return worst


@check("phi_growth_degree", "chernforms", 0.0)
def _growth(rng):
    # excess of the polynomial growth exponent of phi(tv) e^{2 pi q(tv)} over 2n
    worst = -np.inf
    for n in (1, 2, 3):
        _, chart, u = random_setup(rng, n)
        v = random_vector(rng, chart, u, hmin=0.2)
        worst = max(worst, growth_degree(chart, u, [v]) - 2 * n)
    return max(worst, 0.0)


@check("phi_localization_rate", "chernforms", 0.10)
def _loc(rng):
    worst = 0.0
    for n in (1, 2):
        _, chart, u = random_setup(rng, n)
        v = random_vector(rng, chart, u, hmin=0.2)
        a, pred = decay_rate(chart, u, [v], np.linspace(1.0, 20.0, 20))
        worst = max(worst, abs(a - pred) / pred)
    return worst


# weilrep -------------------------------------------------------------------

@check("rho_relations", "weilrep", 1e-12)
def _rho(rng):
    worst = 0.0
    for name in ("A1", "A2", "D1", "UU", "D2"):
        res = relation_residuals(finite_weil(discriminant_group(reference_lattice(name))))
        worst = max(worst, *(v for k, v in res.items() if k != "S2_phase"))
    return worst


@check("gtau_identity_at_i", "weilrep", 0.0)
def _gtau(rng):
    worst = 0.0
    _, chart, u = random_setup(rng, 2)
    v = random_vector(rng, chart, u)
    a = gtau_translate(1j, v[None, :], lambda s: cf.phi0_at(chart, u, s), chart.gram)
    b = cf.phi_at(chart, u, v)
    worst = max(worst, (a - b).norm())
    return worst


# theta ---------------------------------------------------------------------

@check("truncation_soundness", "theta", 1e-8)
def _trunc(rng):
    L = reference_lattice("D1")
    z = base_point(L.space.gram)
    tv = theta_siegel_scalar(0.2 + 1j, L, z, 1e-8)
    disc = discriminant_group(L)
    worst = 0.0
    for k, i in enumerate(range(disc.order)):
        again = SiegelTerms(L, z, disc.rep_float(i), 2 * tv.R)(tv.tau)
        worst = max(worst, abs(again - tv.values[k]))
    return worst


@check("theta_form_closed", "theta", 1e-4)
def _theta_closed(rng):
    L = reference_lattice("UU")
    chart = Chart(base_point(L.space.gram))
    u = np.array([0.1 - 0.05j, 0.05 + 0.02j])
    vecs = enumerate_ball(L, None, majorant_at(chart.point(u)), 2.0)
    field = cf.FormField(lambda uu: form_theta_fixed(0.2 + 1j, vecs, chart, uu), 2)
    return cf.exterior_derivative_numeric(field, chart, u).norm()


@check("theta_coset_symmetry", "theta", 1e-12)
def _theta_sym(rng):
    L = reference_lattice("D1")
    disc = discriminant_group(L)
    z = base_point(L.space.gram)
    tv = theta_siegel_scalar(0.3 + 1.1j, L, z, 1e-10, disc=disc)
    return max(abs(tv.values[i] - tv.values[disc.neg_index[i]]) for i in range(disc.order))


@check("scalar_modularity", "theta", 1e-6)
def _modular(rng):
    worst = 0.0
    for name in ("UU", "D1"):
        L = reference_lattice(name)
        z = Chart(base_point(L.space.gram)).point(np.full(L.m - 2, 0.1 + 0.05j))
        disc = discriminant_group(L)
        for tau in (1j, 2j, 0.25 + 1j):
            for word in ("S", "T"):
                worst = max(worst, modularity_residual(word, tau, L, z, 1e-8, disc=disc))
    return worst


@check("fourier_equivalence", "theta", 1e-8)
def _fourier(rng):
    L = reference_lattice("UU")
    z = Chart(base_point(L.space.gram)).point(np.array([0.1, -0.05j]))
    R = 20.0
    terms = SiegelTerms(L, z, None, R)
    worst = 0.0
    for n in (0, 1, 2):
        c = fourier_coefficient(terms, n, 1, 1.0)
        d = fourier_direct(L, z, None, n, 1.0, R)
        worst = max(worst, abs(c - d) / max(abs(d), 1e-300))
    return worst


@check("determinism", "theta", 0.0)
def _det(rng):
    L = reference_lattice("D2")
    z = base_point(L.space.gram)
    a = theta_siegel_scalar(0.3 + 1.1j, L, z, 1e-8, workers=1).values
    b = theta_siegel_scalar(0.3 + 1.1j, L, z, 1e-8, workers=1).values
    c = theta_siegel_scalar(0.3 + 1.1j, L, z, 1e-8, workers=4).values
    return float(sum(x != y for x, y in zip(a, b)) + sum(x != y for x, y in zip(a, c)))


# ---------------------------------------------------------------------------

def run_check(chk, seed):
    # every check gets its own stream, derived from the one seed and its position
    rng = np.random.default_rng([seed, CHECKS.index(chk)])
    t0 = time.perf_counter()
    try:
        res = float(chk.func(rng))
        err = ""
    except Exception as exc:  # a crash counts as a failure of that invariant
        res, err = float("nan"), f"{type(exc).__name__}: {exc}"
    dt = time.perf_counter() - t0
    passed = bool(np.isfinite(res) and res <= chk.tol)
    return CheckResult(chk.name, chk.module, res, chk.tol, passed, dt, err)


def run_suite(seed=0, names=None):
    if names is not None:
        unknown = set(names) - {c.name for c in CHECKS}
        if unknown:
            raise InvalidArgument(f"unknown checks: {', '.join(sorted(unknown))}")
    chosen = CHECKS if names is None else [c for c in CHECKS if c.name in set(names)]
    return [run_check(c, seed) for c in chosen]
