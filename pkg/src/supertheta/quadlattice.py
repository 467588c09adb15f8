"""Rational quadratic spaces, even lattices, discriminant groups and enumeration."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import GeometryInconsistencyError, InvalidArgument


def to_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise InvalidArgument(f"not a rational number: {x!r}") from None
    if isinstance(x, (float, np.floating)):
        f = Fraction(float(x)).limit_denominator(10**6)
        if abs(float(f) - float(x)) > 1e-12:
            raise InvalidArgument(f"float {x!r} is not a small rational")
        return f
    raise InvalidArgument(f"cannot read {x!r} as a rational")


def frac_matrix(a):
    rows = [[to_fraction(x) for x in row] for row in a]
    if any(len(r) != len(rows[0]) for r in rows):
        raise InvalidArgument("ragged matrix")
    return rows


def frac_det(a):
    a = [list(r) for r in a]
    m = len(a)
    det = Fraction(1)
    for i in range(m):
        piv = next((r for r in range(i, m) if a[r][i] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != i:
            a[i], a[piv] = a[piv], a[i]
            det = -det
        det *= a[i][i]
        for r in range(i + 1, m):
            f = a[r][i] / a[i][i]
            if f:
                for c in range(i, m):
                    a[r][c] -= f * a[i][c]
    return det


def frac_inv(a):
    m = len(a)
    aug = [list(a[i]) + [Fraction(int(i == j)) for j in range(m)] for i in range(m)]
    for i in range(m):
        piv = next((r for r in range(i, m) if aug[r][i] != 0), None)
        if piv is None:
            raise InvalidArgument("matrix is singular")
        aug[i], aug[piv] = aug[piv], aug[i]
        p = aug[i][i]
        aug[i] = [x / p for x in aug[i]]
        for r in range(m):
            if r != i and aug[r][i] != 0:
                f = aug[r][i]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[i])]
    return [row[m:] for row in aug]


def frac_matmul(a, b):
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0))
             for j in range(len(b[0]))] for i in range(len(a))]


def frac_T(a):
    return [list(r) for r in zip(*a)]


def _mod1(x):
    return x - (x.numerator // x.denominator)


class QuadraticSpace:
    """(V, Q) with rational Gram matrix; Q(v) = Q(v, v) / 2."""

    def __init__(self, gram):
        g = frac_matrix(gram)
        m = len(g)
        if any(len(r) != m for r in g):
            raise InvalidArgument("gram matrix must be square")
        for i in range(m):
            for j in range(i):
                if g[i][j] != g[j][i]:
                    raise InvalidArgument(f"gram matrix is not symmetric at entry ({i + 1},{j + 1})")
        if frac_det(g) == 0:
            raise InvalidArgument("gram matrix is degenerate")
        self.m = m
        self.gram_exact = g
        self.gram = np.array([[float(x) for x in r] for r in g])
        ev = np.linalg.eigvalsh(self.gram)
        self.signature = (int(np.sum(ev > 0)), int(np.sum(ev < 0)))

    @property
    def det(self):
        return frac_det(self.gram_exact)

    def pair(self, v, w):
        return np.asarray(v) @ self.gram @ np.asarray(w)

    def __repr__(self):
        return f"QuadraticSpace(m={self.m}, signature={self.signature})"


class Lattice:
    """Even lattice spanned by the columns of ``basis`` (default: standard basis)."""

    def __init__(self, space, basis=None):
        if not isinstance(space, QuadraticSpace):
            space = QuadraticSpace(space)
        self.space = space
        m = space.m
        if basis is None:
            b = [[Fraction(int(i == j)) for j in range(m)] for i in range(m)]
        else:
            b = frac_matrix(basis)
            if len(b) != m or any(len(r) != m for r in b):
                raise InvalidArgument("basis must be an m x m matrix")
            if frac_det(b) == 0:
                raise InvalidArgument("lattice basis is singular")
        self.basis_exact = b
        self.basis = np.array([[float(x) for x in r] for r in b])
        self.gram_exact = frac_matmul(frac_matmul(frac_T(b), space.gram_exact), b)
        for i in range(m):
            for j in range(m):
                x = self.gram_exact[i][j]
                if x.denominator != 1 or (i == j and x.numerator % 2):
                    raise InvalidArgument(
                        f"lattice is not even integral: Q(b{i + 1}, b{j + 1}) = {x}")
        self.gram_int = np.array([[int(x) for x in r] for r in self.gram_exact], dtype=np.int64)

    @property
    def m(self):
        return self.space.m

    def vector(self, coords):
        """V-coordinates of the lattice-coordinate vector ``coords``."""
        return self.basis @ np.asarray(coords, dtype=float)

    def __repr__(self):
        return f"Lattice(m={self.m}, signature={self.space.signature})"


class DiscGroup:
    def __init__(self, lattice, coords):
        self.lattice = lattice
        self.coords = coords  # lattice coordinates, tuples of Fractions in [0, 1)
        G = lattice.gram_exact
        m = lattice.m

        def pair(x, y):
            return sum((x[i] * G[i][j] * y[j] for i in range(m) for j in range(m)), Fraction(0))

        self.qvals = [_mod1(pair(x, x) / 2) for x in coords]
        self.pairings = [[_mod1(pair(x, y)) for y in coords] for x in coords]
        lookup = {x: i for i, x in enumerate(coords)}
        self.neg_index = [lookup[tuple(_mod1(-c) for c in x)] for x in coords]
        self._lookup = lookup
        B = lattice.basis_exact
        self.reps = [[sum((B[i][j] * x[j] for j in range(m)), Fraction(0)) for i in range(m)]
                     for x in coords]

    @property
    def order(self):
        return len(self.coords)

    @property
    def level(self):
        """Smallest N with N * Q(gamma) integral for all gamma."""
        from math import lcm
        out = 1
        for q in self.qvals:
            out = lcm(out, q.denominator)
        return out

    def rep_float(self, i):
        return np.array([float(x) for x in self.reps[i]])

    def coords_float(self, i):
        return np.array([float(x) for x in self.coords[i]])

    def index_of(self, coords):
        key = tuple(_mod1(to_fraction(c)) for c in coords)
        try:
            return self._lookup[key]
        except KeyError:
            raise InvalidArgument(f"{coords} is not in the dual lattice") from None

    def __repr__(self):
        return f"DiscGroup(order={self.order})"


def discriminant_group(L):
    """L^dual / L by closing the dual basis (columns of G_L^{-1}) under addition mod L."""
    Ginv = frac_inv(L.gram_exact)
    m = L.m
    gens = [tuple(_mod1(Ginv[i][j]) for i in range(m)) for j in range(m)]
    zero = tuple(Fraction(0) for _ in range(m))
    elems = {zero}
    frontier = [zero]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = tuple(_mod1(a + b) for a, b in zip(x, g))
                if y not in elems:
                    elems.add(y)
                    nxt.append(y)
        frontier = nxt
    coords = sorted(elems)
    assert coords[0] == zero
    if len(coords) != abs(frac_det(L.gram_exact)):
        raise GeometryInconsistencyError("discriminant group order does not match |det|")
    return DiscGroup(L, coords)


class Majorant:
    """Positive definite q(v) = v^T M v / 2."""

    def __init__(self, M):
        M = np.array(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise InvalidArgument("majorant must be a square matrix")
        M = 0.5 * (M + M.T)
        try:
            np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            raise InvalidArgument("majorant is not positive definite") from None
        self.M = M

    def q(self, v):
        v = np.asarray(v, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", v, self.M, v)

    @property
    def min_eig(self):
        return float(np.linalg.eigvalsh(self.M)[0])


def majorant_gram(Q, h_quadratic):
    """M = Q_gram + 2 h for the Gram matrix h of v -> h_z(s_v)."""
    gram = Q.gram if isinstance(Q, QuadraticSpace) else np.asarray(Q, dtype=float)
    M = gram + 2 * np.asarray(h_quadratic, dtype=float)
    try:
        return Majorant(M)
    except InvalidArgument:
        raise GeometryInconsistencyError("Q + 2h is not positive definite") from None


def _coset_coords(L, mu):
    """Lattice coordinates of mu (given in V-coordinates); None means 0."""
    if mu is None:
        return np.zeros(L.m)
    mu = np.asarray([float(to_fraction(x)) if not isinstance(x, float) else x for x in mu])
    return np.linalg.solve(L.basis, mu)


def _fincke_pohst(A, c, bound):
    """Integer k with (c+k)^T A (c+k) <= bound, lexicographic order in k."""
    m = A.shape[0]
    # q(x) = sum_i d_i (x_i + sum_{j>i} u_ij x_j)^2 from A = U^T D U, U unit upper
    C = np.linalg.cholesky(A).T  # A = C^T C, C upper triangular
    d = np.diag(C) ** 2
    U = C / np.diag(C)[:, None]
    out = []
    k = np.zeros(m, dtype=np.int64)
    x = np.zeros(m)
    slack = 1e-9 * max(1.0, bound)

    def rec(i, remaining):
        # center of coordinate i given x_{i+1..m-1}
        s = U[i, i + 1:] @ x[i + 1:]
        half = np.sqrt(max(remaining, 0.0) / d[i]) + slack
        lo = int(np.ceil(-s - half - c[i]))
        hi = int(np.floor(-s + half - c[i]))
        if i == 0:
            if lo <= hi:
                block = np.empty((hi - lo + 1, m), dtype=np.int64)
                block[:] = k
                block[:, 0] = np.arange(lo, hi + 1)
                out.append(block)
            return
        for ki in range(lo, hi + 1):
            k[i] = ki
            x[i] = c[i] + ki
            t = x[i] + s
            rec(i - 1, remaining - d[i] * t * t)
        x[i] = 0.0
        k[i] = 0

    rec(m - 1, bound + slack)
    if not out:
        return np.zeros((0, m), dtype=np.int64)
    ks = np.concatenate(out)
    order = np.lexsort(ks.T[::-1])
    return ks[order]


def enumerate_ball(L, mu, M, R, return_coords=False):
    """All v in mu + L with q_M(v) <= R, in lexicographic order of lattice coordinates.

    ``mu`` is given in V-coordinates (or None for the zero coset).
    """
    if R < 0:
        raise InvalidArgument("radius must be nonnegative")
    if not isinstance(M, Majorant):
        M = Majorant(M)
    A = L.basis.T @ M.M @ L.basis
    c = _coset_coords(L, mu)
    # the lexicographic order uses the integer shifts k; ties cannot occur
    ks = _fincke_pohst(A, c, 2.0 * R)
    x = c + ks
    qv = 0.5 * np.einsum("ni,ij,nj->n", x, A, x)
    keep = qv <= R
    x = x[keep]
    v = x @ L.basis.T
    if return_coords:
        return v, x
    return v


def count_representations(L, T, mu, M, R):
    """Tuples (v_1..v_r) in mu + L^r with Gram(v) = 2T and q(v_i) <= R.

    ``mu`` is a tuple of r coset vectors (V-coordinates, None for 0).
    Returns ``(count, tuples)`` with each tuple an (r, m) float array.
    """
    T = frac_matrix(np.atleast_2d(np.array(T, dtype=object)).tolist())
    r = len(T)
    if mu is None:
        mu = [None] * r
    if len(mu) != r:
        raise InvalidArgument(f"need {r} coset vectors, got {len(mu)}")
    Binv = frac_inv(L.basis_exact)
    m = L.m
    cand = []
    for i in range(r):
        if mu[i] is None:
            cexact = [Fraction(0)] * m
        else:
            mi = [to_fraction(x) for x in mu[i]]
            cexact = [sum((Binv[a][b] * mi[b] for b in range(m)), Fraction(0)) for a in range(m)]
        den = 1
        for x in cexact:
            den = den * x.denominator // np.gcd(den, x.denominator)
        _, xs = enumerate_ball(L, mu[i], M, R, return_coords=True)
        ks = np.rint(xs - np.array([float(x) for x in cexact])).astype(np.int64)
        num = [[int(cexact[a] * den) + den * int(k[a]) for a in range(m)] for k in ks]
        cand.append((num, den, xs))
    G = [[int(x) for x in row] for row in L.gram_int]

    def qexact(a, da, b, db):
        s = sum(a[p] * G[p][q] * b[q] for p in range(m) for q in range(m))
        return Fraction(s, da * db)

    filtered = []
    for i, (num, den, xs) in enumerate(cand):
        keep = [j for j, a in enumerate(num) if qexact(a, den, a, den) == 2 * T[i][i]]
        filtered.append([(num[j], den, xs[j]) for j in keep])

    sols = []

    def rec(i, chosen):
        if i == r:
            sols.append(np.array([L.basis @ c[2] for c in chosen]))
            return
        for cand_i in filtered[i]:
            ok = all(qexact(cand_i[0], cand_i[1], cj[0], cj[1]) == 2 * T[i][j]
                     for j, cj in enumerate(chosen))
            if ok:
                rec(i + 1, chosen + [cand_i])

    rec(0, [])
    return len(sols), sols
