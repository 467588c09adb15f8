"""Form-valued endomorphisms of an exterior algebra fiber, with Koszul signs.

An operator on ``E = Lambda F`` (``rkF = rank F``) whose entries are forms in
``n`` complex variables is stored as an array of shape ``(D, D, 4**n)`` with
``D = 2**rkF``.  Entry ``[i, j]`` is the form multiplying the elementary
matrix ``E_ij``; basis monomials of ``Lambda F`` are ordered by degree, then
lexicographically.
"""
from __future__ import annotations

import contextlib
import itertools
from functools import lru_cache

import numpy as np

from .errors import DecompositionError, InvalidArgument
from .exterior import GradedForm, degree_array, wedge_arrays

# testing hook: when set, mul() forgets the Koszul sign
_MUTATE_KOSZUL = False


@contextlib.contextmanager
def mutated_koszul():
    """Temporarily inject a sign error into the Koszul product (for testing the tests)."""
    global _MUTATE_KOSZUL
    old = _MUTATE_KOSZUL
    _MUTATE_KOSZUL = True
    try:
        yield
    finally:
        _MUTATE_KOSZUL = old


@lru_cache(maxsize=None)
def _fiber_basis(rk):
    basis = []
    for k in range(rk + 1):
        for c in itertools.combinations(range(rk), k):
            basis.append(sum(1 << g for g in c))
    return tuple(basis)


class SuperFiber:
    """The super vector space Lambda F for F of rank ``rkF``."""

    __slots__ = ("rkF", "basis", "index", "degrees", "parity")

    def __init__(self, rkF):
        rkF = int(rkF)
        if rkF < 0:
            raise InvalidArgument("rank must be nonnegative")
        self.rkF = rkF
        self.basis = _fiber_basis(rkF)
        self.index = {m: i for i, m in enumerate(self.basis)}
        self.degrees = np.array([bin(m).count("1") for m in self.basis])
        self.parity = self.degrees % 2

    @property
    def dim(self):
        return len(self.basis)

    @property
    def dims(self):
        return [int(np.sum(self.degrees == k)) for k in range(self.rkF + 1)]

    def __eq__(self, other):
        return isinstance(other, SuperFiber) and other.rkF == self.rkF

    def __hash__(self):
        return hash(("SuperFiber", self.rkF))

    def __repr__(self):
        return f"SuperFiber(rkF={self.rkF})"


class SuperOperator:
    __slots__ = ("fiber", "n", "entries")

    def __init__(self, fiber, n, entries):
        if isinstance(fiber, int):
            fiber = SuperFiber(fiber)
        self.fiber = fiber
        self.n = int(n)
        e = np.array(entries, dtype=complex)
        shape = (fiber.dim, fiber.dim, 1 << (2 * self.n))
        if e.shape != shape:
            raise InvalidArgument(f"entries must have shape {shape}, got {e.shape}")
        e.setflags(write=False)
        self.entries = e

    # constructors
    @classmethod
    def zero(cls, fiber, n):
        return cls(fiber, n, np.zeros((fiber.dim, fiber.dim, 1 << (2 * n)), dtype=complex))

    @classmethod
    def identity(cls, fiber, n):
        return cls.from_matrix(fiber, n, np.eye(fiber.dim))

    @classmethod
    def from_matrix(cls, fiber, n, mat):
        """Operator with constant (degree-0) entries."""
        e = np.zeros((fiber.dim, fiber.dim, 1 << (2 * n)), dtype=complex)
        e[:, :, 0] = mat
        return cls(fiber, n, e)

    @classmethod
    def form_times_identity(cls, fiber, form):
        e = np.zeros((fiber.dim, fiber.dim, form.array.size), dtype=complex)
        e[np.arange(fiber.dim), np.arange(fiber.dim)] = form.array
        return cls(fiber, form.n, e)

    @classmethod
    def from_form_matrix(cls, fiber, n, rows):
        """Build from a nested list of GradedForm / scalar entries."""
        e = np.zeros((fiber.dim, fiber.dim, 1 << (2 * n)), dtype=complex)
        for i, row in enumerate(rows):
            for j, x in enumerate(row):
                if isinstance(x, GradedForm):
                    e[i, j] = x.array
                else:
                    e[i, j, 0] = x
        return cls(fiber, n, e)

    # accessors
    def entry(self, i, j):
        return GradedForm(self.n, self.entries[i, j])

    def parity(self, atol=0.0):
        """'even', 'odd' or 'mixed' (the zero operator counts as even)."""
        deg = degree_array(self.n)
        p = self.fiber.parity
        tot = (p[:, None, None] + p[None, :, None] + deg[None, None, :]) % 2
        nz = np.abs(self.entries) > atol
        has_even = bool(np.any(nz & (tot == 0)))
        has_odd = bool(np.any(nz & (tot == 1)))
        if has_even and has_odd:
            return "mixed"
        return "odd" if has_odd else "even"

    def degree_part(self, k):
        deg = degree_array(self.n)
        return SuperOperator(self.fiber, self.n, np.where(deg == k, self.entries, 0))

    def norm(self):
        return float(np.max(np.abs(self.entries))) if self.entries.size else 0.0

    def allclose(self, other, atol=1e-12):
        _check_compatible(self, other)
        return bool(np.allclose(self.entries, other.entries, rtol=0.0, atol=atol))

    # arithmetic
    def __add__(self, other):
        _check_compatible(self, other)
        return SuperOperator(self.fiber, self.n, self.entries + other.entries)

    def __sub__(self, other):
        _check_compatible(self, other)
        return SuperOperator(self.fiber, self.n, self.entries - other.entries)

    def __neg__(self):
        return SuperOperator(self.fiber, self.n, -self.entries)

    def __mul__(self, c):
        if np.isscalar(c):
            return SuperOperator(self.fiber, self.n, self.entries * c)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, c):
        return SuperOperator(self.fiber, self.n, self.entries / c)

    def __matmul__(self, other):
        return mul(self, other)

    def __repr__(self):
        return f"SuperOperator(rkF={self.fiber.rkF}, n={self.n}, parity={self.parity()})"


def _check_compatible(a, b):
    if not isinstance(a, SuperOperator) or not isinstance(b, SuperOperator):
        raise InvalidArgument("expected SuperOperator operands")
    if a.fiber != b.fiber:
        raise InvalidArgument(f"fiber mismatch: rkF={a.fiber.rkF} vs rkF={b.fiber.rkF}")
    if a.n != b.n:
        raise InvalidArgument(f"base dimension mismatch: n={a.n} vs n={b.n}")


def mul(M, N):
    """Koszul product: (w (x) u)(e (x) v) = (-1)^{deg(e) |u|} (w ^ e) (x) uv."""
    _check_compatible(M, N)
    n = M.n
    p = M.fiber.parity
    deg = degree_array(n)
    out = np.zeros_like(M.entries)
    for rp in (0, 1):
        rows = np.flatnonzero(p == rp)
        if rows.size == 0:
            continue
        if _MUTATE_KOSZUL:
            twisted = N.entries
        else:
            # sign depends on the parity of E_ij = p_i + p_j and on deg of N_jk
            flip = ((rp + p)[:, None] * deg[None, :]) % 2
            twisted = N.entries * np.where(flip, -1.0, 1.0)[:, None, :]
        prod = wedge_arrays(M.entries[rows][:, :, None, :], twisted[None, :, :, :], n)
        out[rows] = prod.sum(axis=1)
    return SuperOperator(M.fiber, n, out)


def supertrace(M):
    sign = np.where(M.fiber.parity == 1, -1.0, 1.0)
    diag = M.entries[np.arange(M.fiber.dim), np.arange(M.fiber.dim)]
    return GradedForm(M.n, (sign[:, None] * diag).sum(axis=0))


def _even_check(M, atol):
    scale = max(1.0, M.norm())
    deg = degree_array(M.n)
    p = M.fiber.parity
    tot = (p[:, None, None] + p[None, :, None] + deg[None, None, :]) % 2
    if np.any(np.abs(M.entries[tot == 1]) > atol * scale):
        raise InvalidArgument("super_exp needs an even operator")


def super_exp_split(M, atol=1e-12):
    """Return ``(c, P)`` with exp(M) = e^c * P, where M = c*id + nilpotent."""
    _even_check(M, atol)
    d0 = M.entries[:, :, 0]
    c = complex(d0[0, 0]) if M.fiber.dim else 0j
    scale = max(1.0, abs(c))
    if np.max(np.abs(d0 - c * np.eye(M.fiber.dim))) > atol * scale:
        raise DecompositionError("degree-0 part of the operator is not a multiple of the identity")
    nil_entries = np.array(M.entries)
    nil_entries[:, :, 0] = 0
    nil = SuperOperator(M.fiber, M.n, nil_entries)
    total = SuperOperator.identity(M.fiber, M.n)
    term = total
    k = 1
    while True:
        term = mul(term, nil) / k
        if not np.any(term.entries):
            break
        total = total + term
        k += 1
    return c, total


def super_exp(M, atol=1e-12):
    c, P = super_exp_split(M, atol)
    return P * np.exp(c)


# Koszul complexes ---------------------------------------------------------

def _as_form(x, n):
    if isinstance(x, GradedForm):
        if x.n != n:
            raise InvalidArgument("section entries live on different base dimensions")
        return x.array
    out = np.zeros(1 << (2 * n), dtype=complex)
    out[0] = x
    return out


def _section_table(sections, n):
    rows = [list(s) if np.ndim(s) or isinstance(s, (list, tuple)) else [s] for s in sections]
    if not rows:
        raise InvalidArgument("need at least one section")
    rk = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != rk:
            raise InvalidArgument(f"section {i} has length {len(r)}, expected {rk}")
    if n is None:
        n = next((x.n for r in rows for x in r if isinstance(x, GradedForm)), 0)
    return [[_as_form(x, n) for x in r] for r in rows], rk, n


def contraction(fiber, g, n=0):
    """The odd operator iota_g: e_I -> (-1)^l e_{I - g}, l = position of g in I."""
    e = np.zeros((fiber.dim, fiber.dim, 1 << (2 * n)), dtype=complex)
    for col, m in enumerate(fiber.basis):
        if m >> g & 1:
            l = bin(m & ((1 << g) - 1)).count("1")
            e[fiber.index[m ^ (1 << g)], col, 0] = -1.0 if l % 2 else 1.0
    return SuperOperator(fiber, n, e)


def creation(fiber, g, n=0):
    """The odd operator e_g ^ (adjoint of ``contraction`` for an orthonormal basis)."""
    c = contraction(fiber, g, n)
    return SuperOperator(fiber, n, np.transpose(c.entries, (1, 0, 2)))


def koszul_differential(sections, n=None):
    """Contraction differential on Lambda(F^r) defined by r sections of F^dual.

    ``sections[i][a]`` is the value of the i-th section on the a-th frame vector
    of F (a number or a GradedForm).  Generator ``i*rkF + a`` of F^r is the a-th
    frame vector of the i-th copy.
    """
    table, rk, n = _section_table(sections, n)
    r = len(table)
    fiber = SuperFiber(r * rk)
    e = np.zeros((fiber.dim, fiber.dim, 1 << (2 * n)), dtype=complex)
    for col, m in enumerate(fiber.basis):
        gens = [g for g in range(fiber.rkF) if m >> g & 1]
        for l, g in enumerate(gens):
            row = fiber.index[m ^ (1 << g)]
            val = table[g // rk][g % rk]
            e[row, col] += -val if l % 2 else val
    return SuperOperator(fiber, n, e)


def induced_metric(h_F):
    """Hermitian metric on Lambda F induced from ``h_F`` on F (Gram minors)."""
    h_F = np.atleast_2d(np.asarray(h_F, dtype=complex))
    fiber = SuperFiber(h_F.shape[0])
    G = np.zeros((fiber.dim, fiber.dim), dtype=complex)
    for i, a in enumerate(fiber.basis):
        ga = [g for g in range(fiber.rkF) if a >> g & 1]
        for j, b in enumerate(fiber.basis):
            gb = [g for g in range(fiber.rkF) if b >> g & 1]
            if len(ga) != len(gb):
                continue
            G[i, j] = 1.0 if not ga else np.linalg.det(h_F[np.ix_(ga, gb)])
    return G


def adjoint(M, metric):
    """Adjoint G^{-1} M^dagger G of an operator with degree-0 entries."""
    G = np.asarray(metric, dtype=complex)
    if G.shape != (M.fiber.dim, M.fiber.dim):
        raise InvalidArgument("metric has the wrong size")
    if not np.allclose(G, G.conj().T, atol=1e-12):
        raise InvalidArgument("metric is not hermitian")
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise InvalidArgument("metric is not positive definite") from None
    if np.any(M.entries[:, :, 1:]):
        raise InvalidArgument("adjoint needs degree-0 entries")
    A = M.entries[:, :, 0]
    return SuperOperator.from_matrix(M.fiber, M.n, np.linalg.solve(G, A.conj().T @ G))


def exterior_power_matrix(A):
    """Matrix of Lambda(A) on the (degree, lex) monomial basis."""
    A = np.asarray(A, dtype=complex)
    fiber = SuperFiber(A.shape[0])
    W = np.zeros((fiber.dim, fiber.dim), dtype=complex)
    for j, b in enumerate(fiber.basis):
        cols = [g for g in range(fiber.rkF) if b >> g & 1]
        for i, a in enumerate(fiber.basis):
            rows = [g for g in range(fiber.rkF) if a >> g & 1]
            if len(rows) != len(cols):
                continue
            W[i, j] = 1.0 if not rows else np.linalg.det(A[np.ix_(rows, cols)])
    return W


def koszul_rotate(h, sections, n=None, atol=1e-12):
    """Rotate r sections by a special-unitary ``h``.

    Returns ``(rotated, W)`` where rotated[i] = sum_j h[i, j] sections[j] and W is
    the isometry of Lambda(F^r) with W d(rotated) W^{-1} = d(sections).
    """
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    r = h.shape[0]
    if h.shape != (r, r):
        raise InvalidArgument("h must be square")
    if not np.allclose(h @ h.conj().T, np.eye(r), atol=atol, rtol=0):
        raise InvalidArgument("h is not unitary")
    if abs(np.linalg.det(h) - 1) > atol:
        raise InvalidArgument("h does not have determinant 1")
    table, rk, n = _section_table(sections, n)
    if len(table) != r:
        raise InvalidArgument(f"expected {r} sections, got {len(table)}")
    rotated = []
    for i in range(r):
        row = []
        for a in range(rk):
            acc = sum(h[i, j] * table[j][a] for j in range(r))
            row.append(GradedForm(n, acc))
        rotated.append(row)
    W = exterior_power_matrix(np.kron(h.T, np.eye(rk)))
    return rotated, SuperOperator.from_matrix(SuperFiber(r * rk), n, W)


def number_operator(fiber, n=0):
    """N acts on Lambda^k F by -k."""
    return SuperOperator.from_matrix(fiber, n, np.diag(-fiber.degrees.astype(float)))


# graded tensor products ---------------------------------------------------

def _pair_index(f1, f2):
    big = SuperFiber(f1.rkF + f2.rkF)
    idx = np.empty((f1.dim, f2.dim), dtype=int)
    for a, ma in enumerate(f1.basis):
        for k, mk in enumerate(f2.basis):
            # e_I ^ e'_K is already in canonical order
            idx[a, k] = big.index[ma | (mk << f1.rkF)]
    return big, idx


def embed_left(M, other):
    """M (x) 1 on Lambda F (x) Lambda F' = Lambda(F + F')."""
    big, idx = _pair_index(M.fiber, other)
    e = np.zeros((big.dim, big.dim, M.entries.shape[2]), dtype=complex)
    for b in range(other.dim):
        e[np.ix_(idx[:, b], idx[:, b])] = M.entries
    return SuperOperator(big, M.n, e)


def embed_right(other, N):
    """1 (x) N, with the sign (-1)^{|u'| p_a} from moving N past e_a."""
    big, idx = _pair_index(other, N.fiber)
    p2 = N.fiber.parity
    upar = (p2[:, None] + p2[None, :]) % 2
    e = np.zeros((big.dim, big.dim, N.entries.shape[2]), dtype=complex)
    for a in range(other.dim):
        sign = np.where(upar * other.parity[a] % 2, -1.0, 1.0)
        e[np.ix_(idx[a, :], idx[a, :])] = N.entries * sign[:, :, None]
    return SuperOperator(big, N.n, e)


def tensor(M, N):
    """Graded tensor product M (x) N as an operator on Lambda(F + F')."""
    if M.n != N.n:
        raise InvalidArgument(f"base dimension mismatch: n={M.n} vs n={N.n}")
    return mul(embed_left(M, N.fiber), embed_right(M.fiber, N))
