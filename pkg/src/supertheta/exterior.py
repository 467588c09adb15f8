"""Complexified exterior algebra of the cotangent space at a point.

A form on an n-dimensional complex chart is stored as a dense complex vector
of length ``4**n``.  Entry ``mask`` is the coefficient of the monomial whose
generators are the set bits of ``mask``: bits ``0..n-1`` are ``du_1..du_n`` and
bits ``n..2n-1`` are ``dubar_1..dubar_n``.  Monomials are always kept in that
generator order, so every stored coefficient refers to a canonically ordered
wedge product.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument

ATOL = 1e-14


@lru_cache(maxsize=None)
def _tables(n):
    size = 1 << (2 * n)
    masks = np.arange(size)
    low = (1 << n) - 1
    deg = np.array([bin(k).count("1") for k in range(size)])
    p = np.array([bin(k & low).count("1") for k in range(size)])
    q = deg - p

    ia, ib, ic, sg = [], [], [], []
    for a in range(size):
        for b in range(size):
            if a & b:
                continue
            # each generator of b moves left past the larger generators of a
            swaps = sum(bin(a >> (j + 1)).count("1") for j in range(2 * n) if b >> j & 1)
            ia.append(a)
            ib.append(b)
            ic.append(a | b)
            sg.append(-1.0 if swaps % 2 else 1.0)
    order = np.argsort(ic, kind="stable")
    ia = np.array(ia)[order]
    ib = np.array(ib)[order]
    ic = np.array(ic)[order]
    sg = np.array(sg)[order]
    starts = np.searchsorted(ic, masks)

    conj_index = np.empty(size, dtype=int)
    conj_sign = np.empty(size)
    for k in range(size):
        i, j = k & low, k >> n
        conj_index[k] = j | (i << n)
        conj_sign[k] = -1.0 if (bin(i).count("1") * bin(j).count("1")) % 2 else 1.0
    for arr in (deg, p, q, ia, ib, ic, sg, starts, conj_index, conj_sign):
        arr.setflags(write=False)
    return {
        "size": size, "deg": deg, "p": p, "q": q,
        "ia": ia, "ib": ib, "sg": sg, "starts": starts,
        "conj_index": conj_index, "conj_sign": conj_sign,
    }


def degree_array(n):
    """Total degree of every monomial index for dimension ``n``."""
    return _tables(n)["deg"]


def wedge_arrays(x, y, n):
    """Wedge product of coefficient arrays, broadcasting over leading axes."""
    t = _tables(n)
    prod = x[..., t["ia"]] * y[..., t["ib"]] * t["sg"]
    return np.add.reduceat(prod, t["starts"], axis=-1)


def mask_of(n, hol=(), anti=()):
    mask = 0
    for j in hol:
        mask |= 1 << j
    for j in anti:
        mask |= 1 << (n + j)
    return mask


def _monomial_sign(gens):
    """Sign of the permutation sorting ``gens`` (a sequence of distinct ints)."""
    inversions = sum(1 for a, b in itertools.combinations(gens, 2) if a > b)
    return -1.0 if inversions % 2 else 1.0


class GradedForm:
    """An element of the exterior algebra on du_j, dubar_j at one point.

    Instances are treated as immutable; arithmetic returns new objects.
    """

    __slots__ = ("n", "_c")

    def __init__(self, n, coeffs=None):
        n = int(n)
        if n < 0:
            raise InvalidArgument("dimension must be nonnegative")
        self.n = n
        size = 1 << (2 * n)
        if coeffs is None:
            c = np.zeros(size, dtype=complex)
        elif isinstance(coeffs, dict):
            c = np.zeros(size, dtype=complex)
            low = (1 << n) - 1
            for (i, j), val in coeffs.items():
                if i > low or j > low:
                    raise InvalidArgument(f"index subset ({i}, {j}) out of range for n={n}")
                c[i | (j << n)] += val
        else:
            c = np.array(coeffs, dtype=complex)
            if c.shape != (size,):
                raise InvalidArgument(f"expected {size} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        self._c = c

    # construction helpers
    @classmethod
    def scalar(cls, n, value=1.0):
        c = np.zeros(1 << (2 * n), dtype=complex)
        c[0] = value
        return cls(n, c)

    @classmethod
    def monomial(cls, n, hol=(), anti=(), coeff=1.0):
        """``coeff * du_{hol...} ^ dubar_{anti...}`` in the order given (0-based)."""
        gens = list(hol) + [n + j for j in anti]
        if len(set(gens)) != len(gens):
            return cls(n)
        if any(g < 0 or g >= 2 * n for g in gens):
            raise InvalidArgument("generator index out of range")
        c = np.zeros(1 << (2 * n), dtype=complex)
        c[sum(1 << g for g in gens)] = coeff * _monomial_sign(gens)
        return cls(n, c)

    @property
    def array(self):
        return self._c

    @property
    def coeffs(self):
        """Nonzero coefficients keyed by (holomorphic bitmask, antiholomorphic bitmask)."""
        low = (1 << self.n) - 1
        return {(int(k) & low, int(k) >> self.n): complex(self._c[k])
                for k in np.flatnonzero(self._c)}

    def __getitem__(self, key):
        i, j = key
        return complex(self._c[i | (j << self.n)])

    # arithmetic
    def _check(self, other):
        if not isinstance(other, GradedForm):
            return NotImplemented
        if other.n != self.n:
            raise InvalidArgument(f"dimension mismatch: n={self.n} vs n={other.n}")
        return other

    def __add__(self, other):
        if np.isscalar(other):
            other = GradedForm.scalar(self.n, other)
        if self._check(other) is NotImplemented:
            return NotImplemented
        return GradedForm(self.n, self._c + other._c)

    __radd__ = __add__

    def __neg__(self):
        return GradedForm(self.n, -self._c)

    def __sub__(self, other):
        if np.isscalar(other):
            other = GradedForm.scalar(self.n, other)
        if self._check(other) is NotImplemented:
            return NotImplemented
        return GradedForm(self.n, self._c - other._c)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return GradedForm(self.n, self._c * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return GradedForm(self.n, self._c / other)
        return NotImplemented

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, GradedForm) or other.n != self.n:
            return NotImplemented
        return bool(np.all(np.abs(self._c - other._c) <= ATOL))

    __hash__ = None

    def allclose(self, other, atol=ATOL, rtol=0.0):
        self._check(other)
        return bool(np.allclose(self._c, other._c, atol=atol, rtol=rtol))

    def norm(self):
        """Max-norm of the coefficients."""
        return float(np.max(np.abs(self._c))) if self._c.size else 0.0

    def degrees(self, atol=0.0):
        deg = degree_array(self.n)
        return sorted({int(d) for d in deg[np.abs(self._c) > atol]})

    def bidegrees(self, atol=0.0):
        t = _tables(self.n)
        nz = np.abs(self._c) > atol
        return sorted({(int(a), int(b)) for a, b in zip(t["p"][nz], t["q"][nz])})

    def is_pp(self, atol=ATOL):
        t = _tables(self.n)
        return bool(np.all(np.abs(self._c[t["p"] != t["q"]]) <= atol))

    def __repr__(self):
        terms = []
        for (i, j), c in sorted(self.coeffs.items()):
            hol = [f"du{k + 1}" for k in range(self.n) if i >> k & 1]
            anti = [f"dub{k + 1}" for k in range(self.n) if j >> k & 1]
            name = "^".join(hol + anti) or "1"
            terms.append(f"({c:.6g}){name}")
        return f"GradedForm(n={self.n}: " + (" + ".join(terms) or "0") + ")"


def du(j, n):
    """The holomorphic generator du_{j+1} (0-based ``j``)."""
    return GradedForm.monomial(n, hol=(j,))


def dubar(j, n):
    return GradedForm.monomial(n, anti=(j,))


def wedge(a, b):
    if a.n != b.n:
        raise InvalidArgument(f"dimension mismatch: n={a.n} vs n={b.n}")
    return GradedForm(a.n, wedge_arrays(a.array, b.array, a.n))


def project_degree(a, k):
    deg = degree_array(a.n)
    return GradedForm(a.n, np.where(deg == k, a.array, 0))


def project_bidegree(a, p, q):
    t = _tables(a.n)
    return GradedForm(a.n, np.where((t["p"] == p) & (t["q"] == q), a.array, 0))


def star_rescale(a, atol=ATOL):
    """Multiply each (p,p)-component by (-2 pi i)^(-p)."""
    t = _tables(a.n)
    off = t["p"] != t["q"]
    if np.any(np.abs(a.array[off]) > atol):
        raise InvalidArgument("star_rescale needs a sum of (p,p)-forms")
    factors = (-2j * np.pi) ** (-t["p"].astype(float))
    return GradedForm(a.n, np.where(off, 0, a.array * factors))


def conjugate(a):
    """Complex conjugate: du_I ^ dubar_J -> (-1)^{|I||J|} du_J ^ dubar_I with conj coefficients."""
    t = _tables(a.n)
    out = np.zeros_like(a.array)
    out[t["conj_index"]] = np.conj(a.array) * t["conj_sign"]
    return GradedForm(a.n, out)


def exp_nilpotent(a):
    """exp of a form without degree-0 part (the series terminates)."""
    if abs(a.array[0]) != 0:
        raise InvalidArgument("exp_nilpotent needs a form with zero degree-0 part")
    out = GradedForm.scalar(a.n, 1.0)
    term = out
    k = 1
    while True:
        term = wedge(term, a) / k
        if not np.any(term.array):
            return out
        out = out + term
        k += 1


@lru_cache(maxsize=None)
def _subsets_by_size(total):
    by = {}
    for k in range(total + 1):
        by[k] = [sum(1 << g for g in c) for c in itertools.combinations(range(total), k)]
    return by


def pullback(a, jac):
    """Pull ``a`` back along a holomorphic map with Jacobian ``jac`` at the point.

    ``jac`` has shape (n_target, n_source): du'_j = sum_k jac[j, k] du_k, where
    ``a`` lives on the target (dimension n_target).
    """
    jac = np.asarray(jac, dtype=complex)
    nt, ns = jac.shape
    if nt != a.n:
        raise InvalidArgument(f"Jacobian has {nt} rows but the form has n={a.n}")
    big = np.zeros((2 * nt, 2 * ns), dtype=complex)
    big[:nt, :ns] = jac
    big[nt:, ns:] = np.conj(jac)
    out = np.zeros(1 << (2 * ns), dtype=complex)
    src_by = _subsets_by_size(2 * ns)
    deg = degree_array(nt)
    for s in np.flatnonzero(a.array):
        k = int(deg[s])
        if k > 2 * ns:
            continue
        rows = [g for g in range(2 * nt) if s >> g & 1]
        coeff = a.array[s]
        if k == 0:
            out[0] += coeff
            continue
        for tmask in src_by[k]:
            cols = [g for g in range(2 * ns) if tmask >> g & 1]
            out[tmask] += coeff * np.linalg.det(big[np.ix_(rows, cols)])
    return GradedForm(ns, out)
