"""Weil representation data: real Weil indices, the finite representation rho_L,
the g_tau action on Gaussian-type forms, and the weight m/2 automorphy factor."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import sqrtm

from .errors import InvalidArgument
from .quadlattice import QuadraticSpace


def hilbert_real(a, b):
    """Real Hilbert symbol (a, b): -1 iff both are negative."""
    if a == 0 or b == 0:
        raise InvalidArgument("Hilbert symbol needs nonzero arguments")
    return -1 if (a < 0 and b < 0) else 1


def _signature(space):
    if isinstance(space, QuadraticSpace):
        return space.signature
    if isinstance(space, tuple):
        return space
    ev = np.linalg.eigvalsh(np.asarray(space, dtype=float))
    if np.any(np.abs(ev) < 1e-12):
        raise InvalidArgument("quadratic space is degenerate")
    return int(np.sum(ev > 0)), int(np.sum(ev < 0))


def chi_V(a, space):
    """chi_V(a) = ((-1)^{m(m-1)/2} det V, a)_R, using only the sign of det V."""
    s, t = _signature(space)
    m = s + t
    det_sign = (-1) ** t
    return hilbert_real((-1) ** (m * (m - 1) // 2) * det_sign, a)


def gamma_R(a):
    """gamma_R(a psi) as an exponent k of e^{2 pi i k / 8}."""
    if a == 0:
        raise InvalidArgument("gamma_R needs a nonzero scalar")
    return 1 if a > 0 else -1


@dataclass(frozen=True)
class RealWeilData:
    m: int
    signature: tuple
    chi_minus1: int
    gamma_exp: int  # gamma_V = exp(2 pi i gamma_exp / 8)

    @property
    def gamma_V(self):
        return np.exp(2j * np.pi * self.gamma_exp / 8)


def gamma_factors(space):
    """Weil index gamma_V = gamma(det V, psi/2) gamma(psi/2)^m h(V), as an 8th root of unity.

    For a diagonal form with t negative entries: gamma(det, psi/2) contributes -2
    when t is odd, gamma(psi/2)^m contributes m, and the Hasse invariant
    prod_{i<j} (a_i, a_j) = (-1)^{t(t-1)/2} contributes 4 when that is -1.
    """
    s, t = _signature(space)
    m = s + t
    det_sign = (-1) ** t
    k = (gamma_R(det_sign * 0.5) - gamma_R(0.5)) + m * gamma_R(0.5)
    if (t * (t - 1) // 2) % 2:
        k += 4
    return RealWeilData(m=m, signature=(s, t), chi_minus1=chi_V(-1, (s, t)), gamma_exp=k % 8)


# ---------------------------------------------------------------------------
# finite Weil representation

def _e(x):
    """exp(2 pi i x) for a rational x, reduced mod 1 first."""
    x = Fraction(x)
    x -= x.numerator // x.denominator
    if (8 * x).denominator == 1:
        return _EIGHTH[int(8 * x)]
    return np.exp(2j * np.pi * float(x))


_h = np.sqrt(0.5)
_EIGHTH = [1 + 0j, _h + _h * 1j, 1j, -_h + _h * 1j, -1 + 0j, -_h - _h * 1j, -1j, _h - _h * 1j]


@dataclass
class FiniteWeilRep:
    disc: object
    r: int
    S_matrix: np.ndarray
    T_matrix: np.ndarray
    data: RealWeilData


def finite_weil(disc, r=1, data=None):
    """S and T for rho_L on C[(L'/L)^r]; for r > 1 the Kronecker powers."""
    if data is None:
        data = gamma_factors(disc.lattice.space)
    N = disc.order
    T1 = np.diag([_e(q) for q in disc.qvals])
    phase = np.exp(-2j * np.pi * data.gamma_exp / 8)
    S1 = phase / np.sqrt(N) * np.array([[_e(-x) for x in row] for row in disc.pairings])
    S, T = S1, T1
    for _ in range(r - 1):
        S = np.kron(S, S1)
        T = np.kron(T, T1)
    return FiniteWeilRep(disc=disc, r=r, S_matrix=S, T_matrix=T, data=data)


def neg_permutation(disc, r=1):
    P1 = np.zeros((disc.order, disc.order))
    for i, j in enumerate(disc.neg_index):
        P1[j, i] = 1.0
    P = P1
    for _ in range(r - 1):
        P = np.kron(P, P1)
    return P


def relation_residuals(rep):
    """Residuals of unitarity, S^2 = c * (gamma -> -gamma), (ST)^3 = S^2 and T^level = 1."""
    S, T = rep.S_matrix, rep.T_matrix
    I = np.eye(S.shape[0])
    S2 = S @ S
    P = neg_permutation(rep.disc, rep.r)
    c = S2[np.argmax(np.abs(P[:, 0])), 0]
    ST = S @ T
    level = rep.disc.level
    return {
        "unitary_S": float(np.max(np.abs(S @ S.conj().T - I))),
        "unitary_T": float(np.max(np.abs(T @ T.conj().T - I))),
        "S2_central": float(np.max(np.abs(S2 - c * P))),
        "S2_phase": complex(c),
        "ST3": float(np.max(np.abs(ST @ ST @ ST - S2))),
        "T_level": float(np.max(np.abs(np.linalg.matrix_power(T, level) - I))),
    }


# ---------------------------------------------------------------------------
# g_tau action and automorphy factors

@dataclass(frozen=True)
class TauPoint:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.atleast_2d(np.asarray(self.y, dtype=float))
        if x.shape != y.shape or x.shape[0] != x.shape[1]:
            raise InvalidArgument("tau must be a square matrix")
        if not np.allclose(y, y.T) or not np.allclose(x, x.T):
            raise InvalidArgument("tau must be symmetric")
        if np.linalg.eigvalsh(y)[0] <= 0:
            raise InvalidArgument("Im(tau) must be positive definite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def scalar(cls, tau):
        tau = complex(tau)
        return cls(np.array([[tau.real]]), np.array([[tau.imag]]))

    @property
    def r(self):
        return self.x.shape[0]

    @property
    def tau(self):
        return self.x + 1j * self.y


def _as_tau(tau):
    return tau if isinstance(tau, TauPoint) else TauPoint.scalar(tau)


def gram_of(vs, gram):
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    return np.einsum("ij,jk,lk->il", vs, gram, vs)


def gtau_translate(tau, vs, evaluator, gram):
    """omega(g_tau) f(v) = det(y)^{m/4} e^{pi i tr(Gram(v) tau)} f0(v a), a = y^{1/2}.

    ``evaluator`` returns the Gaussian-free part f0 (phi0 or psi0) at a
    tuple of vectors.  For r = 1 this is y^{m/4} e^{pi i Q(v,v) tau} f0(y^{1/2} v).
    """
    tau = _as_tau(tau)
    vs = np.atleast_2d(np.asarray(vs, dtype=float))
    if vs.shape[0] != tau.r:
        raise InvalidArgument(f"need {tau.r} vectors for genus {tau.r}")
    gram = np.asarray(gram, dtype=float)
    m = gram.shape[0]
    if tau.r == 1:
        y = tau.y[0, 0]
        a = np.array([[np.sqrt(y)]])
        det_y = y
    else:
        a = np.real(sqrtm(tau.y))
        det_y = np.linalg.det(tau.y)
    gv = gram_of(vs, gram)
    # real and imaginary parts of the exponent kept apart so that tau = i is exact
    re = -np.pi * np.trace(gv @ tau.y)
    im = np.pi * np.trace(gv @ tau.x)
    factor = det_y ** (m / 4) * np.exp(re) * (np.exp(1j * im) if im else 1.0)
    scaled = a.T @ vs  # rows (v a)_j = sum_i v_i a_ij
    return evaluator(scaled) * factor


def automorphy_j(gamma, tau, m, sign=1):
    """j_{m/2}((gamma, sign sqrt(c tau + d)), tau) = (sign sqrt(c tau + d))^m, principal branch."""
    a, b, c, d = np.asarray(gamma, dtype=int).ravel()
    if a * d - b * c != 1:
        raise InvalidArgument("gamma must lie in SL2(Z)")
    if sign not in (1, -1):
        raise InvalidArgument("metaplectic sign must be +-1")
    root = np.sqrt(complex(c * tau + d))
    return (sign * root) ** m


S_GEN = np.array([[0, -1], [1, 0]])
T_GEN = np.array([[1, 1], [0, 1]])


def word_matrix(word):
    g = np.eye(2, dtype=int)
    for ch in word:
        g = g @ {"S": S_GEN, "T": T_GEN}[ch]
    return g


def mobius(g, tau):
    a, b, c, d = np.asarray(g).ravel()
    return (a * tau + b) / (c * tau + d)
