"""Axisymmetric functions on S^N in the Gegenbauer eigenbasis of -Laplacian.

A function on S^N that is invariant under rotations fixing the north pole is a
profile f(t) of t = theta_{N+1} in [-1, 1].  On such profiles the
Laplace-Beltrami operator reads (1 - t^2) f'' - N t f', and its eigenfunctions
are Gegenbauer polynomials of parameter (N - 1)/2 with eigenvalues
k (k + N - 1).  Everything here works with the orthonormal versions of these
polynomials with respect to the weight (1 - t^2)^{(N-2)/2}.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import exp, lgamma, pi, sqrt

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .errors import DomainError, EndpointZero, NonSimpleZero, QuadratureError

NODAL_GRID = 4096
SIMPLICITY_TOL = 1e-6
VALUE_FLOOR = 1e-10


def _recurrence(alpha: float, n: int) -> np.ndarray:
    """Off-diagonal Jacobi-matrix entries b_1..b_n (b[0] = 0) for Gegenbauer(alpha)."""
    k = np.arange(1, n + 1, dtype=float)
    b2 = k * (k + 2 * alpha - 1) / (4 * (k + alpha) * (k + alpha - 1))
    return np.concatenate([[0.0], np.sqrt(b2)])


def _weight_mass(alpha: float) -> float:
    # int_{-1}^{1} (1 - t^2)^{alpha - 1/2} dt
    return sqrt(pi) * exp(lgamma(alpha + 0.5) - lgamma(alpha + 1.0))


def _poly_table(t, b, mass, nmax, deriv=0):
    """Values (and derivatives) of the first nmax orthonormal polynomials at t.

    Returns a list [P, P', P''] truncated to ``deriv + 1`` arrays of shape
    (len(t), nmax).
    """
    t = np.asarray(t, dtype=float)
    out = [np.zeros(t.shape + (nmax,)) for _ in range(deriv + 1)]
    p0 = 1.0 / sqrt(mass)
    out[0][..., 0] = p0
    if nmax > 1:
        out[0][..., 1] = t * p0 / b[1]
        if deriv >= 1:
            out[1][..., 1] = p0 / b[1]
    for k in range(1, nmax - 1):
        P = out[0]
        P[..., k + 1] = (t * P[..., k] - b[k] * P[..., k - 1]) / b[k + 1]
        if deriv >= 1:
            D1 = out[1]
            D1[..., k + 1] = (P[..., k] + t * D1[..., k] - b[k] * D1[..., k - 1]) / b[k + 1]
        if deriv >= 2:
            D2 = out[2]
            D2[..., k + 1] = (2 * out[1][..., k] + t * D2[..., k] - b[k] * D2[..., k - 1]) / b[k + 1]
    return out


def gauss_gegenbauer(N: int, M: int):
    """Gauss nodes and weights for the weight (1 - t^2)^{(N-2)/2} on [-1, 1].

    Golub-Welsch for the nodes, one Newton polish on the degree-M polynomial,
    and weights from the Christoffel function 1 / sum_k phi_k(t_j)^2, which is
    more accurate near the endpoints than squared eigenvector components.
    """
    alpha = (N - 1) / 2
    b = _recurrence(alpha, M)
    mass = _weight_mass(alpha)
    x = eigh_tridiagonal(np.zeros(M), b[1:M], eigvals_only=True)
    P, D = _poly_table(x, b, mass, M + 1, deriv=1)
    x = x - P[:, M] / D[:, M]
    P = _poly_table(x, b, mass, M)[0]
    w = 1.0 / np.sum(P**2, axis=1)
    return x, w


@dataclass(frozen=True, eq=False)
class GegenbauerBasis:
    N: int
    K: int
    M: int
    nodes: np.ndarray
    weights: np.ndarray
    basis_matrix: np.ndarray
    eigenvalues: np.ndarray
    recurrence: np.ndarray = field(repr=False)
    mass: float = field(repr=False)

    @property
    def alpha(self) -> float:
        return (self.N - 1) / 2

    def table(self, t, deriv=0):
        """Basis values at arbitrary points: array (len(t), K), plus derivatives."""
        tab = _poly_table(t, self.recurrence, self.mass, self.K, deriv=deriv)
        return tab[0] if deriv == 0 else tab

    def analyze(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.M,):
            raise ValueError(f"expected {self.M} node values, got shape {values.shape}")
        return self.basis_matrix.T @ (self.weights * values)

    def synthesize(self, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.K,):
            raise ValueError(f"expected {self.K} coefficients, got shape {coeffs.shape}")
        return self.basis_matrix @ coeffs

    def mode(self, k: int) -> "AxisymFn":
        c = np.zeros(self.K)
        c[k] = 1.0
        return AxisymFn.from_coeffs(self, c)

    def constant(self, value: float) -> "AxisymFn":
        c = np.zeros(self.K)
        c[0] = value * sqrt(self.mass)
        return AxisymFn.from_coeffs(self, c)

    def orthonormality_error(self) -> float:
        B = self.basis_matrix
        G = B.T @ (self.weights[:, None] * B)
        return float(np.max(np.abs(G - np.eye(self.K))))


def build_basis(N: int, K: int, M: int | None = None) -> GegenbauerBasis:
    if N < 2:
        raise DomainError(f"sphere dimension N must be >= 2, got {N}")
    if K < 2:
        raise DomainError(f"need at least 2 modes, got K={K}")
    M = 2 * K if M is None else M
    if M < K:
        raise DomainError(f"quadrature size M={M} smaller than K={K}")
    x, w = gauss_gegenbauer(N, M)
    alpha = (N - 1) / 2
    b = _recurrence(alpha, max(K, M) + 1)
    mass = _weight_mass(alpha)
    B = _poly_table(x, b, mass, K)[0]
    k = np.arange(K, dtype=float)
    basis = GegenbauerBasis(
        N=N, K=K, M=M, nodes=x, weights=w, basis_matrix=B,
        eigenvalues=k * (k + N - 1), recurrence=b, mass=mass,
    )
    err = basis.orthonormality_error()
    if err > 1e-10:
        raise QuadratureError(f"discrete orthonormality error {err:.2e} exceeds 1e-10")
    return basis


@dataclass(frozen=True, eq=False)
class AxisymFn:
    basis: GegenbauerBasis
    coeffs: np.ndarray
    node_values: np.ndarray

    @classmethod
    def from_coeffs(cls, basis, coeffs):
        coeffs = np.array(coeffs, dtype=float)
        return cls(basis, coeffs, basis.synthesize(coeffs))

    @classmethod
    def from_values(cls, basis, values):
        values = np.array(values, dtype=float)
        return cls(basis, basis.analyze(values), values)

    @classmethod
    def from_function(cls, basis, func):
        return cls.from_coeffs(basis, basis.analyze(func(basis.nodes)))

    def __call__(self, t):
        return evaluate(self, t)

    def derivative(self, t, order=1):
        tab = self.basis.table(np.atleast_1d(t), deriv=order)
        return tab[order] @ self.coeffs

    def sup_norm(self, grid_size=NODAL_GRID) -> float:
        t = np.linspace(-1.0, 1.0, grid_size)
        return float(np.max(np.abs(self.basis.table(t) @ self.coeffs)))

    def tail(self, m=4) -> float:
        """Largest of the last m coefficients relative to the largest coefficient."""
        a = np.abs(self.coeffs)
        top = a.max()
        return float(a[-m:].max() / top) if top > 0 else 0.0


def evaluate(f: AxisymFn, t):
    """Clenshaw summation of sum_k c_k phi_k(t) for t in [-1, 1]."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(np.abs(t_arr) > 1.0):
        raise DomainError("evaluation point outside [-1, 1]")
    b = f.basis.recurrence
    c = f.coeffs
    K = len(c)
    y1 = np.zeros_like(t_arr)
    y2 = np.zeros_like(t_arr)
    for k in range(K - 1, -1, -1):
        a_k = t_arr / b[k + 1]
        beta_next = -b[k + 1] / b[k + 2]
        y1, y2 = c[k] + a_k * y1 + beta_next * y2, y1
    out = y1 / sqrt(f.basis.mass)
    return float(out) if np.ndim(t) == 0 else out


def apply_neg_laplacian(f: AxisymFn) -> AxisymFn:
    return AxisymFn.from_coeffs(f.basis, f.basis.eigenvalues * f.coeffs)


def barycentric_weights(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    logs = -np.sum(np.log(np.abs(diff)), axis=1)
    sign = np.where(np.sum(diff < 0, axis=1) % 2 == 0, 1.0, -1.0)
    return sign * np.exp(logs - logs.max())


def differentiation_matrix(x) -> np.ndarray:
    """First-derivative matrix for polynomial interpolation in the points x."""
    x = np.asarray(x, dtype=float)
    lam = barycentric_weights(x)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (lam[None, :] / lam[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def collocation_operator(basis: GegenbauerBasis) -> np.ndarray:
    """Nodal matrix of -(1 - t^2) D^2 + N t D at the quadrature nodes."""
    x = basis.nodes
    D = differentiation_matrix(x)
    return -(1 - x**2)[:, None] * (D @ D) + basis.N * x[:, None] * D


@dataclass(frozen=True)
class NodalClass:
    k: int
    zero_locations: tuple
    simple: tuple

    @property
    def valid(self) -> bool:
        return all(self.simple)


def count_nodal_class(f: AxisymFn, fine_grid_size=NODAL_GRID,
                      simplicity_tol=SIMPLICITY_TOL, value_floor=VALUE_FLOOR,
                      norm_floor=1e-14) -> NodalClass:
    """Count the interior zeros of a profile and check that each one is simple.

    Raises EndpointZero if f(+-1) is below value_floor * ||f||_inf and
    NonSimpleZero if a bracketed zero has |f'| <= simplicity_tol * ||f||_inf.
    """
    t = np.linspace(-1.0, 1.0, fine_grid_size)
    vals = f.basis.table(t) @ f.coeffs
    scale = float(np.max(np.abs(vals)))
    if scale <= norm_floor:
        raise DomainError("profile is numerically zero; nodal class undefined")
    for end, v in ((-1.0, vals[0]), (1.0, vals[-1])):
        if abs(v) <= value_floor * scale:
            raise EndpointZero(end, v)

    def fun(s):
        return float(f.basis.table(np.array([s]))[0] @ f.coeffs)

    zeros = []
    s = np.sign(vals)
    i = 0
    while i < len(t) - 1:
        if s[i] == 0:
            zeros.append(t[i])
            i += 1
            continue
        if s[i + 1] != 0 and s[i] != s[i + 1]:
            zeros.append(brentq(fun, t[i], t[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
        elif s[i + 1] == 0 and i + 2 < len(t) and s[i + 2] == s[i]:
            # touches zero on a grid point without crossing
            raise NonSimpleZero(t[i + 1], 0.0)
        i += 1
    zeros = np.array(sorted(zeros))
    if len(zeros):
        dz = f.derivative(zeros)
    else:
        dz = np.array([])
    simple = tuple(bool(abs(d) > simplicity_tol * scale) for d in dz)
    for z, d, ok in zip(zeros, dz, simple):
        if not ok:
            raise NonSimpleZero(float(z), float(d))
    return NodalClass(k=len(zeros), zero_locations=tuple(float(z) for z in zeros), simple=simple)


def interlaces(inner, outer) -> bool:
    """True if the points of ``outer`` strictly separate consecutive points of ``inner``
    with one point of ``outer`` in each gap including the two end gaps."""
    inner = np.asarray(inner)
    outer = np.asarray(outer)
    if len(outer) != len(inner) + 1:
        return False
    edges = np.concatenate([[-1.0], inner, [1.0]])
    return bool(np.all((outer > edges[:-1]) & (outer < edges[1:])))
