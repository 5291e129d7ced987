"""Discrete differential operators and norms on weighted graphs.

Every operator acts on vertex functions ``u`` stored as 1-D arrays indexed
like the graph. Functions on a domain are zero-extended to all of ``V``;
integrals over a domain are restricted through its vertex mask.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .graph import DomainSpec, as_function


def _mask(domain, n):
    if domain is None:
        return None
    if isinstance(domain, DomainSpec):
        return domain.mask
    m = np.asarray(domain, dtype=bool)
    if m.shape != (n,):
        raise ValueError("domain mask has wrong length")
    return m


def _check_p(p):
    if not p >= 2:
        raise ValueError(f"exponent p={p} rejected: operators require p >= 2")


def laplacian(g, u):
    """``(Delta u)(x) = 1/psi(x) sum_y w_xy (u(y) - u(x))``."""
    u = as_function(g, u)
    src, dst, w = g.arcs
    return np.bincount(src, w * (u[dst] - u[src]), minlength=g.n) / g.measure


def laplacian_power(g, u, k):
    for _ in range(k):
        u = laplacian(g, u)
    return np.asarray(u, dtype=float)


def gamma(g, u, v):
    """Gradient form ``Gamma(u, v)``."""
    u = as_function(g, u)
    v = as_function(g, v, "v")
    src, dst, w = g.arcs
    prod = w * (u[dst] - u[src]) * (v[dst] - v[src])
    return np.bincount(src, prod, minlength=g.n) / (2.0 * g.measure)


def grad_norm(g, u):
    return np.sqrt(np.maximum(gamma(g, u, u), 0.0))


def m_grad_norm(g, u, m):
    """Length of the order-``m`` gradient.

    Odd ``m``: ``|grad Delta^{(m-1)/2} u|``; even ``m``: ``|Delta^{m/2} u|``.
    """
    if m < 1 or int(m) != m:
        raise ValueError("m must be an integer >= 1")
    if m % 2:
        return grad_norm(g, laplacian_power(g, u, (m - 1) // 2))
    return np.abs(laplacian_power(g, u, m // 2))


def p_laplacian(g, u, p):
    """Discrete p-Laplacian; ``p == 2`` is the plain Laplacian."""
    _check_p(p)
    if p == 2:
        return laplacian(g, u)
    u = as_function(g, u)
    src, dst, w = g.arcs
    a = grad_norm(g, u) ** (p - 2)
    flux = w * (a[dst] + a[src]) * (u[dst] - u[src])
    return np.bincount(src, flux, minlength=g.n) / (2.0 * g.measure)


def _stiffness(g, c, w):
    """``(K_c w)(x) = sum_y c_xy (w(x) - w(y))`` for per-arc coefficients ``c``."""
    src, dst, _ = g.arcs
    return np.bincount(src, c * (w[src] - w[dst]), minlength=g.n)


def _coefficient(g, u, m, p, mask):
    a = np.ones(g.n) if p == 2 else m_grad_norm(g, u, m) ** (p - 2)
    if mask is not None:
        a = a * mask
    return a


def pairing(g, u, phi, m, p, domain=None):
    """Bilinear pairing ``B(u, phi)`` that defines the poly-operator weakly."""
    _check_p(p)
    mask = _mask(domain, g.n)
    phi = as_function(g, phi, "phi")
    a = _coefficient(g, u, m, p, mask)
    if m % 2:
        j = (m - 1) // 2
        dens = gamma(g, laplacian_power(g, u, j), laplacian_power(g, phi, j))
    else:
        j = m // 2
        dens = laplacian_power(g, u, j) * laplacian_power(g, phi, j)
    return float(np.dot(g.measure, a * dens))


def poly_apply(g, u, m, p, domain=None):
    """Pointwise poly-operator ``(L_{m,p} u)(x) = B(u, 1_x) / psi(x)``.

    Evaluated in closed form: with ``j`` the inner Laplacian power and ``a``
    the (domain-masked) weight ``|grad^m u|^{p-2}``, odd ``m`` gives
    ``Delta^j(psi^{-1} K_a Delta^j u)`` and even ``m`` gives
    ``Delta^j(a * Delta^j u)``. This relies on ``Delta`` being self-adjoint
    in the psi-weighted inner product.
    """
    if m < 1 or int(m) != m:
        raise ValueError("m must be an integer >= 1")
    _check_p(p)
    u = as_function(g, u)
    mask = _mask(domain, g.n)
    a = _coefficient(g, u, m, p, mask)
    if m % 2:
        j = (m - 1) // 2
        src, dst, w = g.arcs
        c = 0.5 * (a[src] + a[dst]) * w
        inner = _stiffness(g, c, laplacian_power(g, u, j)) / g.measure
    else:
        j = m // 2
        inner = a * laplacian_power(g, u, j)
    return laplacian_power(g, inner, j)


def energy_density(g, u, m, p, domain=None):
    """``int |grad^m u|^p dpsi`` over ``V`` or a domain."""
    mask = _mask(domain, g.n)
    dens = m_grad_norm(g, u, m) ** p
    if mask is not None:
        dens = dens * mask
    return float(np.dot(g.measure, dens))


def lp_norm(g, u, s, domain=None):
    if not s > 0:
        raise ValueError("L^s exponent must be positive")
    u = as_function(g, u)
    mask = _mask(domain, g.n)
    dens = np.abs(u) ** s
    if mask is not None:
        dens = dens * mask
    return float(np.dot(g.measure, dens) ** (1.0 / s))


def linf_norm(g, u, domain=None):
    u = as_function(g, u)
    mask = _mask(domain, g.n)
    if mask is not None:
        u = u[mask]
    return float(np.max(np.abs(u))) if u.size else 0.0


@dataclass(frozen=True)
class SobolevSpec:
    """Sobolev norm selector.

    With ``domain=None`` the norm is ``(int_V |grad^m u|^p + h |u|^p)^{1/p}``
    (``h`` defaults to 1). With a domain it is the zero-trace norm
    ``(int_Omega |grad^m u|^p)^{1/p}``, or the full sum over orders
    ``0..m`` when ``full=True``.
    """

    m: int = 1
    p: float = 2.0
    h: object = None
    domain: object = None
    full: bool = False

    def __post_init__(self):
        if self.m < 1 or int(self.m) != self.m:
            raise ValueError("m must be an integer >= 1")
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if self.h is not None:
            h = np.asarray(self.h, dtype=float)
            if np.any(h <= 0):
                raise ValueError("weight h must be positive at every vertex")


def _sobolev_power(g, u, sob):
    m, p = sob.m, sob.p
    if sob.domain is None:
        h = np.ones(g.n) if sob.h is None else np.asarray(sob.h, dtype=float)
        if np.isscalar(sob.h) or (h.ndim == 0):
            h = np.full(g.n, float(h))
        dens = m_grad_norm(g, u, m) ** p + h * np.abs(u) ** p
        return float(np.dot(g.measure, dens))
    if sob.full:
        total = lp_norm(g, u, p, sob.domain) ** p
        for k in range(1, m + 1):
            total += energy_density(g, u, k, p, sob.domain)
        return total
    return energy_density(g, u, m, p, sob.domain)


def sobolev_norm(g, u, sob):
    return _sobolev_power(g, as_function(g, u), sob) ** (1.0 / sob.p)


def norm(g, u, sob):
    """Dispatch: ``sob`` is a :class:`SobolevSpec`, a positive number ``s``
    (the L^s norm on V) or ``"inf"``/``np.inf``."""
    if isinstance(sob, SobolevSpec):
        return sobolev_norm(g, u, sob)
    if sob in ("inf", np.inf):
        return linf_norm(g, u)
    return lp_norm(g, u, float(sob))


def laplacian_matrix(g):
    """Dense matrix of ``Delta``."""
    return g.adjacency / g.measure[:, None] - np.eye(g.n)


def stiffness_matrix(g):
    """Dense ``K`` with ``u^T K u = int |grad u|^2 dpsi``."""
    return np.diag(g.measure) - g.adjacency


class NoAdmissibleFunctions(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace of vertex functions with a psi-orthonormal basis.

    ``basis`` has shape ``(n, d)``; columns are the basis functions.
    """

    basis: np.ndarray
    measure: np.ndarray
    kind: str = "constraint"
    domain: object = None
    m: int = 1

    @property
    def dim(self):
        return self.basis.shape[1]

    def coords(self, u):
        return self.basis.T @ (self.measure * u)

    def expand(self, c):
        return self.basis @ c

    def project(self, u):
        return self.expand(self.coords(u))

    def residual(self, u):
        """Sup-norm distance of ``u`` from the subspace."""
        return float(np.max(np.abs(u - self.project(u)))) if len(u) else 0.0

    @cached_property
    def gram(self):
        return self.basis.T @ (self.measure[:, None] * self.basis)


def constraint_rows(g, domain, m, interior_only=False):
    """Linear conditions (rows over all vertices) defining zero trace of order m.

    At each boundary vertex: ``u = 0``; for odd ``i < m`` every incident
    difference of ``Delta^{(i-1)/2} u`` vanishes; for even ``i < m``,
    ``Delta^{i/2} u = 0``. Neighbors outside the domain take part through
    the zero extension unless ``interior_only`` is set.
    """
    L = laplacian_matrix(g)
    rows = []
    inside = domain.mask
    for i in range(1, m):
        P = np.linalg.matrix_power(L, i // 2 if i % 2 == 0 else (i - 1) // 2)
        for x in domain.boundary:
            if i % 2:
                for y in g.neighbors[x]:
                    if interior_only and not inside[y]:
                        continue
                    rows.append(P[y] - P[x])
            else:
                rows.append(P[x])
    return np.array(rows).reshape(-1, g.n)


def constraint_subspace(g, domain, m=1, interior_only=False):
    """Admissible functions for order-``m`` Dirichlet problems on ``domain``.

    Functions vanish off the interior; the remaining linear conditions are
    solved by a null-space computation in psi^{1/2}-scaled coordinates so
    that the returned basis is psi-orthonormal.
    """
    free = np.array(domain.interior, dtype=int)
    if free.size == 0:
        raise NoAdmissibleFunctions("no admissible nonzero functions: empty interior")
    C = constraint_rows(g, domain, m, interior_only)[:, free]
    scale = 1.0 / np.sqrt(g.measure[free])
    if C.shape[0]:
        Z = scipy.linalg.null_space(C * scale[None, :], rcond=1e-10)
    else:
        Z = np.eye(free.size)
    if Z.shape[1] == 0:
        raise NoAdmissibleFunctions("no admissible nonzero functions")
    B = np.zeros((g.n, Z.shape[1]))
    B[free] = Z * scale[:, None]
    B = _fix_signs(B)
    B.setflags(write=False)
    return Subspace(B, g.measure, "constraint", domain, m)


def _fix_signs(B):
    for k in range(B.shape[1]):
        col = B[:, k]
        i = int(np.argmax(np.abs(col) > np.abs(col).max() * (1 - 1e-9)))
        if col[i] < 0:
            B[:, k] = -col
    return B


def whole_space(g):
    B = np.diag(1.0 / np.sqrt(g.measure))
    B.setflags(write=False)
    return Subspace(B, g.measure, "whole")
