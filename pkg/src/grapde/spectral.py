"""First positive eigenvalue, harmonic eigenspace and embedding constants."""

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .calculus import (
    SobolevSpec,
    Subspace,
    constraint_subspace,
    energy_density,
    lp_norm,
    m_grad_norm,
    poly_apply,
    stiffness_matrix,
    whole_space,
)
from .graph import bfs_distances

CLUSTER_RTOL = 1e-8
N_STARTS = 16


class InternalConsistencyError(RuntimeError):
    pass


class WeightIncompatible(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EigenData:
    lambda1: float
    basis: np.ndarray = field(repr=False)
    multiplicity: int
    tol: float
    rayleigh_value: float
    measure: np.ndarray = field(repr=False)

    @property
    def subspace(self):
        return Subspace(self.basis, self.measure, "eigen")


def _dense_spectrum(g):
    s = 1.0 / np.sqrt(g.measure)
    S = stiffness_matrix(g) * s[:, None] * s[None, :]
    evals, evecs = np.linalg.eigh(S)
    return evals, evecs * s[:, None]


def _remove_constant(x, psi):
    return x - np.dot(psi, x) / psi.sum()


def rayleigh_minimize(g, seed=0, tol=1e-9, max_iter=20000):
    """Minimize ``u^T K u / u^T Psi u`` over ``sum psi u = 0``.

    Locally optimal three-term iteration: each step does a Rayleigh-Ritz
    on span{x, Psi^{-1} r, previous step}. Independent of any dense
    eigensolver on the full operator.
    """
    K = stiffness_matrix(g)
    psi = g.measure
    rng = np.random.default_rng(seed)
    x = _remove_constant(rng.standard_normal(g.n), psi)
    x /= np.sqrt(np.dot(x, psi * x))
    prev = None
    lam = float(x @ K @ x)
    best, flat = lam, 0
    for _ in range(max_iter):
        r = K @ x - lam * psi * x
        rnorm = np.sqrt(np.dot(r, r / psi))
        # the eigenvalue error is quadratic in the residual; stop once it stalls
        if rnorm <= tol * max(lam, 1.0) or flat >= 50:
            break
        cols = [x, _remove_constant(r / psi, psi)]
        if prev is not None:
            cols.append(_remove_constant(prev, psi))
        Q = _psi_orthonormalize(np.column_stack(cols), psi)
        A = Q.T @ K @ Q
        w, y = np.linalg.eigh(0.5 * (A + A.T))
        y0 = y[:, 0]
        new = Q @ y0
        prev = Q[:, 1:] @ y0[1:]
        x = _remove_constant(new, psi)
        x /= np.sqrt(np.dot(x, psi * x))
        lam = float(x @ K @ x)
        flat = flat + 1 if lam >= best - 1e-15 * best else 0
        best = min(best, lam)
    return lam, x


def _psi_orthonormalize(V, psi, drop=1e-10):
    out = []
    for v in V.T:
        v = v.copy()
        for _ in range(2):
            for q in out:
                v -= np.dot(q, psi * v) * q
        nv = np.sqrt(np.dot(v, psi * v))
        if nv > drop * (np.sqrt(np.dot(V[:, 0], psi * V[:, 0])) or 1.0):
            out.append(v / nv)
    return np.column_stack(out)


def first_eigenvalue(g, seed=0):
    """First positive eigenvalue of ``-Delta`` and its psi-orthonormal eigenspace."""
    g.require_connected()
    evals, evecs = _dense_spectrum(g)
    lam = float(evals[1])
    diameter = float(evals[-1] - evals[0])
    tol = CLUSTER_RTOL * max(diameter, 1e-300)
    cluster = [k for k in range(1, g.n) if abs(evals[k] - lam) <= tol]
    basis = evecs[:, cluster]
    for k in range(basis.shape[1]):
        i = int(np.argmax(np.abs(basis[:, k]) > np.abs(basis[:, k]).max() * (1 - 1e-9)))
        if basis[i, k] < 0:
            basis[:, k] *= -1
    basis.setflags(write=False)
    ray, _ = rayleigh_minimize(g, seed=seed)
    if abs(ray - lam) > 1e-7 * lam:
        raise InternalConsistencyError(
            f"lambda1 disagreement: dense {lam!r} vs Rayleigh {ray!r}")
    return EigenData(lam, basis, len(cluster), tol, ray, g.measure)


def eigenspace_power_identity(g, eig, m, samples=20, seed=0):
    """Check ``int |grad^m u|^2 = lambda1^m int u^2`` on the eigenspace.

    Returns the maximum relative deviation over basis elements and random
    combinations (zero combinations count as exact).
    """
    rng = np.random.default_rng(seed)
    B = eig.basis
    funcs = [B[:, k] for k in range(B.shape[1])]
    funcs += [B @ rng.standard_normal(B.shape[1]) for _ in range(samples)]
    worst = 0.0
    for u in funcs:
        lhs = float(np.dot(g.measure, m_grad_norm(g, u, m) ** 2))
        rhs = eig.lambda1 ** m * float(np.dot(g.measure, u * u))
        if rhs == 0.0 and lhs == 0.0:
            continue
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    return {"m": m, "checked": len(funcs), "max_relative_deviation": worst}


@dataclass(frozen=True)
class EmbeddingConstant:
    value: float
    kind: str
    parameters: dict
    terms: tuple = ()
    linf_value: float = None
    witness: np.ndarray = field(default=None, repr=False)
    note: str = ""


def rho_norm(g, origin, q):
    rho = bfs_distances(g, origin).astype(float)
    return float(np.dot(g.measure, rho ** q) ** (1.0 / q))


def sobolev_constant_cstar(g, m, q, origin, eig=None):
    """Closed-form embedding constants for the harmonic eigenspace.

    ``value`` bounds the L^q norm and ``linf_value`` the sup norm, both
    relative to ``(int |grad^m u|^2 + u^2 dpsi)^{1/2}``. The sup-norm
    constant uses the eccentricity of ``origin`` for the pointwise distance.
    """
    if not q > 0:
        raise ValueError("q must be positive")
    g.require_connected()
    lam = (eig or first_eigenvalue(g)).lambda1
    w0 = g.min_weight
    psi0 = float(g.measure.min())
    psiO = float(g.measure[origin])
    rq = rho_norm(g, origin, q)
    lam_factor = 1.0 if m == 1 else lam ** ((1 - m) / 2)
    big = max(rq, psiO ** (1.0 / q))
    t1 = 2 * np.sqrt(2) * lam_factor / np.sqrt(w0) * rq
    t2 = 2 ** (1.0 / q + 1) * big / np.sqrt(psiO)
    t3 = 2 ** (1.0 / q) * big / np.sqrt(psi0 * (lam ** m + 1))
    ecc = float(bfs_distances(g, origin).max())
    linf = max(np.sqrt(2) * lam_factor / np.sqrt(w0) * ecc + 1 / np.sqrt(psiO),
               1 / np.sqrt(psi0 * (lam ** m + 1)))
    note = "" if q >= 1 else "q < 1: formula evaluated verbatim; L^q is not a norm"
    return EmbeddingConstant(float(max(t1, t2, t3)), "analytic-C*",
                             {"m": m, "q": q, "origin": origin},
                             (float(t1), float(t2), float(t3)), float(linf), note=note)


def eigenspace_norm(g, u, m):
    """``(int |grad^m u|^2 + |u|^2 dpsi)^{1/2}``."""
    return float(np.sqrt(np.dot(g.measure, m_grad_norm(g, u, m) ** 2 + u * u)))


# -- multi-start minimization of scale-invariant objectives ------------------

def _threads():
    try:
        return max(1, int(os.environ.get("GRAPDE_THREADS", "1")))
    except ValueError:
        return 1


def _witness_hash(c):
    return hashlib.sha256(np.round(c, 12).tobytes()).hexdigest()


def minimize_homogeneous(fun, c0, tol=1e-10, max_iter=20000):
    """Minimize a scale-invariant ``fun(c) -> (value, grad)`` on the unit sphere.

    Projected gradient with Barzilai-Borwein trial steps and Armijo
    backtracking. ``fun`` may return ``inf`` outside its feasible cone.
    Returns ``(value, c, grad_norm, iterations)``.
    """
    c = c0 / np.linalg.norm(c0)
    f, gr = fun(c)
    gr = gr - np.dot(gr, c) * c
    step = 1.0
    prev = None
    it = 0
    flat = 0
    for it in range(1, max_iter + 1):
        gn = np.linalg.norm(gr)
        # stop at the tolerance, or when rounding has stalled the descent
        if gn <= tol or flat >= 50:
            break
        if prev is not None:
            s, y = c - prev[0], gr - prev[1]
            sy = np.dot(s, y)
            if sy > 0:
                step = np.dot(s, s) / sy
        t = step
        for _ in range(60):
            trial = c - t * gr
            trial /= np.linalg.norm(trial)
            ft, gt = fun(trial)
            if np.isfinite(ft) and ft <= f - 1e-4 * t * gn * gn:
                break
            t *= 0.5
        else:
            break
        prev = (c, gr)
        flat = flat + 1 if f - ft <= 1e-15 * max(1.0, abs(f)) else 0
        c, f = trial, ft
        gr = gt - np.dot(gt, c) * c
    return f, c, float(np.linalg.norm(gr)), it


def _starts(dim, count, seed):
    rng = np.random.default_rng(seed)
    out = [np.eye(dim)[0], np.ones(dim) + 0.01 * np.arange(dim)]
    while len(out) < count:
        out.append(rng.standard_normal(dim))
    return out[:count]


def multistart(fun, dim, starts=N_STARTS, seed=0, tol=1e-10, feasible=None):
    """Best local minimum over seed-derived starts; ties broken by witness hash."""
    cands = _starts(dim, starts, seed)
    if feasible is not None:
        cands = [c for c in cands if feasible(c)] or \
                [e for e in np.eye(dim) if feasible(e)]
    if not cands:
        return None

    def run(c0):
        return minimize_homogeneous(fun, c0, tol=tol)

    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, cands))
    else:
        results = [run(c) for c in cands]
    results = [r for r in results if np.isfinite(r[0])]
    if not results:
        return None
    return min(results, key=lambda r: (r[0], _witness_hash(r[1])))


# -- Rayleigh quotients ------------------------------------------------------

def _as_vertex_array(g, w, default=1.0):
    if w is None:
        return np.full(g.n, default)
    w = np.asarray(w, dtype=float)
    return np.full(g.n, float(w)) if w.ndim == 0 else w


def weighted_rayleigh_inf(g, domain, m, p, weight=None, h=None, starts=N_STARTS,
                          seed=0, tol=1e-10, return_witness=False):
    """Infimum of a p-homogeneous Rayleigh quotient.

    With a domain: ``int_Omega |grad^m u|^p / int_Omega weight |u|^p`` over
    admissible functions. Without: ``int_V (|grad^m u|^p + h|u|^p) / int_V |u|^p``.
    """
    psi = g.measure
    if domain is not None:
        sub = constraint_subspace(g, domain, m)
        mask = domain.mask.astype(float)
        wt = _as_vertex_array(g, weight) * mask
        hh = np.zeros(g.n)
    else:
        sub = whole_space(g)
        mask = None
        wt = np.ones(g.n)
        hh = _as_vertex_array(g, h)
        if np.any(hh <= 0):
            raise ValueError("h must be positive")
    B = sub.basis
    support = np.any(B != 0, axis=1)
    if not np.any(wt[support] > 0):
        raise WeightIncompatible("weight incompatible: nonpositive on every admissible function")

    def parts(c):
        u = B @ c
        au = np.abs(u)
        num = energy_density(g, u, m, p, mask) + float(np.dot(psi, hh * au ** p))
        den = float(np.dot(psi, wt * au ** p))
        return u, au, num, den

    def fun(c):
        u, au, num, den = parts(c)
        if den <= 0 or num <= 0:
            return np.inf, np.zeros_like(c)
        sgn = np.sign(u) * au ** (p - 1)
        gnum = p * psi * poly_apply(g, u, m, p, mask) + p * psi * hh * sgn
        gden = p * psi * wt * sgn
        grad = B.T @ (gnum / num - gden / den)
        return np.log(num) - np.log(den), grad

    best = multistart(fun, B.shape[1], starts, seed, tol,
                      feasible=lambda c: parts(c)[3] > 0)
    if best is None:
        raise WeightIncompatible("weight incompatible: no admissible function with positive denominator")
    value = float(np.exp(best[0]))
    if return_witness:
        return value, B @ best[1]
    return value


def rayleigh_oracle_p2(g, domain=None, weight=None, h=None):
    """Generalized symmetric eigenproblem for the ``m=1, p=2`` quotient."""
    import scipy.linalg

    psi = g.measure
    src, dst, w = g.arcs
    if domain is not None:
        sub = constraint_subspace(g, domain, 1)
        chi = domain.mask.astype(float)
        c = 0.5 * (chi[src] + chi[dst]) * w
        wt = _as_vertex_array(g, weight) * chi
        extra = np.zeros(g.n)
    else:
        sub = whole_space(g)
        c = w
        wt = np.ones(g.n)
        extra = _as_vertex_array(g, h)
    K = np.zeros((g.n, g.n))
    np.add.at(K, (src, src), c)
    np.add.at(K, (src, dst), -c)
    K = 0.5 * (K + K.T) + np.diag(psi * extra)
    B = sub.basis
    A = B.T @ K @ B
    D = B.T @ ((psi * wt)[:, None] * B)
    mu = scipy.linalg.eigh(D, A, eigvals_only=True)
    if mu[-1] <= 0:
        raise WeightIncompatible("weight incompatible")
    return float(1.0 / mu[-1])


def _sobolev_power_and_grad(g, u, sob):
    psi = g.measure
    p, m = sob.p, sob.m
    au = np.abs(u)
    sgn = np.sign(u) * au ** (p - 1)
    if sob.domain is None:
        h = _as_vertex_array(g, sob.h)
        val = energy_density(g, u, m, p) + float(np.dot(psi, h * au ** p))
        grad = p * psi * poly_apply(g, u, m, p) + p * psi * h * sgn
        return val, grad
    mask = sob.domain.mask.astype(float)
    orders = range(1, m + 1) if sob.full else (m,)
    val = 0.0
    grad = np.zeros(g.n)
    for k in orders:
        val += energy_density(g, u, k, p, mask)
        grad += p * psi * poly_apply(g, u, k, p, mask)
    if sob.full:
        val += float(np.dot(psi, mask * au ** p))
        grad += p * psi * mask * sgn
    return val, grad


def empirical_embedding_constant(g, domain, sob, target_q, starts=N_STARTS, seed=0,
                                 tol=1e-10):
    """Best ratio ``||u||_{L^q} / ||u||_spec`` found by multi-start ascent.

    A lower bound on the true embedding constant. ``target_q`` may be
    ``np.inf``; then each vertex is maximized separately.
    """
    if domain is not None and sob.domain is None:
        sob = SobolevSpec(sob.m, sob.p, sob.h, domain, sob.full)
    domain = sob.domain
    sub = constraint_subspace(g, domain, sob.m) if domain is not None else whole_space(g)
    B = sub.basis
    psi = g.measure
    mask = domain.mask.astype(float) if domain is not None else np.ones(g.n)
    p = sob.p

    if np.isinf(target_q):
        best = None
        for x in np.flatnonzero(np.any(B != 0, axis=1)):
            bx = B[x]

            def fun(c, bx=bx, x=x):
                u = B @ c
                val, gs = _sobolev_power_and_grad(g, u, sob)
                ux = u[x]
                if ux == 0 or val <= 0:
                    return np.inf, np.zeros_like(c)
                return np.log(val) / p - np.log(abs(ux)), B.T @ gs / (p * val) - bx / ux

            if not np.any(bx):
                continue
            r = minimize_homogeneous(fun, bx.copy(), tol=tol)
            if best is None or r[0] < best[0]:
                best = r
        value = float(np.exp(-best[0]))
        return EmbeddingConstant(value, "empirical", {"q": "inf", "m": sob.m, "p": p},
                                 witness=B @ best[1])

    q = float(target_q)

    def fun(c):
        u = B @ c
        val, gs = _sobolev_power_and_grad(g, u, sob)
        au = np.abs(u)
        Q = float(np.dot(psi, mask * au ** q))
        if Q <= 0 or val <= 0:
            return np.inf, np.zeros_like(c)
        gq = q * psi * mask * np.sign(u) * au ** (q - 1)
        return np.log(val) / p - np.log(Q) / q, B.T @ (gs / (p * val) - gq / (q * Q))

    best = multistart(fun, B.shape[1], starts, seed, tol)
    return EmbeddingConstant(float(np.exp(-best[0])), "empirical",
                             {"q": q, "m": sob.m, "p": p}, witness=B @ best[1])


def coupled_sobolev_constant(g, domain, p, q, starts=N_STARTS, seed=0, tol=1e-10,
                             return_witness=False):
    """``inf ||(u,v)||^2 / (int_Omega |u|^p |v|^q)^{2/(p+q)}`` over admissible pairs."""
    sub = constraint_subspace(g, domain, 1)
    B = sub.basis
    d = B.shape[1]
    psi = g.measure
    mask = domain.mask.astype(float)
    expo = 2.0 / (p + q)

    def fun(c):
        u, v = B @ c[:d], B @ c[d:]
        N = energy_density(g, u, 1, 2, mask) + energy_density(g, v, 1, 2, mask)
        au, av = np.abs(u), np.abs(v)
        P = float(np.dot(psi, mask * au ** p * av ** q))
        if P <= 0:
            return np.inf, np.zeros_like(c)
        gNu = 2 * psi * poly_apply(g, u, 1, 2, mask)
        gNv = 2 * psi * poly_apply(g, v, 1, 2, mask)
        gPu = p * psi * mask * np.sign(u) * au ** (p - 1) * av ** q
        gPv = q * psi * mask * au ** p * np.sign(v) * av ** (q - 1)
        grad = np.concatenate([B.T @ (gNu / N - expo * gPu / P),
                               B.T @ (gNv / N - expo * gPv / P)])
        return np.log(N) - expo * np.log(P), grad

    def feasible(c):
        return np.isfinite(fun(c)[0])

    best = multistart(fun, 2 * d, starts, seed, tol, feasible=feasible)
    value = float(np.exp(best[0]))
    if return_witness:
        return value, (B @ best[1][:d], B @ best[1][d:])
    return value


def lq_norm(g, u, q):
    return float(np.max(np.abs(u))) if np.isinf(q) else lp_norm(g, u, q)
