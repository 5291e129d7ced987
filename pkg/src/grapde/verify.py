"""Checkers for residuals, the strong maximum principle and embedding bounds."""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .calculus import SobolevSpec, constraint_subspace, p_laplacian, sobolev_norm, whole_space
from .energy import POSITIVE
from .graph import as_function
from .spectral import (
    eigenspace_norm,
    empirical_embedding_constant,
    first_eigenvalue,
    lq_norm,
    sobolev_constant_cstar,
)

SLACK = 1e-12
PASS, FAIL, VIOLATED = "pass", "fail", "hypothesis-violated"


@dataclass
class CheckReport:
    name: str
    verdict: str
    witnesses: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict != PASS and not self.witnesses:
            raise ValueError("non-pass verdicts must carry a witness")

    @property
    def passed(self):
        return self.verdict == PASS

    def to_dict(self):
        return {"check": self.name, "verdict": self.verdict, "witnesses": self.witnesses,
                "tolerances": self.tolerances, "details": self.details}


def el_residual(model, pair, projected=True):
    """Signed Euler-Lagrange residuals on the model's vertex set.

    With ``projected`` the gradient is first projected onto the admissible
    subspace; for first-order Dirichlet and global problems this equals the
    pointwise system on the interior (resp. all of ``V``). Where the printed
    system differs from the functional's own equations its residual is
    reported under ``stated`` without affecting ``max``.
    """
    u, v = model.check_admissible(*pair)
    Gu, Gv = model.gradient(u, v, check=False)
    if projected:
        Gu, Gv = model.sub_u.project(Gu), model.sub_v.project(Gv)
    mask = model.vertex_mask
    ru, rv = np.where(mask, Gu, 0.0), np.where(mask, Gv, 0.0)
    out = {"u": ru, "v": rv, "max": float(max(np.abs(ru).max(), np.abs(rv).max()))}
    stated = model.stated_system_residual(u, v)
    if stated is not None:
        su, sv = (np.where(mask, s, 0.0) for s in stated)
        out["stated"] = {"u": su, "v": sv, "max": float(max(np.abs(su).max(), np.abs(sv).max()))}
    return out


def _supersolution_defect(g, u, h, p):
    h = np.broadcast_to(np.asarray(h, dtype=float), (g.n,))
    return -p_laplacian(g, u, p) + h * np.sign(u) * np.abs(u) ** (p - 1)


def _propagate(g, zeros):
    """Vertices reached from ``zeros`` by the neighbour-of-a-zero rule."""
    seen = np.zeros(g.n, dtype=bool)
    queue = deque(np.flatnonzero(zeros).tolist())
    seen[list(queue)] = True
    rounds = 0
    while queue:
        rounds += 1
        for _ in range(len(queue)):
            x = queue.popleft()
            for y in g.neighbors[x]:
                if not seen[y]:
                    seen[y] = True
                    queue.append(y)
    return seen, rounds


def smp_check(g, u, v, h1=0.0, h2=0.0, p=2.0, q=2.0):
    """Strong maximum principle for a pair of nonnegative supersolutions.

    Inputs are normalized by their sup norm. Hypotheses: ``u, v >= 0`` and
    ``-Delta_p u + h1 |u|^{p-2} u >= 0`` (likewise for ``v``) at every vertex,
    each up to ``-1e-12``. When a component has a zero, zeros propagate to
    neighbours; the verdict passes iff every such component vanishes
    identically.
    """
    if p < 2 or q < 2:
        raise ValueError("p, q >= 2 required")
    g.require_connected()
    u, v = as_function(g, u), as_function(g, v, "v")
    tol = {"slack": SLACK}
    details = {}
    for name, w, h, e in (("u", u, h1, p), ("v", v, h2, q)):
        s = max(float(np.abs(w).max()), 1.0)
        wn = w / s
        neg = np.flatnonzero(wn < -SLACK)
        if neg.size:
            x = int(neg[0])
            return CheckReport("smp", VIOLATED, [{"component": name, "vertex": x,
                                                  "reason": "negative value", "value": float(w[x])}],
                               tol)
        defect = _supersolution_defect(g, wn, h, e)
        bad = np.flatnonzero(defect < -SLACK)
        if bad.size:
            x = int(bad[0])
            return CheckReport("smp", VIOLATED, [{"component": name, "vertex": x,
                                                  "reason": "supersolution inequality fails",
                                                  "value": float(defect[x] * s ** (e - 1))}], tol)
        zeros = np.abs(wn) <= SLACK
        details[name] = {"has_zero": bool(zeros.any())}
        if zeros.any():
            reached, rounds = _propagate(g, zeros)
            nonzero = np.flatnonzero(reached & ~zeros)
            details[name].update(rounds=rounds, reached=int(reached.sum()))
            if nonzero.size:
                x = int(nonzero[0])
                return CheckReport("smp", FAIL, [{"component": name, "vertex": x,
                                                  "reason": "inconsistent: propagated zero is nonzero",
                                                  "value": float(w[x])}], tol, details)
    return CheckReport("smp", PASS, [], tol, details)


def _random_in(sub, rng):
    return sub.expand(rng.standard_normal(sub.dim))


def embedding_audit(g, domain=None, sob=None, q=2.0, samples=200, seed=0, origin=0,
                    constant=None):
    """Sample admissible functions and check ``||u||_q <= C ||u||``.

    ``sob`` is an integer ``m`` for the harmonic eigenspace (analytic
    constant) or a :class:`SobolevSpec` (empirical constant with 1e-9
    relative slack). The constant may be supplied to skip recomputation.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    q = float(q)
    if isinstance(sob, (int, np.integer)) or sob is None:
        m = int(sob or 1)
        eig = first_eigenvalue(g, seed)
        if constant is None:
            cs = sobolev_constant_cstar(g, m, q if np.isfinite(q) else 1.0, origin, eig)
            constant = cs.linf_value if np.isinf(q) else cs.value
        sub = eig.subspace
        kind = "analytic"

        def ratio(u):
            return lq_norm(g, u, q) / eigenspace_norm(g, u, m)
    else:
        if domain is not None and sob.domain is None:
            sob = SobolevSpec(sob.m, sob.p, sob.h, domain, sob.full)
        if constant is None:
            constant = empirical_embedding_constant(g, sob.domain, sob, q, seed=seed).value \
                * (1 + 1e-9)
        sub = constraint_subspace(g, sob.domain, sob.m) if sob.domain is not None \
            else whole_space(g)
        kind = "empirical"

        def ratio(u):
            if sob.domain is not None and np.isfinite(q):
                return lq_norm(g, u * sob.domain.mask, q) / sobolev_norm(g, u, sob)
            return lq_norm(g, u, q) / sobolev_norm(g, u, sob)

    worst, witness, violations = 0.0, None, []
    for k in range(samples):
        u = _random_in(sub, rng)
        u = u / max(np.abs(u).max(), 1e-300)
        r = ratio(u)
        if r > worst:
            worst, witness = r, k
        if r > constant + SLACK:
            violations.append({"sample": k, "ratio": r})
    tol = {"slack": SLACK}
    details = {"constant": float(constant), "kind": kind, "q": "inf" if np.isinf(q) else q,
               "samples": samples, "max_ratio": worst, "worst_sample": witness,
               "violations": len(violations)}
    if violations:
        return CheckReport("embedding", FAIL, violations[:10], tol, details)
    return CheckReport("embedding", PASS, [], tol, details)


def solution_audit(model, report, tol=None):
    """Residual, positivity and (for J1) eigenspace checks on a solve report."""
    u, v = report.solution
    tol = 10 * report.config.grad_tol if tol is None else tol
    witnesses, details = [], {}
    verdict = PASS
    res = el_residual(model, (u, v))
    details["el_residual_max"] = res["max"]
    if "stated" in res:
        details["stated_system_residual_max"] = res["stated"]["max"]
    if res["max"] > tol:
        verdict = FAIL
        x = int(np.argmax(np.maximum(np.abs(res["u"]), np.abs(res["v"]))))
        witnesses.append({"reason": "EL residual", "vertex": x, "value": res["max"]})
    if model.tag == "J1_toda":
        psi = model.graph.measure
        mem = max(model.sub_u.residual(u), model.sub_v.residual(v))
        mean = abs(float(np.dot(psi, u))) + abs(float(np.dot(psi, v)))
        details.update(membership_residual=mem, mean_sum=mean)
        if model.domain is None and mem > 1e-10:
            verdict = FAIL
            witnesses.append({"reason": "outside eigenspace", "value": mem})
        scale = np.linalg.norm(u) + np.linalg.norm(v)
        if model.domain is None and mean > max(1e-9 * scale, 1e-10):
            verdict = FAIL
            witnesses.append({"reason": "nonzero mean", "value": mean})
    elif model.tag in POSITIVE:
        mask = model.vertex_mask
        zero_seen = False
        for name, w in (("u", u), ("v", v)):
            bad = np.flatnonzero(mask & ~(w > 0))
            details[f"{name}_positive"] = not bad.size
            zero_seen |= bool(np.any(mask & (w == 0)))
            if bad.size:
                verdict = FAIL
                witnesses.append({"reason": f"{name} not strictly positive",
                                  "vertex": int(bad[0]), "value": float(w[bad[0]])})
        if zero_seen and model.domain is None:
            # global models: a zero plus the supersolution inequalities forces (0, 0)
            P = model.params
            smp = smp_check(model.graph, u, v, P["h"], P["h"], P.get("p", 2.0), P.get("q", 2.0))
            details["smp"] = smp.to_dict()
    else:
        details["nontrivial"] = bool(np.any(u != 0) or np.any(v != 0))
    return CheckReport("solution", verdict, witnesses, {"residual": tol}, details)
