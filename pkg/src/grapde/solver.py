"""Direct minimization, mountain pass, Newton refinement and ball exhaustion.

All iterations run in psi-orthonormal coordinates of the admissible
subspaces, so Euclidean gradient norms there equal L^2(psi) norms.
"""

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .energy import DIRICHLET, POSITIVE, FunctionPair, make_model
from .graph import ball_family, bfs_distances, generate
from .nonlinearity import validate_hypotheses
from .spectral import _witness_hash
from .verify import el_residual

MOUNTAIN_TAGS = DIRICHLET | {"J6_global", "J7_plap_global", "Jvmn_poly_global", "quadratic"}


class NoMountainGeometry(RuntimeError):
    pass


class HypothesisViolated(ValueError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class SolveConfig:
    grad_tol: float = 1e-8
    max_iter: int = 100_000
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    init_step: float = 1.0
    path_nodes: int = 41
    ray_growth: float = 2.0
    seed: int = 0
    multi_start: int = 8
    nonmonotone: object = None  # None: automatic
    switch_tol: float = 1e-3
    newton_max_iter: int = 100

    def __post_init__(self):
        for name in ("grad_tol", "max_iter", "armijo_c1", "init_step", "ray_growth",
                     "multi_start", "switch_tol", "newton_max_iter"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.path_nodes < 3:
            raise ValueError("path_nodes must be >= 3")
        if self.ray_growth <= 1:
            raise ValueError("ray_growth must exceed 1")

    def to_dict(self):
        return asdict(self)


@dataclass
class SolveReport:
    solution: FunctionPair
    energy_trace: list
    grad_norm_trace: list
    el_residual: dict
    positivity: dict
    critical_value: float
    status: str
    method: str
    config: SolveConfig
    iterations: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def grad_norm(self):
        return self.grad_norm_trace[-1] if self.grad_norm_trace else float("nan")

    def to_dict(self, trace=False):
        out = {
            "method": self.method, "status": self.status,
            "critical_value": self.critical_value, "iterations": self.iterations,
            "final_grad_norm": self.grad_norm,
            "solution": {"u": self.solution.u, "v": self.solution.v},
            "el_residual": {"u": self.el_residual["u"], "v": self.el_residual["v"],
                            "max": self.el_residual["max"]},
            "positivity": self.positivity,
            "extras": self.extras,
        }
        if "stated" in self.el_residual:
            out["el_residual"]["stated_max"] = self.el_residual["stated"]["max"]
        if trace:
            out["energy_trace"] = self.energy_trace
            out["grad_norm_trace"] = self.grad_norm_trace
        return out


# -- helpers -----------------------------------------------------------------

def _positivity(model, u, v):
    if model.tag in ("J1_toda", "quadratic"):
        return {}
    mask = model.vertex_mask
    return {"vertex_set": "interior" if model.tag in DIRICHLET else "all",
            "required": model.tag in POSITIVE,
            "u_positive": bool(np.all(u[mask] > 0)), "v_positive": bool(np.all(v[mask] > 0))}


def _report(model, c, etrace, gtrace, status, method, config, iterations, extras=None):
    u, v = model.expand(c)
    res = el_residual(model, (u, v))
    return SolveReport(FunctionPair(u, v), etrace, gtrace, res, _positivity(model, u, v),
                       model.coord_value(c), status, method, config, iterations, extras or {})


def _descend(model, c, config, nonmonotone, max_iter):
    """Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking."""
    f = model.coord_value(c)
    gr = model.coord_gradient(c)
    etrace, gtrace = [f], [float(np.linalg.norm(gr))]
    history = [f]
    step, prev, flat = config.init_step, None, 0
    it = 0
    for it in range(1, max_iter + 1):
        gn = gtrace[-1]
        if gn <= config.grad_tol or flat >= 30:
            break
        if prev is not None:
            s, y = c - prev[0], gr - prev[1]
            sy = float(np.dot(s, y))
            step = float(np.dot(s, s)) / sy if sy > 0 else config.init_step
        ref = max(history[-10:]) if nonmonotone else f
        t = step
        for _ in range(60):
            trial = c - t * gr
            ft = model.coord_value(trial)
            if np.isfinite(ft) and ft <= ref - config.armijo_c1 * t * gn * gn:
                break
            t *= config.backtrack
        else:
            break
        prev = (c, gr)
        flat = flat + 1 if abs(f - ft) <= 1e-16 * max(1.0, abs(f)) else 0
        c, f = trial, ft
        gr = model.coord_gradient(c)
        history.append(f)
        etrace.append(f)
        gtrace.append(float(np.linalg.norm(gr)))
    return c, etrace, gtrace, it


def _jacobian(model, c):
    """Hessian in coordinates by central differences of the exact gradient."""
    d = len(c)
    H = np.empty((d, d))
    for i in range(d):
        h = 1e-6 * max(1.0, abs(c[i]))
        e = np.zeros(d)
        e[i] = h
        H[:, i] = (model.coord_gradient(c + e) - model.coord_gradient(c - e)) / (2 * h)
    return 0.5 * (H + H.T)


def _newton(model, c, config, max_iter):
    """Damped Newton on the coordinate gradient map.

    Returns ``(c, energies, residuals, status, steps)``; status is
    ``converged``, ``max_iter`` or ``diverged``.
    """
    G = model.coord_gradient(c)
    r = float(np.linalg.norm(G))
    etrace, rtrace = [model.coord_value(c)], [r]
    polish = 0
    for step in range(1, max_iter + 1):
        if r <= config.grad_tol:
            if step == 1:
                return c, etrace, rtrace, "converged", 0
            polish += 1
            if polish > 2 or r == 0.0:
                return c, etrace, rtrace, "converged", step - 1
        H = _jacobian(model, c)
        try:
            if np.linalg.cond(H) > 1e13:
                raise np.linalg.LinAlgError
            d = -np.linalg.solve(H, G)
        except np.linalg.LinAlgError:
            d = -G
        t, best = 1.0, None
        for _ in range(40):
            trial = c + t * d
            Gt = model.coord_gradient(trial)
            rt = float(np.linalg.norm(Gt))
            if np.isfinite(rt) and (best is None or rt < best[2]):
                best = (trial, Gt, rt)
            if np.isfinite(rt) and rt <= (1 - 1e-4 * t) * r:
                break
            t *= 0.5
        if best is None or (r <= config.grad_tol and best[2] >= r):
            return c, etrace, rtrace, "converged" if r <= config.grad_tol else "diverged", step - 1
        c, G, r = best
        etrace.append(model.coord_value(c))
        rtrace.append(r)
        if len(rtrace) > 20 and r > 10 * min(rtrace[-21:-1]):
            return c, etrace, rtrace, "diverged", step
    return c, etrace, rtrace, ("converged" if r <= config.grad_tol else "max_iter"), max_iter


# -- public solvers ------------------------------------------------------------

def minimize_direct(model, config=None):
    """Multi-start projected descent over the model's admissible subspaces.

    For J1 the result is certified against ``J1(0, 0)``. A final Newton
    polish is applied when descent stalls just above the tolerance.
    """
    config = config or SolveConfig()
    rng = np.random.default_rng(config.seed)
    nonmono = config.nonmonotone
    if nonmono is None:
        nonmono = model.tag == "J1_toda" and getattr(model, "eigen", None) is not None \
            and model.eigen.multiplicity >= 2
    starts = [np.zeros(model.dim)]
    starts += [rng.standard_normal(model.dim) for _ in range(config.multi_start - 1)]
    runs = []
    for c0 in starts:
        c, et, gt, it = _descend(model, c0, config, nonmono, config.max_iter)
        if gt[-1] > config.grad_tol:
            cn, en, rn, st, steps = _newton(model, c, config, 20)
            if st == "converged" and en[-1] <= et[-1] + 1e-12:
                c, et, gt, it = cn, et + en[1:], gt + rn[1:], it + steps
        runs.append((et[-1], _witness_hash(c), c, et, gt, it))
    f, _, c, et, gt, it = min(runs, key=lambda r: (r[0], r[1]))
    status = "converged" if gt[-1] <= config.grad_tol else "max_iter"
    extras = {"starts": len(starts), "nonmonotone": bool(nonmono)}
    if model.tag == "J1_toda":
        zero = model.coord_value(np.zeros(model.dim))
        extras.update(energy_at_zero=zero, below_zero_energy=bool(f <= zero))
    return _report(model, c, et, gt, status, "minimize_direct", config, it, extras)


def newton_refine(model, start, config=None, max_iter=None):
    """Damped Newton from ``start``; trivial or divergent runs are degenerate."""
    config = config or SolveConfig()
    c0 = model.coords(*model.check_admissible(*start))
    c, et, rt, st, steps = _newton(model, c0, config, max_iter or config.newton_max_iter)
    extras = {"newton_steps": steps}
    if st == "diverged":
        c, status = c0, "degenerate"
        extras["reason"] = "residual grew tenfold within 20 steps"
    elif st == "converged" and model.tag in MOUNTAIN_TAGS - {"quadratic"} \
            and np.max(np.abs(c)) <= 1e-12:
        status = "degenerate"
        extras["reason"] = "trivial critical point (0, 0)"
    else:
        status = st
    return _report(model, c, et, rt, status, "newton_refine", config, steps, extras)


def _direction(model, rng):
    """Random nonnegative admissible direction, shared by both components
    when their subspaces coincide."""
    def one(sub):
        w = sub.expand(rng.standard_normal(sub.dim))
        aw = np.abs(w)
        return aw if sub.residual(aw) <= 1e-12 * max(1.0, aw.max()) else w
    wu = one(model.sub_u)
    wv = wu.copy() if model.sub_v is model.sub_u else one(model.sub_v)
    return model.coords(wu, wv)


def mountain_radius(model, samples=16, seed=0):
    """Half the smallest ray-maximum radius over sampled directions.

    Along each unit ray ``t -> J(t d)`` the first stationary point bounds the
    norm of any critical point in direction ``d`` (there ``<J', c> = 0``);
    ``J`` increases up to it, so ``J > 0`` on the returned sphere for every
    sample.
    """
    rng = np.random.default_rng(seed)
    dirs = [_direction(model, rng) for _ in range(samples)]
    dirs += [rng.standard_normal(model.dim) for _ in range(samples)]

    def slope(t, d):
        return float(np.dot(model.coord_gradient(t * d), d))

    found = []
    for d in dirs:
        nrm = model.norm(*model.expand(d))
        if nrm == 0:
            continue
        d = d / nrm
        t = 1e-6
        while t < 1e12 and slope(t, d) > 0:
            t *= 2
        if t >= 1e12:
            continue
        lo, hi = t / 2, t
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if slope(mid, d) > 0 else (lo, mid)
        found.append(lo)
    if not found:
        return float("inf")
    return 0.5 * min(found)


def _hypotheses(model):
    if model.tag == "J6_global":
        return validate_hypotheses(model.nonlinearity, model.tag, model.params)
    if model.tag == "J7_plap_global":
        return validate_hypotheses(model.nonlinearity, model.tag, model.params)
    if model.tag == "Jvmn_poly_global":
        from .spectral import weighted_rayleigh_inf
        P = dict(model.params)
        P["lambda_mp"] = weighted_rayleigh_inf(model.graph, None, P["m"], P["p"], h=P["h"])
        P["lambda_nq"] = weighted_rayleigh_inf(model.graph, None, P["n"], P["q"], h=P["h"])
        return validate_hypotheses(model.nonlinearity, model.tag, P)
    return None


def _resample(path, nodes):
    """Equally spaced nodes along the polyline ``path``."""
    seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return path
    target = np.linspace(0, s[-1], nodes)
    return np.stack([np.interp(target, s, path[:, j]) for j in range(path.shape[1])], axis=1)


def _respace(path, k):
    """Even arclength spacing on both sides of node ``k``, which stays fixed."""
    N = len(path)
    seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
    total = seg.sum()
    if total == 0:
        return path
    kk = int(round((N - 1) * seg[:k].sum() / total))
    kk = min(max(kk, 1), N - 2)
    left = _resample(path[:k + 1], kk + 1)
    right = _resample(path[k:], N - kk)
    return np.concatenate([left[:-1], right])


def mountain_pass(model, config=None):
    """Mountain-pass critical point with path deformation and Newton polish."""
    config = config or SolveConfig()
    if model.tag not in MOUNTAIN_TAGS:
        raise ValueError(f"mountain pass does not apply to {model.tag}")
    hyp = _hypotheses(model)
    if hyp is not None and not hyp["passed"]:
        raise HypothesisViolated("nonlinearity hypotheses fail", hyp)
    rng = np.random.default_rng(config.seed)
    radius = mountain_radius(model, seed=config.seed)

    # (1) ray search for negative energy
    w = _direction(model, rng)
    w = w / model.norm(*model.expand(w))
    t = 1e-3
    for doubling in range(61):
        if model.coord_value(t * w) < 0:
            break
        t *= config.ray_growth
    else:
        raise NoMountainGeometry("no mountain geometry: energy stays nonnegative along the ray")
    end = t * w

    # (2)-(3) path deformation: the max node takes a climbing step (descent
    # across the path, ascent along it) and the other nodes are re-spaced
    N = config.path_nodes
    path = np.linspace(0, 1, N)[:, None] * end[None, :]
    E = np.array([model.coord_value(c) for c in path])
    etrace, gtrace = [], []
    switch = config.switch_tol
    alpha = 0.1 * config.init_step
    prev = None
    attempts = []
    it = 0
    result = None
    while it < config.max_iter:
        it += 1
        k = 1 + int(np.argmax(E[1:-1]))
        ck = path[k]
        gr = model.coord_gradient(ck)
        tau = path[k + 1] - path[k - 1]
        tau /= max(np.linalg.norm(tau), 1e-300)
        F = -gr + 2 * np.dot(gr, tau) * tau
        gn = float(np.linalg.norm(gr))
        etrace.append(float(E[k]))
        gtrace.append(gn)
        if gn <= switch * max(1.0, abs(E[k])):
            cn, en, rn, st, steps = _newton(model, ck, config, config.newton_max_iter)
            nrm = model.norm(*model.expand(cn))
            fn = en[-1]
            ok = (st == "converged" and nrm >= radius and fn > 0
                  and abs(fn - E[k]) <= 0.05 * max(1.0, abs(E[k])))
            attempts.append({"iteration": it, "status": st, "norm": nrm, "energy": fn,
                             "path_max": float(E[k])})
            if ok:
                result = (cn, en, rn, steps, float(E[k]))
                break
            switch /= 10
            if switch < config.grad_tol:
                break
            continue
        if prev is not None:
            s_, y_ = ck - prev[0], F - prev[1]
            sy = -float(np.dot(s_, y_))
            if sy > 0:
                alpha = float(np.dot(s_, s_)) / sy
        spacing = 0.5 * min(np.linalg.norm(path[k + 1] - ck), np.linalg.norm(ck - path[k - 1]))
        fn_ = float(np.linalg.norm(F))
        step = min(alpha, spacing / max(fn_, 1e-300))
        prev = (ck.copy(), F)
        path[k] = ck + step * F
        path = _respace(path, k)
        E = np.array([model.coord_value(c) for c in path])

    extras = {"mountain_radius": radius, "ray_end_energy": float(model.coord_value(end)),
              "ray_doublings": doubling, "newton_attempts": attempts,
              "hypotheses": hyp}
    if result is None:
        c = path[1 + int(np.argmax(E[1:-1]))]
        return _report(model, c, etrace, gtrace, "max_iter", "mountain_pass", config, it, extras)
    cn, en, rn, steps, path_max = result
    flipped = False
    if model.is_even:
        u, v = model.expand(cn)
        au, av = np.abs(u), np.abs(v)
        if not (np.array_equal(au, u) and np.array_equal(av, v)):
            before = model.coord_value(cn)
            cabs = model.coords(au, av)
            cn2, en2, rn2, st2, steps2 = _newton(model, cabs, config, config.newton_max_iter)
            extras["flip_energy_change"] = model.coord_value(cabs) - before
            if st2 == "converged":
                cn, en, rn, flipped = cn2, en + en2, rn + rn2, True
    extras.update(path_max=path_max, newton_steps=steps, flipped_to_abs=flipped,
                  solution_norm=model.norm(*model.expand(cn)))
    status = "converged" if rn[-1] <= config.grad_tol else "max_iter"
    return _report(model, cn, etrace + en, gtrace + rn, status, "mountain_pass", config,
                   it, extras)


# -- exhaustion ------------------------------------------------------------------

# uniform lower weight bound declared by each generated family (unit weights)
FAMILY_OMEGA0 = {"path": 1.0, "grid": 1.0}


def family_graph(family, K):
    """Truncation of the infinite family to radius ``K + 1`` and its center."""
    R = K + 1
    if family == "path":
        return generate("path", 2 * R + 1), R
    if family == "grid":
        side = 2 * R + 1
        return generate("grid", side, side), R * side + R
    raise ValueError(f"unknown exhaustion family {family!r}")


def window_vertices(family, K, window):
    """Map family coordinates to vertex ids: offsets for the path, ``(dr, dc)``
    pairs for the grid."""
    R = K + 1
    out = []
    for w in window:
        if family == "path":
            x = int(w)
            if abs(x) > R:
                raise ValueError(f"window offset {x} outside the truncation")
            out.append(R + x)
        else:
            dr, dc = (int(a) for a in w)
            side = 2 * R + 1
            if max(abs(dr), abs(dc)) > R:
                raise ValueError(f"window offset {(dr, dc)} outside the truncation")
            out.append((R + dr) * side + R + dc)
    return out


def exhaustion_solve(family, K, window, params=None, config=None):
    """Dirichlet J1 solves on nested balls and window differences between them."""
    config = config or SolveConfig()
    if K < 1:
        raise ValueError("K must be >= 1")
    g, center = family_graph(family, K)
    theta = window_vertices(family, K, window)
    rho = bfs_distances(g, center)
    k0 = int(max(rho[theta])) + 1
    if k0 > K:
        raise ValueError(f"window is not contained in V_K (needs radius {k0} > K={K})")
    balls = ball_family(g, center, K)
    for a, b in zip(balls.balls, balls.balls[1:]):
        if not set(a) <= set(b):
            raise ValueError("ball family is not monotone")
    per_k, windows = [], []
    for k in balls.radii:
        dom = balls.domain(g, k)
        model = make_model("J1_toda", g, dom, params)
        rep = minimize_direct(model, config)
        u, v = rep.solution
        windows.append(np.concatenate([u[theta], v[theta]]))
        per_k.append({"k": k, "ball_size": len(balls.balls[k - 1]),
                      "energy": rep.critical_value, "status": rep.status,
                      "grad_norm": rep.grad_norm, "el_residual_max": rep.el_residual["max"],
                      "window_u": u[theta], "window_v": v[theta]})
    diffs = [float(np.max(np.abs(b - a))) for a, b in zip(windows, windows[1:])]
    tail = diffs[max(k0 - 1, 0):]
    decreasing = all(b <= a for a, b in zip(tail, tail[1:]))
    return {
        "family": family, "K": K, "window": list(window), "window_vertices": theta,
        "omega0": FAMILY_OMEGA0[family],
        "window_radius": k0, "ball_sizes": [p["ball_size"] for p in per_k],
        "per_k": per_k, "window_differences": diffs,
        "eventually_decreasing": decreasing,
        "final_difference": diffs[-1] if diffs else None,
        "limit_candidate": {"u": per_k[-1]["window_u"], "v": per_k[-1]["window_v"]},
        "max_el_residual": max(p["el_residual_max"] for p in per_k),
        "status": "converged" if all(p["status"] == "converged" for p in per_k) else "max_iter",
    }


def default_config(**overrides):
    return replace(SolveConfig(), **overrides)
