import itertools

import numpy as np
import pytest

from grapde.energy import make_model
from grapde.graph import build_graph, generate, make_domain
from grapde.instances import default_instance
from grapde.nonlinearity import PowerNonlinearity
from grapde.solver import (
    HypothesisViolated,
    SolveConfig,
    exhaustion_solve,
    minimize_direct,
    mountain_pass,
    newton_refine,
)

ROOT4 = 2 ** 0.25


def toda_p2_oracle():
    """Two-variable reduction u = a(1,-1), v = b(1,-1): grid then golden refinement."""
    def f(a, b):
        return (2 * a * a + 2 * b * b - 0.5 * np.log(2 * np.cosh(2 * a - b))
                - 0.5 * np.log(2 * np.cosh(2 * b - a)))
    A = np.linspace(-1, 1, 801)
    X, Y = np.meshgrid(A, A)
    F = f(X, Y)
    i = np.unravel_index(np.argmin(F), F.shape)
    x = np.array([X[i], Y[i]])
    h = A[1] - A[0]
    for _ in range(60):
        cands = [x + h * np.array(d) for d in itertools.product((-1, 0, 1), repeat=2)]
        x = min(cands, key=lambda c: f(*c))
        h *= 0.7
    return x, f(*x)


def test_toda_p2_matches_reduction():
    _, _, m = default_instance("J1_toda")
    rep = minimize_direct(m)
    (a, b), J = toda_p2_oracle()
    assert rep.status == "converged"
    assert abs(rep.critical_value - J) <= 1e-9
    assert rep.critical_value < -np.log(2)
    assert np.allclose(rep.solution.u, [a, -a], atol=1e-6)
    assert rep.grad_norm <= 1e-8


def test_toda_k3_not_beaten_by_coarse_grid():
    g = generate("complete", 3)
    m = make_model("J1_toda", g)
    rep = minimize_direct(m)
    assert rep.critical_value <= -np.log(6) + 1e-12
    grid = np.linspace(-1.5, 1.5, 13)
    best = min(m.coord_value(np.array(c)) for c in itertools.product(grid, repeat=4))
    assert best >= rep.critical_value - 1e-6
    assert rep.extras["nonmonotone"]


def test_quadratic_minimizer_is_exact_zero():
    _, _, m = default_instance("quadratic")
    rep = minimize_direct(m)
    assert np.all(rep.solution.u == 0) and np.all(rep.solution.v == 0)


@pytest.fixture(scope="module")
def j3_p3():
    g = generate("path", 3)
    return make_model("J3_dirichlet", g, make_domain(g, [0, 1]), {"p": 3, "q": 3})


def test_j3_closed_form_by_mountain_pass(j3_p3):
    rep = mountain_pass(j3_p3)
    assert rep.status == "converged"
    assert abs(rep.solution.u[0] - ROOT4) <= 1e-8
    assert np.array_equal(rep.solution.u, rep.solution.v)
    assert rep.el_residual["max"] <= 1e-10
    assert rep.critical_value > 0
    assert rep.positivity["u_positive"] and rep.positivity["v_positive"]


def test_newton_from_perturbed_closed_form(j3_p3, rng):
    start = np.array([ROOT4, 0, 0]) + 1e-2 * np.array([rng.standard_normal(), 0, 0])
    rep = newton_refine(j3_p3, (start, start + np.array([5e-3, 0, 0])))
    assert rep.status == "converged"
    assert rep.grad_norm <= 1e-12
    assert rep.extras["newton_steps"] <= 8


def test_newton_fixed_point_and_trivial_start(j3_p3):
    exact = np.array([ROOT4, 0.0, 0.0])
    assert newton_refine(j3_p3, (exact, exact)).extras["newton_steps"] == 0
    zero = newton_refine(j3_p3, (np.zeros(3), np.zeros(3)))
    assert zero.status == "degenerate"
    assert np.all(zero.solution.u == 0)


def test_j3_spider_positive_and_agrees_with_random_newton():
    _, d, m = default_instance("J3_dirichlet")
    rep = mountain_pass(m)
    assert rep.el_residual["max"] <= 1e-6
    assert rep.positivity["u_positive"] and rep.positivity["v_positive"]
    rng = np.random.default_rng(1)
    hits = 0
    for _ in range(10):
        w = np.abs(m.sub_u.expand(rng.standard_normal(m.sub_u.dim))) * 2
        r = newton_refine(m, (w, w))
        if r.status == "converged" and np.all(r.solution.u[d.interior_mask] > 0):
            hits += 1
            assert abs(r.critical_value - rep.critical_value) <= 1e-8
    assert hits >= 1


def fixed_point_oracle(g, h, r, iters=200):
    """Normalized iteration w <- (-Delta + h)^{-1} w^(r-1) for u = v; the
    scale of the fixed direction follows from homogeneity."""
    from grapde.calculus import laplacian_matrix
    L = -laplacian_matrix(g) + np.diag(np.full(g.n, h))
    w = np.ones(g.n) + 0.1 * np.arange(g.n)
    for _ in range(iters):
        w = np.linalg.solve(L, w ** (r - 1))
        w /= np.abs(w).max()
    mu = (L @ w)[0] / w[0] ** (r - 1)
    return w * mu ** (1 / (r - 2))


def test_j6_matches_fixed_point_oracle():
    g, _, m = default_instance("J6_global")
    rep = mountain_pass(m)
    ref = fixed_point_oracle(g, 1.0, 3.0)
    assert np.allclose(ref, 1.0)
    assert np.allclose(rep.solution.u, ref, atol=1e-8)
    assert np.allclose(rep.solution.v, ref, atol=1e-8)
    assert rep.el_residual["max"] <= 1e-6
    assert rep.el_residual["stated"]["max"] <= 1e-6


def test_hypothesis_violation_stops_mountain_pass():
    g = generate("complete", 3)
    m = make_model("J6_global", g, nonlinearity=PowerNonlinearity(1.0, 2.0))
    with pytest.raises(HypothesisViolated) as exc:
        mountain_pass(m)
    assert not exc.value.report["passed"]


def test_deterministic_reports():
    _, _, m = default_instance("J4_plap")
    a, b = mountain_pass(m), mountain_pass(m)
    assert a.energy_trace == b.energy_trace and a.grad_norm_trace == b.grad_norm_trace
    assert np.array_equal(a.solution.u, b.solution.u)


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(path_nodes=2)
    with pytest.raises(ValueError):
        SolveConfig(grad_tol=0)


def test_exhaustion_grid_ball_sizes():
    res = exhaustion_solve("grid", 4, [(0, 0)])
    assert res["ball_sizes"] == [1, 5, 13, 25]
    assert len(res["window_differences"]) == 3


def test_exhaustion_single_ball_and_window_errors():
    res = exhaustion_solve("path", 1, [0])
    assert res["window_differences"] == [] and res["final_difference"] is None
    with pytest.raises(ValueError, match="not contained"):
        exhaustion_solve("path", 2, [-3, 3])
