import itertools

import networkx as nx
import numpy as np
import pytest

from grapde.calculus import SobolevSpec
from grapde.graph import build_graph, generate, make_domain
from grapde.instances import default_instance
from grapde.solver import mountain_pass, minimize_direct
from grapde.verify import FAIL, PASS, VIOLATED, el_residual, embedding_audit, smp_check, solution_audit


def small_connected_graphs(max_n=5):
    for G in nx.graph_atlas_g():
        if 2 <= G.number_of_nodes() <= max_n and nx.is_connected(G):
            yield G


def nx_p_laplacian(G, u, p):
    """Independent p-Laplacian with unit weights."""
    deg = dict(G.degree())
    grad = {x: np.sqrt(sum((u[y] - u[x]) ** 2 for y in G[x]) / (2 * deg[x])) for x in G}
    out = np.zeros(len(u))
    for x in G:
        out[x] = sum((grad[y] ** (p - 2) + grad[x] ** (p - 2)) * (u[y] - u[x])
                     for y in G[x]) / (2 * deg[x])
    return out


def brute_verdict(G, u, v, h, p):
    """Verdict from the lemma applied by hand to explicit arrays."""
    for w in (u, v):
        if np.any(w < 0):
            return VIOLATED
        s = max(np.abs(w).max(), 1.0)
        wn = w / s
        if np.any(-nx_p_laplacian(G, wn, p) + h * wn ** (p - 1) < -1e-12):
            return VIOLATED
    for w in (u, v):
        if np.any(w == 0) and np.any(w != 0):
            return FAIL  # would be an inconsistency; never reached on a connected graph
    return PASS


def zero_pattern_inputs(n, rng):
    for zs in itertools.product((0, 1), repeat=n):
        z = np.array(zs, dtype=bool)
        yield np.where(z, 0.0, 1.0)
        yield np.where(z, 0.0, rng.uniform(0.5, 2.0, n))


def test_smp_matches_brute_force_on_atlas():
    rng = np.random.default_rng(0)
    counts = {PASS: 0, VIOLATED: 0, FAIL: 0}
    for G in small_connected_graphs(5):
        g = build_graph(list(G.edges()), G.number_of_nodes())
        n = g.n
        ones = np.ones(n)
        for p, h in ((2.0, 0.0), (2.0, 1.0), (3.0, 1.0)):
            for u in zero_pattern_inputs(n, rng):
                for v in (ones, np.zeros(n), u):
                    got = smp_check(g, u, v, h, h, p, p)
                    want = brute_verdict(G, u, v, h, p)
                    assert got.verdict == want, (list(G.edges()), u, v, p, h)
                    counts[got.verdict] += 1
                    zero_somewhere = np.any(u == 0) or np.any(v == 0)
                    if got.verdict == PASS and zero_somewhere:
                        # consistent + somewhere zero: that component vanishes identically
                        assert (np.all(u == 0) or np.all(u > 0)) and (np.all(v == 0) or np.all(v > 0))
    assert counts[FAIL] == 0 and counts[PASS] > 0 and counts[VIOLATED] > 0


def test_smp_examples():
    g = generate("path", 3)
    assert smp_check(g, np.zeros(3), np.zeros(3), 1.0, 1.0).passed
    rep = smp_check(g, [0.0, 0.5, 1.0], np.ones(3), 0.0, 0.0, 2.0, 2.0)
    assert rep.verdict == VIOLATED and rep.witnesses[0]["vertex"] == 0
    assert rep.witnesses[0]["value"] == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        smp_check(g, np.zeros(3), np.zeros(3), p=1.5)


def test_smp_propagation_rounds_bounded():
    g = generate("path", 8)
    rep = smp_check(g, np.zeros(8), np.zeros(8))
    assert rep.details["u"]["rounds"] <= g.n


def test_embedding_audit_p2_against_cstar():
    rep = embedding_audit(generate("path", 2), None, 1, 2.0, 200)
    assert rep.passed
    assert rep.details["constant"] == pytest.approx(2 * np.sqrt(2))
    assert embedding_audit(generate("path", 2), None, 1, np.inf, 50).passed


def test_embedding_audit_sobolev_space():
    g = generate("cycle", 6)
    rep = embedding_audit(g, None, SobolevSpec(1, 2.0), 4.0, 100)
    assert rep.passed and rep.details["kind"] == "empirical"


def test_el_residual_equals_gradient_on_interior(rng):
    _, d, m = default_instance("J4_plap")
    u = m.sub_u.expand(rng.standard_normal(m.sub_u.dim))
    v = m.sub_v.expand(rng.standard_normal(m.sub_v.dim))
    res = el_residual(m, (u, v), projected=False)
    Gu, _ = m.gradient(u, v)
    assert np.allclose(res["u"][d.interior_mask], Gu[d.interior_mask], atol=1e-10)
    zero = el_residual(m, (np.zeros(16), np.zeros(16)))
    assert zero["max"] == 0.0


def test_solution_audits():
    _, _, m1 = default_instance("J1_toda")
    rep = solution_audit(m1, minimize_direct(m1))
    assert rep.passed
    assert rep.details["membership_residual"] <= 1e-10 and rep.details["mean_sum"] <= 1e-10
    _, d, m3 = default_instance("J3_dirichlet")
    sol = mountain_pass(m3)
    assert solution_audit(m3, sol).passed
    u = sol.solution.u.copy()
    u[d.interior[0]] = 0.0
    sol.solution = type(sol.solution)(u, sol.solution.v)
    bad = solution_audit(m3, sol)
    assert bad.verdict == FAIL
    assert any(w.get("vertex") == d.interior[0] for w in bad.witnesses)
