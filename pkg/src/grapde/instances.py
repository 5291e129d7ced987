"""Default demo instances for every energy model."""

from .energy import make_model
from .graph import build_graph, generate, make_domain


def _grid_block(a, b, rows, cols):
    return [r * b + c for r in rows for c in cols]


def default_instance(tag):
    """``(graph, domain, model)`` with the documented default parameters."""
    if tag == "J1_toda":
        g, d = generate("path", 2), None
    elif tag == "J3_dirichlet":
        # star S5 (center 0, leaves 1-4) with one pendant per leaf outside the
        # domain, so the leaves form the boundary and the interior is the center
        g = build_graph([(0, i) for i in range(1, 5)] + [(i, i + 4) for i in range(1, 5)])
        d = make_domain(g, range(5))
    elif tag == "J4_plap":
        g = generate("grid", 4, 4)
        d = make_domain(g, _grid_block(4, 4, range(3), range(4)))
    elif tag == "J5_poly":
        g = generate("grid", 8, 8)
        d = make_domain(g, _grid_block(8, 8, range(1, 7), range(1, 7)))
    elif tag in ("J6_global", "quadratic"):
        g, d = generate("complete", 3), None
    elif tag == "J7_plap_global":
        g, d = generate("star", 5), None
    elif tag == "Jvmn_poly_global":
        g, d = generate("grid", 3, 3), None
    else:
        raise ValueError(f"unknown model tag {tag!r}")
    return g, d, make_model(tag, g, d)
