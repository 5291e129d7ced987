"""Reading and writing graphs, domains and reports."""

import json
from pathlib import Path

import numpy as np

from .graph import build_graph, make_domain


class InputError(ValueError):
    """Malformed input file; message includes the position of the problem."""


def graph_to_dict(g):
    return {"vertices": g.n, "edges": [[i, j, w] for i, j, w in g.edge_list()]}


def graph_from_dict(data):
    if not isinstance(data, dict) or "edges" not in data:
        raise InputError('graph JSON needs an "edges" array')
    edges = data["edges"]
    for k, e in enumerate(edges):
        if not isinstance(e, (list, tuple)) or len(e) not in (2, 3):
            raise InputError(f"edges[{k}]: expected [i, j, w]")
    return build_graph([tuple(e) for e in edges], data.get("vertices"))


def parse_edge_text(text):
    """Plain edge list: one ``i j w`` per line, ``#`` starts a comment."""
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise InputError(f"line {lineno}: expected 'i j w', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise InputError(f"line {lineno}: cannot parse {line!r}") from None
        edges.append((i, j, w))
    return build_graph(edges)


def _load_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def read_graph(path):
    path = Path(path)
    if path.suffix.lower() == ".json":
        return graph_from_dict(_load_json(path))
    return parse_edge_text(path.read_text())


def write_graph(g, path):
    Path(path).write_text(dumps(graph_to_dict(g)))


def read_domain(g, path):
    data = _load_json(path)
    if not isinstance(data, dict) or "omega" not in data:
        raise InputError(f'{path}: domain JSON needs an "omega" array')
    return make_domain(g, data["omega"])


def read_json(path):
    return _load_json(path)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _finite(obj):
    """Replace non-finite floats by the strings "inf", "-inf" and "nan"."""
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, (float, np.floating)) and not np.isfinite(obj):
        return "nan" if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps(obj):
    """Deterministic JSON: sorted keys, shortest round-trip floats."""
    return json.dumps(_finite(obj), default=_default, sort_keys=True, indent=1,
                      allow_nan=False) + "\n"
