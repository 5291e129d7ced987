"""Energy functionals of the coupled systems and their exact gradients.

A model is bound to a graph (and a domain for Dirichlet problems) at
construction, where every parameter inequality is checked. Gradients are
returned in their L^2(psi) representation: the pair ``(G_u, G_v)`` with
``dJ[(phi, 0)] = int G_u phi dpsi`` and likewise for ``v``.
"""

from dataclasses import dataclass

import numpy as np

from .calculus import (
    constraint_subspace,
    energy_density,
    poly_apply,
    whole_space,
)
from .graph import DomainSpec, as_function, build_graph
from .nonlinearity import CoupledPower, PowerNonlinearity, from_dict, pair_from_dict

TAGS = ("J1_toda", "J3_dirichlet", "J4_plap", "J5_poly", "J6_global",
        "J7_plap_global", "Jvmn_poly_global", "quadratic")
DIRICHLET = {"J3_dirichlet", "J4_plap", "J5_poly"}
# models whose existence result asserts u > 0 and v > 0
POSITIVE = {"J3_dirichlet", "J4_plap", "J6_global", "J7_plap_global"}
MEMBERSHIP_TOL = 1e-8


class ModelError(ValueError):
    """Invalid model parameters; the message names the violated inequality."""


class InadmissiblePair(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FunctionPair:
    u: np.ndarray
    v: np.ndarray

    def __iter__(self):
        return iter((self.u, self.v))


def _require(cond, text):
    if not cond:
        raise ModelError(f"parameter inequality violated: {text}")


def _vertex_param(g, value, name):
    a = np.asarray(value, dtype=float)
    if a.ndim == 0:
        return np.full(g.n, float(a))
    if a.shape != (g.n,):
        raise ModelError(f"{name} must be a scalar or have one entry per vertex")
    return a.copy()


def _int_param(params, key, default):
    val = params.get(key, default)
    if int(val) != val or val < 1:
        raise ModelError(f"parameter inequality violated: {key} >= 1 integer (got {val})")
    return int(val)


def _spow(x, e):
    """Signed power ``|x|^(e-1) x`` without 0^negative issues for e >= 1."""
    return np.sign(x) * np.abs(x) ** e


def _log_integral(psi, chi, w):
    """``log int chi e^w dpsi`` and the normalized density ``chi e^w / int``."""
    s = np.max(w[chi > 0])
    e = chi * np.exp(w - s)
    total = float(np.dot(psi, e))
    return s + np.log(total), e / total


class EnergyModel:
    """One of the coupled energies with resolved parameters.

    Use :func:`make_model`; the tag selects the functional. Attributes
    ``sub_u``/``sub_v`` are the admissible subspaces for each component.
    """

    def __init__(self, tag, graph, domain=None, params=None, nonlinearity=None):
        if tag not in TAGS:
            raise ModelError(f"unknown model tag {tag!r}; expected one of {TAGS}")
        graph.require_connected()
        raw = dict(params or {})
        if tag == "J1_toda" and raw.pop("unit_volume", False):
            # psi scales with the weights while Delta does not, so this gives Vol(V) = 1
            s = 1.0 / graph.volume
            graph = build_graph([(a, b, w * s) for a, b, w in graph.edge_list()], graph.n)
            self.rescaled = s
        self.tag = tag
        self.graph = graph
        self.domain = domain
        self.nonlinearity = nonlinearity
        self.params = getattr(self, "_setup_" + tag)(raw)
        self.info = {}

    # -- per-tag setup -------------------------------------------------------

    def _need_domain(self):
        if not isinstance(self.domain, DomainSpec):
            raise ModelError(f"{self.tag} needs a domain")
        if not self.domain.interior:
            raise ModelError("domain interior is empty")
        return self.domain

    def _setup_quadratic(self, raw):
        self.sub_u = self.sub_v = whole_space(self.graph)
        return {}

    def _setup_J1_toda(self, raw):
        phi1 = float(raw.get("phi1", 1.0))
        phi2 = float(raw.get("phi2", 1.0))
        _require(phi1 > 0, f"phi1 > 0 (got {phi1})")
        _require(phi2 > 0, f"phi2 > 0 (got {phi2})")
        m, n = _int_param(raw, "m", 1), _int_param(raw, "n", 1)
        if self.domain is None:
            from .spectral import first_eigenvalue
            self.eigen = first_eigenvalue(self.graph, int(raw.get("seed", 0)))
            self.sub_u = self.sub_v = self.eigen.subspace
        else:
            self._need_domain()
            self.sub_u = constraint_subspace(self.graph, self.domain, m)
            self.sub_v = constraint_subspace(self.graph, self.domain, n)
        return {"phi1": phi1, "phi2": phi2, "m": m, "n": n,
                "unit_volume": hasattr(self, "rescaled")}

    def _setup_J3_dirichlet(self, raw):
        d = self._need_domain()
        p, q = float(raw.get("p", 3.0)), float(raw.get("q", 3.0))
        _require(p > 2, f"p > 2 (got {p})")
        _require(q > 2, f"q > 2 (got {q})")
        self.sub_u = self.sub_v = constraint_subspace(self.graph, d, 1)
        return {"p": p, "q": q}

    def _setup_J4_plap(self, raw):
        d = self._need_domain()
        p, q = float(raw.get("p", 2.0)), float(raw.get("q", 2.0))
        a, b = float(raw.get("alpha", 2.0)), float(raw.get("beta", 2.0))
        lam0 = float(raw.get("lambda0", 1.0))
        _require(p >= 2, f"p >= 2 (got {p})")
        _require(q >= 2, f"q >= 2 (got {q})")
        _require(a + 1 > p, f"alpha + 1 > p (got alpha={a}, p={p})")
        _require(b + 1 > q, f"beta + 1 > q (got beta={b}, q={q})")
        _require(lam0 > 0, f"lambda0 > 0 (got {lam0})")
        self.sub_u = self.sub_v = constraint_subspace(self.graph, d, 1)
        return {"p": p, "q": q, "alpha": a, "beta": b, "lambda0": lam0}

    def _setup_J5_poly(self, raw):
        from .spectral import weighted_rayleigh_inf
        d = self._need_domain()
        g = self.graph
        m, n = _int_param(raw, "m", 2), _int_param(raw, "n", 2)
        _require(m >= 2, f"m >= 2 (got {m})")
        _require(n >= 2, f"n >= 2 (got {n})")
        p, q = float(raw.get("p", 2.0)), float(raw.get("q", 2.0))
        a, b = float(raw.get("alpha", 2.0)), float(raw.get("beta", 2.0))
        _require(p >= 2, f"p >= 2 (got {p})")
        _require(q >= 2, f"q >= 2 (got {q})")
        _require(a + 1 > p, f"alpha + 1 > p (got alpha={a}, p={p})")
        _require(b + 1 > q, f"beta + 1 > q (got beta={b}, q={q})")
        omega = _vertex_param(g, raw.get("omega_weight", 1.0), "omega_weight")
        sigma = _vertex_param(g, raw.get("sigma", 1.0), "sigma")
        self.sub_u = constraint_subspace(g, d, m)
        self.sub_v = constraint_subspace(g, d, n)
        seed = int(raw.get("seed", 0))
        lam1 = weighted_rayleigh_inf(g, d, m, p, weight=omega, seed=seed)
        theta1 = weighted_rayleigh_inf(g, d, n, q, weight=sigma, seed=seed)
        lam = float(raw.get("lambda", 0.5 * lam1))
        vth = float(raw.get("vartheta", 0.5 * theta1))
        _require(0 < lam < lam1, f"0 < lambda < lambda1 = {lam1:.12g} (got {lam})")
        _require(0 < vth < theta1, f"0 < vartheta < vartheta1 = {theta1:.12g} (got {vth})")
        return {"m": m, "n": n, "p": p, "q": q, "alpha": a, "beta": b,
                "lambda": lam, "vartheta": vth, "lambda1": lam1, "vartheta1": theta1,
                "omega_weight": omega, "sigma": sigma}

    def _global_h(self, raw):
        h = _vertex_param(self.graph, raw.get("h", 1.0), "h")
        _require(np.all(h > 0), "h(x) > 0 at every vertex")
        self.sub_u = self.sub_v = whole_space(self.graph)
        return h

    def _power_pair(self, default_exponent):
        nl = self.nonlinearity
        if nl is None:
            nl = PowerNonlinearity(1.0, default_exponent)
        if isinstance(nl, dict):
            nl = pair_from_dict(nl)
        if isinstance(nl, PowerNonlinearity):
            nl = (nl, nl)
        if not (isinstance(nl, tuple) and all(isinstance(c, PowerNonlinearity) for c in nl)):
            raise ModelError(f"{self.tag} needs a pair of power nonlinearities")
        self.nonlinearity = nl
        return nl

    def _setup_J6_global(self, raw):
        h = self._global_h(raw)
        self._power_pair(3.0)
        theta, s = float(raw.get("theta", 2.5)), float(raw.get("s", 3.0))
        _require(theta > 2, f"theta > 2 (got {theta})")
        _require(s > 1, f"s > 1 (got {s})")
        return {"h": h, "theta": theta, "s": s}

    def _setup_J7_plap_global(self, raw):
        h = self._global_h(raw)
        p, q = float(raw.get("p", 2.0)), float(raw.get("q", 2.0))
        _require(p >= 2, f"p >= 2 (got {p})")
        _require(q >= 2, f"q >= 2 (got {q})")
        th1, th2 = float(raw.get("theta1", 0.45)), float(raw.get("theta2", 0.45))
        _require(0 < th1 < 1 / p, f"0 < theta1 < 1/p (got {th1}, p={p})")
        _require(0 < th2 < 1 / q, f"0 < theta2 < 1/q (got {th2}, q={q})")
        nl = self.nonlinearity
        if nl is None:
            nl = CoupledPower(((1.0, 3.0, 0.0), (1.0, 0.0, 3.0), (1.0, 2.0, 2.0)))
        if isinstance(nl, dict):
            nl = from_dict(nl)
        if not isinstance(nl, CoupledPower):
            raise ModelError("J7_plap_global needs a coupled-power potential")
        self.nonlinearity = nl
        return {"h": h, "p": p, "q": q, "theta1": th1, "theta2": th2}

    def _setup_Jvmn_poly_global(self, raw):
        h = self._global_h(raw)
        m, n = _int_param(raw, "m", 2), _int_param(raw, "n", 2)
        p, q = float(raw.get("p", 2.0)), float(raw.get("q", 2.0))
        _require(p >= 2, f"p >= 2 (got {p})")
        _require(q >= 2, f"q >= 2 (got {q})")
        theta0 = float(raw.get("theta0", 3.0))
        _require(theta0 > max(p, q), f"theta0 > max(p, q) (got {theta0})")
        self._power_pair(4.0)
        return {"h": h, "m": m, "n": n, "p": p, "q": q, "theta0": theta0}

    # -- admissibility -------------------------------------------------------

    @property
    def vertex_mask(self):
        """Vertices where the equations hold: the interior or all of V."""
        if self.tag in DIRICHLET or (self.tag == "J1_toda" and self.domain is not None):
            return self.domain.interior_mask
        return np.ones(self.graph.n, dtype=bool)

    @property
    def _chi(self):
        if self.domain is None:
            return np.ones(self.graph.n)
        return self.domain.mask.astype(float)

    @property
    def _mask(self):
        return None if self.domain is None or self.tag not in DIRICHLET | {"J1_toda"} \
            else self.domain.mask

    def check_admissible(self, u, v):
        g = self.graph
        u, v = as_function(g, u), as_function(g, v, "v")
        for name, w, sub in (("u", u, self.sub_u), ("v", v, self.sub_v)):
            scale = max(1.0, float(np.max(np.abs(w))))
            res = sub.residual(w)
            if res > MEMBERSHIP_TOL * scale:
                where = "eigenspace" if sub.kind == "eigen" else "admissible subspace"
                raise InadmissiblePair(f"{name} lies outside the {where} "
                                       f"(residual {res:.3e})")
        return u, v

    # -- coordinates ---------------------------------------------------------

    @property
    def dim(self):
        return self.sub_u.dim + self.sub_v.dim

    def expand(self, c):
        du = self.sub_u.dim
        return self.sub_u.expand(c[:du]), self.sub_v.expand(c[du:])

    def coords(self, u, v):
        return np.concatenate([self.sub_u.coords(u), self.sub_v.coords(v)])

    def coord_gradient(self, c):
        """Gradient in psi-orthonormal subspace coordinates."""
        u, v = self.expand(c)
        Gu, Gv = self.gradient(u, v, check=False)
        psi = self.graph.measure
        return np.concatenate([self.sub_u.basis.T @ (psi * Gu), self.sub_v.basis.T @ (psi * Gv)])

    def coord_value(self, c):
        return self.value(*self.expand(c), check=False)

    # -- energy --------------------------------------------------------------

    def terms(self, u, v):
        """Named energy terms ``(value, homogeneity degree)``; J is their sum.

        The degree is ``None`` for non-homogeneous terms.
        """
        g, P = self.graph, self.params
        psi, mask, chi = g.measure, self._mask, self._chi
        t = self.tag
        if t == "quadratic":
            return {"u2": (0.5 * float(np.dot(psi, u * u)), 2),
                    "v2": (0.5 * float(np.dot(psi, v * v)), 2)}
        if t == "J1_toda":
            l1, _ = _log_integral(psi, chi, 2 * u - v)
            l2, _ = _log_integral(psi, chi, -u + 2 * v)
            return {"grad_u": (0.5 * energy_density(g, u, P["m"], 2, mask), 2),
                    "grad_v": (0.5 * energy_density(g, v, P["n"], 2, mask), 2),
                    "log1": (-0.5 * P["phi1"] * l1, None),
                    "log2": (-0.5 * P["phi2"] * l2, None)}
        if t == "J3_dirichlet":
            p, q = P["p"], P["q"]
            return {"grad_u": (0.5 * energy_density(g, u, 1, 2, mask), 2),
                    "grad_v": (0.5 * energy_density(g, v, 1, 2, mask), 2),
                    "coupling": (-float(np.dot(psi, chi * np.abs(u) ** p * np.abs(v) ** q)) / (p + q),
                                 p + q)}
        if t == "J4_plap":
            p, q, a, b = P["p"], P["q"], P["alpha"], P["beta"]
            return {"grad_u": ((a + 1) / p * energy_density(g, u, 1, p, mask), p),
                    "grad_v": ((b + 1) / q * energy_density(g, v, 1, q, mask), q),
                    "coupling": (-P["lambda0"] * float(np.dot(
                        psi, chi * np.abs(u) ** (a + 1) * np.abs(v) ** (b + 1))), a + b + 2)}
        if t == "J5_poly":
            m, n, p, q, a, b = (P[k] for k in ("m", "n", "p", "q", "alpha", "beta"))
            return {"grad_u": (energy_density(g, u, m, p, mask) / p, p),
                    "grad_v": (energy_density(g, v, n, q, mask) / q, q),
                    "weight_u": (-P["lambda"] / p * float(np.dot(
                        psi, chi * P["omega_weight"] * np.abs(u) ** p)), p),
                    "weight_v": (-P["vartheta"] / q * float(np.dot(
                        psi, chi * P["sigma"] * np.abs(v) ** q)), q),
                    "coupling": (-float(np.dot(psi, chi * np.abs(u) ** (a + 1)
                                               * np.abs(v) ** (b + 1))) / (a + b + 2), a + b + 2)}
        h = P["h"]
        if t == "J6_global":
            f, gg = self.nonlinearity
            return {"quad_u": (0.5 * (energy_density(g, u, 1, 2) + float(np.dot(psi, h * u * u))), 2),
                    "quad_v": (0.5 * (energy_density(g, v, 1, 2) + float(np.dot(psi, h * v * v))), 2),
                    "F": (-float(np.dot(psi, f.F(u))), f.exponent),
                    "G": (-float(np.dot(psi, gg.F(v))), gg.exponent)}
        if t == "J7_plap_global":
            p, q = P["p"], P["q"]
            return {"quad_u": ((energy_density(g, u, 1, p) + float(np.dot(psi, h * np.abs(u) ** p))) / p, p),
                    "quad_v": ((energy_density(g, v, 1, q) + float(np.dot(psi, h * np.abs(v) ** q))) / q, q),
                    "F": (-float(np.dot(psi, self.nonlinearity.F(u, v))), None)}
        # Jvmn
        m, n, p, q = P["m"], P["n"], P["p"], P["q"]
        f, gg = self.nonlinearity
        return {"quad_u": ((energy_density(g, u, m, p) + float(np.dot(psi, h * np.abs(u) ** p))) / p, p),
                "quad_v": ((energy_density(g, v, n, q) + float(np.dot(psi, h * np.abs(v) ** q))) / q, q),
                "F": (-float(np.dot(psi, f.F(u))), f.exponent),
                "G": (-float(np.dot(psi, gg.F(v))), gg.exponent)}

    def value(self, u, v, check=True):
        if check:
            u, v = self.check_admissible(u, v)
        return float(sum(val for val, _ in self.terms(u, v).values()))

    def gradient(self, u, v, check=True):
        if check:
            u, v = self.check_admissible(u, v)
        g, P, t = self.graph, self.params, self.tag
        chi, mask = self._chi, self._mask
        if t == "quadratic":
            return u.copy(), v.copy()
        if t == "J1_toda":
            _, e1 = _log_integral(g.measure, chi, 2 * u - v)
            _, e2 = _log_integral(g.measure, chi, -u + 2 * v)
            f1, f2 = P["phi1"], P["phi2"]
            Gu = poly_apply(g, u, P["m"], 2, mask) - f1 * e1 + 0.5 * f2 * e2
            Gv = poly_apply(g, v, P["n"], 2, mask) + 0.5 * f1 * e1 - f2 * e2
            return Gu, Gv
        if t == "J3_dirichlet":
            p, q = P["p"], P["q"]
            Gu = poly_apply(g, u, 1, 2, mask) - p / (p + q) * chi * _spow(u, p - 1) * np.abs(v) ** q
            Gv = poly_apply(g, v, 1, 2, mask) - q / (p + q) * chi * np.abs(u) ** p * _spow(v, q - 1)
            return Gu, Gv
        if t == "J4_plap":
            p, q, a, b, l0 = P["p"], P["q"], P["alpha"], P["beta"], P["lambda0"]
            Gu = (a + 1) * (poly_apply(g, u, 1, p, mask)
                            - l0 * chi * _spow(u, a) * np.abs(v) ** (b + 1))
            Gv = (b + 1) * (poly_apply(g, v, 1, q, mask)
                            - l0 * chi * np.abs(u) ** (a + 1) * _spow(v, b))
            return Gu, Gv
        if t == "J5_poly":
            m, n, p, q, a, b = (P[k] for k in ("m", "n", "p", "q", "alpha", "beta"))
            s = a + b + 2
            Gu = (poly_apply(g, u, m, p, mask) - P["lambda"] * chi * P["omega_weight"] * _spow(u, p - 1)
                  - (a + 1) / s * chi * _spow(u, a) * np.abs(v) ** (b + 1))
            Gv = (poly_apply(g, v, n, q, mask) - P["vartheta"] * chi * P["sigma"] * _spow(v, q - 1)
                  - (b + 1) / s * chi * np.abs(u) ** (a + 1) * _spow(v, b))
            return Gu, Gv
        h = P["h"]
        if t == "J6_global":
            f, gg = self.nonlinearity
            return (poly_apply(g, u, 1, 2) + h * u - f.f(u),
                    poly_apply(g, v, 1, 2) + h * v - gg.f(v))
        if t == "J7_plap_global":
            p, q, F = P["p"], P["q"], self.nonlinearity
            return (poly_apply(g, u, 1, p) + h * _spow(u, p - 1) - F.Fu(u, v),
                    poly_apply(g, v, 1, q) + h * _spow(v, q - 1) - F.Fv(u, v))
        m, n, p, q = P["m"], P["n"], P["p"], P["q"]
        f, gg = self.nonlinearity
        return (poly_apply(g, u, m, p) + h * _spow(u, p - 1) - f.f(u),
                poly_apply(g, v, n, q) + h * _spow(v, q - 1) - gg.f(v))

    def stated_system_residual(self, u, v):
        """Residual of the system as printed where it differs from the
        Euler-Lagrange equations of the functional; ``None`` otherwise.

        J1: the normalized-exponential system with the ``-1`` shift.
        J6 and Jvmn: the cross-coupled systems (``g(v)`` in the ``u`` equation).
        """
        g, P, t = self.graph, self.params, self.tag
        if t == "J1_toda":
            chi, mask = self._chi, self._mask
            _, e1 = _log_integral(g.measure, chi, 2 * u - v)
            _, e2 = _log_integral(g.measure, chi, -u + 2 * v)
            ru = poly_apply(g, u, P["m"], 2, mask) - P["phi1"] * (e1 - 1)
            rv = poly_apply(g, v, P["n"], 2, mask) - P["phi2"] * (e2 - 1)
            return ru, rv
        if t == "J6_global":
            f, gg = self.nonlinearity
            h = P["h"]
            return (poly_apply(g, u, 1, 2) + h * u - gg.f(v),
                    poly_apply(g, v, 1, 2) + h * v - f.f(u))
        if t == "Jvmn_poly_global":
            f, gg = self.nonlinearity
            h = P["h"]
            return (poly_apply(g, u, P["m"], P["p"]) + h * _spow(u, P["p"] - 1) - gg.f(v),
                    poly_apply(g, v, P["n"], P["q"]) + h * _spow(v, P["q"] - 1) - f.f(u))
        return None

    def norm(self, u, v):
        """Norm of the product space the functional lives on."""
        g, P, t, mask = self.graph, self.params, self.tag, self._mask
        psi = g.measure
        if t == "quadratic":
            return float(np.sqrt(np.dot(psi, u * u) + np.dot(psi, v * v)))
        if t == "J1_toda":
            return max(np.sqrt(energy_density(g, u, P["m"], 2, mask)),
                       np.sqrt(energy_density(g, v, P["n"], 2, mask)))
        if t == "J3_dirichlet":
            return float(np.sqrt(energy_density(g, u, 1, 2, mask) + energy_density(g, v, 1, 2, mask)))
        if t == "J4_plap":
            return max(energy_density(g, u, 1, P["p"], mask) ** (1 / P["p"]),
                       energy_density(g, v, 1, P["q"], mask) ** (1 / P["q"]))
        if t == "J5_poly":
            return max(energy_density(g, u, P["m"], P["p"], mask) ** (1 / P["p"]),
                       energy_density(g, v, P["n"], P["q"], mask) ** (1 / P["q"]))
        h = P["h"]
        if t == "J6_global":
            return float(np.sqrt(energy_density(g, u, 1, 2) + energy_density(g, v, 1, 2)
                                 + np.dot(psi, h * (u * u + v * v))))
        m, n = (1, 1) if t == "J7_plap_global" else (P["m"], P["n"])
        p, q = P["p"], P["q"]
        return max((energy_density(g, u, m, p) + float(np.dot(psi, h * np.abs(u) ** p))) ** (1 / p),
                   (energy_density(g, v, n, q) + float(np.dot(psi, h * np.abs(v) ** q))) ** (1 / q))

    @property
    def is_even(self):
        """``J(u, v) == J(|u|, |v|)``: true for the Dirichlet power models."""
        return self.tag in DIRICHLET

    def to_dict(self):
        params = {}
        for k, val in self.params.items():
            if isinstance(val, np.ndarray):
                val = float(val[0]) if np.all(val == val[0]) else val.tolist()
            params[k] = val
        out = {"tag": self.tag, "params": params}
        nl = self.nonlinearity
        if isinstance(nl, tuple):
            out["nonlinearity"] = {"f": nl[0].to_dict(), "g": nl[1].to_dict()}
        elif nl is not None:
            out["nonlinearity"] = nl.to_dict()
        if self.domain is not None:
            out["omega"] = list(self.domain.omega)
        return out


def make_model(tag, graph, domain=None, params=None, nonlinearity=None):
    return EnergyModel(tag, graph, domain, params, nonlinearity)


def model_from_dict(data, graph, domain=None):
    if not isinstance(data, dict) or "tag" not in data:
        raise ModelError('model JSON needs a "tag"')
    return make_model(data["tag"], graph, domain, data.get("params", {}), data.get("nonlinearity"))


def energy_value(model, pair):
    return model.value(*pair)


def energy_gradient(model, pair):
    return FunctionPair(*model.gradient(*pair))


def scaling_terms(model, pair, t):
    """Term-by-term ``J(t u, t v)`` predicted from homogeneity degrees."""
    base = model.terms(*model.check_admissible(*pair))
    out = {}
    for name, (val, deg) in base.items():
        if deg is None:
            raise ModelError(f"term {name} of {model.tag} is not homogeneous")
        out[name] = val * abs(t) ** deg
    return out
