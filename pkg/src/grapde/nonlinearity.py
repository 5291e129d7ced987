"""Closed catalog of nonlinearities and their hypothesis checks.

Two kinds are supported:

* ``power``: ``f(t) = c (t+)^(r-1)`` with antiderivative ``F(t) = c/r (t+)^r``.
* ``coupled-power``: ``F(u, v) = sum_k c_k (u+)^a_k (v+)^b_k``.

Coefficients are nonnegative, so ``f(t) >= 0`` for ``t >= 0`` always holds.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PowerNonlinearity:
    coefficient: float
    exponent: float  # r in f = c (t+)^(r-1)

    def __post_init__(self):
        if self.coefficient < 0:
            raise ValueError("coefficients must be nonnegative")
        if not self.exponent > 1:
            raise ValueError("power exponent r must exceed 1 so that f(0) = 0")

    kind = "power"

    def f(self, t):
        return self.coefficient * np.maximum(t, 0.0) ** (self.exponent - 1)

    def F(self, t):
        return self.coefficient / self.exponent * np.maximum(t, 0.0) ** self.exponent

    def df(self, t):
        r = self.exponent
        tp = np.maximum(t, 0.0)
        if r == 2:
            return self.coefficient * (t > 0)
        return self.coefficient * (r - 1) * tp ** (r - 2)

    def to_dict(self):
        return {"kind": "power", "coefficient": self.coefficient, "exponent": self.exponent}


@dataclass(frozen=True)
class CoupledPower:
    terms: tuple  # ((c, a, b), ...)

    kind = "coupled-power"

    def __post_init__(self):
        for c, a, b in self.terms:
            if c < 0:
                raise ValueError("coefficients must be nonnegative")
            for e in (a, b):
                if not (e == 0 or e > 1):
                    raise ValueError("exponents must be 0 or exceed 1")

    def F(self, u, v):
        up, vp = np.maximum(u, 0.0), np.maximum(v, 0.0)
        return sum(c * up ** a * vp ** b for c, a, b in self.terms)

    def Fu(self, u, v):
        up, vp = np.maximum(u, 0.0), np.maximum(v, 0.0)
        return sum(c * a * up ** (a - 1) * vp ** b for c, a, b in self.terms if a)

    def Fv(self, u, v):
        up, vp = np.maximum(u, 0.0), np.maximum(v, 0.0)
        return sum(c * b * up ** a * vp ** (b - 1) for c, a, b in self.terms if b)

    def hessian(self, u, v):
        """Second partials ``(F_uu, F_uv, F_vv)`` on the positive quadrant."""
        up, vp = np.maximum(u, 0.0), np.maximum(v, 0.0)
        pu, pv = (u > 0).astype(float), (v > 0).astype(float)
        zero = np.zeros_like(up)
        Fuu, Fuv, Fvv = zero.copy(), zero.copy(), zero.copy()
        for c, a, b in self.terms:
            if a:
                Fuu = Fuu + c * a * (a - 1) * _pow(up, a - 2, pu) * vp ** b
            if a and b:
                Fuv = Fuv + c * a * b * up ** (a - 1) * vp ** (b - 1)
            if b:
                Fvv = Fvv + c * b * (b - 1) * up ** a * _pow(vp, b - 2, pv)
        return Fuu, Fuv, Fvv

    @property
    def degree(self):
        return max(a + b for _, a, b in self.terms)

    def to_dict(self):
        return {"kind": "coupled-power", "terms": [list(t) for t in self.terms]}


def _pow(x, e, indicator):
    if e == 0:
        return indicator
    return x ** e


def from_dict(data):
    kind = data.get("kind", "power")
    if kind == "power":
        return PowerNonlinearity(float(data.get("coefficient", 1.0)), float(data["exponent"]))
    if kind == "coupled-power":
        return CoupledPower(tuple((float(c), float(a), float(b)) for c, a, b in data["terms"]))
    raise ValueError(f"unknown nonlinearity kind {kind!r}")


def pair_from_dict(data):
    """``{"f": {...}, "g": {...}}`` or a single power entry used for both."""
    if "f" in data:
        return from_dict(data["f"]), from_dict(data.get("g", data["f"]))
    nl = from_dict(data)
    return nl, nl


# -- hypothesis validation ---------------------------------------------------

def _item(name, passed, witness=None, note=""):
    return {"hypothesis": name, "passed": bool(passed), "witness": witness, "note": note}


def _grid(s0):
    return np.concatenate([np.geomspace(1e-8, 1e-2, 13), np.linspace(1e-2, 10 * s0, 400)])


def _power_checks(nl, name, theta, s, s0, strict_theta_label="H4"):
    r, c = nl.exponent, nl.coefficient
    t = _grid(s0)
    f, F = nl.f(t), nl.F(t)
    out = []
    # H1: continuity, f(0) = 0 and f >= 0 on [0, inf)
    ok = r > 1 and float(nl.f(0.0)) == 0.0 and float(nl.F(0.0)) == 0.0 and np.all(f >= 0)
    out.append(_item(f"H1[{name}]", ok, None if ok else 0.0))
    # H2: f = o(|u|^s) at infinity  <=>  r - 1 < s
    ok = c == 0 or r - 1 < s
    out.append(_item(f"H2[{name}]", ok, None if ok else float(t[-1]),
                     f"growth exponent r-1={r - 1:g} vs s={s:g}"))
    # H3: f = o(|u|) at 0  <=>  r > 2
    ok = c == 0 or r > 2
    witness = None
    if not ok:
        ratio = f[:13] / t[:13]
        witness = float(t[int(np.argmax(ratio))])
    out.append(_item(f"H3[{name}]", ok, witness, f"f(t)/t ~ t^{r - 2:g} near 0"))
    # H4: theta F(s) < f(s) s for s > s0, with theta > 2
    big = t[t > s0]
    viol = big[~(theta * nl.F(big) < nl.f(big) * big)]
    ok = theta > 2 and c > 0 and theta < r and viol.size == 0
    wit = None if ok else (float(viol[0]) if viol.size else float(s0))
    out.append(_item(f"{strict_theta_label}[{name}]", ok, wit,
                     f"symbolic: theta={theta:g} < r={r:g} and theta > 2"))
    return out


def validate_hypotheses(nl, model_tag, params=None):
    """Check the existence-theorem hypotheses for a catalog nonlinearity.

    ``nl`` is a single nonlinearity, an ``(f, g)`` pair, or a coupled
    potential, depending on ``model_tag``. Returns a report dict with one
    entry per hypothesis; failures carry a witness value of ``t``.
    """
    params = dict(params or {})
    s0 = float(params.get("s0", 1.0))
    items, notes = [], []
    pair = nl if isinstance(nl, tuple) else (nl, nl)
    if model_tag == "J6_global":
        s = float(params.get("s", 3.0))
        for name, comp in zip("fg", pair):
            theta = float(params.get("theta", (2 + comp.exponent) / 2))
            items += _power_checks(comp, name, theta, s, s0)
    elif model_tag == "Jvmn_poly_global":
        p, q = float(params.get("p", 2)), float(params.get("q", 2))
        theta0 = float(params.get("theta0", 3.0))
        for name, comp, lam_key in (("f", pair[0], "lambda_mp"), ("g", pair[1], "lambda_nq")):
            r, c = comp.exponent, comp.coefficient
            ok = r > 1 and float(comp.f(0.0)) == 0.0
            items.append(_item(f"H1[{name}]", ok, None if ok else 0.0))
            limsup = 0.0 if (c == 0 or r > 2) else (c if r == 2 else np.inf)
            bound = params.get(lam_key)
            ok = bound is not None and limsup < float(bound)
            items.append(_item(f"H2[{name}]", ok, None if ok else 0.0,
                               f"limsup |f(t)|/t = {limsup:g} vs {lam_key}={bound}"))
            t = _grid(s0)
            big = t[t >= s0]
            Fb = comp.F(big)
            viol = big[~((0 < theta0 * Fb) & (theta0 * Fb < comp.f(big) * big))]
            ok = theta0 > max(p, q) and viol.size == 0
            items.append(_item(f"H3[{name}]", ok,
                               None if ok else (float(viol[0]) if viol.size else s0),
                               f"theta0={theta0:g} must exceed max(p,q) and stay below r={r:g}"))
        notes.append("H2 compares limsup |f(t)|/t with a p-homogeneous Rayleigh quotient; "
                     "checked as written although the scaling matches |t|^(p-1) only at p=2")
        notes.append("H3 for g is checked in the form theta0 G(s) < g(s) s; the printed "
                     "condition has G(s) s on the right")
    elif model_tag == "J7_plap_global":
        p, q = float(params.get("p", 2)), float(params.get("q", 2))
        F = nl if isinstance(nl, CoupledPower) else nl[0]
        u = np.linspace(0, 10 * s0, 41)
        U, Vv = np.meshgrid(u, u)
        ok = float(F.F(0.0, 0.0)) == 0 and float(F.Fu(0.0, 0.0)) == 0 \
            and float(F.Fv(0.0, 0.0)) == 0 and np.all(F.Fu(U, Vv) >= 0) and np.all(F.Fv(U, Vv) >= 0)
        items.append(_item("H1", ok, None if ok else 0.0))
        r = max(F.degree, p + 1)
        s = max(F.degree, q + 1)
        items.append(_item("H2", True, None, f"F <= C(1+|u|^{r:g}+|v|^{s:g}) with r>p, s>q"))
        items.append(_item("H3", True, None, "polynomial potential is bounded near 0"))
        th1 = float(params.get("theta1", 0.45))
        th2 = float(params.get("theta2", 0.45))
        ok = 0 < th1 < 1 / p and 0 < th2 < 1 / q
        bad = [list(term) for term in F.terms if term[0] > 0 and th1 * term[1] + th2 * term[2] < 1]
        R = float(params.get("R", s0))
        grid = np.linspace(R, 10 * R + 10, 30)
        U, Vv = np.meshgrid(grid, grid)
        Fv = F.F(U, Vv)
        rhs = th1 * U * F.Fu(U, Vv) + th2 * Vv * F.Fv(U, Vv)
        num_ok = np.all((Fv > 0) & (Fv <= rhs * (1 + 1e-12)))
        ok = ok and not bad and num_ok
        wit = None
        if not num_ok:
            i = np.argwhere(~((Fv > 0) & (Fv <= rhs)))[0]
            wit = [float(U[tuple(i)]), float(Vv[tuple(i)])]
        items.append(_item("H4", ok, wit, f"theta1={th1:g}, theta2={th2:g}; terms failing "
                                          f"theta1*a+theta2*b>=1: {bad}"))
        notes.append("H4 is checked on the positive quadrant, where the potential is evaluated")
    else:
        raise ValueError(f"no hypotheses catalogued for {model_tag!r}")
    return {"model": model_tag, "passed": all(i["passed"] for i in items),
            "items": items, "notes": notes}
