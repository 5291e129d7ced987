"""Estimator-style wrappers around the functional core.

``fit`` takes a graph (and optionally a domain), runs the computation and
stores results in attributes ending in ``_``. Hyperparameters are the
constructor arguments, so ``get_params``/``set_params``/``clone`` work as
usual. There is no ``predict``: the outputs are functions on the fitted
graph, not predictions for new samples.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .energy import make_model
from .solver import MOUNTAIN_TAGS, SolveConfig, minimize_direct, mountain_pass
from .spectral import eigenspace_power_identity, first_eigenvalue, sobolev_constant_cstar
from .verify import solution_audit


class SpectralEstimator(BaseEstimator):
    """First eigenvalue, eigenspace and the embedding constant of a graph.

    Parameters
    ----------
    m : int
        Derivative order for the constant and the power identity.
    q : float
        Target Lebesgue exponent for the constant.
    origin : int
        Base vertex of the distance function.
    seed : int
    """

    def __init__(self, m=1, q=2.0, origin=0, seed=0):
        self.m = m
        self.q = q
        self.origin = origin
        self.seed = seed

    def fit(self, graph, y=None):
        eig = first_eigenvalue(graph, self.seed)
        self.eigen_ = eig
        self.lambda1_ = eig.lambda1
        self.multiplicity_ = eig.multiplicity
        self.basis_ = np.array(eig.basis)
        self.cstar_ = sobolev_constant_cstar(graph, self.m, self.q, self.origin, eig)
        self.identity_ = eigenspace_power_identity(graph, eig, self.m, seed=self.seed)
        return self

    def transform(self, u):
        """psi-orthonormal eigenspace coordinates of the function(s) ``u``."""
        check_is_fitted(self, "eigen_")
        return self.eigen_.subspace.coords(np.asarray(u, dtype=float))


class VariationalSolver(BaseEstimator):
    """Critical point of one of the energy models.

    ``method="auto"`` uses direct minimization for J1 and the mountain pass
    otherwise. Fitted attributes: ``model_``, ``report_``, ``solution_``,
    ``critical_value_``, ``status_`` and ``audit_``.
    """

    def __init__(self, tag="J1_toda", params=None, nonlinearity=None, method="auto",
                 grad_tol=1e-8, max_iter=100_000, seed=0, multi_start=8, path_nodes=41):
        self.tag = tag
        self.params = params
        self.nonlinearity = nonlinearity
        self.method = method
        self.grad_tol = grad_tol
        self.max_iter = max_iter
        self.seed = seed
        self.multi_start = multi_start
        self.path_nodes = path_nodes

    def _config(self):
        return SolveConfig(grad_tol=self.grad_tol, max_iter=self.max_iter, seed=self.seed,
                           multi_start=self.multi_start, path_nodes=self.path_nodes)

    def fit(self, graph, domain=None):
        model = make_model(self.tag, graph, domain, self.params, self.nonlinearity)
        method = self.method
        if method == "auto":
            method = "mountain_pass" if self.tag in MOUNTAIN_TAGS - {"quadratic"} else "direct"
        if method not in ("direct", "mountain_pass"):
            raise ValueError(f"unknown method {self.method!r}")
        run = mountain_pass if method == "mountain_pass" else minimize_direct
        report = run(model, self._config())
        self.model_ = model
        self.report_ = report
        self.solution_ = report.solution
        self.critical_value_ = report.critical_value
        self.status_ = report.status
        self.audit_ = solution_audit(model, report)
        return self

    def score(self, graph=None, domain=None):
        """Negative Euler-Lagrange residual of the fitted solution (higher is better)."""
        check_is_fitted(self, "report_")
        return -self.report_.el_residual["max"]
