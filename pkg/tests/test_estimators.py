import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from grapde.estimators import SpectralEstimator, VariationalSolver
from grapde.graph import generate
from grapde.instances import default_instance


def test_spectral_estimator_fit_and_params():
    est = SpectralEstimator(m=2, q=4.0)
    assert est.get_params() == {"m": 2, "origin": 0, "q": 4.0, "seed": 0}
    with pytest.raises(NotFittedError):
        est.transform(np.zeros(4))
    est.fit(generate("cycle", 4))
    assert est.lambda1_ == pytest.approx(1.0) and est.multiplicity_ == 2
    coords = est.transform(est.basis_[:, 0])
    assert np.allclose(coords, [1.0, 0.0])


def test_variational_solver_matches_functional_core():
    g, d, _ = default_instance("J3_dirichlet")
    est = VariationalSolver("J3_dirichlet").fit(g, d)
    assert est.status_ == "converged" and est.audit_.passed
    assert est.critical_value_ > 0 and est.score() >= -1e-8
    other = clone(est).set_params(seed=3)
    assert other.get_params()["seed"] == 3 and not hasattr(other, "report_")


def test_variational_solver_direct_for_toda():
    est = VariationalSolver().fit(generate("path", 2))
    assert est.critical_value_ < -np.log(2)
    with pytest.raises(ValueError, match="unknown method"):
        VariationalSolver(method="bogus").fit(generate("path", 2))
