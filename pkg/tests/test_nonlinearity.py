import numpy as np
import pytest

from grapde.nonlinearity import CoupledPower, PowerNonlinearity, from_dict, validate_hypotheses


def test_power_derivative_relations():
    f = PowerNonlinearity(2.0, 3.0)
    t = np.linspace(0.1, 3, 7)
    assert np.allclose(f.f(t), 2 * t ** 2)
    assert np.allclose((f.F(t + 1e-6) - f.F(t - 1e-6)) / 2e-6, f.f(t), rtol=1e-8)
    assert np.all(f.f(-t) == 0)


def test_catalog_rejects_bad_specs():
    with pytest.raises(ValueError):
        PowerNonlinearity(-1.0, 3.0)
    with pytest.raises(ValueError):
        CoupledPower(((1.0, 0.5, 2.0),))
    with pytest.raises(ValueError, match="unknown"):
        from_dict({"kind": "exp"})


def test_j6_default_passes_and_quadratic_growth_fails_h3():
    ok = validate_hypotheses(PowerNonlinearity(1.0, 3.0), "J6_global")
    assert ok["passed"]
    bad = validate_hypotheses(PowerNonlinearity(1.0, 2.0), "J6_global")
    h3 = [i for i in bad["items"] if i["hypothesis"].startswith("H3")]
    assert not bad["passed"] and all(not i["passed"] and i["witness"] is not None for i in h3)


def test_jvmn_notes_record_open_questions():
    rep = validate_hypotheses(PowerNonlinearity(1.0, 4.0), "Jvmn_poly_global",
                              {"lambda_mp": 1.0, "lambda_nq": 1.0})
    assert rep["passed"]
    assert any("G(s) s" in n for n in rep["notes"])


def test_j7_potential_checks():
    F = CoupledPower(((1.0, 3.0, 0.0), (1.0, 0.0, 3.0), (1.0, 2.0, 2.0)))
    assert validate_hypotheses(F, "J7_plap_global")["passed"]
    weak = CoupledPower(((1.0, 1.5, 0.0),))
    assert not validate_hypotheses(weak, "J7_plap_global")["passed"]
