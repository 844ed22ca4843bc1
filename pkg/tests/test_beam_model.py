from dataclasses import replace
from functools import lru_cache

import numpy as np
import pytest
from scipy.integrate import quad

from hcfbeam.model import (BeamParameters, Coefficient, build_model, transport_times, with_coupling,
                           CoefficientExpressionError, GridTooCoarse, NonPositiveParameter,
                           NonSmoothCoefficient, SpeedOrderingViolation)


# --------------------------------------------------------------------------- #
@lru_cache(maxsize=None)
def _nominal_model(n: int = 41):
    return build_model(BeamParameters.nominal(), n)


def _tapered_params() -> BeamParameters:
    return BeamParameters.from_values(rho=0.8, S="1 - 0.2*z", kappa="1.25 + 0.25*z", J="0.98*(1 + 0.1*z)", EI=0.5)


def _scaled(c: Coefficient, factor: float) -> Coefficient:
    return replace(c, fn=lambda z: factor * c.fn(z), dfn=lambda z: factor * c.dfn(z))


# --------------------------------------------------------------------------- #
def test_nominal_transport_data():
    """Constant coefficients give the closed-form speeds and transport times."""
    model = _nominal_model()
    t = model.transport
    assert np.allclose(t.lambda1, 1.25, rtol=0.0, atol=1e-12)
    assert np.allclose(t.lambda2, 5.0 / 7.0, rtol=0.0, atol=1e-12)
    tau1, tau2 = transport_times(model)
    assert abs(tau1 - 0.8) < 1e-12
    assert abs(tau2 - 1.4) < 1e-12
    assert abs(model.delta_tau - 0.6) < 1e-12


def test_nominal_coupling_and_input_matrices():
    """With H = I the coupling is Omega with a1 = a2 = 0 and a3 = kappa / (J lambda1)."""
    model = _nominal_model()
    A = model.A[7]
    lam1, a3 = 1.25, 1.25 / (0.98 * 1.25)
    assert np.allclose(np.diagonal(model.A, axis1=1, axis2=2), 0.0)
    assert A[0, 1] == pytest.approx(-0.5 * lam1)
    assert A[0, 3] == pytest.approx(-0.5 * lam1)
    assert A[1, 0] == pytest.approx(0.5 * a3)
    assert A[1, 2] == pytest.approx(-0.5 * a3)
    assert A[2, 1] == pytest.approx(0.5 * lam1)
    assert A[3, 2] == pytest.approx(-0.5 * a3)
    assert A[0, 2] == pytest.approx(0.0)
    assert np.allclose(model.B, np.diag([1.0, 1.0 / 0.7]))


def test_stiffer_beam_halves_transport_times():
    """Four times kappa and EI doubles both speeds."""
    for params in (BeamParameters.nominal(), _tapered_params()):
        scaled = replace(params, kappa=_scaled(params.kappa, 4.0), EI=_scaled(params.EI, 4.0))
        slow, fast = build_model(params, 41), build_model(scaled, 41)
        assert 2 * fast.tau1 == pytest.approx(slow.tau1, abs=1e-10)
        assert 2 * fast.tau2 == pytest.approx(slow.tau2, abs=1e-10)


def test_phi_psi_inverse():
    """psi_i undoes phi_i on the grid and phi_i(1) = tau_i."""
    model = build_model(_tapered_params(), 65)
    for i, tau in ((1, model.tau1), (2, model.tau2)):
        assert model.phi(i, 1.0) == pytest.approx(tau)
        assert np.allclose(model.psi(i, model.phi(i, model.z)), model.z, atol=1e-12)


def test_varying_transport_times_match_quadrature():
    """Cumulative trapezoid of 1/lambda_i agrees with adaptive quadrature to O(dz^2)."""
    params = _tapered_params()
    model = build_model(params, 101)
    mu1 = lambda z: np.sqrt(params.kappa(z) / (params.rho(z) * params.S(z)))
    tau1 = quad(lambda z: 1.0 / float(mu1(z)), 0.0, 1.0)[0]
    assert abs(model.tau1 - tau1) < 10.0 * model.dz ** 2
    assert not model.is_constant


def test_nonpositive_parameter():
    """A coefficient that changes sign on [0, 1] is rejected."""
    with pytest.raises(NonPositiveParameter):
        build_model(BeamParameters.from_values(rho=0.8, S="z - 0.5", kappa=1.25, J=0.98, EI=0.5), 32)


def test_speed_ordering():
    """Shear waves slower than bending waves are not supported."""
    with pytest.raises(SpeedOrderingViolation):
        build_model(BeamParameters.from_values(rho=0.8, S=1.0, kappa=0.1, J=0.98, EI=0.5), 32)


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        build_model(BeamParameters.nominal(), 8)


# --------------------------------------------------------------------------- #
def test_coefficient_forms():
    """Numbers, expressions and tables all evaluate and differentiate."""
    c = Coefficient.parse("S", 2.0)
    assert c.is_constant and c(0.3) == 2.0 and c.derivative(0.3) == 0.0

    e = Coefficient.parse("S", "1 + z**2")
    assert e(0.5) == pytest.approx(1.25)
    assert e.derivative(0.5) == pytest.approx(1.0)

    s = Coefficient.parse("S", {"z": [0.0, 1.0], "values": [1.0, 3.0]})
    assert s(0.25) == pytest.approx(1.5)
    assert s.derivative(0.25) == pytest.approx(2.0)

    assert Coefficient.parse("S", "3").is_constant


def test_coefficient_bad_expression():
    with pytest.raises(CoefficientExpressionError):
        Coefficient.expression("S", "1 + y")
    with pytest.raises(CoefficientExpressionError):
        Coefficient.parse("S", [1, 2])


def test_non_smooth_coefficient():
    """A near-jump in a table is flagged before any computation."""
    jump = {"z": [0.0, 0.5, 0.5 + 1e-8, 1.0], "values": [1.0, 1.0, 2.0, 2.0]}
    with pytest.raises(NonSmoothCoefficient):
        build_model(BeamParameters.from_values(rho=0.8, S=1.0, kappa=1.25, J=jump, EI=0.5), 64)


def test_fingerprint_and_synthetic_coupling():
    """The fingerprint tracks grid and coupling; with_coupling keeps the transport data."""
    model = _nominal_model()
    assert model.fingerprint() == _nominal_model().fingerprint()
    assert model.fingerprint() != _nominal_model(33).fingerprint()
    bare = with_coupling(model, None)
    assert not np.any(bare.A)
    assert bare.tau1 == model.tau1 and bare.fingerprint() != model.fingerprint()
