import numpy as np
import pytest

from relaxlab.model import (EquilibriumMap, FluxSpec, IsothermSpec,
                            entropy_pair_eval, equilibrium_invert, flux_eval,
                            flux_from_config, isotherm_eval,
                            isotherm_from_config, isotherm_inverse)

LINEAR = IsothermSpec(kind="linear")
LANGMUIR = IsothermSpec(kind="langmuir", beta=1.0)


def test_flux_eval_examples():
    assert flux_eval(FluxSpec("linear", c=1.0), 0.0) == 0.0
    assert flux_eval(FluxSpec("quadratic"), 1.0) == 0.5
    assert flux_eval(FluxSpec("linear", c=2.0), 0.25) == 0.5


def test_flux_eval_domain_error():
    with pytest.raises(ValueError):
        flux_eval(FluxSpec("linear"), 1.0 + 1e-6)
    # within clamp slack is tolerated
    assert flux_eval(FluxSpec("linear"), 1.0 + 1e-13) == 1.0


def test_isotherm_eval_examples():
    for iso in (LINEAR, LANGMUIR):
        assert isotherm_eval(iso, 0.0) == 0.0
        assert isotherm_eval(iso, 1.0) == 1.0
    assert isotherm_eval(LANGMUIR, 0.5) == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_isotherm_inverse_examples():
    assert isotherm_inverse(LINEAR, 0.7) == 0.7
    assert isotherm_inverse(LANGMUIR, 2.0 / 3.0) == pytest.approx(0.5, abs=1e-14)
    for iso in (LINEAR, LANGMUIR):
        assert isotherm_inverse(iso, 1.0) == pytest.approx(1.0, abs=1e-14)


def test_inverse_is_identity(isotherm):
    u = np.linspace(0.0, 1.0, 1000)
    w = isotherm.value(u)
    assert np.max(np.abs(isotherm.inverse(w) - u)) <= 1e-12
    assert np.max(np.abs(isotherm.value(isotherm.inverse(u)) - u)) <= 1e-12


def test_derivative_signs(isotherm, flux):
    u = np.linspace(0.0, 1.0, 1000)
    assert np.min(flux.deriv(u)) >= -1e-14
    assert np.min(isotherm.deriv(u)) >= 1e-14
    assert flux.lip_bound() >= np.max(flux.deriv(u)) - 1e-14


def test_finite_difference_derivatives(isotherm, flux):
    u = np.linspace(0.01, 0.99, 97)
    d = 1e-5
    fd_iso = (isotherm.value(u + d) - isotherm.value(u - d)) / (2 * d)
    assert np.max(np.abs(fd_iso - isotherm.deriv(u))) <= 1e-6
    fd_flux = (flux.value(u + d) - flux.value(u - d)) / (2 * d)
    assert np.max(np.abs(fd_flux - flux.deriv(u))) <= 1e-6


def test_convex_primitive_h(isotherm):
    # H' = A^{-1} and H'' = (A^{-1})' > 0: second differences nonnegative
    v = np.linspace(0.0, 1.0, 501)
    h = isotherm.convex_primitive(v)
    assert np.min(np.diff(h, 2)) >= -1e-12
    # H matches quadrature of the inverse
    from numpy.polynomial.legendre import leggauss
    x, wq = leggauss(20)
    for v_end in (0.3, 0.7, 1.0):
        nodes = 0.5 * v_end * (x + 1.0)
        quad = 0.5 * v_end * np.sum(wq * isotherm.inverse(nodes))
        assert isotherm.convex_primitive(v_end) == pytest.approx(quad, abs=1e-12)


def test_primitive_of_isotherm(isotherm):
    from numpy.polynomial.legendre import leggauss
    x, wq = leggauss(20)
    for u_end in (0.25, 0.6, 1.0):
        nodes = 0.5 * u_end * (x + 1.0)
        quad = 0.5 * u_end * np.sum(wq * np.asarray(isotherm.value(nodes)))
        assert isotherm.primitive(u_end) == pytest.approx(quad, abs=1e-12)


def test_entropy_pair_examples():
    eta, q = entropy_pair_eval(FluxSpec("linear", c=1.0), LINEAR, 1.0, 1.0)
    assert eta == pytest.approx(1.0, abs=1e-15)
    assert q == pytest.approx(0.5, abs=1e-15)
    eta0, q0 = entropy_pair_eval(FluxSpec("linear", c=1.0), LANGMUIR, 0.0, 0.0)
    assert eta0 == 0.0 and q0 == 0.0
    _, q_quad = entropy_pair_eval(FluxSpec("quadratic"), LINEAR, 1.0, 0.0)
    assert q_quad == pytest.approx(1.0 / 3.0, abs=1e-15)


def test_equilibrium_invert_examples():
    lin = EquilibriumMap(LINEAR)
    assert equilibrium_invert(lin, 1.0) == pytest.approx(0.5, abs=1e-13)
    assert equilibrium_invert(lin, 0.0) == pytest.approx(0.0, abs=1e-13)
    lang = EquilibriumMap(LANGMUIR)
    assert equilibrium_invert(lang, 2.0) == pytest.approx(1.0, abs=1e-13)
    with pytest.raises(ValueError):
        equilibrium_invert(lang, 2.5)


def test_equilibrium_roundtrip(isotherm):
    emap = EquilibriumMap(isotherm)
    w = np.linspace(0.0, 1.0, 1000)
    z = emap.forward(w)
    assert np.min(np.diff(z)) > 0.0
    assert z[0] == 0.0 and z[-1] == pytest.approx(2.0, abs=1e-15)
    back = emap.invert(z)
    assert np.max(np.abs(back - w)) <= 1e-12
    # residual form of the contract
    assert np.max(np.abs(emap.forward(back) - z)) <= 1e-12


def test_inverse_derivative_lower_bound(isotherm):
    # (A^{-1})'(w) = 1/A'(A^{-1}(w)) is bounded below by 1/Lip(A)
    w = np.linspace(0.0, 1.0, 500)
    inv_deriv = 1.0 / isotherm.deriv(isotherm.inverse(w))
    assert np.min(inv_deriv) >= 1.0 / isotherm.lip_bound() - 1e-12


def test_config_parsing():
    assert flux_from_config({"kind": "linear", "c": 2.0}) == FluxSpec("linear", c=2.0)
    assert flux_from_config({"kind": "quadratic"}) == FluxSpec("quadratic")
    assert isotherm_from_config({"kind": "langmuir", "beta": 1.0}) == LANGMUIR
    with pytest.raises(ValueError):
        flux_from_config({"kind": "cubic"})
    with pytest.raises(ValueError):
        isotherm_from_config({"kind": "langmuir", "beta": 1.0, "gamma": 2.0})
