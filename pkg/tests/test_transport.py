import numpy as np
import pytest

from relaxlab.grid import GridSpec, GridState, init_from_function, l1_norm, total_variation
from relaxlab.model import FluxSpec
from relaxlab.transport import CflPolicy, convect, convect_step, godunov_flux


def make_state(n=50, refine=1, boundary="periodic", fn=None):
    g = GridSpec(n_coarse=n, refine=refine, boundary=boundary)
    if fn is None:
        fn = lambda x: 0.5 + 0.4 * np.sin(2 * np.pi * x)
    return init_from_function(g, fn, lambda x: np.zeros_like(x))


def test_godunov_flux_examples():
    assert godunov_flux(FluxSpec("linear", c=1.0), 0.3, 0.9) == pytest.approx(0.3)
    assert godunov_flux(FluxSpec("quadratic"), 1.0, 0.0) == pytest.approx(0.5)
    for flux in (FluxSpec("linear", c=2.0), FluxSpec("quadratic")):
        for a in (0.0, 0.3, 1.0):
            assert godunov_flux(flux, a, a) == pytest.approx(float(flux.value(a)))


def test_cfl_substeps_tile_exactly():
    pol = CflPolicy(0.9)
    steps = pol.substeps(0.01, 1.0 / 800.0, 1.0)
    assert sum(steps) == pytest.approx(0.01, rel=1e-14)
    assert all(s * 1.0 <= 0.9 / 800.0 + 1e-15 for s in steps)
    # unit courant, refine 1: single exact step
    assert CflPolicy(1.0).substeps(0.01, 0.01, 1.0) == [0.01]


def test_constant_state_fixed(flux):
    st = make_state(fn=lambda x: 0.4 * np.ones_like(x))
    out = convect(st, flux, 0.05, CflPolicy(0.9))
    np.testing.assert_allclose(out.u, 0.4, atol=1e-15)
    np.testing.assert_array_equal(out.v, st.v)
    assert out.t == pytest.approx(0.05)


def test_unit_courant_exact_shift():
    # linear flux at courant 1 advances exactly one fine cell per step
    st = make_state(n=32)
    flux = FluxSpec("linear", c=1.0)
    dt = st.grid.fine_width
    out = convect(st, flux, dt, CflPolicy(1.0))
    np.testing.assert_allclose(out.u, np.roll(st.u, 1), atol=1e-14)


def test_shock_speed_quadratic():
    # Riemann 1|0: Rankine-Hugoniot speed 1/2 for f = u^2/2
    g = GridSpec(x_min=0.0, x_max=1.0, n_coarse=200, refine=1, boundary="outflow")
    st = init_from_function(g, lambda x: np.where(x < 0.25, 1.0, 0.0),
                            lambda x: np.zeros_like(x))
    t_end = 0.4
    out = convect(st, FluxSpec("quadratic"), t_end, CflPolicy(0.9))
    # front position by conservation of the overhang mass
    front = g.x_min + np.sum(out.u) * g.fine_width
    assert abs(front - (0.25 + 0.5 * t_end)) <= g.fine_width


def test_mass_conserved_periodic(flux):
    st = make_state(n=64, refine=4)
    before = np.sum(st.u) * st.grid.fine_width
    out = convect(st, flux, 0.13, CflPolicy(0.9))
    after = np.sum(out.u) * st.grid.fine_width
    assert after == pytest.approx(before, abs=1e-13)


def test_monotone_and_contractive(rng, flux):
    g = GridSpec(n_coarse=40, refine=2)
    for _ in range(10):
        a = rng.uniform(0.0, 1.0, g.n_fine)
        b = rng.uniform(0.0, 1.0, g.n_fine)
        sa = GridState(g, np.minimum(a, b), np.zeros(g.n_fine))
        sb = GridState(g, np.maximum(a, b), np.zeros(g.n_fine))
        dt = 0.5 * g.fine_width / flux.lip_bound()
        oa = convect_step(sa, flux, dt)
        ob = convect_step(sb, flux, dt)
        assert np.all(oa.u <= ob.u + 1e-13)
        # L1 contraction
        ca = GridState(g, a, np.zeros(g.n_fine))
        cb = GridState(g, b, np.zeros(g.n_fine))
        assert (l1_norm(g, convect_step(ca, flux, dt).u - convect_step(cb, flux, dt).u)
                <= l1_norm(g, a - b) + 1e-13)


def test_tvd(rng, flux):
    g = GridSpec(n_coarse=40, refine=2)
    for _ in range(10):
        u = rng.uniform(0.0, 1.0, g.n_fine)
        st = GridState(g, u, np.zeros(g.n_fine))
        dt = 0.9 * g.fine_width / flux.lip_bound()
        out = convect_step(st, flux, dt)
        assert total_variation(g, out.u) <= total_variation(g, u) + 1e-13


def test_cfl_violation_raises():
    st = make_state(n=10)
    with pytest.raises(ValueError):
        convect_step(st, FluxSpec("linear", c=1.0), 10.0 * st.grid.fine_width)
