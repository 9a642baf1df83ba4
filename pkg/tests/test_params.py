import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from lkchaos.params import (BelowThresholdError, LaserParams, LaserState,
                            derive, drift, optical_gain,
                            relaxation_frequency, solitary_jacobian,
                            solitary_steady_state, unit_scales)


def steady_state_by_root(p):
    # independent check: on the lasing branch gain clamps, G = 1/tau_p,
    # which ties N to I; the remaining carrier balance is solved for I.
    c = derive(p)

    def n_of_i(i):
        return p.n_transparency + (1.0 + p.epsilon * i) / (p.gain_coeff * p.tau_p)

    def residual(i):
        return c.pump / p.charge - n_of_i(i) / p.tau_n - i / p.tau_p

    i_hi = (c.pump / p.charge) * p.tau_p * 10
    i_s = brentq(residual, 1e-12, i_hi, rtol=1e-14)
    return math.sqrt(i_s), n_of_i(i_s)


def test_steady_state_matches_independent_root():
    p = LaserParams()
    r_cf, n_cf = solitary_steady_state(p)
    r_rt, n_rt = steady_state_by_root(p)
    assert r_cf == pytest.approx(r_rt, rel=1e-10)
    assert n_cf == pytest.approx(n_rt, rel=1e-10)


def test_steady_state_zeroes_the_drift():
    p = LaserParams(kappa=0.0)
    c = derive(p)
    r_s, n_s = solitary_steady_state(p)
    s = LaserState(R=r_s, phi=0.0, N=n_s)
    dR, dphi, dN = drift(s, s, c, p)
    assert abs(dR) <= 1e-10 * r_s / p.tau_p
    assert abs(dphi) <= 1e-10 / p.tau_p
    assert abs(dN) <= 1e-10 * c.pump / p.charge


def test_below_threshold_raises_and_off_branch():
    p = LaserParams(pump_factor=0.9)
    with pytest.raises(BelowThresholdError):
        solitary_steady_state(p)
    r, n = solitary_steady_state(p, allow_off=True)
    assert r == 0.0
    assert n == pytest.approx(0.9 * p.n_threshold)


def test_threshold_carrier_number():
    p = LaserParams()
    assert p.n_threshold - p.n_transparency == pytest.approx(
        1.0 / (p.gain_coeff * p.tau_p), rel=1e-12)


def test_optical_gain_transparency_and_saturation():
    p = LaserParams()
    assert optical_gain(p.n_transparency, 0.0, p) == 0.0
    n = p.n_transparency + 1e8
    g0 = optical_gain(n, 0.0, p)
    assert optical_gain(n, 1.0 / p.epsilon, p) == pytest.approx(g0 / 2)
    with pytest.raises(ValueError):
        optical_gain(n, -1.0, p)
    with pytest.raises(ValueError):
        optical_gain(float("nan"), 0.0, p)


def test_jacobian_matches_finite_differences():
    p = LaserParams(kappa=0.0)
    c = derive(p)
    r_s, n_s = solitary_steady_state(p)
    jac = solitary_jacobian(p)

    def f(r, n):
        s = LaserState(R=r, phi=0.0, N=n)
        dR, _, dN = drift(s, s, c, p)
        return np.array([dR, dN])

    hr = r_s * 1e-6
    hn = n_s * 1e-6
    fd = np.column_stack([
        (f(r_s + hr, n_s) - f(r_s - hr, n_s)) / (2 * hr),
        (f(r_s, n_s + hn) - f(r_s, n_s - hn)) / (2 * hn),
    ])
    assert np.allclose(jac, fd, rtol=1e-5)


def test_relaxation_frequency_from_eigenvalues():
    p = LaserParams()
    ev = np.linalg.eigvals(solitary_jacobian(p))
    assert relaxation_frequency(p) == pytest.approx(
        abs(ev.imag).max() / (2 * math.pi))
    # GHz scale for the default operating point
    assert 0.5e9 < relaxation_frequency(p) < 5e9


def test_derived_constants():
    p = LaserParams()
    c = derive(p)
    assert c.omega == pytest.approx(2 * math.pi * 299792458.0 / p.lambda_m)
    assert 0.0 <= c.feedback_phase_offset < 2 * math.pi
    assert c.pump == pytest.approx(p.pump_factor * c.j_threshold)
    assert c.j_threshold == pytest.approx(p.charge * p.n_threshold / p.tau_n)


def test_unit_scales():
    p = LaserParams()
    a_r, a_phi, a_n = unit_scales(p)
    r_s, _ = solitary_steady_state(p)
    assert a_r == pytest.approx(r_s / p.tau_ext)
    assert a_phi == pytest.approx(1.0 / p.tau_ext)
    assert a_n == pytest.approx(p.n_threshold / p.tau_ext)
    assert a_r > 0 and a_phi > 0 and a_n > 0


@given(rho=st.floats(1.05, 3.0), kap=st.floats(0.0, 2e10),
       eps_rel=st.floats(0.1, 10.0))
def test_lasing_branch_consistent_for_any_operating_point(rho, kap, eps_rel):
    p = LaserParams(pump_factor=rho, kappa=kap, epsilon=5e-7 * eps_rel)
    r_s, n_s = solitary_steady_state(p)
    assert r_s > 0
    assert n_s > p.n_threshold  # gain compression keeps N above N_th
    # the clamped gain equals the photon loss rate
    assert optical_gain(n_s, r_s * r_s, p) == pytest.approx(
        1.0 / p.tau_p, rel=1e-12)


def test_parameter_validation():
    with pytest.raises(ValueError):
        LaserParams(tau_p=0.0)
    with pytest.raises(ValueError):
        LaserParams(kappa=-1.0)
    with pytest.raises(ValueError):
        LaserParams(pump_factor=0.0)
    with pytest.raises(ValueError):
        LaserParams(gain_coeff=float("inf"))
    with pytest.raises(ValueError):
        LaserState(R=-1.0, phi=0.0, N=1.0)
    with pytest.raises(ValueError):
        LaserState(R=float("nan"), phi=0.0, N=1.0)
