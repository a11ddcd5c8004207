"""Adhesion/detachment kinetics: closed forms against the RK4 integrator."""

import math

import numpy as np
import pytest

from spraylink.errors import ValidationError
from spraylink.kinetics import (
    KineticsParams,
    bound_concentration,
    free_concentration,
    peak_time,
    rk4_trajectory,
    solve_kinetics_numeric,
)

# ln(4)/1.5, the peak time for (k1, k2) = (2, 0.5)
T_STAR_2_05 = 0.9241962407465937


def test_params_validation():
    with pytest.raises(ValidationError):
        KineticsParams(0.0, 1.0)
    with pytest.raises(ValidationError):
        KineticsParams(1.0, -0.5)
    with pytest.raises(ValidationError):
        KineticsParams(1.0, math.inf)


def test_bound_concentration_zero_at_t0():
    for k1, k2 in [(2.0, 0.5), (1.0, 1.0), (0.05, 20.0)]:
        assert bound_concentration(1.0, KineticsParams(k1, k2), 0.0) == 0.0


def test_bound_concentration_peak_value():
    # at the peak, B(t*) = e^{-k2 t*} for C0 = 1 (stationarity of B)
    kin = KineticsParams(2.0, 0.5)
    b = bound_concentration(1.0, kin, T_STAR_2_05)
    assert b == pytest.approx(0.6299605249474365, rel=1e-12)
    assert b == pytest.approx(math.exp(-0.5 * T_STAR_2_05), rel=1e-12)


def test_bound_concentration_confluent_value():
    b = bound_concentration(1.0, KineticsParams(1.0, 1.0), 1.0)
    assert b == pytest.approx(math.exp(-1.0), rel=1e-12)
    # nearly-confluent parameters must agree with the exact confluent limit
    b_eps = bound_concentration(1.0, KineticsParams(1.0, 1.0 + 1e-9), 1.0)
    assert b_eps == pytest.approx(b, rel=1e-6)


def test_bound_concentration_rejects_bad_input():
    kin = KineticsParams(1.0, 2.0)
    with pytest.raises(ValidationError):
        bound_concentration(-1.0, kin, 1.0)
    with pytest.raises(ValidationError):
        bound_concentration(1.0, kin, -0.1)


def test_free_concentration():
    kin = KineticsParams(2.0, 0.5)
    assert free_concentration(1.0, kin, 0.0) == 1.0
    assert free_concentration(1.0, kin, math.log(2.0) / 2.0) == pytest.approx(0.5, rel=1e-12)
    assert free_concentration(1.3602e-3, kin, 1.0) == pytest.approx(
        1.840830522584406e-4, rel=1e-10
    )


def test_peak_time():
    assert peak_time(KineticsParams(2.0, 0.5)) == pytest.approx(T_STAR_2_05, rel=1e-14)
    assert peak_time(KineticsParams(1.0, 1.0)) == 1.0
    # symmetric under swapping the rates, bitwise
    assert peak_time(KineticsParams(2.0, 0.5)) == peak_time(KineticsParams(0.5, 2.0))


def test_peak_separates_rise_and_decay():
    kin = KineticsParams(2.0, 0.5)
    t_star = peak_time(kin)
    before = bound_concentration(1.0, kin, np.linspace(0.0, t_star, 200))
    after = bound_concentration(1.0, kin, np.linspace(t_star, 10.0, 200))
    assert np.all(np.diff(before) > 0.0)
    assert np.all(np.diff(after) < 0.0)


def test_bound_nonnegative_near_confluence():
    rng = np.random.default_rng(7)
    t = np.linspace(0.0, 20.0, 400)
    for _ in range(50):
        k = rng.uniform(0.05, 20.0)
        kin = KineticsParams(k, k * (1.0 + rng.uniform(-1e-9, 1e-9)))
        assert np.all(bound_concentration(1.0, kin, t) >= 0.0)


def test_swap_scale_identity():
    # B(t; C0 g, k1, k2) == B(t; C0 g k1/k2, k2, k1)
    t = np.linspace(0.0, 12.0, 500)
    rng = np.random.default_rng(11)
    for _ in range(20):
        k1, k2 = rng.uniform(0.05, 20.0, size=2)
        c0 = rng.uniform(1e-4, 1e-2)
        left = bound_concentration(c0, KineticsParams(k1, k2), t)
        right = bound_concentration(c0 * k1 / k2, KineticsParams(k2, k1), t)
        np.testing.assert_allclose(left, right, rtol=1e-12, atol=1e-300)


def test_confluence_continuity():
    # approaching k1 == k2 from eps = 1e-6 stays within 1e-5 relative
    for k in (0.1, 1.0, 10.0):
        t = np.linspace(1e-3, 10.0 / k, 300)
        exact = bound_concentration(1.0, KineticsParams(k, k), t)
        near = bound_concentration(1.0, KineticsParams(k, k * (1.0 + 1e-6)), t)
        np.testing.assert_allclose(near, exact, rtol=1e-5)


def test_rk4_matches_analytic_reference_case():
    # C0 = 1, (k1, k2) = (2, 0.5), dt = 1e-4, horizon 10 s
    t, c, b, z = rk4_trajectory(1.0, KineticsParams(2.0, 0.5), 10.0, 1e-4)
    b_exact = bound_concentration(1.0, KineticsParams(2.0, 0.5), t)
    assert np.max(np.abs(b - b_exact)) < 1e-8
    assert np.max(np.abs(c + b + z - 1.0)) < 1e-8
    # mass only leaks toward the detached state
    assert np.all(c >= 0.0) and np.all(b >= 0.0) and np.all(z >= 0.0)
    assert np.all(c + b <= 1.0 + 1e-12)


def test_rk4_randomized_sweep():
    # pointwise relative agreement < 1e-6 across random rate pairs; the step
    # is sized so kmax*dt = 0.02, which keeps the RK4 truncation error about
    # two orders below the tolerance (see the reference case above for a
    # literal dt = 1e-4 run)
    rng = np.random.default_rng(21)
    for _ in range(20):
        k1, k2 = rng.uniform(0.05, 20.0, size=2)
        kin = KineticsParams(k1, k2)
        t_end = 10.0 / min(k1, k2)
        dt = 0.02 / max(k1, k2)
        t, c, b, z = rk4_trajectory(1.0, kin, t_end, dt)
        b_exact = bound_concentration(1.0, kin, t)
        mask = b_exact > 0.0
        rel = np.abs(b[mask] - b_exact[mask]) / b_exact[mask]
        assert np.max(rel) < 1e-6, (k1, k2, np.max(rel))
        assert np.max(np.abs(c + b + z - 1.0)) < 1e-8


def test_solve_kinetics_numeric_states():
    states = solve_kinetics_numeric(0.0, KineticsParams(2.0, 0.5), 1.0, 0.1)
    assert len(states) == 11
    assert all(s.c == 0.0 and s.b == 0.0 and s.z == 0.0 for s in states)

    states = solve_kinetics_numeric(1.0, KineticsParams(2.0, 0.5), 2.0, 0.01)
    assert states[0].t == 0.0 and states[0].c == 1.0 and states[0].b == 0.0
    mid = states[100]
    assert mid.b == pytest.approx(
        bound_concentration(1.0, KineticsParams(2.0, 0.5), mid.t), rel=1e-9
    )


def test_solve_kinetics_numeric_validation():
    kin = KineticsParams(1.0, 1.0)
    with pytest.raises(ValidationError):
        solve_kinetics_numeric(1.0, kin, 1.0, 0.0)
    with pytest.raises(ValidationError):
        solve_kinetics_numeric(1.0, kin, -1.0, 0.1)
    with pytest.raises(ValidationError):
        solve_kinetics_numeric(1.0, kin, 0.5, 1.0)
