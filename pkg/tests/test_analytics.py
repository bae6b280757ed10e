import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import qisac.analytics as analytics
from qisac import (
    ChannelParams,
    InfeasibleError,
    QuadratureError,
    ber_theory,
    fc_max,
    fisher_argmax,
    fisher_high_snr,
    fisher_symbol,
    fisher_symbol_mc,
    optimal_angles,
    pareto_known_theta,
    q_function,
)

# Frozen reference values, computed with a 30-digit arbitrary-precision
# erfc and cross-checked against the C library implementation.
Q_AT_2_13809 = 0.016254719697763251
BER_COMMON_PHI0 = 0.016254722322859766  # Q(4/sqrt(3.5))
# Mixture Fisher information at phi = 45 deg, A=4, sigma2=3.5; validated
# against the Monte-Carlo score-variance estimator (agreement well within
# one standard error at 1e6 samples).
F_COMMON_45DEG = 2.099012100766802


def _params_phi(phi: float, E=10.0, eta=0.8, Na=3.0) -> ChannelParams:
    """Channel at effective offset phi (theta=phi, psi=0 at the call site)."""
    return ChannelParams(E=E, eta=eta, Na=Na, theta=phi)


# ---------------------------------------------------------------- q_function

def test_q_function_at_zero():
    assert q_function(0.0) == 0.5


def test_q_function_frozen_value():
    assert np.isclose(q_function(2.13809), Q_AT_2_13809, rtol=1e-12)


def test_q_function_against_stdlib():
    # independent implementation route: C library erfc
    for x in np.linspace(-8.0, 8.0, 33):
        ref = 0.5 * math.erfc(x / math.sqrt(2.0))
        assert np.isclose(q_function(float(x)), ref, rtol=1e-12)


@given(st.floats(min_value=-8.0, max_value=8.0))
@settings(max_examples=50, deadline=None)
def test_q_function_reflection(x):
    assert np.isclose(q_function(x), 1.0 - q_function(-x), atol=1e-15)


# ---------------------------------------------------------------- ber_theory

def test_ber_frozen_at_zero_offset():
    p = _params_phi(0.0)
    assert np.isclose(ber_theory(p, 0.0), BER_COMMON_PHI0, rtol=1e-12)


def test_ber_half_at_quarter_turn():
    p = _params_phi(np.pi / 2)
    assert np.isclose(ber_theory(p, 0.0), 0.5, atol=1e-12)


def test_ber_symmetries():
    rng = np.random.default_rng(3)
    for phi in rng.uniform(-4, 4, size=25):
        b = ber_theory(_params_phi(phi), 0.0)
        assert np.isclose(ber_theory(_params_phi(-phi), 0.0), b, rtol=1e-9)
        assert np.isclose(ber_theory(_params_phi(phi + np.pi), 0.0), b, rtol=1e-9)


def test_dmin_identity():
    # |mu_0 - mu_1| = 2A|cos(phi)|
    rng = np.random.default_rng(4)
    for phi in rng.uniform(-6, 6, size=50):
        p = _params_phi(phi)
        from qisac.physics import block_means
        mu = block_means(p, 0.0)
        assert np.isclose(abs(mu[0] - mu[1]), 2 * p.amplitude() * abs(np.cos(phi)),
                          atol=1e-12)


# ------------------------------------------------------------- fisher_symbol

def test_fisher_zero_at_zero_offset():
    rep = fisher_symbol(_params_phi(0.0), 0.0)
    assert rep.per_symbol == 0.0
    assert rep.block == 0.0


def test_fisher_report_fields(params_common):
    rep = fisher_symbol(params_common, 0.0, n=1000)
    assert rep.block == 1000 * rep.per_symbol
    assert rep.n == 1000
    assert rep.quad_nodes >= 2048
    scale = params_common.amplitude() ** 2 / params_common.noise_var()
    assert rep.quad_error_est <= 1e-8 * max(rep.per_symbol, 1e-12 * scale)


def test_fisher_frozen_regression(params_common):
    rep = fisher_symbol(params_common, 0.0)  # phi = 45 deg
    assert np.isclose(rep.per_symbol, F_COMMON_45DEG, rtol=1e-9)


def test_fisher_reflection_symmetries():
    rng = np.random.default_rng(5)
    for phi in rng.uniform(0.1, 1.4, size=6):
        f = fisher_symbol(_params_phi(phi), 0.0).per_symbol
        assert np.isclose(fisher_symbol(_params_phi(-phi), 0.0).per_symbol, f, rtol=1e-9)
        assert np.isclose(fisher_symbol(_params_phi(np.pi - phi), 0.0).per_symbol, f,
                          rtol=1e-9)


def test_fisher_below_high_snr_bound():
    for phi in np.linspace(0.0, np.pi, 25):
        p = _params_phi(float(phi))
        assert fisher_symbol(p, 0.0).per_symbol <= fisher_high_snr(p, 0.0) + 1e-9


def test_fisher_nonnegative():
    rng = np.random.default_rng(6)
    for phi in rng.uniform(-3, 3, size=10):
        assert fisher_symbol(_params_phi(phi), 0.0).per_symbol >= 0.0


def test_fisher_quadrature_failure_signalled(monkeypatch):
    # Make node doubling never settle: result depends on the node budget.
    def unstable(a, sigma2, phi, nodes):
        return 1.0 + 1e-3 * math.sin(nodes), nodes

    monkeypatch.setattr(analytics, "_fisher_quad", unstable)
    with pytest.raises(QuadratureError):
        fisher_symbol(_params_phi(0.5), 0.0)


def test_fisher_rejects_bad_block_length(params_common):
    with pytest.raises(ValueError):
        fisher_symbol(params_common, 0.0, n=0)


# ---------------------------------------------------------- fisher_symbol_mc

def test_mc_zero_at_zero_offset():
    assert fisher_symbol_mc(_params_phi(0.0), 0.0, 10**4, seed=1) < 1e-20


def test_mc_matches_quadrature(params_common):
    quad = fisher_symbol(params_common, 0.0).per_symbol
    mc = fisher_symbol_mc(params_common, 0.0, 2 * 10**5, seed=21)
    assert np.isclose(mc, quad, rtol=0.03)


def test_mc_variance_shrinks_with_trials(params_common):
    small = [fisher_symbol_mc(params_common, 0.0, 10**4, seed=s) for s in range(10)]
    large = [fisher_symbol_mc(params_common, 0.0, 16 * 10**4, seed=100 + s) for s in range(10)]
    assert np.std(small) > 2.0 * np.std(large)   # expect ~4x for 16x samples


def test_mc_rejects_tiny_sample():
    with pytest.raises(ValueError):
        fisher_symbol_mc(_params_phi(0.3), 0.0, 10**3, seed=1)


# ------------------------------------------------------------ high-SNR limit

def test_high_snr_values(params_common):
    p = replace(params_common, theta=np.pi / 2)
    assert np.isclose(fisher_high_snr(p, 0.0), 16.0 / 3.5, rtol=1e-15)
    assert fisher_high_snr(_params_phi(0.0), 0.0) == 0.0


# ------------------------------------------------------------------- fc_max

def test_fc_max_linearity(params_theta0):
    f1 = fc_max(params_theta0, 1)
    f1000 = fc_max(params_theta0, 1000)
    assert f1000 == 1000 * f1


def test_fc_max_below_parameter_bound(params_theta0):
    bound = 1000 * params_theta0.amplitude() ** 2 / params_theta0.noise_var()
    assert fc_max(params_theta0, 1000) <= bound


def test_fc_max_rejects_bad_n(params_theta0):
    with pytest.raises(ValueError):
        fc_max(params_theta0, 0)


def test_argmax_matches_grid_search():
    # Independent search route: dense grid over the candidate interval.
    p = ChannelParams(E=200.0, eta=1.0, Na=0.0, theta=0.0)
    phi_star, f_peak = fisher_argmax(p)
    grid = np.linspace(1.30, np.pi / 2, 301)
    vals = [fisher_symbol(replace(p, theta=float(g)), 0.0).per_symbol for g in grid]
    assert abs(phi_star - grid[int(np.argmax(vals))]) < 2e-3
    assert f_peak >= max(vals) - 1e-6 * f_peak
    # Frozen location: the peak sits 0.0972 rad short of the quarter turn
    # at this SNR (the argmax approaches pi/2 only as SNR grows further).
    assert np.isclose(np.pi / 2 - phi_star, 0.097229, atol=5e-4)


def test_argmax_common_point(params_theta0):
    phi_star, f_peak = fisher_argmax(params_theta0)
    assert np.isclose(np.degrees(phi_star), 59.78, atol=0.1)
    assert np.isclose(f_peak, 2.6403500674606918, rtol=1e-6)


# ------------------------------------------------------------ optimal_angles

def test_optimal_angles_examples():
    com, sen = optimal_angles(math.radians(30.0))
    assert np.isclose(com, math.radians(30.0), rtol=1e-15)
    assert np.isclose(sen, math.radians(120.0), rtol=1e-12)
    _, sen170 = optimal_angles(math.radians(170.0))
    assert np.isclose(sen170, math.radians(80.0), rtol=1e-12)


@given(st.floats(min_value=-50.0, max_value=50.0))
@settings(max_examples=100, deadline=None)
def test_optimal_angles_quarter_turn_apart(theta_hat):
    com, sen = optimal_angles(theta_hat)
    assert 0.0 <= com < np.pi
    assert 0.0 <= sen < np.pi
    d = (sen - com) % np.pi
    assert np.isclose(d, np.pi / 2, atol=1e-9)


# -------------------------------------------------------- pareto_known_theta

def test_pareto_unconstrained_endpoint(params_theta0):
    pt = pareto_known_theta(params_theta0, 1000, 0.0)
    assert pt.phi_star == 0.0
    assert pt.ber == ber_theory(params_theta0, 0.0)


def test_pareto_constraint_binds_at_peak(params_theta0):
    fcm = fc_max(params_theta0, 1000)
    phi_star, _ = fisher_argmax(params_theta0)
    pt = pareto_known_theta(params_theta0, 1000, fcm)
    assert abs(pt.phi_star - phi_star) < 1e-4


def test_pareto_monotone_in_gamma(params_theta0):
    fcm = fc_max(params_theta0, 1000)
    bers = [pareto_known_theta(params_theta0, 1000, f * fcm).ber
            for f in np.linspace(0.0, 1.0, 20)]
    assert all(b2 >= b1 - 1e-15 for b1, b2 in zip(bers, bers[1:]))


def test_pareto_constraint_satisfied(params_theta0):
    fcm = fc_max(params_theta0, 1000)
    for frac in (0.25, 0.6, 0.9):
        pt = pareto_known_theta(params_theta0, 1000, frac * fcm)
        achieved = fisher_symbol(replace(params_theta0, theta=pt.phi_star), 0.0,
                                 n=1000).block
        assert achieved >= pt.gamma_min - 1e-6 * pt.gamma_min
        assert 0.0 <= pt.phi_star <= np.pi / 2


def test_pareto_infeasible(params_theta0):
    fcm = fc_max(params_theta0, 1000)
    with pytest.raises(InfeasibleError):
        pareto_known_theta(params_theta0, 1000, 1.001 * fcm)
    with pytest.raises(ValueError):
        pareto_known_theta(params_theta0, 1000, -1.0)
