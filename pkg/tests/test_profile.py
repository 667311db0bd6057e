import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dnls_decay.classifier import RealCubicPoly, classify
from dnls_decay.nonlinearity import NuPolynomial
from dnls_decay.profile import (FrequencyGrid, InitialProfile, ProfileDivergenceError,
                                ProfileState, asymptotic_profile, closed_form_modulus,
                                evolve_nodes, integrate_profile, l2_norm, l2_tail_bound,
                                log_sample_times, predicted_exponent, profile_trajectory)

SQUARE = NuPolynomial((0, 0, -1j, 1))          # p = xi^2
CONSTANT = NuPolynomial((-1j, 0, 0, 0))        # p = 1
SHIFTED = NuPolynomial((-1j, 0, -1j, 0))       # p = 1 + xi^2


def test_grid_basics():
    g = FrequencyGrid()
    assert (g.xi_min, g.xi_max, g.count) == (-20, 20, 4096)
    assert np.all(np.diff(g.xi) > 0)
    np.testing.assert_allclose(g.xi, -g.xi[::-1], atol=1e-13)
    assert g.dxi == pytest.approx(40 / 4095)
    with pytest.raises(ValueError):
        FrequencyGrid(0, 1, 1)
    with pytest.raises(ValueError):
        FrequencyGrid(1, 0, 10)


def test_initial_profile_envelope():
    g = FrequencyGrid.symmetric(10, 101)
    init = InitialProfile.bracket_envelope(g, 0.1)
    assert init.envelope == 0.1 and init.t0 == 2.0
    gauss = InitialProfile.gaussian(g, 0.1, 1.0)
    assert gauss.envelope >= 0.1
    with pytest.raises(ValueError):
        InitialProfile(g, np.ones(g.count), envelope=0.5)
    with pytest.raises(ValueError):
        InitialProfile(g, np.ones(3))


def test_real_nu_conserves_modulus():
    g = FrequencyGrid.symmetric(5, 201)
    rng = np.random.default_rng(0)
    a0 = (rng.uniform(0.1, 1, g.count) * np.exp(2j * np.pi * rng.random(g.count))) / (1 + g.xi ** 2)
    init = InitialProfile(g, a0)
    nu = NuPolynomial((0.7, -0.3, 1.1, 0.2))
    worst = 0.0
    for state in profile_trajectory(init, nu, log_sample_times(init.log_t0, math.log(1e12), 40)):
        worst = max(worst, np.max(np.abs(np.abs(state.beta) - np.abs(a0))))
    assert worst < 1e-10


def test_constant_dissipation_example():
    g = FrequencyGrid(0.0, 1.0, 2)
    init = InitialProfile(g, np.array([1.0, 1.0]), t0=1.0)
    state = integrate_profile(init, CONSTANT, t_end=math.e)
    assert abs(state.beta[0]) ** 2 == pytest.approx(1 / 3, abs=1e-8)


def test_zero_nu_is_stationary():
    g = FrequencyGrid.symmetric(3, 31)
    init = InitialProfile.bracket_envelope(g, 0.2)
    state = integrate_profile(init, NuPolynomial((0, 0, 0, 0)), t_end=1e9)
    np.testing.assert_array_equal(state.beta, init.alpha0)


def test_integrate_profile_preconditions():
    g = FrequencyGrid.symmetric(3, 31)
    init = InitialProfile.bracket_envelope(g, 0.2)
    with pytest.raises(ValueError):
        integrate_profile(init, SQUARE, t_end=1.5)
    with pytest.raises(ValueError):
        integrate_profile(init, SQUARE, t_end=10, steps_per_decade=8)
    with pytest.raises(ValueError):
        integrate_profile(init, SQUARE)


def test_growth_is_reported_with_node():
    beta0 = np.array([1.0 + 0j, 0.5])
    with pytest.raises(ProfileDivergenceError) as err:
        list(evolve_nodes(beta0, np.full(2, 1j), 0.0, [10.0], xi=np.array([-1.0, 2.0])))
    assert err.value.xi == -1.0
    assert err.value.log_t == pytest.approx(0.5, abs=1e-6)


def test_closed_form_examples():
    assert closed_form_modulus(0.3, 0.0, 2.0, 1e9) == 0.3
    assert closed_form_modulus(1.0, 1.0, 1.0, math.e) == pytest.approx(1 / 3)
    assert closed_form_modulus(0.0, 2.0, 2.0, 50.0) == 0.0
    assert closed_form_modulus(1.0, 1.0, log_ratio=1.0) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        closed_form_modulus(1.0, 1.0)


def test_random_nodes_match_closed_form():
    rng = np.random.default_rng(1)
    xi = rng.uniform(-4, 4, 100)
    c0, x0, m = 1.3, 0.4, 0.2
    p = c0 * (xi - x0) ** 2 + m * (rng.random(100) < 0.5)
    nu = rng.normal(size=100) - 1j * p
    m0 = rng.uniform(1e-3, 1.0, 100)
    beta0 = np.sqrt(m0) * np.exp(2j * np.pi * rng.random(100))
    t0 = 2.0
    log_times = math.log(t0) + np.log(np.geomspace(1.0 + 1e-6, 1e12, 30))
    worst = 0.0
    for log_t, beta, _ in evolve_nodes(beta0, nu, math.log(t0), log_times):
        want = closed_form_modulus(m0, p, log_ratio=log_t - math.log(t0))
        worst = max(worst, np.max(np.abs(np.abs(beta) ** 2 / want - 1)))
    assert worst < 1e-7


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(1e-3, 1.0), st.floats(0.5, 12.0))
def test_single_node_matches_closed_form(p, m0, decades):
    t0 = 2.0
    log_t = math.log(t0) + decades * math.log(10)
    (_, beta, _), = evolve_nodes(np.array([math.sqrt(m0) + 0j]), np.array([0.3 - 1j * p]),
                                 math.log(t0), [log_t])
    want = closed_form_modulus(m0, p, log_ratio=log_t - math.log(t0))
    assert abs(abs(beta[0]) ** 2 / want - 1) < 1e-7


def _trajectory(nu, eps=0.3, decades=12, count=40):
    g = FrequencyGrid.symmetric(6, 241)
    init = InitialProfile.bracket_envelope(g, eps)
    times = log_sample_times(init.log_t0, init.log_t0 + decades * math.log(10), count)
    return init, list(profile_trajectory(init, nu, times))


@pytest.mark.parametrize("nu", [SQUARE, SHIFTED, CONSTANT])
def test_energy_is_nonincreasing(nu):
    init, states = _trajectory(nu)
    p = -np.imag(nu(init.grid.xi))
    phi = np.array([p * np.abs(s.beta) ** 2 for s in states])
    assert np.all(np.diff(phi, axis=0) <= 1e-15)


@pytest.mark.parametrize("nu", [SQUARE, SHIFTED, CONSTANT])
def test_energy_times_log_is_bounded(nu):
    init, states = _trajectory(nu)
    p = -np.imag(nu(init.grid.xi))
    phi0 = p * np.abs(init.alpha0) ** 2
    for s in states:
        phi = p * np.abs(s.beta) ** 2
        assert np.all(phi * s.log_t <= (0.5 + phi0 * init.log_t0) * (1 + 1e-7))


@pytest.mark.parametrize("nu", [SQUARE, SHIFTED, CONSTANT])
def test_pointwise_interpolation_bound(nu):
    init, states = _trajectory(nu)
    xi = init.grid.xi
    p = -np.imag(nu(xi))
    env = init.envelope / (1 + xi ** 2)
    for s in states[1:]:
        L = s.log_t - init.log_t0
        with np.errstate(divide="ignore"):
            decay = np.where(p > 0, 1 / np.sqrt(2 * p * L), np.inf)
        assert np.all(np.abs(s.beta) <= np.minimum(env, decay) * (1 + 1e-7))


def test_l2_norm_examples():
    g = FrequencyGrid.symmetric(400, 400001)
    assert l2_norm(ProfileState(0.0, np.zeros(g.count, complex), g)) == 0
    beta = 1 / (1 + g.xi ** 2) + 0j
    tail = l2_tail_bound(g, 1.0)
    assert abs(l2_norm(ProfileState(0.0, beta, g)) - math.sqrt(math.pi / 2)) < 1e-6 + tail
    assert tail < 1e-3


def test_l2_norm_decreases_for_closed_form():
    g = FrequencyGrid()
    m0 = 0.01 / (1 + g.xi ** 2) ** 2
    prev = math.inf
    for L in np.geomspace(1, 1e8, 30):
        val = math.sqrt(np.trapezoid(closed_form_modulus(m0, g.xi ** 2, log_ratio=L), dx=g.dxi))
        assert val < prev
        prev = val


def test_tail_bound_small_on_default_grid():
    # squared norm carried outside [-20, 20] by the eps <xi>^-2 envelope at eps = 0.1
    assert l2_tail_bound(FrequencyGrid(), 0.1) ** 2 < 1e-6
    assert l2_tail_bound(FrequencyGrid.symmetric(200, 10), 1.0) ** 2 < 1e-6


def test_asymptotic_profile_constant_in_time():
    g = FrequencyGrid.symmetric(2, 21)
    init = InitialProfile(g, np.full(g.count, 0.3 + 0j))
    for nu in (NuPolynomial((1, 0, 0, 0)), NuPolynomial((0, 1, 0, 0))):
        times = np.log(np.geomspace(1e3, 1e6, 10))
        prof = [asymptotic_profile(s, nu) for s in profile_trajectory(init, nu, times)]
        for a in prof[1:]:
            assert np.max(np.abs(a - prof[0])) < 1e-8


def test_asymptotic_profile_zero_nu_and_precondition():
    g = FrequencyGrid.symmetric(2, 21)
    init = InitialProfile.bracket_envelope(g, 0.3)
    zero = NuPolynomial((0, 0, 0, 0))
    state = integrate_profile(init, zero, t_end=1e4)
    np.testing.assert_array_equal(asymptotic_profile(state, zero), init.alpha0)
    with pytest.raises(ValueError):
        asymptotic_profile(state, SQUARE)


def test_predicted_exponents():
    assert predicted_exponent(classify(RealCubicPoly((0, 0, 1, 0)))) == 0.25
    assert predicted_exponent(classify(RealCubicPoly((1, 0, 0, 0)))) == 0.375
    assert predicted_exponent(classify(RealCubicPoly((1, 0, 1, 0)))) == 0.5
    with pytest.raises(ValueError):
        predicted_exponent(classify(RealCubicPoly((0, 0, 0, 0))))


def test_shared_rate_floor_makes_partitions_identical():
    g = FrequencyGrid.symmetric(6, 200)
    init = InitialProfile.bracket_envelope(g, 0.4)
    nu_vals = SQUARE(g.xi)
    floor = float(np.max(np.abs(nu_vals) * np.abs(init.alpha0) ** 2))
    times = [math.log(1e8)]
    (_, full, _), = evolve_nodes(init.alpha0, nu_vals, init.log_t0, times, rate_floor=floor)
    parts = []
    for sl in (slice(0, 77), slice(77, None)):
        (_, b, _), = evolve_nodes(init.alpha0[sl], nu_vals[sl], init.log_t0, times,
                                  rate_floor=floor)
        parts.append(b)
    np.testing.assert_array_equal(np.concatenate(parts), full)
