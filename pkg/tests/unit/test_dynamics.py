# coding: utf-8

import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg

import memat.dynamics
import memat.params
import memat.rates
from memat.dynamics import (
    CoolingSettings, GaussianState, LinearModel, build_model, evolve,
    occupations, steady_state, thermal_state)
from memat.rates import RateSet
from memat.utils import (
    DivisionDomainError, StepSizeError, UnstableModelError, ValidationError)

SYSTEM = memat.params.reference()
RATES = memat.rates.full_rates(SYSTEM)
COOLING = 2.2e5


def rates(g=0.0, gamma_m=0.0, N_m_bar=0.0, gamma_m_diff=0.0,
          gamma_at_diff=0.0, omega_m=1.0, omega_at=1.0):
    """ Rate set in units of the mechanical frequency """
    return RateSet(
        g_m=math.sqrt(g / 2), g_at=math.sqrt(g / 2), g=g, gamma_m=gamma_m,
        gamma_m_diff=gamma_m_diff, gamma_at_diff=gamma_at_diff,
        N_m_bar=N_m_bar, gamma_m_th=gamma_m * N_m_bar, delta_T=0.0,
        P_abs=0.0, K_th=1.0, omega_m=omega_m, omega_at=omega_at)


def random_rates(generator):
    """ Random stable rate set """
    omega_m, omega_at = generator.uniform(1, 2, 2)
    return rates(
        g=generator.uniform(0, 0.5),
        gamma_m=generator.uniform(0.05, 0.5),
        N_m_bar=generator.uniform(0, 5),
        gamma_m_diff=generator.uniform(0, 0.5),
        gamma_at_diff=generator.uniform(0, 0.5),
        omega_m=omega_m, omega_at=omega_at)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Model
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def test_model_structure():
    """ Drift and diffusion of the reference configuration """
    model = build_model(RATES, COOLING)
    assert model.drift_A[1, 2] == RATES.g
    assert model.drift_A[3, 0] == RATES.g
    assert model.drift_A[2, 2] == -COOLING / 2
    D = model.diffusion_D
    assert np.array_equal(D, D.T)
    assert np.linalg.eigvalsh(D).min() >= 0
    assert D[1, 1] - D[0, 0] == pytest.approx(RATES.gamma_m_diff)
    assert model.max_real < 0
    assert np.array_equal(
        memat.dynamics.model_from_system(SYSTEM, COOLING).drift_A,
        model.drift_A)


def test_hamiltonian_limit():
    """ Without damping all eigenvalues are imaginary """
    model = build_model(rates(g=0.1), 0.0)
    assert np.all(np.abs(model.eigenvalues.real) < 1e-10)
    with pytest.raises(UnstableModelError):
        model.require_stable()


def test_cooling_settings():
    """ Cooling rate validation """
    assert CoolingSettings().gamma_cool == 0
    with pytest.raises(ValidationError):
        CoolingSettings(gamma_cool=-1.0)
    with pytest.raises(ValidationError):
        CoolingSettings(gamma_cool=math.inf)
    with pytest.raises(ValidationError):
        build_model(RATES, -1.0)


def test_invalid_model():
    """ Malformed matrices """
    with pytest.raises(ValidationError):
        LinearModel(np.zeros((3, 3)), np.zeros((3, 3)))
    with pytest.raises(ValidationError):
        LinearModel(np.zeros((4, 4)), np.triu(np.ones((4, 4))))
    with pytest.raises(ValidationError):
        LinearModel(np.zeros((4, 4)), -np.eye(4))
    drift = np.zeros((4, 4))
    drift[0, 0] = math.nan
    with pytest.raises(ValidationError):
        LinearModel(drift, np.eye(4))


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  States
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def test_occupations():
    """ Occupations of thermal and displaced states """
    assert occupations(thermal_state(2, 3)) == pytest.approx((2, 3))
    displaced = thermal_state(0, 0, mean=[1.0, 0, 0, 0])
    assert occupations(displaced) == pytest.approx((0.5, 0))
    with pytest.raises(ValidationError):
        thermal_state(-1)
    with pytest.raises(ValidationError):
        GaussianState(np.zeros(4), np.triu(np.ones((4, 4))))
    assert thermal_state(1, 0).export()['n_m'] == pytest.approx(1)


def test_symplectic_eigenvalues():
    """ Symplectic spectrum and the uncertainty relation """
    cov = thermal_state(1, 0.5).cov
    assert memat.dynamics.symplectic_eigenvalues(cov) == pytest.approx(
        [1.0, 1.5])
    vacuum = thermal_state().cov
    assert memat.dynamics.uncertainty_margin(vacuum) == pytest.approx(
        0, abs=1e-12)
    assert memat.dynamics.uncertainty_margin(0.1 * np.eye(4)) < 0


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Steady State
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def test_vacuum_cooled_atoms():
    """ Uncoupled atoms are cooled into vacuum """
    state = steady_state(build_model(rates(gamma_m=0.01, N_m_bar=2.0), 0.5))
    n_m, n_at = occupations(state)
    assert n_at == pytest.approx(0, abs=1e-10)
    assert n_m == pytest.approx(2.0, rel=1e-8)


def test_diffusion_balance():
    """ Uncoupled membrane heated by radiation pressure """
    model = build_model(
        rates(gamma_m=0.01, N_m_bar=1.0, gamma_m_diff=0.004), 0.5)
    n_m, _ = occupations(steady_state(model))
    assert n_m == pytest.approx(1.2, rel=1e-8)


def test_reference_occupation():
    """ Reference configuration reaches the ground state region """
    model = build_model(RATES, COOLING)
    state = steady_state(model)
    n_m, n_at = occupations(state)
    assert 0.4 <= n_m <= 1.5
    assert n_at >= 0
    residual = memat.dynamics.lyapunov_residual(model, state.cov)
    assert residual <= memat.dynamics.residual_bound(model, state.cov)
    assert memat.dynamics.uncertainty_margin(state.cov) >= -1e-9


def test_unstable():
    """ No steady state without any damping """
    with pytest.raises(UnstableModelError):
        steady_state(build_model(rates(g=0.1), 0.0))
    with pytest.raises(UnstableModelError):
        memat.dynamics.spectrum(build_model(rates(g=0.1), 0.0), [1.0])


def test_steady_state_oracle():
    """ Steady state agrees with the scipy Lyapunov solver """
    generator = np.random.default_rng(11)
    for _ in range(20):
        model = build_model(random_rates(generator), generator.uniform(0.05, 0.5))
        cov = steady_state(model).cov
        expected = scipy.linalg.solve_continuous_lyapunov(
            model.drift_A, -model.diffusion_D)
        assert np.allclose(cov, expected, rtol=1e-9, atol=1e-12)
        assert memat.dynamics.uncertainty_margin(cov) >= -1e-9


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Time Evolution
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def test_long_time_limit():
    """ Evolution converges to the steady state """
    generator = np.random.default_rng(7)
    for _ in range(20):
        model = build_model(random_rates(generator), generator.uniform(0.05, 0.5))
        expected = steady_state(model).cov
        slowest = min(decay for _, decay in memat.dynamics.normal_modes(model))
        states = evolve(model, thermal_state(n_m=3.0), [0, 40 / slowest])
        difference = np.linalg.norm(states[-1].cov - expected)
        assert difference < 1e-6 * np.linalg.norm(expected)


def test_coherent_exchange():
    """ Excitation swaps between membrane and atoms at t = π/g """
    g = 0.01
    model = build_model(rates(g=g), 0.0)
    states = evolve(model, thermal_state(n_m=1.0), [0, math.pi / g])
    n_m, n_at = occupations(states[-1])
    assert n_m < 0.02
    assert n_at == pytest.approx(1, abs=0.02)


def test_symplectic_conservation():
    """ Noiseless evolution keeps the symplectic spectrum """
    model = build_model(rates(g=0.1), 0.0)
    initial = thermal_state(1.0, 0.5)
    states = evolve(model, initial, [0, 1000 * 2 * math.pi])
    final = states[-1].cov
    assert memat.dynamics.symplectic_eigenvalues(final) == pytest.approx(
        [1.0, 1.5], abs=1e-8)
    assert np.linalg.det(final) == pytest.approx(
        np.linalg.det(initial.cov), rel=1e-8)


def test_mean_evolution():
    """ Mean follows the exact propagator """
    model = build_model(rates(g=0.05, gamma_m=0.01), 0.02)
    initial = thermal_state(mean=[1.0, 0, 0, 0])
    states = evolve(model, initial, [0, 1.0, 2.5])
    assert len(states) == 3
    expected = scipy.linalg.expm(model.drift_A * 2.5) @ initial.mean
    assert np.allclose(states[-1].mean, expected, rtol=1e-10, atol=1e-12)
    assert np.array_equal(states[0].cov, initial.cov)


def test_evolve_checks():
    """ Time grid and step validation """
    model = build_model(rates(g=0.1, gamma_m=0.01), 0.01)
    initial = thermal_state()
    radius = model.spectral_radius
    with pytest.raises(StepSizeError):
        evolve(model, initial, [0, 1], step=1 / (10 * radius))
    with pytest.raises(ValidationError):
        evolve(model, initial, [0, 1], step=-1.0)
    with pytest.raises(ValidationError):
        evolve(model, initial, [1, 2])
    with pytest.raises(ValidationError):
        evolve(model, initial, [0, 2, 1])
    states = evolve(model, initial, np.linspace(0, 10, 11))
    assert len(states) == 11


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Spectral Properties
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def test_normal_modes():
    """ Normal mode splitting and decay rates """
    assert memat.dynamics.mode_splitting(
        build_model(rates(g=0.01), 0.0)) == pytest.approx(0.01, rel=0.02)
    assert memat.dynamics.mode_splitting(
        build_model(rates(), 0.0)) == pytest.approx(0, abs=1e-12)
    modes = memat.dynamics.normal_modes(build_model(rates(gamma_m=0.01), 0.2))
    assert sorted(decay for _, decay in modes) == pytest.approx(
        [0.005, 0.005, 0.1, 0.1])
    assert [frequency for frequency, _ in modes] == pytest.approx([1] * 4)


def test_spectrum_splitting():
    """ Two spectral peaks separated by the coupling """
    model = build_model(rates(g=0.05, gamma_m=0.002, N_m_bar=1.0), 0.002)
    omegas = np.linspace(0.9, 1.1, 4001)
    result = memat.dynamics.spectrum(model, omegas)
    assert set(result) == {'omega', 'x_m', 'p_m', 'x_at', 'p_at'}
    peaks = sorted(memat.dynamics.spectrum_peaks(omegas, result['x_m'])[:2])
    assert peaks[1] - peaks[0] == pytest.approx(0.05, rel=0.05)


def test_spectrum_linewidth():
    """ Uncoupled membrane spectrum has the mechanical linewidth """
    model = build_model(rates(gamma_m=0.01, N_m_bar=1.0), 0.1)
    omegas = np.linspace(0.9, 1.1, 20001)
    density = memat.dynamics.spectrum(model, omegas)['x_m']
    width = np.count_nonzero(density >= density.max() / 2) * (
        omegas[1] - omegas[0])
    assert width == pytest.approx(0.01, rel=0.05)


def test_spectrum_integral():
    """ Integrated spectra give the steady state variances """
    model = build_model(
        rates(g=0.05, gamma_m=0.1, N_m_bar=1.0, gamma_m_diff=0.05), 0.2)
    omegas = np.linspace(-20, 20, 40001)
    result = memat.dynamics.spectrum(model, omegas)
    integral = scipy.integrate.trapezoid(
        result['x_m'] + result['p_m'], omegas) / (2 * math.pi)
    cov = steady_state(model).cov
    assert integral == pytest.approx(cov[0, 0] + cov[1, 1], rel=0.02)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Cooling
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def test_adiabatic_reference():
    """ Adiabatic estimate for the reference configuration """
    estimate = memat.dynamics.adiabatic_cooling(RATES, COOLING)
    assert 0.50 <= estimate.n_ss <= 0.54
    assert estimate.Gamma_cool == pytest.approx(2.08e5, rel=0.03)
    assert estimate.n_ss == pytest.approx(
        estimate.n_ss1 + estimate.n_ss2 + estimate.n_ss3)
    assert estimate.relaxation_rate == pytest.approx(
        (RATES.gamma_m + estimate.Gamma_cool) / 2)
    assert estimate.expansion is None


def test_adiabatic_lorentz_factor():
    """ Cooling rate is halved at γ_cool = 4ω_m """
    gamma_cool = 4 * RATES.omega_m
    estimate = memat.dynamics.adiabatic_cooling(RATES, gamma_cool)
    assert estimate.Gamma_cool == pytest.approx(
        RATES.g ** 2 / gamma_cool / 2, rel=1e-12)
    with pytest.raises(DivisionDomainError):
        memat.dynamics.adiabatic_cooling(RATES, 0.0)


def test_cooling_expansion():
    """ High cooling rate expansion matches the full estimate """
    estimate = memat.dynamics.adiabatic_cooling(RATES, COOLING, system=SYSTEM)
    expansion = estimate.expansion
    assert set(expansion) == {'a', 'b', 'n_ss1'}
    assert expansion['n_ss1'] == pytest.approx(estimate.n_ss1, rel=0.01)


@pytest.mark.parametrize('gamma_cool', [1e6, 3e6])
@pytest.mark.parametrize('finesse', [50.0, 86.6, 150.0, 260.0, 450.0])
def test_adiabatic_versus_exact(finesse, gamma_cool):
    """ Adiabatic estimate agrees with the exact model for fast cooling """
    system = SYSTEM.with_changes({'cavity.finesse': finesse})
    rates = memat.rates.full_rates(system)
    if rates.g > gamma_cool / 10:
        pytest.skip('Coupling too strong for the adiabatic regime')
    estimate = memat.dynamics.adiabatic_cooling(rates, gamma_cool)
    n_m, _ = occupations(steady_state(build_model(rates, gamma_cool)))
    assert abs(n_m - estimate.n_ss) / n_m <= 0.05


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Exchange
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def test_exchange_demo():
    """ Exchange demonstration with weak coupling """
    g = 0.01
    result = memat.dynamics.exchange_demo(rates(g=g, gamma_m=1e-4), n0=1.0)
    assert len(result['t']) == 301
    assert result['t'][50] == pytest.approx(math.pi / g)
    assert result['n_m_noiseless'][50] < 0.02
    assert result['n_at_noiseless'][50] == pytest.approx(1, abs=0.02)
    assert result['contrast_noiseless'] > 0.95
    with pytest.raises(ValidationError):
        memat.dynamics.exchange_demo(rates())


def test_exchange_vacuum():
    """ Nothing to exchange in vacuum """
    result = memat.dynamics.exchange_demo(rates(g=0.01), n0=0.0)
    assert np.all(np.abs(result['n_m_noiseless']) < 1e-4)


def test_exchange_reference():
    """ Exchange survives the reference decoherence """
    result = memat.dynamics.exchange_demo(RATES, n0=10.0)
    assert result['contrast_noisy'] > 0.5
    assert result['contrast_noisy'] < result['contrast_noiseless']
    assert np.all(result['n_m_noisy'] >= 0)
