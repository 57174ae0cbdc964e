# coding: utf-8

"""
Linear quantum Langevin dynamics of the membrane and the atoms

The model is described by the drift matrix A and the diffusion matrix D
acting on the quadratures (x_m, p_m, x_at, p_at). Gaussian states are
given by their mean and the symmetrized covariance matrix Σ with the
vacuum equal to identity/2. Covariances obey dΣ/dt = AΣ + ΣAᵀ + D.
"""

import collections
import math

import fmf.utils
import numpy as np
import scipy.linalg
import scipy.signal

import memat.rates
from memat.params import Record
from memat.utils import (
    ConvergenceError, DivisionDomainError, SingularSystemError,
    StepSizeError, UnstableModelError, ValidationError)

log = fmf.utils.Logging('memat').logger

# Quadrature ordering of all vectors and matrices
BASIS = ('x_m', 'p_m', 'x_at', 'p_at')

# Two-mode symplectic form
OMEGA = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))

# Relative Lyapunov residual bound
LYAPUNOV_TOLERANCE = 1e-10

# Rounding floor of the residual in units of eps·‖A‖·‖Σ‖
ROUNDING_FLOOR = 64

# Default and largest allowed integrator step (in units of 1/ρ(A))
DEFAULT_STEP = 1 / 200
MAXIMUM_STEP = 1 / 50

# Largest real part (relative to the spectral radius) counted as marginal
STABILITY_MARGIN = 1e-12

# Unique entries of a symmetric 4×4 matrix
UPPER = list(zip(*np.triu_indices(4)))


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Types
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

class CoolingSettings(Record):
    """ Atomic laser cooling amplitude-decay parameter γ_at^cool """

    _keys = ['gamma_cool']
    _defaults = {'gamma_cool': 0.0}

    def _validate(self):
        self._check('gamma_cool')
        self._require(
            math.isfinite(self.gamma_cool) and self.gamma_cool >= 0,
            f"gamma_cool >= 0 and finite (got {self.gamma_cool})")


class LinearModel(object):
    """ Drift and diffusion matrices of the linear model """

    def __init__(self, drift_A, diffusion_D):
        self.drift_A = np.array(drift_A, dtype=float)
        self.diffusion_D = np.array(diffusion_D, dtype=float)
        self.basis = BASIS
        for name, matrix in [
                ('drift', self.drift_A), ('diffusion', self.diffusion_D)]:
            if matrix.shape != (4, 4) or not np.all(np.isfinite(matrix)):
                raise ValidationError(
                    f"The {name} matrix must be a finite 4×4 matrix.")
        D = self.diffusion_D
        if not np.allclose(D, D.T, rtol=0, atol=1e-12 * max(1, np.abs(D).max())):
            raise ValidationError("The diffusion matrix must be symmetric.")
        if np.linalg.eigvalsh(D).min() < -1e-12 * max(1, np.abs(D).max()):
            raise ValidationError(
                "The diffusion matrix must be positive semidefinite.")

    def __repr__(self):
        return f'LinearModel(drift_A={self.drift_A!r}, diffusion_D={self.diffusion_D!r})'

    @property
    def eigenvalues(self):
        """ Eigenvalues of the drift matrix """
        return np.linalg.eigvals(self.drift_A)

    @property
    def max_real(self):
        """ Largest real part of the drift eigenvalues """
        return float(np.max(self.eigenvalues.real))

    @property
    def spectral_radius(self):
        """ Largest drift eigenvalue magnitude """
        return float(np.max(np.abs(self.eigenvalues)))

    def require_stable(self):
        """ Raise UnstableModelError unless strictly stable """
        if not self.max_real < -STABILITY_MARGIN * self.spectral_radius:
            raise UnstableModelError(
                f"Model is not strictly stable (max Re λ = "
                f"{self.max_real:.4g} s⁻¹), no steady state exists.")


class GaussianState(object):
    """ Gaussian state given by the quadrature mean and covariance """

    def __init__(self, mean, cov):
        self.mean = np.array(mean, dtype=float)
        self.cov = np.array(cov, dtype=float)
        if self.mean.shape != (4,) or self.cov.shape != (4, 4):
            raise ValidationError(
                "Gaussian state needs a 4-vector mean and a 4×4 covariance.")
        scale = max(1.0, np.abs(self.cov).max())
        if not np.allclose(self.cov, self.cov.T, rtol=0, atol=1e-9 * scale):
            raise ValidationError("Covariance matrix must be symmetric.")

    def __repr__(self):
        return f'GaussianState(mean={self.mean!r}, cov={self.cov!r})'

    def export(self):
        n_m, n_at = occupations(self)
        return dict(
            mean=self.mean.tolist(), cov=self.cov.tolist(),
            n_m=n_m, n_at=n_at)


CoolingEstimate = collections.namedtuple('CoolingEstimate', [
    'Gamma_cool', 'n_ss', 'n_ss1', 'n_ss2', 'n_ss3',
    'relaxation_rate', 'expansion'])


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Model
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def build_model(rates, cooling):
    """
    Assemble drift and diffusion from the rates and the cooling setting

    Radiation pressure and lattice diffusion drive the momentum
    quadratures only, the thermal bath and the cooling vacuum drive
    both quadratures of their mode.
    """
    if not isinstance(cooling, CoolingSettings):
        cooling = CoolingSettings(gamma_cool=cooling)
    gamma_m, gamma_cool = rates.gamma_m, cooling.gamma_cool
    omega_m, omega_at, g = rates.omega_m, rates.omega_at, rates.g
    drift = np.array([
        [-gamma_m / 2, omega_m, 0.0, 0.0],
        [-omega_m, -gamma_m / 2, g, 0.0],
        [0.0, 0.0, -gamma_cool / 2, omega_at],
        [g, 0.0, -omega_at, -gamma_cool / 2]])
    thermal = gamma_m * (rates.N_m_bar + 0.5)
    diffusion = np.diag([
        thermal,
        thermal + rates.gamma_m_diff,
        gamma_cool / 2,
        gamma_cool / 2 + rates.gamma_at_diff])
    return LinearModel(drift, diffusion)


def model_from_system(system, cooling, K_th=None):
    """ Build the linear model directly from system parameters """
    return build_model(memat.rates.full_rates(system, K_th=K_th), cooling)


def thermal_state(n_m=0.0, n_at=0.0, mean=None):
    """ Product of thermal states with given occupations """
    if n_m < 0 or n_at < 0:
        raise ValidationError("Thermal occupations must be non-negative.")
    cov = np.diag([n_m + 0.5, n_m + 0.5, n_at + 0.5, n_at + 0.5])
    return GaussianState(np.zeros(4) if mean is None else mean, cov)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Steady State
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def _lyapunov_operator(A):
    """ Matrix of Σ ↦ AΣ + ΣAᵀ on the unique entries of symmetric Σ """
    operator = np.zeros((len(UPPER), len(UPPER)))
    for column, (k, l) in enumerate(UPPER):
        unit = np.zeros((4, 4))
        unit[k, l] = unit[l, k] = 1.0
        image = A @ unit + unit @ A.T
        operator[:, column] = [image[i, j] for i, j in UPPER]
    return operator


def _unpack(values):
    """ Symmetric matrix from its unique entries """
    matrix = np.zeros((4, 4))
    for value, (i, j) in zip(values, UPPER):
        matrix[i, j] = matrix[j, i] = value
    return matrix


def lyapunov_residual(model, cov):
    """ Frobenius norm of AΣ + ΣAᵀ + D """
    A = model.drift_A
    return float(np.linalg.norm(A @ cov + cov @ A.T + model.diffusion_D))


def residual_bound(model, cov):
    """ Acceptable residual max(10⁻¹⁰‖D‖, 64·ε·‖A‖·‖Σ‖) """
    eps = np.finfo(float).eps
    return max(
        LYAPUNOV_TOLERANCE * np.linalg.norm(model.diffusion_D),
        ROUNDING_FLOOR * eps * np.linalg.norm(model.drift_A)
        * np.linalg.norm(cov))


def steady_state(model):
    """
    Solve AΣ + ΣAᵀ + D = 0 for the steady state covariance

    The ten unique entries of Σ are found by a dense LU solve followed
    by one step of iterative refinement.
    """
    model.require_stable()
    A, D = model.drift_A, model.diffusion_D
    operator = _lyapunov_operator(A)
    try:
        factors = scipy.linalg.lu_factor(operator, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as error:
        raise SingularSystemError(f"Lyapunov system failed: {error}")
    if np.any(np.abs(np.diag(factors[0])) == 0) or (
            np.linalg.cond(operator) * np.finfo(float).eps > 1e-2):
        raise SingularSystemError("Lyapunov system is singular.")
    rhs = -np.array([D[i, j] for i, j in UPPER])
    values = scipy.linalg.lu_solve(factors, rhs)
    cov = _unpack(values)
    residual = A @ cov + cov @ A.T + D
    values = values + scipy.linalg.lu_solve(
        factors, -np.array([residual[i, j] for i, j in UPPER]))
    cov = _unpack(values)

    residual = lyapunov_residual(model, cov)
    bound = residual_bound(model, cov)
    log.debug(f"Lyapunov residual {residual:.3e} (bound {bound:.3e}).")
    if residual > bound:
        raise ConvergenceError(
            f"Lyapunov residual {residual:.3e} exceeds {bound:.3e}.")
    return GaussianState(np.zeros(4), cov)


def occupations(state):
    """ Mean occupations (n_m, n_at) including the coherent part """
    cov, mean = state.cov, state.mean
    n_m = (cov[0, 0] + cov[1, 1] - 1 + mean[0] ** 2 + mean[1] ** 2) / 2
    n_at = (cov[2, 2] + cov[3, 3] - 1 + mean[2] ** 2 + mean[3] ** 2) / 2
    return float(n_m), float(n_at)


def symplectic_eigenvalues(cov):
    """ The two symplectic eigenvalues of the covariance (sorted) """
    values = np.abs(np.linalg.eigvals(1j * OMEGA @ np.asarray(cov)))
    return np.sort(values)[::2]


def uncertainty_margin(cov):
    """ Smallest eigenvalue of Σ + (i/2)Ω, non-negative for physical states """
    return float(np.linalg.eigvalsh(np.asarray(cov) + 0.5j * OMEGA).min())


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Time Evolution
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def _generator(model):
    """ Augmented generator of vec(Σ) (row-major) with the constant D """
    A = model.drift_A
    identity = np.eye(4)
    generator = np.zeros((17, 17))
    generator[:16, :16] = np.kron(A, identity) + np.kron(identity, A)
    generator[:16, 16] = model.diffusion_D.ravel()
    return generator


def _rk4_step(generator, step):
    """ Single classical Runge-Kutta step of a linear system as a matrix """
    scaled = step * generator
    identity = np.eye(len(generator))
    return identity + scaled @ (identity + scaled / 2 @ (
        identity + scaled / 3 @ (identity + scaled / 4)))


def evolve(model, initial, t_grid, step=None):
    """
    Evolve a Gaussian state over the time grid

    The mean is propagated exactly with the matrix exponential. The
    covariance is integrated with fixed-step RK4, every grid interval
    being split into equal substeps not longer than the step.
    """
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size < 1 or times[0] != 0:
        raise ValidationError("Time grid must start at zero.")
    if np.any(np.diff(times) <= 0):
        raise ValidationError("Time grid must be strictly increasing.")
    radius = model.spectral_radius
    if radius == 0:
        limit = math.inf
    else:
        limit = MAXIMUM_STEP / radius
    if step is None:
        step = DEFAULT_STEP / radius if radius > 0 else math.inf
    elif step <= 0:
        raise ValidationError("Integrator step must be positive.")
    elif step > limit:
        raise StepSizeError(
            f"Integrator step {step:.3e} s exceeds the stability bound "
            f"{limit:.3e} s (1/(50·ρ(A))).")

    generator = _generator(model)
    propagators = dict()
    augmented = np.append(initial.cov.ravel(), 1.0)
    mean = initial.mean.copy()
    states = [GaussianState(mean, initial.cov)]
    for interval in np.diff(times):
        substeps = max(1, math.ceil(interval / step))
        key = (substeps, f'{interval:.10g}')
        if key not in propagators:
            propagators[key] = (
                np.linalg.matrix_power(
                    _rk4_step(generator, interval / substeps), substeps),
                scipy.linalg.expm(model.drift_A * interval))
            log.debug(
                f"Propagator for {interval:.3e} s in {substeps} substeps.")
        covariance_step, mean_step = propagators[key]
        augmented = covariance_step @ augmented
        mean = mean_step @ mean
        cov = augmented[:16].reshape(4, 4)
        states.append(GaussianState(mean, (cov + cov.T) / 2))
    return states


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Spectral Properties
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def normal_modes(model):
    """ Drift eigenvalues as (frequency |Im λ|, decay −Re λ) sorted """
    return sorted(
        (abs(float(value.imag)), -float(value.real))
        for value in model.eigenvalues)


def mode_splitting(model):
    """ Difference of the two normal mode frequencies """
    frequencies = [frequency for frequency, _ in normal_modes(model)]
    return frequencies[-1] - frequencies[0]


def spectrum(model, omega_grid):
    """
    Spectral densities of the four quadratures

    S(ω) = M D M† with M = (−iω − A)⁻¹, only the (real) diagonal
    entries are returned, keyed by the quadrature name.
    """
    model.require_stable()
    omegas = np.asarray(omega_grid, dtype=float)
    matrices = -1j * omegas[:, None, None] * np.eye(4) - model.drift_A
    M = np.linalg.inv(matrices)
    densities = np.einsum(
        'wij,jk,wik->wi', M, model.diffusion_D, M.conj()).real
    result = dict(omega=omegas)
    for index, name in enumerate(BASIS):
        result[name] = np.clip(densities[:, index], 0, None)
    return result


def spectrum_peaks(omegas, values):
    """ Frequencies of the local maxima of a spectrum, highest first """
    values = np.asarray(values)
    peaks, _ = scipy.signal.find_peaks(values)
    order = peaks[np.argsort(values[peaks])[::-1]]
    return np.asarray(omegas)[order]


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Cooling
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def cooling_expansion(system, cooling):
    """
    High cooling rate expansion of the mechanical contribution

    Returns the coefficients a and b and the approximate n_ss,1 for
    the membrane on the slope, valid when γ_m ≪ Γ_cool.
    """
    membrane, atoms, cavity = system.membrane, system.atoms, system.cavity
    derived, constants = system.derived, system.constants
    K_th = memat.rates.thermal_link(system)
    c = constants.c
    a = (math.pi * constants.k_B * membrane.mass_M * c ** 2 * membrane.abs2
         * membrane.gamma_m / (2 * constants.hbar * derived.omega_L
                               * derived.r_m ** 2 * K_th))
    b = (cooling.gamma_cool * membrane.mass_M * math.pi ** 2 * membrane.gamma_m
         / (4 * atoms.omega_at ** 2 * atoms.mass_m * derived.r_m ** 2
            * atoms.N))
    N_m = constants.k_B * membrane.T0 / (constants.hbar * membrane.omega_m)
    diffusion = (2 * cooling.gamma_cool * derived.omega_L * cavity.power_P
                 / (atoms.N * atoms.omega_at ** 3 * atoms.mass_m * c ** 2))
    n_ss1 = (diffusion * (1 + a / cavity.finesse)
             + b * N_m / cavity.finesse ** 2)
    return dict(a=a, b=b, n_ss1=n_ss1)


def adiabatic_cooling(rates, cooling, system=None):
    """ Sympathetic cooling rate and steady occupation in the adiabatic limit """
    if not isinstance(cooling, CoolingSettings):
        cooling = CoolingSettings(gamma_cool=cooling)
    gamma_cool = cooling.gamma_cool
    if gamma_cool == 0:
        raise DivisionDomainError(
            "Adiabatic cooling formulas need gamma_cool > 0.")
    Gamma_cool = (rates.g ** 2 / gamma_cool
                  / (1 + (gamma_cool / (4 * rates.omega_m)) ** 2))
    n_ss1 = ((rates.gamma_m * rates.N_m_bar + rates.gamma_m_diff / 2)
             / (rates.gamma_m + Gamma_cool))
    n_ss2 = (gamma_cool / (4 * rates.omega_at)) ** 2
    n_ss3 = rates.gamma_at_diff / (2 * gamma_cool)
    expansion = None
    if system is not None:
        expansion = cooling_expansion(system, cooling)
    return CoolingEstimate(
        Gamma_cool=Gamma_cool,
        n_ss=n_ss1 + n_ss2 + n_ss3,
        n_ss1=n_ss1,
        n_ss2=n_ss2,
        n_ss3=n_ss3,
        relaxation_rate=(rates.gamma_m + Gamma_cool) / 2,
        expansion=expansion)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Exchange
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def _visibility(times, values, period):
    """ Contrast (max − min)/(max + min) over the first exchange period """
    first = np.asarray(values)[np.asarray(times) <= period * (1 + 1e-12)]
    high, low = first.max(), first.min()
    return float((high - low) / (high + low)) if high + low > 0 else 0.0


def exchange_demo(rates, n0=1.0, resolution=50):
    """
    Coherent excitation exchange over three exchange periods 2π/g

    The membrane starts in a thermal state with n0 phonons, the atoms
    in vacuum. Returns the time grid and the occupations of a noiseless
    run (no damping, no diffusion) and of a run with the full noise
    and no cooling. The grid contains t = π/g with resolution points
    per π/g.
    """
    if not rates.g > 0:
        raise ValidationError("Exchange needs a positive coupling g.")
    times = np.linspace(0, 6 * math.pi / rates.g, 6 * resolution + 1)
    initial = thermal_state(n_m=n0)
    noiseless = rates._replace(
        gamma_m=0.0, gamma_m_diff=0.0, gamma_at_diff=0.0, gamma_m_th=0.0)
    result = dict(t=times)
    for label, model in [
            ('noiseless', build_model(noiseless, CoolingSettings())),
            ('noisy', build_model(rates, CoolingSettings()))]:
        states = evolve(model, initial, times)
        n_m, n_at = zip(*(occupations(state) for state in states))
        result[f'n_m_{label}'] = np.array(n_m)
        result[f'n_at_{label}'] = np.array(n_at)
        result[f'contrast_{label}'] = _visibility(
            times, n_m, 2 * math.pi / rates.g)
    return result
