# coding: utf-8

"""
Membrane heating by the absorbed laser power

Closed-form solution for a circular membrane heated by a uniform disc
of radius w_m, and finite-difference solutions of the steady heat
equation ∇²T = −Q_th/κ_th on a square membrane (and on a circular
domain as a self-consistency check) with the frame held at T0.
"""

import math

import fmf.utils
import numpy as np
import scipy.integrate
import scipy.sparse
import scipy.sparse.linalg

from memat.params import Record
from memat.utils import ConvergenceError, ValidationError

log = fmf.utils.Logging('memat').logger

# Largest supported beam waist relative to the membrane side
CLIPPING = 0.3

# Smallest number of grid nodes per side
GRID_MINIMUM = 201

# Relative residual the solver aims at and the one it must reach
TARGET_RESIDUAL = 1e-12
REQUIRED_RESIDUAL = 1e-8

# Sub-samples per cell side used for the disc source coverage
SUBSAMPLES = 8


class ThermalConfig(Record):
    """ Membrane heating configuration """

    _keys = [
        'kappa_th', 'd_m', 'side_l', 'w_m', 'abs2', 'finesse', 'power_P',
        'T0']

    def _validate(self):
        self._positive(
            'kappa_th', 'd_m', 'side_l', 'w_m', 'finesse', 'power_P', 'T0')
        self._check('abs2')
        self._require(0 <= self.abs2 < 1, f"0 <= abs2 < 1 (got {self.abs2})")
        self._require(
            self.w_m <= CLIPPING * self.side_l,
            f"w_m <= {CLIPPING}·side_l to avoid clipping (got w_m/l = "
            f"{self.w_m / self.side_l:.3g})")


class ThermalResult(object):
    """ Temperature rise, thermal link and average temperature """

    _keys = [
        'method', 'P_abs', 'delta_T', 'K_th', 'T_avg', 'T_avg_printed',
        'f_g']

    def __init__(self, method, P_abs, K_th, T_avg, T_avg_printed=None,
                 f_g=None, field=None):
        self.method = method
        self.P_abs = P_abs
        self.K_th = K_th
        self.delta_T = P_abs / K_th
        self.T_avg = T_avg
        self.T_avg_printed = T_avg_printed
        self.f_g = f_g
        # Columns for the temperature field dump
        self.field = field

    def export(self):
        """ Export scalar results into dictionary """
        return dict((key, getattr(self, key)) for key in self._keys)


def config_from_system(system, kappa_th=None):
    """ Thermal configuration of the given system """
    membrane, cavity = system.membrane, system.cavity
    return ThermalConfig(
        kappa_th=kappa_th or membrane.kappa_th,
        d_m=membrane.d_m,
        side_l=membrane.side_l,
        w_m=cavity.waist_membrane,
        abs2=membrane.abs2,
        finesse=cavity.finesse,
        power_P=cavity.power_P,
        T0=membrane.T0)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Analytic Solution
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def absorbed_power(config):
    """ Absorbed power 𝔞_m²·4𝓕P/π of a membrane on the slope """
    return config.abs2 * 4 * config.finesse * config.power_P / math.pi


def source_density(config):
    """ Heat source density Q_th = P_abs/(πw_m²d_m) in W/m³ """
    return absorbed_power(config) / (math.pi * config.w_m ** 2 * config.d_m)


def _scale(config):
    """ Temperature scale Q_th w_m²/2κ_th """
    return source_density(config) * config.w_m ** 2 / (2 * config.kappa_th)


def radial_profile(config, r):
    """ Temperature of the circular membrane at radius r """
    r = np.asarray(r, dtype=float)
    w, half = config.w_m, config.side_l / 2
    inner = np.log(half / w) + 0.5 - r ** 2 / (2 * w ** 2)
    outer = np.log(half / np.maximum(r, w))
    return config.T0 + _scale(config) * np.where(r <= w, inner, outer)


def radial_slope(config, r):
    """ Radial derivative of the circular membrane temperature """
    r = np.asarray(r, dtype=float)
    w = config.w_m
    inner = -r / w ** 2
    outer = -1 / np.maximum(r, w)
    return _scale(config) * np.where(r <= w, inner, outer)


def thermal_link(config):
    """ Thermal link 2πκ_th d_m/[ln(l/2w_m) + 1/2] of the circular membrane """
    return (2 * math.pi * config.kappa_th * config.d_m
            / (math.log(config.side_l / (2 * config.w_m)) + 0.5))


def average_temperature(config):
    """ Average temperature of the circular membrane (numerical integral) """
    half = config.side_l / 2
    integral, _ = scipy.integrate.quad(
        lambda r: float(radial_profile(config, r)) * 2 * math.pi * r,
        0, half, points=[config.w_m], epsabs=0, epsrel=1e-12, limit=200)
    return integral / (math.pi * half ** 2)


def printed_average(config):
    """ Closed form T0 + Q_th w_m²/4κ_th·[1 − 2(l/w_m)²], reported only """
    return config.T0 + _scale(config) / 2 * (
        1 - 2 * (config.side_l / config.w_m) ** 2)


def analytic_circular(config):
    """ Closed-form solution for the circular membrane """
    radii = np.linspace(0, config.side_l / 2, 201)
    return ThermalResult(
        method='circular',
        P_abs=absorbed_power(config),
        K_th=thermal_link(config),
        T_avg=average_temperature(config),
        T_avg_printed=printed_average(config),
        field=dict(r=radii, T=radial_profile(config, radii)))


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Finite Differences
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def laplacian(n):
    """
    Five-point Poisson matrix on an n×n grid (unit spacing)

    Symmetric positive definite, 4 on the diagonal and −1 for each
    horizontal and vertical neighbour.
    """
    second = scipy.sparse.diags(
        [-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n), format='csr')
    identity = scipy.sparse.identity(n, format='csr')
    return (scipy.sparse.kron(identity, second)
            + scipy.sparse.kron(second, identity)).tocsr()


def _grid(config, grid_n):
    """ Node coordinates of the square grid centred on the beam """
    if grid_n < GRID_MINIMUM:
        raise ValidationError(
            f"Grid with {grid_n} nodes per side is too coarse "
            f"(at least {GRID_MINIMUM} needed).")
    if grid_n % 2 == 0:
        raise ValidationError(
            f"Number of grid nodes per side must be odd to place a node "
            f"at the membrane centre (got {grid_n}).")
    axis = np.linspace(-config.side_l / 2, config.side_l / 2, grid_n)
    x, y = np.meshgrid(axis, axis, indexing='ij')
    return axis, x, y, axis[1] - axis[0]


def _disc_coverage(x, y, h, radius):
    """ Fraction of each grid cell covered by the disc r <= radius """
    coverage = np.zeros_like(x)
    near = np.hypot(x, y) <= radius + h
    offsets = ((np.arange(SUBSAMPLES) + 0.5) / SUBSAMPLES - 0.5) * h
    sub_x = x[near][:, None, None] + offsets[None, :, None]
    sub_y = y[near][:, None, None] + offsets[None, None, :]
    coverage[near] = np.mean(np.hypot(sub_x, sub_y) <= radius, axis=(1, 2))
    # Keep the total absorbed power exact
    return coverage * math.pi * radius ** 2 / (coverage.sum() * h ** 2)


def _solve(matrix, rhs):
    """ Conjugate gradient solve with the residual contract """
    norm = np.linalg.norm(rhs)
    if norm == 0:
        return np.zeros_like(rhs)
    iterations = []
    solution, info = scipy.sparse.linalg.cg(
        matrix, rhs, rtol=TARGET_RESIDUAL, atol=0.0,
        maxiter=50 * int(math.sqrt(rhs.size)) + 1000,
        callback=lambda vector: iterations.append(1))
    residual = np.linalg.norm(rhs - matrix @ solution) / norm
    log.debug(
        f"Conjugate gradients: {len(iterations)} iterations, "
        f"relative residual {residual:.2e}.")
    if residual > REQUIRED_RESIDUAL:
        raise ConvergenceError(
            f"Heat equation solver stopped at relative residual "
            f"{residual:.2e} after {len(iterations)} iterations "
            f"(required {REQUIRED_RESIDUAL:.0e}, status {info}).")
    return solution


def _poisson(values, unknown, rhs_density):
    """
    Solve the discrete Poisson problem on the unknown nodes

    Nodes outside the unknown mask keep their given values and act as
    Dirichlet data, rhs_density holds h²·Q_th/κ_th for unknown nodes.
    """
    n = values.shape[0]
    matrix = laplacian(n)
    flat = values.ravel()
    inside = np.flatnonzero(unknown.ravel())
    fixed = np.flatnonzero(~unknown.ravel())
    system = matrix[inside][:, inside]
    rhs = rhs_density.ravel()[inside] - matrix[inside][:, fixed] @ flat[fixed]
    solution = flat.copy()
    solution[inside] = _solve(system, rhs)
    return solution.reshape(values.shape)


def _result(config, method, axis, temperature, f_g=None):
    """ Assemble finite-difference result from the temperature field """
    centre = len(axis) // 2
    P_abs = absorbed_power(config)
    delta = temperature[centre, centre] - config.T0
    T_avg = scipy.integrate.trapezoid(
        scipy.integrate.trapezoid(temperature, axis, axis=1), axis) / (
        config.side_l ** 2)
    return ThermalResult(
        method=method,
        P_abs=P_abs,
        K_th=P_abs / delta if delta > 0 else thermal_link(config),
        T_avg=float(T_avg),
        f_g=f_g,
        field=dict(x=axis, T=temperature))


def fdm_square(config, grid_n=401, method='split'):
    """
    Square membrane solution and the geometric prefactor f_g

    Method 'split' writes the temperature as the circular solution plus
    a harmonic correction u with u = T0 − T_circ on the square frame,
    solved with the five-point stencil. Method 'direct' solves the full
    Poisson problem with an area-weighted disc source. The prefactor
    f_g is the ratio of the centre temperature rise to the circular
    one.
    """
    axis, x, y, h = _grid(config, grid_n)
    radius = np.hypot(x, y)
    circular = radial_profile(config, radius)
    delta_circular = _scale(config) * (
        math.log(config.side_l / (2 * config.w_m)) + 0.5)
    frame = np.zeros_like(x, dtype=bool)
    frame[0, :] = frame[-1, :] = frame[:, 0] = frame[:, -1] = True

    if method == 'split':
        values = np.where(frame, config.T0 - circular, 0.0)
        correction = _poisson(values, ~frame, np.zeros_like(x))
        temperature = circular + correction
    elif method == 'direct':
        values = np.full_like(x, config.T0)
        source = source_density(config) * _disc_coverage(x, y, h, config.w_m)
        temperature = _poisson(
            values, ~frame, h ** 2 * source / config.kappa_th)
    else:
        raise ValidationError(f"Unknown finite-difference method '{method}'.")

    centre = grid_n // 2
    f_g = None
    if delta_circular > 0:
        f_g = (temperature[centre, centre] - config.T0) / delta_circular
        log.debug(f"Square membrane prefactor f_g = {f_g:.5f} ({method}).")
    return _result(config, f'square-{method}', axis, temperature, f_g=f_g)


def fdm_disc(config, grid_n=401):
    """
    Circular membrane solved with finite differences

    Nodes at r >= l/2 are held at T0 (staircase boundary), the disc
    source is area weighted. Its f_g close to one validates the
    discretization against the closed-form solution.
    """
    axis, x, y, h = _grid(config, grid_n)
    unknown = np.hypot(x, y) < config.side_l / 2
    values = np.full_like(x, config.T0)
    source = source_density(config) * _disc_coverage(x, y, h, config.w_m)
    temperature = _poisson(values, unknown, h ** 2 * source / config.kappa_th)
    centre = grid_n // 2
    delta_circular = _scale(config) * (
        math.log(config.side_l / (2 * config.w_m)) + 0.5)
    f_g = None
    if delta_circular > 0:
        f_g = (temperature[centre, centre] - config.T0) / delta_circular
    return _result(config, 'disc', axis, temperature, f_g=f_g)
