# coding: utf-8

"""
Transfer-matrix optics of the one-dimensional cavity model

The cavity is closed by a perfect mirror at z = 0 and by a lossless
dielectric end mirror occupying [L, L + d]. In the membrane geometry a
dielectric membrane sits at [ℓ, ℓ + d_m] inside the cavity. Slab
coefficients are referenced at the slab faces, all functions accept
scalar or array frequencies.
"""

import collections

import fmf.utils
import numpy as np
import scipy.optimize

from memat.utils import (
    DegenerateCavityError, OutOfDomainError, ValidationError)

log = fmf.utils.Logging('memat').logger

# Smallest allowed magnitude of a cavity response denominator
DEGENERATE = 1e-12

# Largest frequency step of a phase-unwrapped scan (in units of κ)
SCAN_STEP = 1 / 20

# Relative resonance refinement tolerance (in units of κ)
RESONANCE_TOLERANCE = 1e-6

# Finite difference step for the phase slope (in units of κ)
SLOPE_STEP = 1 / 100


SlabResponse = collections.namedtuple('SlabResponse', ['r', 't'])
ModeAmplitude = collections.namedtuple('ModeAmplitude', ['u', 'ubar'])


class CavityResponse(collections.namedtuple('CavityResponse', ['A_w', 'T_w'])):
    """ Intracavity factor A_ω and outside factor T_ω """
    __slots__ = ()

    @property
    def phase(self):
        """ Outside field phase φ_ω (wrapped) """
        return np.angle(self.T_w)

    @property
    def transmission(self):
        """ Intensity enhancement |T_ω|² """
        return np.abs(self.T_w) ** 2


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Building Blocks
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def slab(n, d, k):
    """
    Amplitude reflection and transmission of a lossless dielectric slab

    Returns 𝔯 = (n²−1)sin(kdn)/[2in·cos(kdn) + (1+n²)sin(kdn)] and
    𝔱 = 2in/[same denominator] for refractive index n, thickness d and
    vacuum wave number k.
    """
    if np.any(np.asarray(n) < 1):
        raise ValidationError(f"Refractive index must be >= 1, got {n}.")
    if np.any(np.asarray(d) <= 0):
        raise ValidationError(f"Slab thickness must be positive, got {d}.")
    if np.any(np.asarray(k) <= 0):
        raise ValidationError("Wave number must be positive.")
    phase = np.asarray(k) * d * n
    denominator = 2j * n * np.cos(phase) + (1 + n ** 2) * np.sin(phase)
    return SlabResponse(
        r=(n ** 2 - 1) * np.sin(phase) / denominator,
        t=2j * n / denominator)


def membrane_factor(membrane, k, ell, d_m):
    """ Intracavity factor A_ω = 𝔱_m e^{−ikd_m}/(1 − 𝔯_m e^{2ikℓ}) """
    denominator = 1 - membrane.r * np.exp(2j * k * ell)
    _check_denominator(denominator, 'membrane')
    return membrane.t * np.exp(-1j * k * d_m) / denominator


def cavity_factor(A, mirror, k, length, d):
    """ Outside factor T_ω = A 𝔱 e^{−ikd}/(1 − 𝔯 e^{2i(kL + φ′)}) """
    denominator = 1 - mirror.r * np.exp(2j * (k * length + np.angle(A)))
    _check_denominator(denominator, 'cavity')
    return A * mirror.t * np.exp(-1j * k * d) / denominator


def _check_denominator(denominator, what):
    """ Refuse perfectly reflecting closed configurations """
    if np.any(np.abs(denominator) < DEGENERATE):
        raise DegenerateCavityError(
            f"The {what} response denominator vanished (perfectly "
            f"reflective closed cavity).")


def _wave_number(system, omega):
    """ Vacuum wave number for the given angular frequency """
    return np.asarray(omega, dtype=float) / system.constants.c


def free_spectral_range(system):
    """ Distance of neighbouring resonances πc/L in rad/s """
    return np.pi * system.constants.c / system.cavity.length_L


def nearest_resonance(system, omega):
    """ Empty cavity resonance ω_ν = νπc/L closest to omega """
    fsr = free_spectral_range(system)
    return np.round(np.asarray(omega) / fsr) * fsr


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Cavity Response
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def end_mirror(system, k):
    """ Slab response of the end mirror """
    derived = system.derived
    return slab(derived.mirror_n, derived.mirror_d, k)


def cavity_response(system, omega):
    """ Compute A_ω and T_ω for the configured geometry """
    k = _wave_number(system, omega)
    if system.cavity.geometry == 'membrane':
        membrane = slab(system.membrane.n_m, system.membrane.d_m, k)
        A = membrane_factor(
            membrane, k, system.derived.ell, system.membrane.d_m)
    else:
        A = np.ones_like(k, dtype=complex)
    T = cavity_factor(
        A, end_mirror(system, k), k,
        system.cavity.length_L, system.derived.mirror_d)
    return CavityResponse(A_w=A, T_w=T)


def lorentzian_T2(system, omega):
    """ Lorentzian approximation (2𝓕/π)κ²/(κ² + (ω − ω_ν)²) """
    kappa = system.derived.kappa
    detuning = np.asarray(omega) - nearest_resonance(system, omega)
    return (2 * system.cavity.finesse / np.pi
            * kappa ** 2 / (kappa ** 2 + detuning ** 2))


def find_resonance(system, omega=None):
    """
    Locate the cavity resonance closest to omega (ω_L by default)

    A coarse scan over one free spectral range with κ/20 steps picks
    the highest |T_ω|², a bounded golden-section search refines it to
    κ·10⁻⁶. The search variable is the detuning from the coarse
    maximum to keep the tolerance meaningful at optical frequencies.
    """
    if omega is None:
        omega = system.derived.omega_L
    kappa = system.derived.kappa
    fsr = free_spectral_range(system)
    step = SCAN_STEP * kappa
    offsets = np.arange(-fsr / 2, fsr / 2 + step, step)
    coarse = cavity_response(system, omega + offsets).transmission
    center = omega + offsets[np.argmax(coarse)]

    def negative_transmission(detuning):
        return -cavity_response(system, center + detuning).transmission

    result = scipy.optimize.minimize_scalar(
        negative_transmission, bounds=(-step, step), method='bounded',
        options={'xatol': RESONANCE_TOLERANCE * kappa})
    log.debug(
        f"Resonance refined in {result.nfev} evaluations, "
        f"offset {result.x:.3e} rad/s from the coarse maximum.")
    return center + result.x


def scan(system, omegas):
    """
    Frequency scan of the cavity response

    Returns a dictionary with the complex T_ω, |T_ω|², the phase
    unwrapped by nearest-branch continuation and the Lorentzian
    approximation. The grid step must not exceed κ/20.
    """
    omegas = np.asarray(omegas, dtype=float)
    if omegas.ndim != 1 or omegas.size < 2:
        raise ValidationError("Scan needs at least two frequencies.")
    steps = np.diff(omegas)
    if np.any(steps <= 0):
        raise ValidationError("Scan frequencies must be increasing.")
    limit = SCAN_STEP * system.derived.kappa
    if np.max(steps) > limit * (1 + 1e-9):
        raise ValidationError(
            f"Scan step {np.max(steps):.4g} rad/s exceeds κ/20 = "
            f"{limit:.4g} rad/s, phase unwrapping would be ambiguous.")
    response = cavity_response(system, omegas)
    return dict(
        omega=omegas,
        T=response.T_w,
        abs_T2=response.transmission,
        phase=np.unwrap(response.phase),
        lorentzian_T2=lorentzian_T2(system, omegas))


def phase_slope(system, detuning=0.0):
    """
    Phase slope dφ/dω of the outside field in seconds

    Central difference of the unwrapped arg(T_ω) at the resonance
    nearest to ω_L shifted by the given detuning.
    """
    kappa = system.derived.kappa
    center = find_resonance(system) + detuning
    step = SLOPE_STEP * kappa
    phases = np.unwrap(cavity_response(
        system, center + np.array([-step, 0.0, step])).phase)
    return (phases[2] - phases[0]) / (2 * step)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Mode Functions
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def _standing(z, k, T):
    """ Field between the perfect mirror and the first slab """
    return T * np.sin(k * z), -1j * T * np.cos(k * z)


def _between(z, k, T, A):
    """ Field between the membrane and the end mirror """
    forward = np.exp(1j * k * z) / np.conj(A)
    backward = np.exp(-1j * k * z) / A
    return T / 2j * (forward - backward), T / 2j * (forward + backward)


def _outside(z, k, T):
    """ Unit amplitude standing wave behind the end mirror """
    forward = T / np.conj(T) * np.exp(1j * k * z)
    backward = np.exp(-1j * k * z)
    return (forward - backward) / 2j, (forward + backward) / 2j


def mode_function(system, omega, z):
    """
    Evaluate the mode function u_ω(z) and ū_ω(z) = ∂_z u_ω(z)/ik

    Positions inside the membrane or the end mirror are out of domain.
    """
    z = np.asarray(z, dtype=float)
    length = system.cavity.length_L
    mirror_end = length + system.derived.mirror_d
    membrane = system.cavity.geometry == 'membrane'
    if membrane:
        ell = system.derived.ell
        gap_start = ell + system.membrane.d_m
    else:
        ell = gap_start = length

    if np.any(z < 0):
        raise OutOfDomainError("Mode function is defined for z >= 0 only.")
    if np.any((z > ell) & (z < gap_start)):
        raise OutOfDomainError("Position lies inside the membrane.")
    if np.any((z > length) & (z < mirror_end)):
        raise OutOfDomainError("Position lies inside the end mirror.")

    k = _wave_number(system, omega)
    response = cavity_response(system, omega)
    T, A = response.T_w, response.A_w
    u = np.zeros(np.broadcast(z, k).shape, dtype=complex)
    ubar = np.zeros_like(u)
    for region, (value, derivative) in [
            (z <= ell, _standing(z, k, T)),
            ((z >= gap_start) & (z <= length), _between(z, k, T, A)),
            (z >= mirror_end, _outside(z, k, T))]:
        u = np.where(region, value, u)
        ubar = np.where(region, derivative, ubar)
    if u.ndim == 0:
        return ModeAmplitude(complex(u), complex(ubar))
    return ModeAmplitude(u, ubar)
