# coding: utf-8

import math

import numpy as np
import pytest
import scipy.signal

import memat.optics
import memat.params
from memat.utils import OutOfDomainError, ValidationError

SYSTEM = memat.params.reference()
MIRROR = SYSTEM.with_changes({'cavity.geometry': 'mirror'})
K_L = 2 * math.pi / 780e-9


def test_slab_reflectivity():
    """ Membrane slab reflectivity at the lattice wavelength """
    response = memat.optics.slab(2.0, 50e-9, K_L)
    assert abs(response.r) == pytest.approx(0.476, abs=0.005)


def test_slab_lossless():
    """ Lossless slab conserves energy """
    k = np.linspace(0.5, 2, 50) * K_L
    for n, d in [(2.0, 50e-9), (1.45, 1e-6), (3.5, 10e-9)]:
        response = memat.optics.slab(n, d, k)
        total = np.abs(response.r) ** 2 + np.abs(response.t) ** 2
        assert np.allclose(total, 1, rtol=0, atol=1e-12)


def test_slab_quarter_wave():
    """ Quarter-wave slab reaches the maximal reflectivity """
    n = 2.0
    response = memat.optics.slab(n, 780e-9 / (4 * n), K_L)
    assert abs(response.r) == pytest.approx((n ** 2 - 1) / (n ** 2 + 1))


def test_slab_invalid():
    """ Unphysical slabs """
    with pytest.raises(ValidationError):
        memat.optics.slab(0.9, 50e-9, K_L)
    with pytest.raises(ValidationError):
        memat.optics.slab(2.0, 0, K_L)


def test_lorentzian_empty_cavity():
    """ Lorentzian approximation of the empty cavity response """
    kappa = MIRROR.derived.kappa
    center = float(memat.optics.nearest_resonance(
        MIRROR, MIRROR.derived.omega_L))
    close = center + np.linspace(-0.1, 0.1, 21) * kappa
    result = memat.optics.scan(MIRROR, close)
    assert np.allclose(
        result['abs_T2'], result['lorentzian_T2'], rtol=0.01, atol=0)
    wide = center + np.linspace(-1, 1, 81) * kappa
    result = memat.optics.scan(MIRROR, wide)
    assert np.allclose(
        result['abs_T2'], result['lorentzian_T2'], rtol=0.05, atol=0)
    assert result['abs_T2'].max() == pytest.approx(
        2 * MIRROR.cavity.finesse / math.pi, rel=0.01)


def test_find_resonance():
    """ Resonance of the empty cavity """
    kappa = MIRROR.derived.kappa
    resonance = memat.optics.find_resonance(MIRROR)
    expected = memat.optics.nearest_resonance(MIRROR, MIRROR.derived.omega_L)
    assert abs(resonance - expected) < 0.01 * kappa


def test_phase_slope():
    """ Phase slope at the resonance equals the inverse linewidth """
    kappa = MIRROR.derived.kappa
    slope = memat.optics.phase_slope(MIRROR)
    assert abs(slope) * kappa == pytest.approx(1, rel=0.05)


def test_membrane_cavity():
    """ Membrane in the cavity keeps the response finite """
    resonance = memat.optics.find_resonance(SYSTEM)
    response = memat.optics.cavity_response(SYSTEM, resonance)
    assert np.isfinite(response.transmission)
    assert response.transmission > 1
    assert abs(resonance - SYSTEM.derived.omega_L) <= (
        memat.optics.free_spectral_range(SYSTEM))


def test_scan_step():
    """ Too coarse scans are refused """
    kappa = MIRROR.derived.kappa
    center = MIRROR.derived.omega_L
    with pytest.raises(ValidationError):
        memat.optics.scan(MIRROR, center + np.array([0, kappa]))
    with pytest.raises(ValidationError):
        memat.optics.scan(MIRROR, np.array([center]))
    with pytest.raises(ValidationError):
        memat.optics.scan(MIRROR, center - np.array([0, 0.01 * kappa]))


def test_mode_function_mirror():
    """ Standing wave vanishes at the perfect mirror """
    omega = SYSTEM.derived.omega_L
    mode = memat.optics.mode_function(SYSTEM, omega, 0.0)
    assert mode.u == 0
    # ū is the scaled derivative of u in every region
    k = omega / SYSTEM.constants.c
    h = 1e-12
    ell = SYSTEM.derived.ell
    for z in [1e-3, ell + 1e-3, SYSTEM.cavity.length_L + 1e-3]:
        left = memat.optics.mode_function(SYSTEM, omega, z - h).u
        right = memat.optics.mode_function(SYSTEM, omega, z + h).u
        derivative = (right - left) / (2 * h)
        mode = memat.optics.mode_function(SYSTEM, omega, z)
        scale = abs(mode.u) + abs(mode.ubar)
        assert abs(derivative / (1j * k) - mode.ubar) < 1e-4 * scale


def test_mode_function_continuity():
    """ Field and derivative are continuous through the membrane """
    omega = SYSTEM.derived.omega_L
    k = omega / SYSTEM.constants.c
    n, d = SYSTEM.membrane.n_m, SYSTEM.membrane.d_m
    ell = SYSTEM.derived.ell
    before = memat.optics.mode_function(SYSTEM, omega, ell)
    after = memat.optics.mode_function(SYSTEM, omega, ell + d)
    phase = n * k * d
    derivative = 1j * before.ubar
    u = before.u * math.cos(phase) + derivative * math.sin(phase) / n
    scaled = -n * before.u * math.sin(phase) + derivative * math.cos(phase)
    scale = abs(memat.optics.cavity_response(SYSTEM, omega).T_w)
    assert abs(after.u - u) < 1e-6 * scale
    assert abs(after.ubar + 1j * scaled) < 1e-6 * scale


def test_mode_function_domain():
    """ Positions inside the slabs are out of domain """
    omega = SYSTEM.derived.omega_L
    ell, d = SYSTEM.derived.ell, SYSTEM.membrane.d_m
    with pytest.raises(OutOfDomainError):
        memat.optics.mode_function(SYSTEM, omega, ell + d / 2)
    with pytest.raises(OutOfDomainError):
        memat.optics.mode_function(SYSTEM, omega, -1e-3)
    length = SYSTEM.cavity.length_L
    with pytest.raises(OutOfDomainError):
        memat.optics.mode_function(
            SYSTEM, omega, length + SYSTEM.derived.mirror_d / 2)


def test_slab_transparent():
    """ Slab with a full-wave optical thickness does not reflect """
    n = 2.0
    response = memat.optics.slab(n, math.pi / (n * K_L), K_L)
    assert abs(response.r) < 1e-12
    assert abs(response.t) == pytest.approx(1, abs=1e-12)


def test_slab_thin():
    """ Reflectivity of a thin slab grows linearly with its thickness """
    n, kd = 2.0, 1e-4
    response = memat.optics.slab(n, kd / K_L, K_L)
    assert abs(response.r) == pytest.approx(kd * (n ** 2 - 1) / 2, rel=1e-3)


def test_empty_membrane():
    """ Membrane with unit index leaves the cavity unchanged """
    kappa = MIRROR.derived.kappa
    center = float(memat.optics.nearest_resonance(
        MIRROR, MIRROR.derived.omega_L))
    omegas = center + np.linspace(-3, 3, 121) * kappa
    k = omegas / MIRROR.constants.c
    d_m = SYSTEM.membrane.d_m
    membrane = memat.optics.slab(1.0, d_m, k)
    A = memat.optics.membrane_factor(membrane, k, SYSTEM.derived.ell, d_m)
    assert np.allclose(A, 1, rtol=0, atol=1e-12)
    # Membrane geometry with an empty membrane matches the mirror geometry
    T = memat.optics.cavity_factor(
        A, memat.optics.end_mirror(MIRROR, k), k,
        MIRROR.cavity.length_L, MIRROR.derived.mirror_d)
    expected = memat.optics.cavity_response(MIRROR, omegas).transmission
    assert np.allclose(np.abs(T) ** 2, expected, rtol=1e-12, atol=0)


def test_single_peak_per_range():
    """ One transmission maximum per free spectral range """
    kappa = MIRROR.derived.kappa
    fsr = memat.optics.free_spectral_range(MIRROR)
    center = float(memat.optics.nearest_resonance(
        MIRROR, MIRROR.derived.omega_L))
    step = kappa / 20
    omegas = center + np.arange(-fsr / 2, fsr / 2, step)
    values = memat.optics.cavity_response(MIRROR, omegas).transmission
    peaks, _ = scipy.signal.find_peaks(values)
    assert len(peaks) == 1
    assert abs(omegas[peaks[0]] - center) < kappa / 50 + step


def test_mode_function_outside():
    """ Unit amplitude standing wave behind the end mirror """
    omega = SYSTEM.derived.omega_L
    k = omega / SYSTEM.constants.c
    start = SYSTEM.cavity.length_L + SYSTEM.derived.mirror_d
    z = start + np.linspace(0, 2 * math.pi / k, 2001)
    u = np.abs(memat.optics.mode_function(SYSTEM, omega, z).u)
    assert u.max() == pytest.approx(1, abs=1e-5)
    assert u.max() <= 1 + 1e-12
    assert u.min() < 1e-2
    shifted = np.abs(memat.optics.mode_function(
        SYSTEM, omega, z + math.pi / k).u)
    assert np.allclose(shifted, u, rtol=0, atol=1e-8)


def test_phase_slope_finesse():
    """ Phase slope follows the finesse and flattens off resonance """
    kappa = MIRROR.derived.kappa
    slope = memat.optics.phase_slope(MIRROR)
    doubled = memat.optics.phase_slope(
        MIRROR.with_changes({'cavity.finesse': 2 * MIRROR.cavity.finesse}))
    assert doubled / slope == pytest.approx(2, rel=0.05)
    detuned = memat.optics.phase_slope(MIRROR, detuning=10 * kappa)
    assert abs(detuned) * kappa < 0.2
