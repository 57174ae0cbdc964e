# coding: utf-8

""" Coherent couplings and decoherence rates of the hybrid system """

import collections
import math

import fmf.utils

import memat.optics
import memat.thermal
from memat.utils import ValidationError

log = fmf.utils.Logging('memat').logger

# Relative detuning below which the configuration counts as resonant
RESONANCE = 1e-3

# Smallest |sin(2k_Lℓ)| not treated as an intensity node
NODE = 1e-9

# Reference values (rates in 10³ s⁻¹ units, δT in K)
REFERENCE = collections.OrderedDict([
    ('g', 214e3),
    ('gamma_m_diff', 60e3),
    ('gamma_m_th', 73e3),
    ('delta_T', 4.0),
    ('gamma_at_diff', 8e3),
    ])


class RateSet(collections.namedtuple('RateSet', [
        'g_m', 'g_at', 'g', 'gamma_m', 'gamma_m_diff', 'gamma_at_diff',
        'N_m_bar', 'gamma_m_th', 'delta_T', 'P_abs', 'K_th', 'omega_m',
        'omega_at'])):
    """
    Coherent and incoherent rates of the effective model

    Rates are in s⁻¹, delta_T in K, P_abs in W and K_th in W/K. The
    mechanical and atomic frequencies are carried along so that the
    linear model can be built from the rates alone.
    """
    __slots__ = ()

    @property
    def Gamma(self):
        """ Total decoherence rate γ_at^diff + γ_m^diff + γ_m^th """
        return self.gamma_at_diff + self.gamma_m_diff + self.gamma_m_th

    def export(self):
        """ Export rates into dictionary """
        data = dict(self._asdict())
        data['Gamma'] = self.Gamma
        return data


def coupling_gm_mirror(system):
    """ Movable end mirror coupling g′_m = 2αk_L l_m𝓕/π^{3/2} """
    derived = system.derived
    return (2 * derived.alpha * derived.k_L * derived.l_m
            * system.cavity.finesse / math.pi ** 1.5)


def coupling_gm(system):
    """
    Membrane-field coupling g_m

    On the slope g_m = (αk_L l_m/√π)|𝔯_m|(2𝓕/π). At an arbitrary
    position the factor 2𝓕/π is replaced by sin(2k_Lℓ)|T|² with |T|²
    taken at the cavity resonance the laser is locked to. The sign of
    sin(2k_Lℓ) is absorbed into the phase of the membrane mode.
    """
    if system.cavity.geometry == 'mirror':
        return coupling_gm_mirror(system)
    derived = system.derived
    prefactor = (derived.alpha * derived.k_L * derived.l_m / math.sqrt(math.pi)
                 * derived.r_m)
    if system.membrane.placement == 'slope':
        return prefactor * 2 * system.cavity.finesse / math.pi
    slope = math.sin(2 * derived.k_L * derived.ell)
    if abs(slope) < NODE:
        return 0.0
    resonance = memat.optics.find_resonance(system)
    enhancement = float(
        memat.optics.cavity_response(system, resonance).transmission)
    return abs(prefactor * slope * enhancement)


def coupling_gat(system):
    """ Atom-field coupling g_at = ω_at√π√N/(2αk_L l_at) """
    derived, atoms = system.derived, system.atoms
    return (atoms.omega_at * math.sqrt(math.pi) * math.sqrt(atoms.N)
            / (2 * derived.alpha * derived.k_L * derived.l_at))


def thermal_link(system, K_th=None):
    """ Thermal link: explicit value, membrane override or circular model """
    if K_th is not None:
        return K_th
    if system.membrane.K_th is not None:
        return system.membrane.K_th
    config = memat.thermal.config_from_system(system)
    return memat.thermal.thermal_link(config)


def full_rates(system, K_th=None):
    """ Compute all rates of the effective model """
    derived, constants = system.derived, system.constants
    membrane, atoms, cavity = system.membrane, system.atoms, system.cavity

    g_m = coupling_gm(system)
    g_at = coupling_gat(system)
    gamma_m = membrane.gamma_m

    # Laser heating of the membrane
    link = thermal_link(system, K_th)
    P_abs = membrane.abs2 * 4 * cavity.finesse * cavity.power_P / math.pi
    delta_T = P_abs / link
    N_m_bar = constants.k_B * (membrane.T0 + delta_T) / (
        constants.hbar * membrane.omega_m)

    # Atomic momentum diffusion in the lattice
    gamma_at_diff = ((derived.k_L * derived.l_at) ** 2 * atoms.gamma_se
                     * derived.V0 / (constants.hbar * abs(atoms.delta)))

    rates = RateSet(
        g_m=g_m,
        g_at=g_at,
        g=2 * g_at * g_m,
        gamma_m=gamma_m,
        gamma_m_diff=2 * g_m ** 2,
        gamma_at_diff=gamma_at_diff,
        N_m_bar=N_m_bar,
        gamma_m_th=gamma_m * N_m_bar,
        delta_T=delta_T,
        P_abs=P_abs,
        K_th=link,
        omega_m=membrane.omega_m,
        omega_at=atoms.omega_at)
    log.debug(f"Rates: {rates}")
    return rates


def radiation_pressure_diffusion(system):
    """ Closed form (4P/Mc²)(ω_L/ω_m)|𝔯_m|²(2𝓕/π)² for the slope """
    derived, cavity, membrane = system.derived, system.cavity, system.membrane
    return (4 * cavity.power_P / (membrane.mass_M * system.constants.c ** 2)
            * derived.omega_L / membrane.omega_m * derived.r_m ** 2
            * (2 * cavity.finesse / math.pi) ** 2)


def scaling_estimate(system):
    """
    Factorized coupling g = ω_at·√(mω_at/Mω_m)·|𝔯_m|·√N·(2𝓕/π)

    Returns the individual factors, the factorized and the full value
    and their relative difference. Supported for the membrane on the
    slope (and the mirror geometry where |𝔯_m| is replaced by one).
    """
    membrane, atoms, cavity = system.membrane, system.atoms, system.cavity
    if cavity.geometry == 'membrane' and membrane.placement != 'slope':
        raise ValidationError(
            "Scaling estimate requires the membrane on the slope.")
    if abs(atoms.omega_at / membrane.omega_m - 1) > RESONANCE:
        log.warning(
            "Scaling estimate evaluated for a non-resonant configuration.")
    reflectivity = system.derived.r_m if cavity.geometry == 'membrane' else 1.0
    mass_ratio = math.sqrt(
        atoms.mass_m * atoms.omega_at / (membrane.mass_M * membrane.omega_m))
    enhancement = 2 * cavity.finesse / math.pi
    factorized = (atoms.omega_at * mass_ratio * reflectivity
                  * math.sqrt(atoms.N) * enhancement)
    full = full_rates(system).g
    return dict(
        omega_at=atoms.omega_at,
        mass_ratio=mass_ratio,
        reflectivity=reflectivity,
        sqrt_N=math.sqrt(atoms.N),
        enhancement=enhancement,
        g_factorized=factorized,
        g_full=full,
        relative_error=abs(factorized / full - 1))
