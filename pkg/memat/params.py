# coding: utf-8

"""
Physical constants, system parameters and derived quantities

Parameter records are immutable and validated on construction. The
shipped reference configuration serves as the default document which
user config files and dotted overrides are merged into.
"""

import copy
import json
import math
import os

import fmf.utils
import scipy.constants

import memat.optics
import memat.utils
from memat.utils import DetuningSignError, OutOfDomainError, ValidationError

log = fmf.utils.Logging('memat').logger

# Shipped reference configuration
REFERENCE_PATH = os.path.join(
    os.path.dirname(__file__), 'data', 'reference.json')

# Config document sections in their canonical order
SECTIONS = ['membrane', 'atoms', 'cavity']

# Quote used when listing names in messages
QUOTE = "'"

# Allowed relative mismatch between nominal ω_L and 2πc/λ_L
OMEGA_L_TOLERANCE = 0.005

# Trap mismatch above which the trap condition is reported as violated
TRAP_TOLERANCE = 0.1


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Record
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

class Record(object):
    """
    Immutable validated record

    Supported fields are listed in _keys (in export order), defaults
    in _defaults. Unknown fields are rejected, values are checked by
    the _validate() method when the record is created.
    """

    _keys = []
    _defaults = {}

    def __init__(self, **data):
        """ Store and validate provided field values """
        unknown = sorted(set(data) - set(self._keys))
        if unknown:
            names = fmf.utils.listed(unknown, quote="'")
            raise ValidationError(f"Unknown {self._name()} field {names}.")
        for key in self._keys:
            object.__setattr__(self, key, data.get(key, self._defaults.get(key)))
        self._validate()

    @classmethod
    def _name(cls):
        """ Human readable record name """
        return cls.__name__

    def __setattr__(self, key, value):
        raise AttributeError(f"{self._name()} is immutable.")

    def __eq__(self, other):
        return type(self) is type(other) and self.export() == other.export()

    def __hash__(self):
        return hash(tuple(self.export().items()))

    def __repr__(self):
        fields = ', '.join(f'{key}={getattr(self, key)!r}' for key in self._keys)
        return f'{self._name()}({fields})'

    def _validate(self):
        """ Check field values """

    def _check(self, key, expected=float, optional=False):
        """
        Check that the key is of expected type

        Numbers are converted into floats, None is accepted only for
        optional fields.
        """
        value = getattr(self, key)
        if value is None:
            if optional:
                return
            raise ValidationError(f"Missing '{key}' in {self._name()}.")
        if expected is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(
                    f"Invalid '{key}' in {self._name()} (should be a "
                    f"'float', got a '{type(value).__name__}').")
            if math.isnan(value):
                raise ValidationError(f"Invalid '{key}' in {self._name()} (nan).")
            object.__setattr__(self, key, float(value))
        elif not isinstance(value, expected):
            raise ValidationError(
                f"Invalid '{key}' in {self._name()} (should be a "
                f"'{expected.__name__}', got a '{type(value).__name__}').")

    def _require(self, condition, invariant):
        """ Raise validation error naming the violated invariant """
        if not condition:
            raise ValidationError(f"Invalid {self._name()}: {invariant}.")

    def _positive(self, *keys):
        """ Check that all given keys are finite positive numbers """
        for key in keys:
            self._check(key)
            value = getattr(self, key)
            self._require(value > 0, f"{key} > 0 (got {value})")

    def export(self):
        """ Export record into dictionary """
        return dict((key, getattr(self, key)) for key in self._keys)

    def replace(self, **changes):
        """ Return a new record with given fields changed """
        data = self.export()
        data.update(changes)
        return self.__class__(**data)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Parameters
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

class PhysicalConstants(Record):
    """ CODATA constants in SI units """

    _keys = ['hbar', 'k_B', 'c', 'epsilon_0']
    _defaults = dict(
        hbar=scipy.constants.hbar,
        k_B=scipy.constants.k,
        c=scipy.constants.c,
        epsilon_0=scipy.constants.epsilon_0)

    def _validate(self):
        self._positive(*self._keys)


class MembraneParams(Record):
    """
    Membrane parameters

    The membrane is placed on the slope of the intracavity standing
    wave by default (placement 'slope'), placement 'position' puts it
    at the given distance ell from the perfect mirror. The thermal
    link is taken from K_th when given, otherwise it is computed from
    the thermal conductivity kappa_th.
    """

    _keys = [
        'omega_m', 'mass_M', 'Q_m', 'T0', 'n_m', 'd_m', 'side_l', 'abs2',
        'r_m_override', 'K_th', 'kappa_th', 'placement', 'ell']
    _defaults = dict(kappa_th=2.7, placement='slope')

    def _validate(self):
        self._positive('omega_m', 'mass_M', 'Q_m', 'T0', 'd_m', 'side_l')
        self._check('n_m')
        self._require(self.n_m > 1, f"n_m > 1 (got {self.n_m})")
        self._check('abs2')
        self._require(0 <= self.abs2 < 1, f"0 <= abs2 < 1 (got {self.abs2})")
        self._check('r_m_override', optional=True)
        if self.r_m_override is not None:
            self._require(
                0 < self.r_m_override < 1,
                f"0 < r_m_override < 1 (got {self.r_m_override})")
        self._check('K_th', optional=True)
        if self.K_th is not None:
            self._positive('K_th')
        self._positive('kappa_th')
        self._check('placement', str)
        self._require(
            self.placement in ['slope', 'position'],
            f"placement is 'slope' or 'position' (got '{self.placement}')")
        self._check('ell', optional=self.placement == 'slope')
        if self.ell is not None:
            self._positive('ell')

    @property
    def gamma_m(self):
        """ Mechanical linewidth ω_m/Q_m """
        return self.omega_m / self.Q_m


class AtomParams(Record):
    """ Atomic ensemble and lattice laser parameters """

    _keys = [
        'omega_at', 'mass_m', 'N', 'delta', 'mu', 'gamma_se', 'lambda_L',
        'omega_L']
    _defaults = dict(gamma_se=2 * math.pi * 6.07e6, lambda_L=780e-9)

    def _validate(self):
        self._positive('omega_at', 'mass_m', 'N', 'mu', 'gamma_se', 'lambda_L')
        self._require(self.N >= 1, f"N >= 1 (got {self.N})")
        self._check('delta')
        self._require(self.delta != 0, "delta != 0")
        self._check('omega_L', optional=True)
        if self.omega_L is not None:
            self._positive('omega_L')


class CavityParams(Record):
    """ Cavity and laser parameters """

    _keys = [
        'finesse', 'length_L', 'mode_area', 'power_P', 'waist_membrane',
        'geometry']
    _defaults = dict(length_L=0.01, geometry='membrane')

    def _validate(self):
        self._positive(
            'finesse', 'length_L', 'mode_area', 'power_P', 'waist_membrane')
        self._require(self.finesse >= 1, f"finesse >= 1 (got {self.finesse})")
        self._check('geometry', str)
        self._require(
            self.geometry in ['membrane', 'mirror'],
            f"geometry is 'membrane' or 'mirror' (got '{self.geometry}')")


class DerivedQuantities(Record):
    """ Quantities derived from the parameter records """

    _keys = [
        'l_m', 'l_at', 'k_L', 'omega_L', 'alpha', 'V0', 'kappa', 'E_wL2',
        'gamma_m', 'r_m', 'ell', 'mirror_r', 'mirror_n', 'mirror_d']


class SystemParams(object):
    """ Complete validated system description """

    def __init__(self, membrane, atoms, cavity, constants, derived):
        self.membrane = membrane
        self.atoms = atoms
        self.cavity = cavity
        self.constants = constants
        self.derived = derived

    def __eq__(self, other):
        return (isinstance(other, SystemParams)
                and self.export() == other.export()
                and self.constants == other.constants)

    def __repr__(self):
        return f'SystemParams({self.export()!r})'

    def export(self):
        """ Export the configuration document (membrane, atoms, cavity) """
        return dict(
            membrane=self.membrane.export(),
            atoms=self.atoms.export(),
            cavity=self.cavity.export())

    def with_changes(self, changes):
        """
        Return a new validated system with dotted field changes applied

        Example: system.with_changes({'cavity.finesse': 300})
        """
        document = self.export()
        merge_document(document, _undot(changes), source='changes')
        return from_document(document, self.constants)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Operations
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def mirror_reflectivity(finesse):
    """ End mirror |𝔯| solving 𝓕 = π|𝔯|^½/(1 − |𝔯|) """
    root = (-math.pi + math.sqrt(math.pi ** 2 + 4 * finesse ** 2)) / (
        2 * finesse)
    return root ** 2


def slope_position(k_L, length):
    """ Membrane position on the slope (sin 2k_Lℓ = 1) closest to L/2 """
    order = round((k_L * length / 2 - math.pi / 4) / math.pi)
    return (math.pi / 4 + math.pi * order) / k_L


def build_system(membrane, atoms, cavity, constants=None):
    """ Validate parameter records and compute derived quantities """
    if constants is None:
        constants = PhysicalConstants()
    hbar, c = constants.hbar, constants.c

    k_L = 2 * math.pi / atoms.lambda_L
    omega_L = c * k_L
    if atoms.omega_L is not None:
        mismatch = abs(atoms.omega_L / omega_L - 1)
        if mismatch > OMEGA_L_TOLERANCE:
            raise ValidationError(
                f"Invalid AtomParams: omega_L = {atoms.omega_L:.6g} rad/s "
                f"disagrees with 2πc/lambda_L = {omega_L:.6g} rad/s by "
                f"{mismatch:.2%} (more than {OMEGA_L_TOLERANCE:.1%}).")

    # End mirror modelled as a quarter-wave slab matching the finesse
    mirror_r = mirror_reflectivity(cavity.finesse)
    mirror_n = math.sqrt((1 + mirror_r) / (1 - mirror_r))
    mirror_d = atoms.lambda_L / (4 * mirror_n)

    # Membrane position and reflectivity
    ell = None
    if cavity.geometry == 'membrane':
        if membrane.placement == 'slope':
            ell = slope_position(k_L, cavity.length_L)
        else:
            ell = membrane.ell
        if ell + membrane.d_m >= cavity.length_L:
            raise OutOfDomainError(
                f"Membrane at ell = {ell:.6g} m does not fit into the "
                f"cavity of length {cavity.length_L:.6g} m.")
    if membrane.r_m_override is not None:
        r_m = membrane.r_m_override
    else:
        r_m = float(abs(memat.optics.slab(membrane.n_m, membrane.d_m, k_L).r))

    derived = DerivedQuantities(
        l_m=math.sqrt(hbar / (membrane.mass_M * membrane.omega_m)),
        l_at=math.sqrt(hbar / (atoms.mass_m * atoms.omega_at)),
        k_L=k_L,
        omega_L=omega_L,
        alpha=math.sqrt(2 * math.pi * cavity.power_P / (hbar * omega_L)),
        V0=atoms.mass_m * atoms.omega_at ** 2 / (2 * k_L ** 2),
        kappa=math.pi * c / (2 * cavity.finesse * cavity.length_L),
        E_wL2=hbar * omega_L / (
            math.pi * constants.epsilon_0 * c * cavity.mode_area),
        gamma_m=membrane.gamma_m,
        r_m=r_m,
        ell=ell,
        mirror_r=mirror_r,
        mirror_n=mirror_n,
        mirror_d=mirror_d)
    system = SystemParams(membrane, atoms, cavity, constants, derived)
    if atoms.delta > 0:
        log.debug(f"Trap power mismatch {trap_mismatch(system):+.2%}.")
    return system


def lattice_depth(atoms, cavity, constants=None):
    """ Lattice depth V0 = μ²𝓔²|α|²/ℏδ created by the laser power """
    if constants is None:
        constants = PhysicalConstants()
    if atoms.delta <= 0:
        raise DetuningSignError("Lattice depth requires delta > 0.")
    # ω_L cancels between 𝓔² and |α|²
    return 2 * atoms.mu ** 2 * cavity.power_P / (
        constants.epsilon_0 * constants.c * cavity.mode_area
        * constants.hbar * atoms.delta)


def trap_frequency(atoms, cavity, constants=None):
    """ Atomic trap frequency from mω_at²/2 = V0 k_L² """
    k_L = 2 * math.pi / atoms.lambda_L
    depth = lattice_depth(atoms, cavity, constants)
    return math.sqrt(2 * depth * k_L ** 2 / atoms.mass_m)


def required_power(atoms, mode_area, constants=None):
    """
    Laser power matching the configured atomic trap frequency

    P = mω_at²ε₀c𝒜ℏδ/(4k_L²μ²), the inverse of trap_frequency().
    """
    if constants is None:
        constants = PhysicalConstants()
    if atoms.delta <= 0:
        raise DetuningSignError(
            "Required power is defined for blue detuning (delta > 0) only.")
    k_L = 2 * math.pi / atoms.lambda_L
    return (atoms.mass_m * atoms.omega_at ** 2 * constants.epsilon_0
            * constants.c * mode_area * constants.hbar * atoms.delta
            / (4 * k_L ** 2 * atoms.mu ** 2))


def trap_mismatch(system):
    """ Relative excess of the configured power over the trap power """
    return system.cavity.power_P / required_power(
        system.atoms, system.cavity.mode_area, system.constants) - 1


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Hierarchy
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

class HierarchyCheck(object):
    """ Single 'much greater than' link of the timescale hierarchy """

    def __init__(self, name, ratio, margin, warn_margin):
        self.name = name
        self.ratio = ratio
        if ratio >= margin:
            self.status = 'pass'
        elif ratio >= warn_margin:
            self.status = 'warn'
        else:
            self.status = 'fail'

    def export(self):
        return dict(name=self.name, ratio=self.ratio, status=self.status)


class HierarchyReport(object):
    """ Timescale hierarchy report """

    def __init__(self, checks, tau, theta):
        self.checks = checks
        self.tau = tau
        self.theta = theta

    @property
    def ok(self):
        """ True when no link failed """
        return all(check.status != 'fail' for check in self.checks)

    def check(self, name):
        """ Find check by name """
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def export(self):
        return dict(
            ok=self.ok, tau=self.tau, theta=self.theta,
            checks=[check.export() for check in self.checks])


def check_hierarchy(
        system, rates=None, tau=None, theta=None, margin=10, warn_margin=3):
    """
    Check the timescale hierarchy δ ≫ θ ≫ κ, 1/τ ≫ ω ≫ g_m², g_at², g_m g_at

    The propagation delay tau defaults to 1 m/c, the field bandwidth
    theta to the geometric mean of δ and max(κ, 1/τ) rather than a
    fixed 100κ, pass theta explicitly to override it. Each link passes
    at ratio >= margin and warns at ratio >= warn_margin. The default
    warn_margin of 3 applies to every link, use warn_margin=5 for the
    stricter split of 10 pass and 5 warn.
    """
    if rates is None:
        import memat.rates
        rates = memat.rates.full_rates(system)
    if tau is None:
        tau = 1.0 / system.constants.c
    delta, kappa = abs(system.atoms.delta), system.derived.kappa
    if theta is None:
        theta = math.sqrt(delta * max(kappa, 1 / tau))
    fast = max(rates.omega_m, rates.omega_at)
    slow = min(rates.omega_m, rates.omega_at)
    links = [
        ('delta/theta', delta / theta),
        ('theta/kappa', theta / kappa),
        ('theta*tau', theta * tau),
        ('kappa/omega', kappa / fast),
        ('1/(tau*omega)', 1 / (tau * fast)),
        ('omega/g_m^2', _ratio(slow, rates.g_m ** 2)),
        ('omega/g_at^2', _ratio(slow, rates.g_at ** 2)),
        ('omega/(g_m*g_at)', _ratio(slow, rates.g_m * rates.g_at)),
        ]
    checks = [
        HierarchyCheck(name, ratio, margin, warn_margin)
        for name, ratio in links]
    return HierarchyReport(checks, tau, theta)


def _ratio(numerator, denominator):
    """ Ratio with an infinite value for vanishing denominators """
    return numerator / denominator if denominator > 0 else math.inf


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Config
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def reference_document():
    """ Fresh copy of the shipped reference configuration document """
    with open(REFERENCE_PATH, encoding='utf-8') as source:
        return json.load(source)


def reference(constants=None):
    """ System with the reference parameters """
    return from_document(reference_document(), constants)


def _undot(changes):
    """ Convert {'section.field': value} into nested sections """
    document = dict()
    for key, value in changes.items():
        try:
            section, field = key.split('.', 1)
        except ValueError:
            raise ValidationError(
                f"Invalid key '{key}' (use the section.field form).")
        document.setdefault(section, dict())[field] = value
    return document


def merge_document(document, update, source):
    """ Merge update into the document, refuse unknown sections """
    for section, fields in update.items():
        if section not in SECTIONS:
            raise ValidationError(
                f"Unknown section '{section}' in {source} (expected "
                f"{fmf.utils.listed(SECTIONS, quote=QUOTE, join='or')}).")
        if not isinstance(fields, dict):
            raise ValidationError(
                f"Section '{section}' in {source} is not a mapping.")
        document[section].update(copy.deepcopy(fields))


def from_document(document, constants=None):
    """ Build system from a configuration document """
    missing = [section for section in SECTIONS if section not in document]
    if missing:
        raise ValidationError(
            f"Missing section {fmf.utils.listed(missing, quote=QUOTE)}.")
    unknown = sorted(set(document) - set(SECTIONS))
    if unknown:
        raise ValidationError(
            f"Unknown section {fmf.utils.listed(unknown, quote=QUOTE)}.")
    return build_system(
        MembraneParams(**document['membrane']),
        AtomParams(**document['atoms']),
        CavityParams(**document['cavity']),
        constants)


def load_config(path=None, overrides=None, constants=None):
    """
    Load system configuration

    Start from the reference set, merge the optional config file and apply
    dotted overrides (section.field=value or @file), flags win.
    """
    document = reference_document()
    if path is not None:
        merge_document(
            document, memat.utils.load_document(path), f"'{path}'")
    merge_document(
        document, _undot(memat.utils.overrides_to_dict(overrides)),
        'overrides')
    return from_document(document, constants)
