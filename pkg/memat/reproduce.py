# coding: utf-8

""" Reproduction recipes for the reference parameters, ratios and cooling map """

import math

import fmf.utils
import numpy as np

import memat.dynamics
import memat.optics
import memat.params
import memat.rates
import memat.sweep
import memat.utils
from memat.utils import verdict

log = fmf.utils.Logging('memat').logger

# Reference cooling rate and the expected adiabatic occupation
REFERENCE_COOLING = 2.2e5
ADIABATIC_OCCUPATION = (0.52, 0.02)


class Band(object):
    """ Acceptance band of a single reproduced quantity """

    def __init__(self, name, value, low, high, unit=''):
        self.name = name
        self.value = value
        self.low = low
        self.high = high
        self.unit = unit

    @property
    def passed(self):
        return bool(self.low <= self.value <= self.high)

    def __str__(self):
        unit = f' {self.unit}' if self.unit else ''
        return (f'{self.name} = {self.value:.5g}{unit} '
                f'[{self.low:.5g}, {self.high:.5g}]')

    def export(self):
        return dict(
            name=self.name, value=self.value, low=self.low, high=self.high,
            unit=self.unit, passed=self.passed)


def relative(name, value, reference, tolerance, unit=''):
    """ Band reference ± tolerance (relative) """
    return Band(
        name, value, reference * (1 - tolerance), reference * (1 + tolerance),
        unit)


class Recipe(memat.utils.Common):
    """ Reproduction recipe checking computed values against bands """

    summary = None

    def __init__(self, system=None, workers=1, parent=None):
        super().__init__(parent=parent)
        self.system = memat.params.reference() if system is None else system
        self.workers = workers
        self.bands = []
        self.data = dict()

    def check(self, band):
        """ Record the band and show its verdict """
        self.bands.append(band)
        self.info(verdict(band.passed, str(band)), shift=1)
        return band.passed

    @property
    def passed(self):
        return all(band.passed for band in self.bands)

    def compute(self):
        """ Compute values and check all bands """
        raise NotImplementedError

    def go(self):
        """ Run the recipe, return True when every band passed """
        self.info(self.name, self.summary, color='green')
        self.compute()
        total = fmf.utils.listed(len(self.bands), 'band')
        if self.passed:
            self.info(f'All {total} passed.', shift=1)
        else:
            failed = len([band for band in self.bands if not band.passed])
            self.fail(f'{failed} of {total} failed.', shift=1)
        return self.passed

    def export(self):
        return dict(
            recipe=self.name, passed=self.passed,
            bands=[band.export() for band in self.bands], data=self.data)


class Reference(Recipe):
    """ Rates of the reference parameter table """

    summary = 'coupling and decoherence rates'

    def compute(self):
        system = self.system
        rates = memat.rates.full_rates(system)
        self.data['rates'] = rates.export()
        reference = memat.rates.REFERENCE
        self.check(relative('g', rates.g, reference['g'], 0.02, 's⁻¹'))
        self.check(relative(
            'gamma_m_diff', rates.gamma_m_diff, reference['gamma_m_diff'],
            0.03, 's⁻¹'))
        self.check(relative(
            'gamma_m_th', rates.gamma_m_th, reference['gamma_m_th'],
            0.05, 's⁻¹'))
        self.check(relative(
            'delta_T', rates.delta_T, reference['delta_T'], 0.05, 'K'))
        self.check(relative(
            'gamma_at_diff', rates.gamma_at_diff, reference['gamma_at_diff'],
            0.10, 's⁻¹'))

        # Membrane reflectivity from the slab formula
        k_L = 2 * math.pi / system.atoms.lambda_L
        r_m = abs(complex(memat.optics.slab(
            system.membrane.n_m, system.membrane.d_m, k_L).r))
        self.data['r_m'] = r_m
        self.check(Band('|r_m|', r_m, 0.471, 0.481))

        # Trap power closure
        power = memat.params.required_power(
            system.atoms, system.cavity.mode_area, system.constants)
        self.data['P_trap'] = power
        self.check(Band('P_trap', power, 2.4e-3, 3.0e-3, 'W'))

        # Adiabatic occupation at the reference cooling rate
        estimate = memat.dynamics.adiabatic_cooling(rates, REFERENCE_COOLING)
        self.data['n_ss_adiabatic'] = estimate.n_ss
        center, tolerance = ADIABATIC_OCCUPATION
        self.check(Band(
            'n_ss_adiabatic', estimate.n_ss,
            center - tolerance, center + tolerance))


class Ratios(Recipe):
    """ Decoherence to coupling ratios over finesse """

    summary = 'strong coupling ratios versus finesse'

    def compute(self):
        result = memat.sweep.sweep_coherent(self.system, workers=self.workers)
        finesse = np.array(
            [record.values['finesse'] for record in result.records])
        slope_at = memat.sweep.loglog_slope(finesse, result.grid('ratio_at'))
        slope_mdiff = memat.sweep.loglog_slope(
            finesse, result.grid('ratio_mdiff'))
        optimum = result.optimum('ratio_total')
        total = result.grid('ratio_total')
        self.data.update(
            slope_at=slope_at, slope_mdiff=slope_mdiff,
            finesse_optimum=optimum.values['finesse'],
            ratio_optimum=optimum.ratio_total,
            ratio_max=float(np.nanmax(total)))
        self.check(Band('slope gamma_at_diff/g', slope_at, -1.001, -0.999))
        self.check(Band('slope gamma_m_diff/g', slope_mdiff, 0.999, 1.001))
        self.check(Band('argmin Gamma/g', optimum.values['finesse'], 250, 400))
        self.check(Band('min Gamma/g', optimum.ratio_total, 0.4, 1.5))
        self.check(Band('max Gamma/g', float(np.nanmax(total)), 0, 10))


class Cooling(Recipe):
    """ Exact steady occupation over finesse and cooling rate """

    summary = 'sympathetic cooling occupation map'

    def compute(self):
        result = memat.sweep.sweep_cooling(self.system, workers=self.workers)
        optimum = result.optimum('n_ss_exact')
        finesse = optimum.values['finesse']
        gamma_cool = optimum.values['gamma_cool']
        occupation = result.grid('n_ss_exact')
        column = int(np.argmin(np.abs(
            result.spec.axis2.values() - gamma_cool)))
        cut = occupation[:, column]
        interior = 0 < int(np.nanargmin(cut)) < len(cut) - 1
        self.data.update(
            n_ss_exact=optimum.n_ss_exact, finesse=finesse,
            gamma_cool=gamma_cool, failures=len(result.failures))
        self.check(Band('min n_ss_exact', optimum.n_ss_exact, 0.4, 1.5))
        self.check(Band('argmin finesse', finesse, 350, 600))
        self.check(Band('argmin gamma_cool', gamma_cool, 1.5e5, 3e5, 's⁻¹'))
        self.bands.append(Band('interior minimum', float(interior), 1, 1))
        self.info(verdict(
            interior, 'n_ss_exact has an interior minimum along the cut'),
            shift=1)


RECIPES = {
    'reference': Reference,
    'ratios': Ratios,
    'cooling': Cooling,
    }

# Names of the reference table and figures accepted as well
ALIASES = {
    'table1': 'reference',
    'fig3': 'ratios',
    'fig4': 'cooling',
    }


def resolve(names):
    """ Recipe names with aliases resolved, duplicates dropped """
    if not names or 'all' in names:
        return list(RECIPES)
    resolved = []
    for name in names:
        name = ALIASES.get(name, name)
        if name not in RECIPES:
            raise memat.utils.ValidationError(f"Unknown recipe '{name}'.")
        if name not in resolved:
            resolved.append(name)
    return resolved
