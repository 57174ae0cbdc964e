""" Membrane Atoms: hybrid optomechanics of a membrane and an atomic ensemble """

__version__ = '0.3.0'

from memat.params import (
    SystemParams, build_system, load_config, reference)
from memat.rates import RateSet, full_rates
from memat.dynamics import (
    CoolingSettings, GaussianState, LinearModel, build_model, steady_state)

__all__ = [
    'SystemParams', 'build_system', 'load_config', 'reference',
    'RateSet', 'full_rates',
    'CoolingSettings', 'GaussianState', 'LinearModel', 'build_model',
    'steady_state']
