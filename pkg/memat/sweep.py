# coding: utf-8

"""
Parameter studies of the coherent coupling and sympathetic cooling

Grid cells are independent: every cell rebuilds the system from the
baseline configuration document, recomputes the rates and, when a
cooling rate is known, the exact and adiabatic steady occupations.
Failing cells are kept with their error status instead of aborting
the sweep.
"""

import math
import multiprocessing

import fmf.utils
import numpy as np

import memat.dynamics
import memat.params
import memat.rates
import memat.utils
from memat.params import Record
from memat.utils import GeneralError, NoFeasiblePointError, ValidationError

log = fmf.utils.Logging('memat').logger

# Sweepable names and their config document keys (None for cooling)
AXES = {
    'finesse': 'cavity.finesse',
    'gamma_cool': None,
    'N': 'atoms.N',
    'power_P': 'cavity.power_P',
    'delta': 'atoms.delta',
    }

# Quote used when listing names in messages
QUOTE = memat.params.QUOTE

# Supported axis scales
SCALES = ['linear', 'log']

# Supported optimization objectives and the minimized record field
OBJECTIVES = {
    'min_total_ratio': 'ratio_total',
    'min_occupation': 'n_ss_exact',
    }

# Default axes of the coherent and the cooling study
FINESSE_AXIS = dict(name='finesse', min=50.0, max=1000.0, points=60, scale='log')
COOLING_AXIS = dict(name='gamma_cool', min=1e4, max=1e6, points=60, scale='log')

# Optimizer coarse scan resolution and final relative step
COARSE_POINTS = 15
TOLERANCE = 1e-4

# Column names of the per-cell results
RESULTS = [
    'n_ss_exact', 'n_ss_adiabatic',
    'ratio_at', 'ratio_mdiff', 'ratio_mth', 'ratio_total']


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Types
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

class SweepAxis(Record):
    """ Single sweep axis """

    _keys = ['name', 'min', 'max', 'points', 'scale']
    _defaults = {'scale': 'linear'}

    def _validate(self):
        self._check('name', str)
        if self.name not in AXES:
            raise ValidationError(
                f"Invalid sweep axis '{self.name}' (expected "
                f"{fmf.utils.listed(sorted(AXES), quote=QUOTE, join='or')}).")
        self._check('min')
        self._check('max')
        self._check('points', int)
        self._check('scale', str)
        self._require(self.points >= 2, f"points >= 2 (got {self.points})")
        self._require(self.min < self.max, "min < max")
        self._require(self.scale in SCALES, "scale is 'linear' or 'log'")
        if self.scale == 'log':
            self._require(self.min > 0, "min > 0 on a log scale")

    def values(self):
        """ Grid values of the axis """
        if self.scale == 'log':
            return np.geomspace(self.min, self.max, self.points)
        return np.linspace(self.min, self.max, self.points)


class SweepSpec(object):
    """ One or two sweep axes over a baseline system """

    def __init__(self, axis1, axis2=None, system=None, cooling=None):
        self.axis1 = axis1
        self.axis2 = axis2
        self.system = memat.params.reference() if system is None else system
        if cooling is not None and not isinstance(
                cooling, memat.dynamics.CoolingSettings):
            cooling = memat.dynamics.CoolingSettings(gamma_cool=cooling)
        self.cooling = cooling
        if axis2 is not None and axis2.name == axis1.name:
            raise ValidationError(f"Axis '{axis1.name}' swept twice.")

    @property
    def axes(self):
        return [axis for axis in [self.axis1, self.axis2] if axis is not None]

    @property
    def shape(self):
        return tuple(axis.points for axis in self.axes)

    def cells(self):
        """ Axis values of all cells in row-major order """
        if self.axis2 is None:
            return [{self.axis1.name: float(value)}
                    for value in self.axis1.values()]
        return [{self.axis1.name: float(first), self.axis2.name: float(second)}
                for first in self.axis1.values()
                for second in self.axis2.values()]


class SweepRecord(object):
    """ Rates, ratios and occupations of a single grid cell """

    def __init__(self, values, rates=None, n_ss_exact=None,
                 n_ss_adiabatic=None, status='ok', message=None):
        self.values = values
        self.rates = rates
        self.n_ss_exact = n_ss_exact
        self.n_ss_adiabatic = n_ss_adiabatic
        self.status = status
        self.message = message
        if rates is not None and rates.g > 0:
            self.ratio_at = rates.gamma_at_diff / rates.g
            self.ratio_mdiff = rates.gamma_m_diff / rates.g
            self.ratio_mth = rates.gamma_m_th / rates.g
            self.ratio_total = rates.Gamma / rates.g
        else:
            self.ratio_at = self.ratio_mdiff = None
            self.ratio_mth = self.ratio_total = None

    @property
    def ok(self):
        return self.status == 'ok'

    def __repr__(self):
        return f'SweepRecord({self.values!r}, status={self.status!r})'

    def row(self):
        """ Result fields in the order of RESULTS """
        return [getattr(self, field) for field in RESULTS]

    def export(self):
        data = dict(values=self.values, status=self.status)
        if self.message:
            data['message'] = self.message
        if self.rates is not None:
            data['rates'] = self.rates.export()
        for field in RESULTS:
            data[field] = getattr(self, field)
        return data


class SweepResult(object):
    """ Ordered sweep records with their spec """

    def __init__(self, spec, records):
        self.spec = spec
        self.records = records

    def grid(self, field):
        """ Array of a result field shaped like the sweep grid """
        values = [
            np.nan if getattr(record, field) is None else getattr(record, field)
            for record in self.records]
        return np.array(values, dtype=float).reshape(self.spec.shape)

    def optimum(self, field='ratio_total'):
        """ Successful record with the smallest field value """
        candidates = [
            record for record in self.records
            if record.ok and getattr(record, field) is not None]
        if not candidates:
            raise NoFeasiblePointError(
                f"No successful cell provides '{field}'.")
        return min(candidates, key=lambda record: getattr(record, field))

    @property
    def failures(self):
        return [record for record in self.records if not record.ok]

    def header(self):
        names = [axis.name for axis in self.spec.axes]
        return names + list(memat.rates.RateSet._fields) + ['Gamma'] + (
            RESULTS + ['status'])

    def rows(self):
        for record in self.records:
            row = [record.values[axis.name] for axis in self.spec.axes]
            if record.rates is None:
                row += [None] * (len(memat.rates.RateSet._fields) + 1)
            else:
                row += list(record.rates) + [record.rates.Gamma]
            yield row + record.row() + [record.status]

    def to_csv(self):
        """ Csv text with one row per cell """
        return memat.utils.rows_to_csv(self.header(), self.rows())

    def write_csv(self, path):
        """ Write csv into the given file """
        try:
            with open(path, 'w', encoding='utf-8', newline='') as target:
                target.write(self.to_csv())
        except OSError as error:
            raise memat.utils.FileError(f"Failed to write '{path}'.\n{error}")


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Evaluation
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def evaluate(system, values, gamma_cool=None):
    """ Evaluate a single cell, errors are captured in the status """
    values = dict(values)
    changes = dict(
        (AXES[name], value) for name, value in values.items()
        if AXES[name] is not None)
    gamma_cool = values.get('gamma_cool', gamma_cool)
    try:
        cell = system.with_changes(changes) if changes else system
        rates = memat.rates.full_rates(cell)
    except GeneralError as error:
        return SweepRecord(
            values, status=error.__class__.__name__, message=str(error))
    if gamma_cool is None:
        return SweepRecord(values, rates)
    try:
        cooling = memat.dynamics.CoolingSettings(gamma_cool=gamma_cool)
        model = memat.dynamics.build_model(rates, cooling)
        n_ss_exact, _ = memat.dynamics.occupations(
            memat.dynamics.steady_state(model))
        n_ss_adiabatic = None
        if gamma_cool > 0:
            n_ss_adiabatic = memat.dynamics.adiabatic_cooling(
                rates, cooling).n_ss
    except GeneralError as error:
        return SweepRecord(
            values, rates, status=error.__class__.__name__,
            message=str(error))
    return SweepRecord(values, rates, n_ss_exact, n_ss_adiabatic)


def _evaluate(task):
    """ Pool worker: rebuild the system and evaluate the cell """
    document, constants, values, gamma_cool = task
    system = memat.params.from_document(document, constants)
    return evaluate(system, values, gamma_cool)


def _workers(workers):
    """ Resolve worker count, None means available parallelism """
    if workers is None:
        return multiprocessing.cpu_count()
    if workers < 1:
        raise ValidationError(f"Worker count must be positive, got {workers}.")
    return workers


def run(spec, workers=1):
    """
    Evaluate all cells of the sweep

    Records are returned in row-major grid order independently of the
    worker count.
    """
    workers = _workers(workers)
    gamma_cool = None if spec.cooling is None else spec.cooling.gamma_cool
    cells = spec.cells()
    log.debug(f"Sweeping {len(cells)} cells with {workers} workers.")
    if workers == 1:
        records = [evaluate(spec.system, values, gamma_cool) for values in cells]
    else:
        document = spec.system.export()
        tasks = [
            (document, spec.system.constants, values, gamma_cool)
            for values in cells]
        with multiprocessing.Pool(processes=workers) as pool:
            records = pool.map(
                _evaluate, tasks,
                chunksize=max(1, len(tasks) // (4 * workers)))
    result = SweepResult(spec, records)
    if result.failures:
        log.info(f"{len(result.failures)} of {len(records)} cells failed.")
    return result


def loglog_slope(x, y):
    """ Exponent of a power law fitted on the log-log scale """
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Studies
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def sweep_coherent(system=None, axis=None, cooling=None, workers=1):
    """
    Decoherence to coupling ratios as a function of finesse

    The laser power is held at its configured value, the trap
    condition does not involve the finesse.
    """
    if axis is None:
        axis = SweepAxis(**FINESSE_AXIS)
    if axis.name != 'finesse':
        raise ValidationError("Coherent sweep runs over the finesse.")
    return run(SweepSpec(axis, system=system, cooling=cooling), workers)


def sweep_cooling(system=None, finesse=None, gamma_cool=None, workers=1):
    """ Exact and adiabatic steady occupations over finesse and cooling rate """
    finesse = SweepAxis(**FINESSE_AXIS) if finesse is None else finesse
    gamma_cool = SweepAxis(**COOLING_AXIS) if gamma_cool is None else gamma_cool
    if finesse.name != 'finesse' or gamma_cool.name != 'gamma_cool':
        raise ValidationError(
            "Cooling sweep runs over the finesse and the cooling rate.")
    return run(SweepSpec(finesse, gamma_cool, system=system), workers)


class Optimum(object):
    """ Optimal record with the refinement trace """

    def __init__(self, objective, record, trace):
        self.objective = objective
        self.record = record
        self.trace = trace

    @property
    def value(self):
        return getattr(self.record, OBJECTIVES[self.objective])

    def export(self):
        return dict(
            objective=self.objective, value=self.value,
            record=self.record.export(),
            trace=[dict(values=values, value=value)
                   for values, value in self.trace])


def _default_bounds(objective):
    bounds = {'finesse': (FINESSE_AXIS['min'], FINESSE_AXIS['max'])}
    if objective == 'min_occupation':
        bounds['gamma_cool'] = (COOLING_AXIS['min'], COOLING_AXIS['max'])
    return bounds


def optimize(objective, bounds=None, system=None, gamma_cool=None,
             coarse=COARSE_POINTS, tolerance=TOLERANCE, workers=1):
    """
    Minimize the total decoherence ratio or the steady occupation

    A coarse log-spaced scan over the bounds is followed by coordinate
    descent in log space with halving steps until the relative step
    drops below the tolerance. Bounds map axis names to (min, max),
    equal limits pin the axis.
    """
    if objective not in OBJECTIVES:
        raise ValidationError(
            f"Invalid objective '{objective}' (expected "
            f"{fmf.utils.listed(sorted(OBJECTIVES), quote=QUOTE, join='or')}).")
    field = OBJECTIVES[objective]
    bounds = _default_bounds(objective) if bounds is None else dict(bounds)
    for name, (low, high) in bounds.items():
        if name not in AXES:
            raise ValidationError(f"Invalid optimization axis '{name}'.")
        if not 0 < low <= high:
            raise ValidationError(
                f"Invalid bounds for '{name}': need 0 < min <= max.")
    if (objective == 'min_occupation' and 'gamma_cool' not in bounds
            and gamma_cool is None):
        raise ValidationError(
            "Occupation optimization needs a cooling rate or its bounds.")
    if system is None:
        system = memat.params.reference()
    names = sorted(bounds)
    lower = np.log([bounds[name][0] for name in names])
    upper = np.log([bounds[name][1] for name in names])

    cache = dict()

    def objective_value(position):
        key = tuple(np.round(position, 12))
        if key not in cache:
            values = dict(zip(names, np.exp(position).tolist()))
            record = evaluate(system, values, gamma_cool)
            value = getattr(record, field)
            cache[key] = (record, math.inf if not record.ok or value is None
                          else value)
        return cache[key]

    # Coarse scan
    axes = [
        SweepAxis(name=name, min=bounds[name][0], max=bounds[name][1],
                  points=coarse, scale='log')
        if bounds[name][0] < bounds[name][1] else None
        for name in names]
    grids = [
        np.log(axis.values()) if axis is not None else np.array([low])
        for axis, low in zip(axes, lower)]
    mesh = np.array(np.meshgrid(*grids, indexing='ij')).reshape(len(names), -1).T
    if workers != 1 and len(mesh) > 1:
        document = system.export()
        tasks = [(document, system.constants,
                  dict(zip(names, np.exp(position).tolist())), gamma_cool)
                 for position in mesh]
        with multiprocessing.Pool(processes=_workers(workers)) as pool:
            records = pool.map(_evaluate, tasks)
        for position, record in zip(mesh, records):
            value = getattr(record, field)
            cache[tuple(np.round(position, 12))] = (
                record, math.inf if not record.ok or value is None else value)
    scores = [objective_value(position)[1] for position in mesh]
    if not np.isfinite(np.min(scores)):
        raise NoFeasiblePointError(
            f"Every point of the coarse scan failed for '{objective}'.")
    position = mesh[int(np.argmin(scores))].copy()
    best = objective_value(position)[1]
    trace = [(dict(zip(names, np.exp(position).tolist())), best)]

    # Coordinate descent with shrinking steps
    steps = (upper - lower) / max(coarse - 1, 1)
    while np.any(steps >= tolerance):
        improved = False
        for index in range(len(names)):
            if steps[index] < tolerance:
                continue
            for direction in (-1, 1):
                candidate = position.copy()
                candidate[index] = np.clip(
                    candidate[index] + direction * steps[index],
                    lower[index], upper[index])
                value = objective_value(candidate)[1]
                if value < best:
                    position, best, improved = candidate, value, True
                    trace.append(
                        (dict(zip(names, np.exp(position).tolist())), best))
                    break
        if not improved:
            steps = steps / 2
    record = objective_value(position)[0]
    log.debug(
        f"Optimum {best:.6g} after {len(trace)} improvements and "
        f"{len(cache)} evaluations.")
    return Optimum(objective, record, trace)
