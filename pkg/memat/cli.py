# coding: utf-8

""" Command line interface for the membrane atoms toolkit """

from click import echo, style
from fmf.utils import listed

import click
import math
import numpy as np

import memat
import memat.dynamics
import memat.optics
import memat.options
import memat.params
import memat.rates
import memat.reproduce
import memat.sweep
import memat.thermal
import memat.utils

from memat.utils import format, verdict, parse_frequency, ValidationError

# Units of the reported quantities
UNITS = {
    'rate': 's⁻¹',
    'frequency': 'rad/s',
    'temperature': 'K',
    'power': 'W',
    'thermal_link': 'W/K',
    'time': 's',
    }

# Units of the rate table entries which are not rates
TABLE_UNITS = dict(
    N_m_bar='', delta_T='K', P_abs='W', K_th='W/K', omega_m='rad/s',
    omega_at='rad/s')

# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Custom Group
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

class CustomGroup(click.Group):
    """ Custom Click Group """

    def list_commands(self, context):
        """ Prevent alphabetical sorting """
        return self.commands.keys()

    def get_command(self, context, cmd_name):
        """ Allow command shortening """
        found = click.Group.get_command(self, context, cmd_name)
        if found is not None:
            return found
        matches = [command for command in self.list_commands(context)
                   if command.startswith(cmd_name)]
        if not matches:
            return None
        elif len(matches) == 1:
            return click.Group.get_command(self, context, matches[0])
        context.fail('Did you mean {}?'.format(
            listed(sorted(matches), join='or')))

    def invoke(self, context):
        """ Report anticipated errors without a traceback """
        try:
            return super().invoke(context)
        except click.UsageError as error:
            usage = error.ctx or context
            echo(usage.get_help(), err=True)
            echo(style('Error: ', fg='red') + error.format_message(), err=True)
            context.exit(1)
        except memat.utils.GeneralError as error:
            echo(style('Error: ', fg='red') + str(error), err=True)
            context.exit(error.exit_code)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Common Options
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def _apply(function, options):
    for option in reversed(options):
        function = option(function)
    return function


def verbose_debug_quiet(function):
    """ Verbose, debug and quiet output """
    return _apply(function, memat.options.verbose_debug_quiet)


def config_output(function):
    """ Configuration and output options """
    return _apply(
        function, memat.options.config_set + memat.options.out_format)


def workers(function):
    """ Worker pool size """
    return _apply(function, memat.options.workers)


def gamma_cool(function):
    """ Atomic cooling rate """
    return _apply(function, memat.options.gamma_cool)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Session
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

class Session(memat.utils.Common):
    """ Single command invocation: configuration, output and manifest """

    def __init__(self, context):
        super().__init__(name=context.info_name, context=context)
        self._save_context(context)
        config = self.opt('config')
        self.system = memat.params.load_config(config, self.opt('overrides'))
        if config is not None:
            with open(config, 'rb') as source:
                fingerprint = source.read()
        else:
            fingerprint = self.system.export()
        flags = dict(
            (key, value) for key, value in context.params.items()
            if key not in ['verbose', 'debug', 'quiet'])
        self.manifest = memat.utils.Manifest(
            fingerprint, context.info_name, flags)
        self.debug('config', self.system.export(), shift=0, level=2)

    def format_for(self, default):
        """ Requested output format, guessed from --out when not given """
        chosen = self.opt('format_')
        if chosen:
            return chosen
        out = self.opt('out') or ''
        if out.endswith('.csv'):
            return 'csv'
        if out.endswith(('.yaml', '.yml')):
            return 'yaml'
        if out.endswith('.json'):
            return 'json'
        return default

    def render(self, data, header=None, rows=None, default='json'):
        """ Render data in the requested format """
        chosen = self.format_for(default)
        if chosen == 'csv':
            if header is None:
                header = ['key', 'value']
                rows = [[key, value] for key, value in _scalars(data)]
            return memat.utils.rows_to_csv(header, rows)
        if chosen == 'yaml':
            return memat.utils.dict_to_yaml(data)
        return memat.utils.dict_to_json(data)

    def emit(self, data, header=None, rows=None, default='json'):
        """ Write output and its manifest """
        text = self.render(data, header, rows, default)
        path = memat.utils.output_path(self.opt('out'))
        if path is None:
            echo(text, nl=False)
            self.debug(
                'manifest', memat.utils.dict_to_json(self.manifest.export()),
                shift=0)
            return
        self.write(path, text)
        self.manifest.outputs.append(path)
        self.write(
            f'{path}.manifest.json',
            memat.utils.dict_to_json(self.manifest.export()))
        self.verbose(f"Output written to '{path}'.", shift=0)


def _scalars(data, prefix=''):
    """ Flatten nested dictionary into dotted scalar items """
    for key, value in data.items():
        if isinstance(value, dict):
            yield from _scalars(value, f'{prefix}{key}.')
        elif not isinstance(value, (list, tuple)):
            yield f'{prefix}{key}', value


def _cooling(text):
    """ Parse cooling rate option """
    return memat.dynamics.CoolingSettings(gamma_cool=parse_frequency(text))


def _listed(array):
    """ Convert array into a list of python floats """
    return [float(value) for value in np.ravel(array)]


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Main
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

@click.group(cls=CustomGroup)
@click.version_option(memat.__version__, message='%(version)s')
@click.pass_context
@verbose_debug_quiet
def main(context, **kwargs):
    """ Membrane atoms hybrid optomechanics toolkit """
    memat.utils.Common._save_context(context)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Rates
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

@main.command()
@click.pass_context
@click.option(
    '--k-th', 'k_th', type=float, metavar='W/K',
    help='Thermal link overriding the configuration.')
@config_output
@verbose_debug_quiet
def rates(context, k_th, **kwargs):
    """
    Show coupling and decoherence rates

    The rates are compared with the reference table, the timescale
    hierarchy of the effective model is checked as well. Use --format
    or --out to get the machine readable output.
    """
    session = Session(context)
    system = session.system
    result = memat.rates.full_rates(system, K_th=k_th)
    hierarchy = memat.params.check_hierarchy(system, result)
    mismatch = memat.params.trap_mismatch(system)
    data = dict(
        rates=result.export(),
        derived=system.derived.export(),
        hierarchy=hierarchy.export(),
        trap_mismatch=mismatch,
        units=UNITS)

    if not session.opt('format_') and not session.opt('out'):
        if session.opt('quiet'):
            return
        for key, value in result.export().items():
            reference = memat.rates.REFERENCE.get(key)
            comment = ''
            if reference is not None:
                change = (value / reference - 1) * 100
                comment = f'  (reference {reference:.4g}, {change:+.1f}%)'
            echo(format(
                key, value, TABLE_UNITS.get(key, 's⁻¹'), indent=14) + comment)
        echo(format('trap mismatch', f'{mismatch:+.1%}', indent=14))
        for check in hierarchy.checks:
            session.verbose(verdict(
                {'pass': True, 'fail': False}.get(check.status, 2),
                f'{check.name} = {check.ratio:.3g}'), shift=0, err=False)
    else:
        session.emit(data)
    if abs(mismatch) > memat.params.TRAP_TOLERANCE:
        session.warn(
            f'Laser power differs from the trap condition by '
            f'{mismatch:+.1%}.')
    for check in hierarchy.checks:
        if check.status == 'fail':
            session.warn(
                f"Timescale hierarchy violated: {check.name} = "
                f"{check.ratio:.3g}.")


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Optics
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

@main.command()
@click.pass_context
@click.option(
    '--center', metavar='FREQUENCY',
    help='Scan center, the cavity resonance nearest to ω_L by default.')
@click.option(
    '--span', type=float, default=5.0, show_default=True, metavar='KAPPA',
    help='Half width of the scan in units of κ.')
@click.option(
    '--points', type=int, default=401, show_default=True,
    help='Number of scan points.')
@config_output
@verbose_debug_quiet
def optics(context, center, span, points, **kwargs):
    """
    Scan the cavity response around a resonance

    Csv columns: omega, re_T, im_T, abs_T2, phase, lorentzian_T2.
    """
    session = Session(context)
    system = session.system
    kappa = system.derived.kappa
    resonance = memat.optics.find_resonance(system)
    middle = resonance if center is None else parse_frequency(center)
    omegas = np.linspace(middle - span * kappa, middle + span * kappa, points)
    scan = memat.optics.scan(system, omegas)
    slope = memat.optics.phase_slope(system)
    columns = dict(
        omega=_listed(scan['omega']),
        re_T=_listed(scan['T'].real),
        im_T=_listed(scan['T'].imag),
        abs_T2=_listed(scan['abs_T2']),
        phase=_listed(scan['phase']),
        lorentzian_T2=_listed(scan['lorentzian_T2']))
    header = list(columns)
    data = dict(
        resonance=float(resonance),
        kappa=kappa,
        free_spectral_range=float(memat.optics.free_spectral_range(system)),
        phase_slope=float(slope),
        phase_slope_kappa=float(slope * kappa),
        scan=columns,
        units=UNITS)
    rows = list(zip(*columns.values()))
    session.emit(data, header, rows, default='csv')


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Thermal
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

@main.command()
@click.pass_context
@click.option(
    '-m', '--method', type=click.Choice(['analytic', 'square', 'disc']),
    default='analytic', show_default=True,
    help='Closed-form circular membrane or finite differences.')
@click.option(
    '--grid', type=int, default=401, show_default=True,
    help='Finite-difference nodes per side (odd, at least 201).')
@click.option(
    '--kappa-th', type=float, metavar='W/(m·K)',
    help='Thermal conductivity overriding the configuration.')
@click.option(
    '--field', metavar='PATH',
    help='Dump the temperature field as csv into the given file.')
@config_output
@verbose_debug_quiet
def thermal(context, method, grid, kappa_th, field, **kwargs):
    """ Compute the laser heating of the membrane """
    session = Session(context)
    config = memat.thermal.config_from_system(session.system, kappa_th)
    if method == 'analytic':
        result = memat.thermal.analytic_circular(config)
    elif method == 'square':
        result = memat.thermal.fdm_square(config, grid)
    else:
        result = memat.thermal.fdm_disc(config, grid)
    data = result.export()
    data['units'] = UNITS
    if field:
        if 'r' in result.field:
            header = ['r', 'T']
            rows = zip(_listed(result.field['r']), _listed(result.field['T']))
        else:
            axis = result.field['x']
            header = ['x', 'y', 'T']
            rows = (
                [float(axis[i]), float(axis[j]), float(result.field['T'][i, j])]
                for i in range(len(axis)) for j in range(len(axis)))
        path = memat.utils.output_path(field)
        session.write(path, memat.utils.rows_to_csv(header, rows))
        session.manifest.outputs.append(path)
    session.emit(data)


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Dynamics
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

@main.command('steady-state')
@click.pass_context
@gamma_cool
@config_output
@verbose_debug_quiet
def steady_state(context, gamma_cool, **kwargs):
    """ Exact steady state of membrane and atoms """
    session = Session(context)
    cooling = _cooling(gamma_cool)
    result = memat.rates.full_rates(session.system)
    model = memat.dynamics.build_model(result, cooling)
    state = memat.dynamics.steady_state(model)
    n_m, n_at = memat.dynamics.occupations(state)
    modes = memat.dynamics.normal_modes(model)
    data = dict(
        gamma_cool=cooling.gamma_cool,
        n_m=n_m,
        n_at=n_at,
        cov=state.cov.tolist(),
        lyapunov_residual=memat.dynamics.lyapunov_residual(model, state.cov),
        uncertainty_margin=memat.dynamics.uncertainty_margin(state.cov),
        slowest_decay=min(decay for _, decay in modes),
        normal_modes=[list(mode) for mode in modes],
        units=UNITS)
    if cooling.gamma_cool > 0:
        estimate = memat.dynamics.adiabatic_cooling(
            result, cooling, session.system)
        data['adiabatic'] = estimate._asdict()
    session.emit(data)


@main.command()
@click.pass_context
@click.option(
    '--n-m', type=float, default=1.0, show_default=True,
    help='Initial thermal occupation of the membrane.')
@click.option(
    '--n-at', type=float, default=0.0, show_default=True,
    help='Initial thermal occupation of the atoms.')
@click.option(
    '--t-end', type=float, metavar='SECONDS',
    help='Final time, three exchange periods 6π/g by default.')
@click.option(
    '--points', type=int, default=301, show_default=True,
    help='Number of output times.')
@click.option(
    '--step', type=float, metavar='SECONDS',
    help='Integrator step, 1/(200·ρ(A)) by default.')
@gamma_cool
@config_output
@verbose_debug_quiet
def evolve(context, n_m, n_at, t_end, points, step, gamma_cool, **kwargs):
    """
    Time evolution of the occupations

    Csv columns: t, n_m, n_at.
    """
    session = Session(context)
    result = memat.rates.full_rates(session.system)
    model = memat.dynamics.build_model(result, _cooling(gamma_cool))
    if t_end is None:
        t_end = 6 * math.pi / result.g
    if points < 2 or t_end <= 0:
        raise ValidationError("Need at least two points and a positive t-end.")
    times = np.linspace(0, t_end, points)
    states = memat.dynamics.evolve(
        model, memat.dynamics.thermal_state(n_m, n_at), times, step=step)
    occupations = [memat.dynamics.occupations(state) for state in states]
    header = ['t', 'n_m', 'n_at']
    rows = [[float(t), m, a] for t, (m, a) in zip(times, occupations)]
    data = dict(
        t=_listed(times),
        n_m=[row[1] for row in rows],
        n_at=[row[2] for row in rows],
        uncertainty_margin=min(
            memat.dynamics.uncertainty_margin(state.cov) for state in states),
        units=UNITS)
    session.emit(data, header, rows, default='csv')


@main.command()
@click.pass_context
@click.option(
    '--omega-min', metavar='FREQUENCY',
    help='Lowest frequency, ω_m − 3·max(g, γ_m) by default.')
@click.option(
    '--omega-max', metavar='FREQUENCY',
    help='Highest frequency, ω_m + 3·max(g, γ_m) by default.')
@click.option(
    '--points', type=int, default=2001, show_default=True,
    help='Number of frequencies.')
@gamma_cool
@config_output
@verbose_debug_quiet
def spectrum(context, omega_min, omega_max, points, gamma_cool, **kwargs):
    """
    Fluctuation spectra of the quadratures

    Csv columns: omega, x_m, p_m, x_at, p_at.
    """
    session = Session(context)
    result = memat.rates.full_rates(session.system)
    model = memat.dynamics.build_model(result, _cooling(gamma_cool))
    width = 3 * max(result.g, result.gamma_m)
    low = (result.omega_m - width if omega_min is None
           else parse_frequency(omega_min))
    high = (result.omega_m + width if omega_max is None
            else parse_frequency(omega_max))
    if not low < high or points < 2:
        raise ValidationError("Invalid spectrum frequency range.")
    densities = memat.dynamics.spectrum(model, np.linspace(low, high, points))
    header = ['omega'] + list(memat.dynamics.BASIS)
    rows = list(zip(*[_listed(densities[name]) for name in header]))
    data = dict((name, _listed(densities[name])) for name in header)
    data['peaks_x_m'] = _listed(memat.dynamics.spectrum_peaks(
        densities['omega'], densities['x_m'])[:2])
    data['units'] = UNITS
    session.emit(data, header, rows, default='csv')


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Sweeps
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def _axis(name, low, high, points, scale):
    return memat.sweep.SweepAxis(
        name=name, min=low, max=high, points=points, scale=scale)


def _emit_sweep(session, result, field, json_summary):
    """ Write sweep csv and the optional optimum summary """
    optimum = result.optimum(field)
    summary = dict(
        optimum=optimum.export(),
        cells=len(result.records),
        failures=len(result.failures))
    if session.format_for('csv') == 'csv':
        session.emit(
            summary, result.header(), list(result.rows()), default='csv')
    else:
        session.emit(dict(
            summary, records=[record.export() for record in result.records]))
    if json_summary:
        echo(memat.utils.dict_to_json(summary), nl=False, err=True)
    session.verbose('optimum', optimum.values, shift=0)


@main.command('sweep-coherent')
@click.pass_context
@click.option(
    '--fmin', type=float, default=50.0, show_default=True,
    help='Lowest finesse.')
@click.option(
    '--fmax', type=float, default=1000.0, show_default=True,
    help='Highest finesse.')
@click.option(
    '--points', type=int, default=60, show_default=True,
    help='Number of finesse values.')
@click.option(
    '--scale', type=click.Choice(memat.sweep.SCALES), default='log',
    show_default=True, help='Finesse axis scale.')
@click.option(
    '--json-summary', is_flag=True,
    help='Show the optimum record as json on the error output.')
@config_output
@workers
@verbose_debug_quiet
def sweep_coherent(
        context, fmin, fmax, points, scale, json_summary, workers, **kwargs):
    """ Decoherence to coupling ratios versus finesse """
    session = Session(context)
    result = memat.sweep.sweep_coherent(
        session.system, _axis('finesse', fmin, fmax, points, scale),
        workers=workers)
    _emit_sweep(session, result, 'ratio_total', json_summary)


@main.command('sweep-cooling')
@click.pass_context
@click.option(
    '--fmin', type=float, default=50.0, show_default=True,
    help='Lowest finesse.')
@click.option(
    '--fmax', type=float, default=1000.0, show_default=True,
    help='Highest finesse.')
@click.option(
    '--fpoints', type=int, default=60, show_default=True,
    help='Number of finesse values.')
@click.option(
    '--gmin', default='1e4', show_default=True, metavar='RATE',
    help='Lowest cooling rate.')
@click.option(
    '--gmax', default='1e6', show_default=True, metavar='RATE',
    help='Highest cooling rate.')
@click.option(
    '--gpoints', type=int, default=60, show_default=True,
    help='Number of cooling rates.')
@click.option(
    '--json-summary', is_flag=True,
    help='Show the optimum record as json on the error output.')
@config_output
@workers
@verbose_debug_quiet
def sweep_cooling(
        context, fmin, fmax, fpoints, gmin, gmax, gpoints, json_summary,
        workers, **kwargs):
    """ Steady occupation versus finesse and cooling rate """
    session = Session(context)
    result = memat.sweep.sweep_cooling(
        session.system,
        _axis('finesse', fmin, fmax, fpoints, 'log'),
        _axis('gamma_cool', parse_frequency(gmin), parse_frequency(gmax),
              gpoints, 'log'),
        workers=workers)
    _emit_sweep(session, result, 'n_ss_exact', json_summary)


def _bounds(bounds):
    """ Convert NAME=MIN:MAX items into the bounds dictionary """
    result = dict()
    for item in bounds:
        try:
            name, limits = item.split('=', 1)
            low, high = limits.split(':', 1)
        except ValueError:
            raise ValidationError(
                f"Invalid bound '{item}' (use name=min:max).")
        result[name.strip()] = (parse_frequency(low), parse_frequency(high))
    return result


@main.command()
@click.pass_context
@click.option(
    '--objective', type=click.Choice(sorted(memat.sweep.OBJECTIVES)),
    default='min_total_ratio', show_default=True,
    help='Quantity to minimize.')
@click.option(
    '-b', '--bound', 'bounds', metavar='NAME=MIN:MAX', multiple=True,
    help='Search bounds of a parameter, e.g. finesse=50:1000. Equal '
         'limits pin the parameter.')
@click.option(
    '-g', '--gamma-cool', metavar='RATE',
    help='Fixed cooling rate when not optimized.')
@config_output
@workers
@verbose_debug_quiet
def optimize(context, objective, bounds, gamma_cool, workers, **kwargs):
    """ Find parameters minimizing decoherence or occupation """
    session = Session(context)
    optimum = memat.sweep.optimize(
        objective,
        bounds=_bounds(bounds) or None,
        system=session.system,
        gamma_cool=None if gamma_cool is None else parse_frequency(gamma_cool),
        workers=workers)
    session.verbose('optimum', optimum.record.values, shift=0)
    session.emit(optimum.export())


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Reproduce
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

@main.command()
@click.pass_context
@click.argument(
    'names', nargs=-1, metavar='[RECIPE]...',
    type=click.Choice(
        sorted(memat.reproduce.RECIPES) + sorted(memat.reproduce.ALIASES)
        + ['all']))
@config_output
@workers
@verbose_debug_quiet
def reproduce(context, names, workers, **kwargs):
    """
    Run reproduction recipes and check acceptance bands

    Available recipes are reference, ratios and cooling (all by default),
    table1, fig3 and fig4 are accepted as their aliases.
    Exit code is 1 when any band fails.
    """
    session = Session(context)
    passed = True
    report = dict()
    for name in memat.reproduce.resolve(names):
        recipe = memat.reproduce.RECIPES[name](
            session.system, workers=workers, parent=session)
        passed = recipe.go() and passed
        report[name] = recipe.export()
    if session.opt('out') or session.opt('format_'):
        session.emit(dict(passed=passed, recipes=report))
    raise SystemExit(0 if passed else 1)
