# coding: utf-8

""" Common command line options """

import click

# Verbose, debug and quiet output
verbose_debug_quiet = [
    click.option(
        '-v', '--verbose', is_flag=True, multiple=True,
        help='Show more details. Use multiple times to raise verbosity.'),
    click.option(
        '-d', '--debug', is_flag=True, multiple=True,
        help='Provide debugging information. Repeat to see more details.'),
    click.option(
        '-q', '--quiet', is_flag=True,
        help='Be quiet. Exit code is just enough for me.'),
    ]

# System configuration
config_set = [
    click.option(
        '-c', '--config', metavar='PATH',
        help='Configuration file (json or yaml) merged over the reference parameters.'),
    click.option(
        '-s', '--set', 'overrides', metavar='KEY=VALUE|@FILE', multiple=True,
        help='Override a parameter using the section.field=value form, '
             'e.g. cavity.finesse=450. The "@" prefix marks a file to '
             'load. Can be specified multiple times, flags win.'),
    ]

# Output destination and format
out_format = [
    click.option(
        '-o', '--out', metavar='PATH',
        help="Output file, standard output by default or for '-'. Relative "
             "paths are placed under $MEMAT_OUTPUT_DIR when set."),
    click.option(
        '-f', '--format', 'format_', type=click.Choice(['json', 'csv', 'yaml']),
        help='Output format.'),
    ]

# Worker pool size
workers = [
    click.option(
        '-w', '--workers', type=int, metavar='N',
        help='Number of worker processes, available parallelism by default.'),
    ]

# Atomic laser cooling
gamma_cool = [
    click.option(
        '-g', '--gamma-cool', metavar='RATE', default='2.2e5',
        show_default=True,
        help='Atomic cooling rate in s⁻¹ (unit suffixes like 35kHz are '
             'multiplied by 2π).'),
    ]
