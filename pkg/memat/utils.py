# coding: utf-8

""" Membrane Atoms Utilities """

from click import style, echo

import datetime
import math
import hashlib
import fmf.utils
import json
import yaml
import csv
import io
import os
import re

log = fmf.utils.Logging('memat').logger

# Hierarchy indent
INDENT = 4

# Output flags where a parent's yes wins over the child's no
OUTPUT_FLAGS = ('verbose', 'debug', 'quiet')

# Environment variable with the default output directory
OUTPUT_DIR_VARIABLE = 'MEMAT_OUTPUT_DIR'

# Cycle units accepted for frequencies (multiplied by 2π)
CYCLE_UNITS = {
    'Hz': 1.0,
    'kHz': 1e3,
    'MHz': 1e6,
    'GHz': 1e9,
    'THz': 1e12,
    }

# Angular and rate units taken as they are
PLAIN_UNITS = ['rad/s', '/s']


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Common
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

class Common(object):
    """
    Console reporting shared by the command session and the recipes

    Objects form a parent chain (session, recipe) which controls the
    message indentation. Output levels follow the --verbose, --debug
    and --quiet options of the click context, every message is also
    sent to the memat logger.
    """

    # Command line context
    _context = None

    def __init__(self, parent=None, name=None, context=None):
        """ Initialize name and relation with the parent object """
        self.name = name or self.__class__.__name__.lower()
        self.parent = parent

        if context:
            self._context = context

    def __str__(self):
        """ Name is the default string representation """
        return self.name

    @classmethod
    def _save_context(cls, context):
        """ Save provided command line context for future use """
        cls._context = context

    def opt(self, option, default=None):
        """
        Get an option from the command line context

        Checks also parent options. For the verbose, debug and quiet
        flags parent's True wins over child's False.
        """
        local = default
        if self._context is not None:
            local = self._context.params.get(option, default)
        parent = self.parent.opt(option) if self.parent else None
        if option not in OUTPUT_FLAGS:
            return parent if parent is not None else local
        chosen = parent or local
        if option == 'quiet':
            return bool(chosen)
        # Repeated flags arrive as a tuple
        return len(chosen) if isinstance(chosen, tuple) else (chosen or 0)

    def _level(self):
        """ Depth in the parent chain, the session itself is -1 """
        return -1 if self.parent is None else self.parent._level() + 1

    def _indent(self, key, value=None, color=None, shift=0):
        """ Indent message according to the object hierarchy """
        level = max(self._level() + shift, 0)
        indent = ' ' * INDENT * level
        deeper = ' ' * INDENT * (level + 1)
        # Colorize
        if color is not None:
            key = style(key, fg=color)
        # Handle key only
        if value is None:
            message = key
        # Handle key + value
        else:
            # Multiline content indented deeper
            if isinstance(value, str):
                lines = value.splitlines()
                if len(lines) > 1:
                    value = ''.join([f"\n{deeper}{line}" for line in lines])
            message = f'{key}: {value}'
        return indent + message

    def info(self, key, value=None, color=None, shift=0, err=False):
        """ Show a message unless in quiet mode """
        log.info(self._indent(key, value, shift=shift))
        if not self.opt('quiet'):
            echo(self._indent(key, value, color, shift), err=err)

    def warn(self, message, shift=0):
        """ Show a yellow warning message on info level, send to stderr """
        self.info('warn', message, color='yellow', shift=shift, err=True)

    def fail(self, message, shift=0):
        """ Show a red failure message on info level, send to stderr """
        self.info('fail', message, color='red', shift=shift, err=True)

    def verbose(
        self, key, value=None, color=None, shift=0, level=1, err=True):
        """ Show message if in requested verbose mode level """
        if self.opt('verbose') >= level:
            echo(self._indent(key, value, color, shift), err=err)

    def debug(self, key, value=None, color=None, shift=1, level=1, err=True):
        """ Show message if in requested debug mode level """
        log.debug(self._indent(key, value, shift=shift))
        if self.opt('debug') >= level:
            echo(self._indent(key, value, color, shift), err=err)

    def read(self, path):
        """ Read a file and return its content """
        self.debug(f"Read file '{path}'.", level=2)
        try:
            with open(path, encoding='utf-8') as data:
                return data.read()
        except FileNotFoundError:
            raise FileError(f"File not found: '{path}'.")
        except OSError as error:
            raise FileError(f"Failed to read '{path}'.\n{error}")

    def write(self, path, data):
        """ Write data to the file, create parent directories if needed """
        self.debug(f"Write file '{path}'.", level=2)
        directory = os.path.dirname(path)
        try:
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, 'w', encoding='utf-8') as target:
                target.write(data)
        except OSError as error:
            raise FileError(f"Failed to write '{path}'.\n{error}")


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Exceptions
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

class GeneralError(Exception):
    """ General error """
    exit_code = 1

class FileError(GeneralError):
    """ File handling error """

class ValidationError(GeneralError):
    """ Invalid parameters or configuration """

class DetuningSignError(ValidationError):
    """ Red detuning would turn the atomic lattice into a repulsive one """

class OutOfDomainError(ValidationError):
    """ Position or parameter outside the supported domain """

class DivisionDomainError(ValidationError):
    """ Estimate undefined for the given parameters """

class NumericalError(GeneralError):
    """ Numerical method failed """
    exit_code = 2

class DegenerateCavityError(NumericalError):
    """ Cavity response denominator vanished """

class ConvergenceError(NumericalError):
    """ Iterative solver did not converge """

class UnstableModelError(NumericalError):
    """ Drift matrix has an eigenvalue with non-negative real part """

class SingularSystemError(NumericalError):
    """ Linear system could not be solved reliably """

class StepSizeError(NumericalError):
    """ Requested integration step above the stability bound """

class NoFeasiblePointError(NumericalError):
    """ No valid point found within the search bounds """


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
#  Utilities
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

def parse_value(text):
    """
    Convert command line text into a value

    JSON literals are used when possible (numbers, null, true, false,
    quoted strings), 'inf' and 'nan' are recognized as floats,
    anything else is kept as a plain string.
    """
    try:
        return json.loads(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_frequency(text):
    """
    Convert frequency with an optional unit suffix into rad/s

    Plain numbers, 'rad/s' and '/s' are taken as they are, cycle units
    (Hz, kHz, MHz, GHz, THz) are multiplied by 2π.
    """
    if isinstance(text, (int, float)):
        return float(text)
    text = text.strip()
    for unit in PLAIN_UNITS:
        if text.endswith(unit):
            text = text[:-len(unit)]
            break
    else:
        for unit in sorted(CYCLE_UNITS, key=len, reverse=True):
            if text.endswith(unit):
                number = text[:-len(unit)].strip()
                try:
                    return 2 * math.pi * float(number) * CYCLE_UNITS[unit]
                except ValueError:
                    raise ValidationError(f"Invalid frequency '{text}'.")
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"Invalid frequency '{text}'.")


def _add_override(result, override):
    """
    Add a single KEY=VALUE pair into result dictionary

    Keys use the dotted 'section.field' notation.
    """
    matched = re.match(r"^\s*([\w.]+)\s*=(.*)$", override)
    if not matched:
        raise ValidationError(
            f"Invalid override '{override}' (use section.field=value).")
    key, value = matched.groups()
    if '.' not in key:
        raise ValidationError(
            f"Invalid override key '{key}' (use section.field=value).")
    result[key] = parse_value(value.strip())


def overrides_to_dict(overrides):
    """
    Convert dotted overrides into a dictionary

    Overrides may be specified in the following two ways:

    * section.field=VALUE pairs
    * @overrides.json or @overrides.yaml

    A file reference is loaded as a document with sections and merged
    in the dotted form.
    """
    if overrides is None:
        return dict()
    if not isinstance(overrides, (list, tuple)):
        overrides = [overrides]
    result = dict()
    for override in overrides:
        if override.startswith('@'):
            document = load_document(override[1:])
            for section, fields in document.items():
                if not isinstance(fields, dict):
                    raise ValidationError(
                        f"Section '{section}' in '{override[1:]}' is not "
                        f"a mapping.")
                for key, value in fields.items():
                    result[f'{section}.{key}'] = value
        else:
            _add_override(result, override)
    return result


def load_document(path):
    """ Load JSON (or YAML, by file extension) document from the path """
    try:
        with open(path, 'rb') as source:
            content = source.read()
    except FileNotFoundError:
        raise FileError(f"Config file not found: '{path}'.")
    except OSError as error:
        raise FileError(f"Failed to read '{path}'.\n{error}")
    try:
        if path.endswith(('.yaml', '.yml')):
            data = yaml.safe_load(content)
        else:
            data = json.loads(content.decode('utf-8'))
    except (ValueError, yaml.YAMLError) as error:
        raise ValidationError(f"Invalid config file '{path}'.\n{error}")
    if not isinstance(data, dict):
        raise ValidationError(f"Config file '{path}' is not a mapping.")
    return data


def dict_to_json(data, sort=True):
    """ Convert dictionary into indented json """
    return json.dumps(data, indent=2, sort_keys=sort) + '\n'


def dict_to_yaml(data, width=None, sort=False):
    """ Convert dictionary into yaml """
    output = io.StringIO()
    yaml.safe_dump(
        data, output, sort_keys=sort,
        encoding='utf-8', allow_unicode=True,
        width=width, indent=4, default_flow_style=False)
    return output.getvalue()


def rows_to_csv(header, rows):
    """ Convert header and rows into csv text """
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([
            repr(float(item)) if isinstance(item, float) else item
            for item in row])
    return output.getvalue()


def output_path(path):
    """
    Resolve output path

    Relative paths are placed under the directory given by the
    MEMAT_OUTPUT_DIR environment variable when it is set.
    """
    if path is None or path == '-':
        return None
    directory = os.environ.get(OUTPUT_DIR_VARIABLE)
    if directory and not os.path.isabs(path):
        return os.path.join(directory, path)
    return path


def config_hash(data):
    """ Sha256 hex digest of the config bytes or canonical document """
    if isinstance(data, dict):
        data = json.dumps(data, sort_keys=True).encode('utf-8')
    elif isinstance(data, str):
        data = data.encode('utf-8')
    return hashlib.sha256(data).hexdigest()


class Manifest(object):
    """ Run manifest describing how an output was produced """

    _keys = ['config_sha256', 'version', 'command', 'flags', 'timestamp',
             'outputs']

    def __init__(self, config, command, flags):
        import memat
        self.config_sha256 = config_hash(config)
        self.version = memat.__version__
        self.command = command
        self.flags = dict(
            (key, list(value) if isinstance(value, tuple) else value)
            for key, value in sorted(flags.items()))
        self.timestamp = datetime.datetime.now(
            datetime.timezone.utc).isoformat(timespec='seconds')
        self.outputs = []

    def export(self):
        """ Export manifest into dictionary """
        return dict((key, getattr(self, key)) for key in self._keys)


def verdict(decision, comment=None, good='pass', bad='fail', problem='warn'):
    """
    Return verdict in green or red based on the decision

    1 or True .... good (green)
    0 or False ... bad (red)
    otherwise .... problem (yellow)
    """

    if decision is True or decision == 1:
        text = style(good, fg='green')
    elif decision is False or decision == 0:
        text = style(bad, fg='red')
    else:
        text = style(problem, fg='yellow')
    if comment:
        return text + ' ' + comment
    else:
        return text


def format(key, value=None, unit=None, indent=12, key_color='green'):
    """
    Align a quantity with its name for the human readable tables

    Floats use five significant digits, sequences are shown as a
    bracketed vector and multi-line text continues under the value
    column. The optional unit is appended after a space.
    """
    padding = (indent + 1) * ' '
    output = f'{str(key).rjust(indent)} '
    if key_color:
        output = style(output, fg=key_color)
    if value is None:
        return output.rstrip()
    if isinstance(value, bool):
        text = 'yes' if value else 'no'
    elif isinstance(value, float):
        text = f'{value:.5g}'
    elif isinstance(value, (list, tuple)):
        text = '[' + ', '.join(
            f'{item:.5g}' if isinstance(item, float) else str(item)
            for item in value) + ']'
    else:
        text = f'\n{padding}'.join(str(value).rstrip().splitlines())
    return output + text + (f' {unit}' if unit else '')
