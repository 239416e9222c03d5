"""Define content and exit codes for messages reported to the user."""

import functools
from enum import IntEnum

import click

from calculation.errors import (
    ConsistencyError, ModelFileError, PreconditionError)

WROTE_ROWS_MESSAGE = 'Wrote %d rows to %s.'
ERROR_PREFIX = 'Error: '


class ExitCodes(IntEnum):
    """Enum for process exit codes."""
    OK = 0
    FILE_ERROR = 1
    PRECONDITION = 2
    CONSISTENCY = 3


def _notification(message):
    # Generic notification to stderr so stdout stays machine-readable
    click.echo(message, err=True)

def written_notification(n_rows, path):
    """Report rows written to an output file.

    Args:
        n_rows: number of rows written
        path: output file path
    """

    _notification(WROTE_ROWS_MESSAGE % (n_rows, path))

def error_notification(error):
    """Report an error and return the matching exit code.

    Args:
        error: exception raised by a subcommand
    Returns:
        ExitCodes member for the error type
    """

    match error:
        case ModelFileError() | OSError():
            code = ExitCodes.FILE_ERROR
        case PreconditionError():
            code = ExitCodes.PRECONDITION
        case ConsistencyError():
            code = ExitCodes.CONSISTENCY
        case _:
            raise ValueError(f'No exit code for {type(error).__name__}.')

    _notification(ERROR_PREFIX + str(error))
    return code

def handle_errors(func):
    """Decorate a subcommand so known errors exit with their code."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ModelFileError, OSError, PreconditionError,
                ConsistencyError) as e:
            raise SystemExit(int(error_notification(e))) from e

    return wrapper
