"""Shared error vocabulary for rate region calculations.

Precondition failures are keyed by the Check enum so that callers (the CLI in
particular) can report which guard failed without parsing message text.
"""

from enum import auto

from calculation._compat import StrEnum


class Check(StrEnum):
    """Enum for named precondition checks."""
    NOT_INVERTIBLE = auto()
    NOT_PARTIALLY_INVERTIBLE = auto()
    NOT_EVE_DEGRADED = auto()
    NOT_FUSION_DEGRADED = auto()
    INADMISSIBLE = auto()
    ALPHABET_MISMATCH = auto()
    MARKOV_VIOLATION = auto()
    MISSING_DISTORTION = auto()
    INFEASIBLE_CARDINALITY = auto()
    BAD_WEIGHTS = auto()
    ENUMERATION_GUARD = auto()
    BAD_EPSILON = auto()
    BAD_ARGUMENT = auto()
    Q_CARDINALITY = auto()


ERROR_MESSAGES = {
    Check.NOT_INVERTIBLE: 'not invertible: H(X1,X2|f,Y) > 0.',
    Check.NOT_PARTIALLY_INVERTIBLE: 'not partially invertible with respect '
        'to the selected transmitter.',
    Check.NOT_EVE_DEGRADED: 'not eve-degraded: I(X;Z|Y) > 0.',
    Check.NOT_FUSION_DEGRADED: 'not fusion-degraded: I(X;Y|Z) > 0.',
    Check.INADMISSIBLE: 'aux not admissible: H(f|U1,U2,Y,Q) > 0.',
    Check.ALPHABET_MISMATCH: 'auxiliary channels do not match the model '
        'alphabets.',
    Check.MARKOV_VIOLATION: 'Markov chain violated beyond tolerance.',
    Check.MISSING_DISTORTION: 'model has no distortion metric.',
    Check.INFEASIBLE_CARDINALITY: 'auxiliary cardinality outside the '
        'permitted range.',
    Check.BAD_WEIGHTS: 'scalarization weights must be nonnegative, not all '
        'zero, and match the objective count.',
    Check.ENUMERATION_GUARD: 'enumeration guard exceeded.',
    Check.BAD_EPSILON: 'epsilon must be positive.',
    Check.BAD_ARGUMENT: 'invalid argument.',
    Check.Q_CARDINALITY: 'time-sharing variable limited to |Q| <= 2.',
}


class PreconditionError(ValueError):
    """A named precondition of an evaluation does not hold."""

    def __init__(self, check, detail=''):
        self.check = Check(check)
        self.detail = detail
        message = ERROR_MESSAGES[self.check]
        super().__init__(f'{message} {detail}'.strip())


class ConsistencyError(ArithmeticError):
    """An information quantity came out negative beyond tolerance."""


class ModelFileError(ValueError):
    """A model or auxiliary file could not be parsed or validated.

    Args:
        path: offending file path
        message: diagnostic text
        line: 1-based line number the diagnostic is anchored to, if known
    """

    def __init__(self, path, message, line=None):
        self.path = str(path)
        self.line = line
        anchor = f'{self.path}:{line}' if line else self.path
        super().__init__(f'{anchor}: {message}')
