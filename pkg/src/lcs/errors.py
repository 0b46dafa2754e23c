"""Exception hierarchy.

``ValidationError`` covers malformed or inconsistent input (CLI exit code 2);
``NumericalError`` covers numerical defects detected during a computation
(CLI exit code 3).
"""


class LCSError(Exception):
    pass


class ValidationError(LCSError, ValueError):
    pass


class DimensionError(ValidationError):
    pass


class NotDerivationError(ValidationError):
    pass


class NotSubalgebraError(ValidationError):
    pass


class NumericalError(LCSError, ArithmeticError):
    pass


class DecompositionError(NumericalError):
    pass


class LogDomainError(NumericalError):
    pass


class IntegrationError(NumericalError):
    def __init__(self, message, control=None):
        super().__init__(message)
        self.control = control


class EvidenceMismatchError(ValidationError):
    pass
