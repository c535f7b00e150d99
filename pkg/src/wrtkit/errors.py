"""Exception types; the CLI maps them to exit codes."""


class WrtkitError(Exception):
    exit_code = 1


class DataFormatError(WrtkitError, ValueError):
    exit_code = 3


class NumericalError(WrtkitError, ArithmeticError):
    exit_code = 4


class DegenerateWeightError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message, sigma=None):
        super().__init__(message)
        self.sigma = sigma
