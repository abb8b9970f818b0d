import sys
import logging

from dtameta.constant.application import (
    EXIT_CONVERGENCE_FAILURE,
    EXIT_NUMERIC_ERROR,
    EXIT_VALIDATION_ERROR,
)


def error_message_detail(error: Exception, error_detail: sys) -> str:
    """
    Message naming the script and line where ``error`` was raised, logged at ERROR.

    Walks to the innermost traceback frame of the exception being handled; without one
    the message is just ``str(error)``.
    """
    _, _, exc_tb = error_detail.exc_info()

    # raised outside an except block: no traceback to point at
    if exc_tb is None:
        error_message = str(error)
    else:
        while exc_tb.tb_next is not None:
            exc_tb = exc_tb.tb_next
        file_name = exc_tb.tb_frame.f_code.co_filename
        line_number = exc_tb.tb_lineno
        error_message = f"Error occurred in python script: [{file_name}] at line number [{line_number}]: {str(error)}"

    logging.error(error_message)

    return error_message


class DTAMetaException(Exception):
    """
    Base exception of the meta-analysis package.

    Every subclass carries the process exit code the command line reports for it.
    """
    exit_code: int = EXIT_NUMERIC_ERROR

    def __init__(self, error_message, error_detail: sys = sys):
        """
        :param error_message: A string (or a caught exception) describing the error.
        :param error_detail: The sys module to access traceback details.
        """
        super().__init__(str(error_message))

        # wrapping keeps the exit code of the original failure
        if isinstance(error_message, DTAMetaException):
            self.exit_code = error_message.exit_code

        self.error_message = error_message_detail(error_message, error_detail)

    def __str__(self) -> str:
        return self.error_message


class ValidationError(DTAMetaException):
    """Malformed input file or invalid study counts."""
    exit_code = EXIT_VALIDATION_ERROR


class DomainError(DTAMetaException, ValueError):
    """A parameter or argument lies outside the domain of a family or margin."""
    exit_code = EXIT_VALIDATION_ERROR


class ConvergenceError(DTAMetaException):
    exit_code = EXIT_CONVERGENCE_FAILURE


class NumericError(DTAMetaException, ArithmeticError):
    """Overflow or a non-finite likelihood evaluation."""
    exit_code = EXIT_NUMERIC_ERROR


class DegenerateComparisonError(NumericError):
    """Two models give identical per-study contributions, so Vuong's s is zero."""
