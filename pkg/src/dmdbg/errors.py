"""Exception hierarchy shared by the library and the command line.

Each exception class carries the process exit code and a short machine
readable ``code`` that the CLI prints on its final line.
"""

from __future__ import annotations


class DmdBgError(Exception):
    """Base class for all errors raised by :mod:`dmdbg`."""

    exit_code = 1
    code = "error"


class UsageError(DmdBgError, ValueError):
    exit_code = 2
    code = "usage"


class FrameIOError(DmdBgError, OSError):
    exit_code = 3
    code = "io"


class NumericalError(DmdBgError, ArithmeticError):
    exit_code = 4
    code = "numerical"


class DegenerateInputError(NumericalError):
    """The snapshot block has no singular value above the rank tolerance."""

    code = "degenerate-input"


class NoBackgroundModeError(NumericalError):
    code = "no-background-mode"


class DataShapeError(DmdBgError, ValueError):
    exit_code = 5
    code = "data-shape"


class DimensionError(DataShapeError):
    code = "dimension"


class SequenceTooShortError(DataShapeError):
    code = "sequence-too-short"
