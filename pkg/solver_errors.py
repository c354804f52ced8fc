#!/usr/bin/env python3
"""
Solver Errors Module
Exception hierarchy shared by the field, semigroup, Picard and continuation layers
"""

from typing import List, Optional


class SolverError(Exception):
    """Base class for every error raised by the solver stack"""


class InvalidParameterError(SolverError, ValueError):
    """A numeric argument is outside its admissible range"""


class NonFiniteFieldError(SolverError):
    """A field contains NaN or Inf values"""

    def __init__(self, message: str, bad_count: int = 0):
        super().__init__(message)
        self.bad_count = bad_count


class SymmetryViolationError(SolverError):
    """A spectrum is not conjugate-symmetric within tolerance"""

    def __init__(self, message: str, relative_residue: float):
        super().__init__(message)
        self.relative_residue = relative_residue


class NonConvergenceError(SolverError):
    """Picard iteration hit max_iter before reaching the tolerance"""

    def __init__(self, message: str, diff_history: Optional[List[float]] = None, t0: float = 0.0):
        super().__init__(message)
        self.diff_history = list(diff_history or [])
        self.t0 = t0


class BlowupSuspectedError(SolverError):
    """The continuation loop saw a sup-norm above cap or a degenerate window"""

    def __init__(self, diagnosis):
        super().__init__(diagnosis.message)
        self.diagnosis = diagnosis


class ConfigError(SolverError, ValueError):
    """Run configuration could not be parsed or validated"""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class SnapshotFormatError(SolverError):
    """A field snapshot file has a bad header or payload size"""


class ReportFormatError(SolverError):
    """A report or manifest CSV lacks a column or holds an unparsable cell"""
