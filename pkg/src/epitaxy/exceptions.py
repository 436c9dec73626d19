"""Error types shared across the package.

Plain ``ValueError`` is used for precondition and configuration problems;
the classes here mark failures that callers may want to handle separately
(the CLI maps them to distinct exit codes).
"""


class CertificateError(Exception):
    """A solve was requested for data whose certificate did not pass."""


class NumericalError(Exception):
    """A computation produced an unusable result (overflow, divergence, ...)."""


class PicardConvergenceError(NumericalError):
    """Fixed-point iteration hit the iteration cap; carries the diagnostics."""

    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
