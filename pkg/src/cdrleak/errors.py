"""Exception types shared across the package.

Every error carries a short ``code`` (the class name) used as the
``ERR:<code>`` marker in CSV output and for CLI exit-code mapping.
"""


class CdrleakError(Exception):
    """Base class for all package errors."""

    @property
    def code(self):
        return type(self).__name__


class ConfigError(CdrleakError):
    """Malformed configuration input: unknown key, missing field, bad type."""


class DomainError(CdrleakError):
    """Evaluation requested outside a function's declared domain."""


class DamageCollapse(CdrleakError):
    """Damage factor reached zero or below: damages destroyed all output."""


class NoBracket(CdrleakError):
    """Equilibrium residual has no sign change on the search interval."""


class MaxIterations(CdrleakError):
    """Iteration budget exhausted before reaching the requested tolerance."""


class SingularDerivative(CdrleakError):
    """Leakage-rate denominator vanished; response derivatives undefined."""


class NoInteriorOptimum(CdrleakError):
    """Best point sits on the search boundary; interior conditions invalid."""


class NoConvergence(CdrleakError):
    """Fixed-point solve did not reach the residual tolerance."""


class NonPhysical(CdrleakError):
    """Solution left the physically meaningful region."""


class RejectionLimit(CdrleakError):
    """Rejection sampling failed to produce a valid scenario."""


class AssertionFailure(CdrleakError):
    """A case classification that must hold was violated; signals a solver bug."""
