"""Exception hierarchy for the dnls package.

Every error raised on purpose by the library derives from :class:`DNLSError`.
Errors that mean "the numbers went bad" also derive from
:class:`NumericalFailure` so the CLI can map them to a distinct exit code.
"""

from __future__ import annotations


class DNLSError(Exception):
    """Base class for all library errors."""


class NumericalFailure(DNLSError):
    """Base class for failures of a numerical procedure."""


class InputError(DNLSError, ValueError):
    """Malformed or inconsistent input data."""


class ZeroSpectralParameter(InputError):
    """The spectral parameter z = 0 was supplied to a transfer matrix."""


class SpectralDomainError(InputError):
    """A Jost solution was requested outside its region of analyticity."""


class AdmissibilityViolation(InputError):
    """A factor such as 1 - q_n r_n or 1 + q_n r_{n+1} vanishes."""


class SingularTransferMatrix(NumericalFailure):
    """A transfer matrix is singular on the forward recursion path."""


class NonDecayingSolution(NumericalFailure):
    """Jost asymptotics did not settle outside the support window."""


class GridTooCoarse(NumericalFailure):
    """Fourier coefficients alias on the chosen spectral grid."""


class DivisionByZeroFactor(NumericalFailure):
    """A product factor in the (u, s) -> (q, r) map vanished."""


class SingularFactor(NumericalFailure):
    """A factor 1/(1 - 1/z^2) was requested at z = +-1."""


class DegenerateDenominator(NumericalFailure):
    """A recovery formula has a vanishing denominator."""


class MissingOrder(InputError):
    """The leading residue of a bound-state block is zero."""


class NoConvergence(NumericalFailure):
    """An iterative procedure did not converge."""


class MultiplePoleDetected(NumericalFailure):
    """A pole of the transmission coefficient appears to be non-simple."""


class InsufficientTail(NumericalFailure):
    """A kernel tail sum did not converge inside the stored range."""


class SingularMarchenkoOperator(NumericalFailure):
    """The truncated Marchenko operator is not invertible."""


class IllConditioned(NumericalFailure):
    """A linear solve left a residual above tolerance."""


class SingularUn(NumericalFailure):
    """A closed-form soliton matrix U_n (or a relative) is singular."""
