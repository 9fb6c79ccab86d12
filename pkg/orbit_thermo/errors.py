"""
Exception hierarchy for orbit_thermo.
All domain errors derive from ValueError so callers can treat them as bad input.
"""

from typing import Optional


class OrbitThermoError(ValueError):
    """Base class for every error raised by the package."""


class DimensionMismatch(OrbitThermoError):
    """Vector length does not match the algebra or cone dimension."""


class InvalidAlgebra(OrbitThermoError):
    """Structure constants or decomposition metadata violate an invariant."""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InvalidParameter(OrbitThermoError):
    """A family or command parameter is out of range."""


class AlgebraMismatch(OrbitThermoError):
    """Objects built over different algebras were combined."""


class SingularMatrix(OrbitThermoError):
    """Matrix is not invertible."""


class NumericalDegeneracy(OrbitThermoError):
    """Spectral data too ill-conditioned to split reliably."""


class NotACartan(OrbitThermoError):
    """Proposed Cartan subalgebra is not abelian or not self-centralizing."""


class NotCompactlyEmbedded(OrbitThermoError):
    """Some Cartan basis element is not elliptic."""


class MissingCartanMeta(OrbitThermoError):
    """The algebra carries no Cartan subalgebra in its metadata."""


class NoRegularElement(OrbitThermoError):
    """No regular element was found in the Cartan subalgebra."""


class ClosureOverflow(OrbitThermoError):
    """Weyl group closure exceeded the configured limit."""


class DimensionTooLarge(OrbitThermoError):
    """Cone conversion requested above the supported ambient dimension."""


class NotRegular(OrbitThermoError):
    """Point is not regular for the Duistermaat-Heckman sum."""


class NotAdmissibleFunctional(OrbitThermoError):
    """Functional is not in the dual of C_min."""


class OutsideCmax(OrbitThermoError):
    """Point is not in the interior of C_max."""


class DivergentNeighborhood(OrbitThermoError):
    """Partition function diverges inside the finite-difference stencil."""


class DivergentPoint(OrbitThermoError):
    """Partition function diverges at a requested point."""


class NoDecayDirection(OrbitThermoError):
    """Hamiltonian is not bounded below along some direction of the orbit."""
