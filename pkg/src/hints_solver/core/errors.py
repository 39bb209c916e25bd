"""Exception hierarchy shared by every layer of hints-solver."""


class HintsError(Exception):
    """Root of all hints-solver errors."""


class NumericalFailure(HintsError):
    """A computation ran but produced an unusable (non-finite or exploding) result."""


# linalg


class NonFiniteValue(HintsError, ValueError):
    """An input array holds NaN or Inf."""


class DimensionMismatch(HintsError, ValueError):
    """Operand shapes do not agree."""


class SingularMatrix(HintsError, ArithmeticError):
    """A pivot fell below the partial-pivoting threshold."""


class NotSymmetric(HintsError, ValueError):
    """A matrix expected to be symmetric is not, within tolerance."""


class NoConvergence(HintsError, ArithmeticError):
    """An iterative kernel exhausted its sweep budget."""


# discretization


class NonPositiveCoefficient(HintsError, ValueError):
    """A Poisson diffusion coefficient is not strictly positive."""


class DomainMismatch(HintsError, ValueError):
    """Two grids do not cover the same domain."""


# sampling


class RejectionBudgetExceeded(HintsError, RuntimeError):
    """Too many consecutive GRF draws violated the lower bound on k."""


class CovarianceNotFactorizable(HintsError, ArithmeticError):
    """The jittered covariance matrix has no Cholesky factor."""


# network


class GridMismatch(HintsError, ValueError):
    """Input fields are not sampled on the model's training grid."""


class DivergedLoss(NumericalFailure):
    """Training loss became non-finite."""


# storage


class FormatVersionMismatch(HintsError, ValueError):
    """A container has the wrong magic bytes or an unsupported version."""


class CorruptChecksum(HintsError, ValueError):
    """A container is truncated or its CRC-32 trailer does not match."""


# solvers


class ZeroDiagonal(HintsError, ArithmeticError):
    """A relaxation needs to divide by a zero diagonal entry."""


class SingularSplitting(HintsError, ArithmeticError):
    """The splitting matrix M of an amplification matrix is not invertible."""


class SizeMismatch(HintsError, ValueError):
    """A grid resolution or a fine/coarse vector size does not fit the construction."""


class ModelMissing(HintsError, ValueError):
    """A hybrid solver kind was requested without a correction model."""


class GridIncompatible(HintsError, ValueError):
    """The model's domain does not match the system's domain."""


class SolveDiverged(NumericalFailure):
    """An iterative solve crossed the divergence guard."""


# analysis


class ZeroImage(HintsError, ArithmeticError):
    """A mode is mapped to the zero vector, so it cannot be normalized."""


class NonPositiveResidual(HintsError, ValueError):
    """A convergence-rate window touches a zero residual."""


# configuration


class ConfigError(HintsError, ValueError):
    """A run configuration is malformed or names an unknown key."""
