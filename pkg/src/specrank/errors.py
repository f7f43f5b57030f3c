"""Exception types raised across the package."""


class SpecrankError(Exception):
    """Base class for all package-specific errors."""


class ParseError(SpecrankError):
    """Malformed Matrix Market input; message carries the offending line number."""


class UnsupportedFormat(SpecrankError):
    """Valid Matrix Market file using a field/symmetry this package does not read."""


class DimensionError(SpecrankError):
    """Operand dimensions are incompatible."""


class SymmetryError(SpecrankError):
    """Matrix handed to the symmetric eigensolver is not symmetric within tolerance."""


class ConvergenceError(SpecrankError):
    """Iterative eigensolver exceeded its sweep cap."""


class DegenerateStartError(SpecrankError):
    """Krylov start vector vanished after projection; caller should resample."""


class ParameterError(SpecrankError):
    """Configuration parameter outside its valid range."""


class InconsistentInputError(SpecrankError):
    """Partial eigenvalue sums exceed the Frobenius constant; theta and phi disagree."""


class OrderError(SpecrankError):
    """Eigenvalue sequence is not sorted non-increasing."""


class DomainError(SpecrankError):
    """Input outside the mathematical domain of a formula (e.g. log of a non-positive value)."""


class SpecError(SpecrankError):
    """Synthetic-data model specification violates its invariants."""


class HarnessError(SpecrankError):
    """Experiment harness aborted (e.g. more than half of all trials failed)."""
