"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError/DomainError -> 3,
DesignError -> 2, SolverStall -> 4.
"""


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class InvalidMatrix(ValueError):
    """Matrix violates a structural requirement (e.g. not Hermitian)."""


class DomainError(ValueError):
    """Scalar argument outside its admissible range."""


class ConfigError(ValueError):
    """Invalid run configuration (spec fields, scene files, region setup)."""


class MalformedProblem(ValueError):
    """Conic problem data is structurally unusable (NaN/Inf, bad shapes)."""


class DesignError(RuntimeError):
    """The design pipeline could not produce a waveform."""


class SolverStall(RuntimeError):
    """The conic solver found neither an optimum nor a certificate."""
