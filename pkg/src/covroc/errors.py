"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class CovrocError(Exception):
    """Base class for all library errors."""


class InputError(CovrocError, ValueError):
    """Invalid user input (malformed files, empty groups, non-finite values)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptySampleError(InputError):
    pass


class EstimationError(CovrocError):
    """A numerical estimation step could not be carried out."""


class SingularMomentMatrixError(EstimationError):
    pass


class InsufficientLocalDataError(EstimationError):
    """Local polynomial design at ``z`` is empty or numerically singular.

    Attributes:
        z: target covariate value.
        local_count: number of observations with positive kernel weight.
        label: which fitted function failed, e.g. ``"v1_hat (population x)"``.
    """

    def __init__(self, z: float, local_count: int, order: int, label: str | None = None):
        self.z = float(z)
        self.local_count = int(local_count)
        self.order = int(order)
        self.label = label
        where = f" for {label}" if label else ""
        super().__init__(
            f"insufficient local data{where} at z={self.z:.6g}: "
            f"{self.local_count} point(s) with positive kernel weight, "
            f"degree-{self.order} fit needs {self.order + 1} non-degenerate"
        )


class InfeasibleBandwidthError(EstimationError):
    """Every bandwidth candidate failed."""


class ZeroDenominatorError(EstimationError):
    """No observation pair carries positive kernel weight at the target covariate."""

    def __init__(self, z: float):
        self.z = float(z)
        super().__init__(f"bivariate kernel estimator has zero total weight at z={self.z:.6g}")


class BootstrapFailureError(CovrocError):
    def __init__(self, failures: int, replicates: int, limit: float):
        self.failures = failures
        self.replicates = replicates
        super().__init__(
            f"{failures} of {replicates} bootstrap replicates failed "
            f"(limit {limit:.0%})"
        )


class SimulationFailureError(CovrocError):
    pass
