"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration problems -> 2,
forward-solver failures -> 3, data-condition failures -> 4, and
reconstruction failures -> 5.
"""

from __future__ import annotations


class RdInvertError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RdInvertError):
    """Invalid grids, problem setup, or experiment configuration."""


class ExpressionError(ConfigurationError):
    """Failed parse or evaluation of a config expression.

    ``position`` is the 0-based column of the offending token.
    """

    def __init__(self, message: str, text: str, position: int) -> None:
        super().__init__(f"{message} at column {position}: {text!r}")
        self.text = text
        self.position = position


class UnsupportedConfigurationError(ConfigurationError):
    """A requested operation does not apply to the given setup."""


class RangeViolationError(RdInvertError):
    """Reaction curve evaluated outside its domain under the error policy."""

    def __init__(self, value: float, j_lo: float, j_hi: float) -> None:
        super().__init__(
            f"argument {value!r} outside reaction domain [{j_lo!r}, {j_hi!r}]"
        )
        self.value = value
        self.j_lo = j_lo
        self.j_hi = j_hi


class BlowUpError(RdInvertError):
    """Non-finite state produced by the forward solver."""

    def __init__(self, step: int, node: int) -> None:
        super().__init__(f"non-finite state at time step {step}, node {node}")
        self.step = step
        self.node = node


class StiffnessError(RdInvertError):
    """Inner fixed-point sweeps on a time step failed to converge."""

    def __init__(self, step: int, update: float, sweeps: int) -> None:
        super().__init__(
            f"inner iteration stalled at step {step} "
            f"(last update {update:.3e} after {sweeps} sweeps); "
            "a smaller time step is likely required"
        )
        self.step = step
        self.update = update
        self.sweeps = sweeps


class SmoothingError(RdInvertError):
    """Singular or otherwise unusable smoothing problem."""


class DataConditionError(RdInvertError):
    """Observed data violates a hard admissibility floor."""


class MonotonicityError(DataConditionError):
    """A profile or trace is not monotone where the schemes require it."""


class RangeConditionError(DataConditionError):
    """Value ranges of the datasets are not nested as required."""


class DegenerateDataError(DataConditionError):
    """The two final-time profiles carry no independent information."""


class ContractionFailureError(RdInvertError):
    """Successive substitution for the reaction curve diverged."""

    def __init__(self, kappa: float, sweeps: int) -> None:
        super().__init__(
            f"inner reaction-curve iteration diverging after {sweeps} sweeps "
            f"(slope-ratio estimate {kappa:.3f})"
        )
        self.kappa = kappa
        self.sweeps = sweeps


class ReconstructionError(RdInvertError):
    """An outer reconstruction iteration aborted.

    ``history`` holds the iterate records accumulated before the failure.
    """

    def __init__(self, message: str, history=None) -> None:
        super().__init__(message)
        self.history = history
