from dataclasses import dataclass
from typing import List
from typing import NamedTuple

__all__ = [
    "Violation",
    "ModelError",
    "ModelInputError",
    "InvalidScenarioError",
    "ClassIndexError",
    "NegativeDistanceError",
    "FadingModelError",
    "OverlapRangeError",
    "OverlapPreconditionError",
    "DownlinkMissingError",
    "InvalidJointConfigError",
    "NumericalError",
    "QuadratureError",
    "GridTruncationError",
    "ZeroEnergyError",
]


class Violation(NamedTuple):
    """A broken invariant and the path to the offending field"""

    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


class ModelError(Exception):
    """Base class for model-related errors"""


class ModelInputError(ModelError, ValueError):
    """Error if a model operation cannot handle (invalid) inputs"""


@dataclass
class InvalidScenarioError(ModelInputError):
    violations: List[Violation]

    def __str__(self):
        if len(self.violations) == 1:
            return f"Invalid scenario: {self.violations[0]}"

        msg = "Invalid scenario:\n"
        msg += "\n".join(f"  • {violation}" for violation in self.violations)

        return msg


@dataclass
class InvalidJointConfigError(ModelInputError):
    violations: List[Violation]

    def __str__(self):
        return "Invalid joint reception config: " + "; ".join(
            str(violation) for violation in self.violations
        )


@dataclass
class ClassIndexError(ModelInputError, IndexError):
    index: int
    nclasses: int

    def __str__(self):
        return f"Class index {self.index} out of range for {self.nclasses} classes"


@dataclass
class NegativeDistanceError(ModelInputError):
    distance: float

    def __str__(self):
        return f"Distance {self.distance} m is negative"


class FadingModelError(ModelInputError):
    """Error if an operation does not support the scenario's fading law"""


@dataclass
class OverlapRangeError(ModelInputError):
    x: float
    max_overlap: float

    def __str__(self):
        return f"Overlap {self.x} Hz outside [0, {self.max_overlap}] Hz"


class OverlapPreconditionError(ModelInputError):
    """Error if the uniform closed form is used outside its validity region"""

    def __str__(self):
        return (
            "Carrier law is not uniform over a support that strictly contains "
            "the exclusion zone; use expected_overlap_ratio instead"
        )


@dataclass
class DownlinkMissingError(ModelInputError):
    name: str

    def __str__(self):
        return (
            f"Class '{self.name}' has no downlink windows, "
            "which the computed ACK model needs"
        )


class NumericalError(ModelError, ArithmeticError):
    """Base class for numerical failures"""


@dataclass
class QuadratureError(NumericalError):
    what: str
    reason: str

    def __str__(self):
        return f"Quadrature of {self.what} did not converge: {self.reason}"


@dataclass
class GridTruncationError(NumericalError):
    grid_max: float
    tail_mass: float

    def __str__(self):
        return (
            f"SINR grid truncated at {self.grid_max:g} leaves tail mass "
            f"{self.tail_mass:.2e} (> 1e-4); use a larger grid_max"
        )


@dataclass
class ZeroEnergyError(NumericalError):
    energy: float

    def __str__(self):
        return f"Energy per report is {self.energy:g} J, lifetime is undefined"
