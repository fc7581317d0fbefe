"""Exception hierarchy for bayesics.

Two families matter to callers: ``UserInputError`` (the input cannot be
analysed as given; the CLI exits with 2) and ``NumericalError`` (the input is
fine but a computation failed; the CLI exits with 3).
"""


class BayesicsError(Exception):
    """Root of every error raised on purpose by this package."""


class UserInputError(BayesicsError, ValueError):
    """Bad formula, bad data, or arguments outside their domain."""


class FormulaSyntaxError(UserInputError):
    """A formula string does not match the grammar."""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        pointer = ""
        if text:
            pointer = f"\n  {text}\n  {' ' * position}^"
        super().__init__(f"{message} (at position {position}){pointer}")


class DataError(UserInputError):
    """A dataset cannot be read or lacks what an analysis needs."""


class DesignError(UserInputError):
    """A design matrix cannot be built from the formula and data."""


class NumericalError(BayesicsError):
    """A well-posed request failed numerically."""


class RankDeficiencyError(NumericalError):
    """The design matrix does not have full column rank."""


class SeparationError(NumericalError):
    """A GLM coefficient diverges because the data separate the outcome."""

    def __init__(self, label: str, value: float):
        self.label = label
        self.value = value
        super().__init__(
            f"Separation detected for '{label}' (standardised estimate {value:.3g}); "
            "the likelihood is flat in this direction. Drop or merge the covariate."
        )


class ConvergenceError(NumericalError):
    """An iterative routine hit its iteration cap."""

    def __init__(self, message: str, trace: list[float] | None = None):
        self.trace = list(trace or [])
        tail = ""
        if self.trace:
            shown = ", ".join(f"{v:.6g}" for v in self.trace[-5:])
            tail = f" (last values: {shown})"
        super().__init__(message + tail)


class SamplingBudgetError(NumericalError):
    """The Monte Carlo plan asks for more draws than the hard cap allows."""


class DegenerateDensityError(NumericalError):
    """A kernel density estimate collapsed (zero bandwidth or zero density)."""
