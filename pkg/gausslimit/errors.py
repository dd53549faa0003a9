"""Exception hierarchy shared by every gausslimit module."""

from __future__ import annotations

from collections.abc import Sequence


class GaussLimitError(Exception):
    """Base class for all errors raised by gausslimit."""


class ConfigError(GaussLimitError):
    """A configuration file or value is malformed.

    Args:
        message: What is wrong.
        line: 1-based line in the source file, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.message = message
        self.line = line
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        return f"line {self.line}: {self.message}"


class UnstableSystemError(GaussLimitError):
    def __init__(self, modulus: float):
        self.modulus = modulus
        super().__init__(f"system unstable: dominant pole modulus {modulus:.12g} >= 1")


class RootFindingError(GaussLimitError):
    """Aberth iteration did not converge within the iteration cap."""

    def __init__(self, residuals: Sequence[float]):
        self.residuals = tuple(float(r) for r in residuals)
        worst = max(self.residuals, default=float("nan"))
        super().__init__(f"root finding did not converge (worst residual {worst:.3e})")


class DominanceError(GaussLimitError):
    def __init__(self, moduli: Sequence[float]):
        self.moduli = tuple(float(m) for m in moduli)
        super().__init__(f"no strictly dominant mode: tied moduli {self.moduli}")


class PreconditionError(GaussLimitError):
    """A bound was requested for a system outside its case."""

    def __init__(self, condition: str):
        self.condition = condition
        super().__init__(f"precondition violated: {condition}")


class InadmissibleDecayError(PreconditionError):
    def __init__(self, decay: float, threshold: float):
        self.decay = decay
        self.threshold = threshold
        super().__init__(
            f"correlation decay a={decay:.6g} is not below the admissible threshold {threshold:.6g}"
        )


class DegenerateOutputError(GaussLimitError):
    def __init__(self, t: int):
        self.t = t
        super().__init__(f"degenerate output: sigma_t^2 = 0 at t={t}")


class MomentUnavailableError(GaussLimitError):
    def __init__(self, detail: str = "fourth moment is not finite"):
        super().__init__(f"s4 unavailable: {detail}")


class NoiseFloorError(GaussLimitError):
    def __init__(self, usable: int):
        self.usable = usable
        super().__init__(f"distance below noise floor: only {usable} rows exceed 3 standard errors")


class SampleMismatchError(GaussLimitError):
    def __init__(self, n_a: int, n_b: int):
        super().__init__(f"sample sizes differ: {n_a} != {n_b}")
