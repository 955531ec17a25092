"""Exception hierarchy shared by every sensikit module."""

from typing import Any, Sequence


class SensikitError(Exception):
    """Base error; ``details`` carries the structured context for reports."""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: dict[str, Any] = details


# Problem input


class ProblemSyntaxError(SensikitError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}", line=line, column=column)
        self.line = line
        self.column = column


class UndeclaredIdentifierError(ProblemSyntaxError):
    def __init__(self, name: str, line: int, column: int):
        super().__init__(f"undeclared identifier '{name}'", line, column)
        self.name = name


class DimensionMismatchError(SensikitError):
    pass


class EvaluationDomainError(SensikitError):
    """log/sqrt of a non-positive argument, division by zero, bad power base."""

    def __init__(self, reason: str, subexpression: str):
        super().__init__(f"{reason} in '{subexpression}'", subexpression=subexpression)
        self.subexpression = subexpression


# Linear algebra and kernels


class SingularMatrixError(SensikitError):
    def __init__(self, pivot: int, size: int):
        super().__init__(
            f"matrix of order {size} is singular at pivot {pivot}", pivot=pivot, size=size
        )
        self.pivot = pivot


class KernelError(SensikitError):
    pass


class CyclingError(KernelError):
    pass


class InfeasibleProblemError(KernelError):
    def __init__(self, message: str, row: int | None = None, kind: str | None = None):
        super().__init__(message, row=row, kind=kind)
        self.row = row
        self.kind = kind


class IndefiniteHessianError(KernelError):
    pass


class VertexGuardError(KernelError):
    def __init__(self, columns: int, guard: int):
        super().__init__(
            f"{columns} candidate basis columns exceed the enumeration guard of {guard}; "
            "rerun the degenerate pipeline with sampled vertices (non-exhaustive)",
            columns=columns,
            guard=guard,
        )


class EmptyPolytopeError(KernelError):
    pass


# Analysis and sensitivity


class NotStationaryError(SensikitError):
    def __init__(self, message: str, residual: dict[str, float]):
        super().__init__(message, residual=residual)
        self.residual = residual


class RegularityNotCertifiedError(SensikitError):
    def __init__(self, failed: Sequence[str], context: str = ""):
        names = ", ".join(failed)
        prefix = f"{context}: " if context else ""
        super().__init__(f"{prefix}regularity not certified ({names})", failed=list(failed))
        self.failed = list(failed)


class NoConstraintQualificationError(RegularityNotCertifiedError):
    def __init__(self):
        super().__init__(["LICQ", "MFCQ"], context="neither LICQ nor MFCQ holds")


class ToleranceConflictError(SensikitError):
    """A numerical outcome contradicts a certificate computed under tolerances."""


class RegimeMismatchError(SensikitError):
    pass


class NotAnLPError(SensikitError):
    pass


class NonSquareBasisError(SensikitError):
    pass


class NotCanonicalFormError(SensikitError):
    pass


class ConstraintsDependOnParameterError(SensikitError):
    pass


class UnboundedMultiplierError(SensikitError):
    pass


# Solvers


class InfeasibleStartError(SensikitError):
    pass


class LineSearchError(SensikitError):
    def __init__(self, message: str, last_iterate: Any):
        super().__init__(message, last_iterate=[float(v) for v in last_iterate])
        self.last_iterate = last_iterate


class MaxIterationsError(SensikitError):
    pass


class KinkAtSolutionError(SensikitError):
    def __init__(self, blocks: Sequence[int]):
        super().__init__(
            f"cone projection is not differentiable at the solution (blocks {list(blocks)})",
            blocks=list(blocks),
        )
        self.blocks = list(blocks)


# Oracle


class ResolveError(SensikitError):
    pass


class ActiveSetChangeError(SensikitError):
    pass
