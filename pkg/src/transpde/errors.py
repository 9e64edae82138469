"""Exception hierarchy.

Every error raised by the package derives from :class:`TranspdeError`.  The
``exit_code`` class attribute is what the command-line front end returns when
the error escapes a run: 2 for violated solvability hypotheses, 3 for
numerical failures, 4 for malformed problem files.
"""

from __future__ import annotations


class TranspdeError(Exception):
    exit_code = 3


# geometry ---------------------------------------------------------------------

class GeometryError(TranspdeError):
    pass


class PointOffManifold(GeometryError):
    pass


class NonpositiveWarping(GeometryError):
    pass


class FieldEvaluationFailure(GeometryError):
    pass


class DimensionMismatch(GeometryError):
    pass


class SingularLevel(GeometryError):
    pass


class ProjectionDivergence(GeometryError):
    pass


# catalog ----------------------------------------------------------------------

class CatalogError(TranspdeError):
    pass


class HahnConditionViolated(CatalogError):
    pass


class UnsupportedEll(CatalogError):
    pass


class BadSplit(CatalogError):
    pass


class BadAxis(CatalogError):
    pass


class NoRegularPoints(CatalogError):
    pass


# expressions ------------------------------------------------------------------

class ExprError(TranspdeError):
    pass


class ExprSyntaxError(ExprError):
    """Malformed expression text; ``offset`` is the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifier(ExprError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class ArityError(ExprError):
    def __init__(self, name: str, expected: int, got: int, offset: int):
        super().__init__(
            f"{name}() takes {expected} argument(s), got {got} (offset {offset})"
        )
        self.name = name
        self.offset = offset


class DomainError(ExprError):
    def __init__(self, func: str, value):
        super().__init__(f"{func} is undefined at argument {value!r}")
        self.func = func
        self.value = value


class NondifferentiablePoint(ExprError):
    def __init__(self, func: str, value):
        super().__init__(f"{func} is not differentiable at argument {value!r}")
        self.func = func
        self.value = value


# reductions -------------------------------------------------------------------

class HypothesisError(TranspdeError):
    """A solvability hypothesis failed; ``report`` lists every condition."""

    exit_code = 2

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class TransversalityLoss(HypothesisError):
    pass


class BranchLoss(TranspdeError):
    pass


class StepFailure(TranspdeError):
    pass


class DriftViolation(TranspdeError):
    pass


class SignViolation(TranspdeError):
    pass


class QuadratureFailure(TranspdeError):
    pass


class DomainMismatch(TranspdeError):
    pass


class OutsideDomain(TranspdeError):
    pass


class StripRootFailure(TranspdeError):
    pass


class CoverageFailure(TranspdeError):
    pass


class OutsideCoverage(TranspdeError):
    pass


class InversionFailure(TranspdeError):
    pass


# verification / cli -----------------------------------------------------------

class NoValidSamples(TranspdeError):
    pass


class SpecValidationError(TranspdeError):
    exit_code = 4
