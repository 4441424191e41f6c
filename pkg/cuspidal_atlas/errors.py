"""
Exception hierarchy.

Every error carries the name of the module that raised it so that
classification failures can be attributed when they propagate upward.
"""


class AtlasError(Exception):
    """Base class for all library errors."""

    module = "cuspidal_atlas"

    def __init__(self, message, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module

    def __str__(self):
        return f"[{self.module}] {self.args[0]}"


class DegeneratePolynomialError(AtlasError, ValueError):
    module = "quartic_core"

    def __init__(self, message="degenerate: all-zero coefficients", module=None):
        super().__init__(message, module)


class ContinuumOfSolutionsError(AtlasError):
    module = "kinematics"

    def __init__(self, message="continuum of solutions", module=None):
        super().__init__(message, module)


class AspectCountUnstableError(AtlasError):
    module = "joint_topology"

    def __init__(self, message="aspect count unstable", module=None):
        super().__init__(message, module)


class CurveTracingError(AtlasError):
    module = "joint_topology"


class ClassificationError(AtlasError):
    """Wraps a sub-operation failure raised while classifying one manipulator."""

    module = "classifier"

    def __init__(self, message, cause=None):
        module = getattr(cause, "module", None) or self.module
        super().__init__(message, module)
        self.cause = cause
