"""Exception types raised across the package.

Every domain error carries a short ``name`` so the command line can report
which stage failed without printing a traceback.
"""


class GeometryError(Exception):
    name = "GeometryError"


class BadSpec(GeometryError, ValueError):
    name = "BadSpec"


class NonImmersion(GeometryError):
    name = "NonImmersion"


class ShootingFailed(GeometryError):
    name = "ShootingFailed"

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class NoFocalData(GeometryError):
    name = "NoFocalData"


class NonUnitTangent(GeometryError):
    name = "NonUnitTangent"


class OpenCurve(GeometryError):
    name = "OpenCurve"


class GridMismatch(GeometryError, ValueError):
    name = "GridMismatch"


class NotClosedError(GeometryError):
    name = "NotClosedError"


class InvalidFiber(GeometryError):
    name = "InvalidFiber"
