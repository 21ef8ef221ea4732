"""Exception types shared across the package."""


class BandcombError(Exception):
    """Base class for all package-specific failures."""


class EigenConvergenceError(BandcombError):
    """Dense eigensolve failed to converge; message carries a condition report."""


class BoundaryFloorError(BandcombError):
    """Contour boundary passes too close to a zero of the probed function."""


class WidenWindowError(BandcombError):
    """Sampled function has not decayed enough inside the truncation window."""


class YCapExceededError(BandcombError):
    """Monodromy evaluation refused: |Im z| above the overflow guard."""


class StepControllerError(BandcombError):
    """Propagation failed; message carries the last accepted time."""


class ConditioningError(BandcombError):
    """Matrix too ill-conditioned for the requested operation."""


class BranchPointHit(BandcombError):
    """Branch continuation ran into a collapse of branch separation."""

    def __init__(self, location, message=None):
        self.location = location
        super().__init__(message or f"branch separation collapsed near z = {location}")


class AmbiguousOrderError(BandcombError):
    """Vanishing-order fit did not land near an odd integer; classification refused."""

    def __init__(self, slope, message=None):
        self.slope = slope
        super().__init__(message or f"fitted vanishing order {slope:.3f} is not within "
                                    "tolerance of an odd integer")


class PermanentDegeneracy(BandcombError):
    """The discriminant vanishes identically: coinciding branches, no isolated zeros."""


class ValidationError(BandcombError):
    """Potential specification failed validation."""
