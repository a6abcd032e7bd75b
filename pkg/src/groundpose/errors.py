"""Exception hierarchy shared across the package."""


class GroundPoseError(Exception):
    """Base class for all groundpose errors."""


class InvalidArgumentError(GroundPoseError, ValueError):
    """An argument violates a documented precondition."""


class InvalidPlaneError(InvalidArgumentError):
    """Plane has a (near-)zero normal vector."""


class BehindCameraError(GroundPoseError):
    """A 3D point required by a projection has non-positive depth."""


class UnderdeterminedError(GroundPoseError):
    """Too few usable correspondences to constrain the unknowns."""


class DegenerateConfigurationError(GroundPoseError):
    """Input configuration is rank-deficient (coplanar / collinear)."""


class InsufficientDataError(GroundPoseError):
    """Not enough samples for the requested estimate."""


class NoProgressError(GroundPoseError):
    """Iterative solve could not continue; carries the best iterate seen."""

    def __init__(self, message, best_state=None, best_loss=None):
        super().__init__(message)
        self.best_state = best_state
        self.best_loss = best_loss


class GenerationError(GroundPoseError):
    """Synthetic scene generation exhausted its placement attempts."""


class SchemaError(GroundPoseError):
    """A file does not match the expected JSON schema."""


class ValidationError(GroundPoseError):
    """Deserialized data violates a domain invariant."""


class EmptySceneError(GroundPoseError):
    """Scene contains no solvable detections."""
