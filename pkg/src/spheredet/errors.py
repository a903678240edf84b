"""Exception hierarchy shared by all spheredet modules."""


class SpheredetError(Exception):
    """Base class for all library-specific failures."""


class BehindPlane(SpheredetError):
    """Point lies 90 degrees or more from the tangency center and cannot be
    projected onto the tangent plane."""


class FovTooLarge(SpheredetError):
    """A (possibly expanded) field of view reaches or exceeds 180 degrees,
    outside the validity range of the tangent-plane projection."""


class MissingAlpha(SpheredetError):
    """An operation required an alpha channel the image does not have."""


class EmptyAnchors(SpheredetError):
    """Anchor matching was invoked with an empty anchor list."""


class EmptySources(SpheredetError):
    """Dataset generation found no usable source crops."""


class PlacementFailure(SpheredetError):
    """Object placement exhausted its retry budget without satisfying the
    pairwise-overlap constraint."""


class NoGroundTruth(SpheredetError):
    """Evaluation was invoked with no ground-truth object in any image."""


class IoFailure(SpheredetError):
    """A file could not be read or written."""
