"""Exception types shared across the package."""


class FlowPoseError(Exception):
    """Base class for all package-specific errors."""


class NonConvergence(FlowPoseError):
    """Iterative solver hit its iteration cap with a residual that is too large."""


class NotVisible(FlowPoseError):
    """Depth rendering produced too few occupied pixels to form an observation."""


class DegenerateCloud(FlowPoseError):
    """Point cloud carries no usable spatial extent (all points coincide)."""


class NoCluster(FlowPoseError):
    """DBSCAN classified every hypothesis as noise."""


class AllInvisible(FlowPoseError):
    """Every candidate viewpoint failed the visibility check."""
