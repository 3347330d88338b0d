"""Exception types raised across the skysift pipeline.

Each stage raises a narrow exception so callers (and the CLI exit-code
mapping) can tell configuration mistakes, bad input files, and degenerate
geometry apart without string matching.
"""


class SkysiftError(Exception):
    """Base class for all skysift errors."""


# --- ingestion ---

class MalformedRecord(SkysiftError):
    """A scan file record could not be parsed or violates the schema."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class NonMonotonicTimestamps(SkysiftError):
    """Frame timestamps are not strictly increasing."""


class EmptySequence(SkysiftError):
    """A scan sequence contains no frames."""


class WindowOutOfRange(SkysiftError):
    """A frame window does not fit inside the sequence."""


# --- clustering ---

class EmptyInput(SkysiftError):
    """Clustering was asked to label an empty point set."""


class UnknownClusterId(SkysiftError):
    """A cluster id outside 0..K-1 was requested."""


class LabelingMismatch(SkysiftError):
    """A labeling does not correspond to the point set or window it is used with."""


# --- voxel metrics ---

class NonPositiveEdge(SkysiftError):
    """Voxel edge length must be > 0."""


class EmptyCluster(SkysiftError):
    """Density of an empty cluster is undefined."""


class EdgeMismatch(SkysiftError):
    """Voxel IoU requires both grids to share one edge length."""


class BothEmpty(SkysiftError):
    """Voxel IoU of two empty grids is undefined."""


class ZeroGlobalDensity(SkysiftError):
    """Relative density requires a positive global density."""


# --- scoring / selection ---

class NoClusters(SkysiftError):
    """Target selection got no eligible cluster scores."""


# --- trajectory ---

class TooFewFrames(SkysiftError):
    """The target cluster has points in fewer than two frames."""


class DuplicateTimestamps(SkysiftError):
    """Control points must carry strictly increasing timestamps."""


class EmptyQuery(SkysiftError):
    """Interpolation was asked for zero timestamps."""


# --- evaluation ---

class NoOverlap(SkysiftError):
    """Prediction and ground truth share no usable time overlap."""


class EmptyPairs(SkysiftError):
    """RMSE of an empty pairing is undefined."""


# --- configuration / generation ---

class InvalidConfig(SkysiftError):
    """A configuration document is malformed or violates an invariant."""
