"""Exception types shared across the package."""


class LivewireOctError(Exception):
    """Base class for all errors raised by this package."""


# --- volume / file I/O ---

class BadMagic(LivewireOctError):
    """Input bytes do not start with the .vol magic prefix."""


class TruncatedFile(LivewireOctError):
    """Declared sizes in a binary header exceed the available bytes."""


class InconsistentHeader(LivewireOctError):
    """Header declares non-positive or mutually inconsistent dimensions."""


class MissingSlice(LivewireOctError):
    """A manifest references a slice file that does not exist."""


class DimensionMismatch(LivewireOctError):
    """Slices of a volume do not share a single width and height."""


class IoFailure(LivewireOctError):
    """Writing an export artifact failed."""


# --- configuration ---

class ConfigError(LivewireOctError):
    """Config file is malformed, has unknown keys, or violates bounds."""


# --- image processing ---

class InvalidBand(LivewireOctError):
    """A search band lies outside the image rows."""


# --- path search ---

class NoPath(LivewireOctError):
    """No column-monotone path can join the anchors under d_max."""


class DuplicateAnchorColumn(LivewireOctError):
    """Two layer anchors share the same column."""


class DegenerateLoop(LivewireOctError):
    """A closed contour encloses no pixels."""


# --- annotation sessions ---

class OutOfBounds(LivewireOctError):
    """An anchor falls outside the B-scan."""


class NothingToUndo(LivewireOctError):
    """Undo requested with no pending anchors."""


class InsufficientAnchors(LivewireOctError):
    """Commit requested before the mode's minimum anchor count."""


class TooFewClicks(LivewireOctError):
    """Grid interpolation needs at least two clicks."""


class InvalidBoundaryForScan(LivewireOctError):
    """Boundary cannot be segmented on this scan kind (GCL_IPL, peripapillary)."""


# --- metrics ---

class LengthMismatch(LivewireOctError):
    """Paired inputs have different lengths or shapes."""


class BothEmpty(LivewireOctError):
    """Dice is undefined when both masks are empty."""


class DegenerateSegment(LivewireOctError):
    """Irregularity index needs at least two points with distinct neighbors."""


# --- peripapillary ---

class AllColumnsFlagged(LivewireOctError):
    """Shadow inpainting has no unflagged columns to interpolate from."""


# --- phantom / evaluation ---

class InvalidSpec(LivewireOctError):
    """Phantom spec violates its invariants."""


class ScanMismatch(LivewireOctError):
    """Two record sets do not describe the same scans."""


class ClampWarning(UserWarning):
    """Raised (as a warning) when boundary rows are clamped to the image."""
