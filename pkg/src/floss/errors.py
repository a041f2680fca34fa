"""Exception hierarchy shared by all floss modules."""


class FlossError(ValueError):
    """Base class for all errors raised by this package."""


# --- data loading / synthesis ---

class MalformedCsv(FlossError):
    """CSV could not be parsed into a numeric tensor (bad cell, ragged rows)."""


class EmptyInput(FlossError):
    """Fewer than two time steps of data."""


class InvalidSpec(FlossError):
    """A spec/config object violates its own invariants."""


class SplitTooSmall(FlossError):
    """A chronological split would produce a window shorter than 2."""


# --- spectral / periodicity ---

class InputTooShort(FlossError):
    """Sequence or window too short for the requested transform."""


class MismatchedShapes(FlossError):
    """Periodograms being combined do not share length/transform."""


class NoDominantPeriod(FlossError):
    """All non-DC spectral power is (numerically) zero."""


# --- views ---

class NoFeasibleShift(FlossError):
    """No nonzero periodic shift keeps both view windows in bounds."""


# --- loss / encoder ---

class ShapeMismatch(FlossError):
    """Two arrays that must share a shape do not."""


class BadScale(FlossError):
    """Pooling scale below 2."""


class DatasetTooShort(FlossError):
    """Dataset cannot supply a single training batch."""


# --- downstream ---

class SingularSystem(FlossError):
    """Ridge system unsolvable (non-finite inputs)."""


class DegenerateLabels(FlossError):
    """Classification requires at least two classes with samples."""


class StreamTooShort(FlossError):
    """Anomaly stream shorter than the context window."""


class BadRatio(FlossError):
    """Anomaly ratio outside (0, 1) or labels misaligned."""


class BadConfig(FlossError):
    """Experiment config file has unknown keys or invalid values."""
