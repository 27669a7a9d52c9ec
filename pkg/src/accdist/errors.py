"""Exception hierarchy shared by all accdist modules.

Every domain failure raises a named subclass of :class:`AccdistError` so the
CLI can map it to exit code 1 and print ``ErrorName: message`` on stderr.
"""


class AccdistError(Exception):
    """Base class for all errors raised by this package."""


# --- audio ingestion ---------------------------------------------------------

class UnsupportedFormat(AccdistError):
    """WAV codec other than PCM16 / float32."""


class CorruptFile(AccdistError):
    """File header or payload is truncated or inconsistent."""


class TooShort(AccdistError):
    """Audio clip shorter than one analysis window."""


# --- feature files and slicing -----------------------------------------------

class NotAFeatureFile(AccdistError):
    """File does not start with the feature-file magic."""


class UnsupportedVersion(AccdistError):
    """Feature-file version not understood by this reader."""


class SegmentOutOfRange(AccdistError):
    """Word segment lies outside the utterance beyond the one-frame tolerance."""


class EmptySlice(AccdistError):
    """Word segment rounds to zero frames."""


class InvalidManifest(AccdistError):
    """Dataset manifest violates its schema (duplicate ids, bad role, missing path)."""


# --- alignment ----------------------------------------------------------------

class DimMismatch(AccdistError):
    """Frame matrices with different feature dimensions."""


class EmptyInput(AccdistError):
    """Empty frame sequence where at least one frame is required."""


class BadWindow(AccdistError):
    """Moving-average window even, non-positive, or longer than the series."""


class EmptyTranscription(AccdistError):
    """Transcription with no segments."""


class EmptyCorpus(AccdistError):
    """Cost induction called on a corpus without any word variants."""


# --- aggregation ---------------------------------------------------------------

class NoSharedWords(AccdistError):
    """Two speakers have no word in common."""


class EmptyReferenceSet(AccdistError):
    """Native-likeness requested against an empty reference set."""


class SplitTooSmall(AccdistError):
    """Validation split below the minimum needed for the dependent-correlation test."""


class MissingRating(AccdistError):
    """A speaker required by the computation has no human rating."""


class DegenerateRange(AccdistError):
    """Min-max scaling of an all-equal value set."""


# --- statistics -----------------------------------------------------------------

class ZeroVariance(AccdistError):
    """Correlation of a constant vector."""


class LengthMismatch(AccdistError):
    """Paired vectors of different lengths."""


class SampleTooSmall(AccdistError):
    """Too few observations for the requested statistic."""


class DegenerateCorrelation(AccdistError):
    """Correlation magnitude of 1 (or an impossible combination) where the test is undefined."""


class InsufficientData(AccdistError):
    """Fewer than two complete rows after missing-data handling."""


class SingularDesign(AccdistError):
    """Rank-deficient regression design matrix."""


class InvalidDistanceMatrix(AccdistError):
    """Distance matrix asymmetric, negative, or with nonzero diagonal."""


class DegenerateGeometry(AccdistError):
    """Distance matrix with no positive eigenvalues after double-centering."""


# --- reporting -------------------------------------------------------------------

class UnsupportedDim(AccdistError):
    """Map emission requested for a dimensionality other than 2 or 3."""
