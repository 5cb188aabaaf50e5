"""Exception types shared across the package.

Every error raised by the library derives from ``EmgdsError`` so the CLI can
map library failures to exit code 1 while argument problems stay exit code 2.
"""


class EmgdsError(Exception):
    """Base class for all emgds errors."""


# --- corpus ingestion / synthesis ---

class MalformedHeader(EmgdsError):
    """CSV header does not match the corpus schema."""


class MalformedRow(EmgdsError):
    """CSV row cannot be parsed; message carries the 1-based line number."""


class UnknownActivityCode(EmgdsError):
    """Activity code outside {P, L, T, H, S, C}."""


class RaggedChannels(EmgdsError):
    """Channel sample counts differ within one repetition."""


class EmptyCorpus(EmgdsError):
    """File contained a valid header but no recordings."""


class InvalidConfig(EmgdsError):
    """Configuration value violates its invariants."""


class WindowTooLong(EmgdsError):
    """Sliding window length exceeds the recording length."""


class InsufficientRepetitions(EmgdsError):
    """A (subject, activity) cell has too few repetitions to split."""


# --- feature extraction ---

class SegmentTooShort(EmgdsError):
    """Segment shorter than the feature's minimum length."""


class DegenerateSegment(EmgdsError):
    """Segment has no usable variation (zero variance / zero energy)."""


# --- linear algebra / models ---

class DimensionMismatch(EmgdsError):
    """Vector or matrix dimensions do not agree."""


class TooFewSamples(EmgdsError):
    """Not enough samples to fit the requested model."""


class InsufficientClasses(EmgdsError):
    """Binary training data contains a single label."""


class NonFiniteInput(EmgdsError):
    """Training input contains NaN or infinity."""


class MissingClass(EmgdsError):
    """Training set lacks one of the six activity classes."""


class LayoutMismatch(EmgdsError):
    """Feature vector layout differs from the one the model was trained on."""


class EmptyTestSet(EmgdsError):
    """Evaluation called with no test vectors."""


class SingularCovariance(EmgdsError):
    """Pooled covariance not factorizable even after regularization."""


# --- persistence ---

class IoError(EmgdsError):
    """File could not be read or written."""


class VersionMismatch(EmgdsError):
    """Serialized model carries an unsupported format version."""


class SchemaError(EmgdsError):
    """Serialized document is structurally invalid."""
