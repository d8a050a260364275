"""Exception hierarchy for the visual-distance toolkit.

Every error carries an ``exit_code`` so the CLI can map failures onto its
contract: 1 = usage, 2 = malformed or inconsistent input data, 3 = a
computation that cannot proceed (degenerate or undersized input).
"""


class VdError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 3


class UsageError(VdError):
    """Bad command line."""

    exit_code = 1


class InputFormatError(VdError):
    """A file or record does not conform to its declared format."""

    exit_code = 2


# --- file / record parsing -------------------------------------------------

class BadMagic(InputFormatError):
    pass


class TruncatedPayload(InputFormatError):
    pass


class NonFiniteValue(InputFormatError):
    pass


class MalformedRow(InputFormatError):
    pass


class DuplicateIndex(InputFormatError):
    pass


class GapInIndices(InputFormatError):
    pass


class CorruptTernaryCode(InputFormatError):
    """A reserved 2-bit code (0b11) was found in packed ternary data."""


class CycleDetected(InputFormatError):
    """The hypernym edge list is not acyclic."""


class DuplicateSynsetId(InputFormatError):
    pass


class LayoutMismatch(InputFormatError):
    """A layer layout does not tile the feature axis of the matrix it describes."""


class UnknownSynset(InputFormatError):
    pass


# --- computation preconditions ----------------------------------------------

class DimensionMismatch(VdError):
    pass


class EmptySynset(VdError):
    pass


class IndexOutOfRange(VdError):
    pass


class TooFewSynsets(VdError):
    pass


class NoCommonAncestor(VdError):
    pass


class MissingIC(VdError):
    pass


class ZeroDenominator(VdError):
    pass


class ZeroVariance(VdError):
    pass


class InsufficientOverlap(VdError):
    pass


class DegenerateMatrix(VdError):
    pass
