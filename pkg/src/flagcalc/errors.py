"""Exception hierarchy.

Every domain failure raised by the library derives from :class:`FlagCalcError`;
the command-line front end maps these to exit code 2.
"""


class FlagCalcError(ValueError):
    """Base class for domain errors."""


class DimensionMismatch(FlagCalcError):
    pass


class NotSkewHermitian(FlagCalcError):
    pass


class NotUnitary(FlagCalcError):
    pass


class BranchCut(FlagCalcError):
    pass


class SingularCorner(FlagCalcError):
    pass


class NotInvertible(FlagCalcError):
    pass


class NotIdempotent(FlagCalcError):
    pass


class NotAChain(FlagCalcError):
    pass


class Degenerate(FlagCalcError):
    pass


class NotOrthogonalSystem(FlagCalcError):
    pass


class NotOrthogonalFlag(FlagCalcError):
    pass


class NotInKernel(FlagCalcError):
    pass


class NotInOmega(FlagCalcError):
    pass


class IndexOutOfRange(FlagCalcError, IndexError):
    pass


class SingularFiberMap(FlagCalcError):
    pass


class NotInStructureGroup(FlagCalcError):
    pass


class RankDeficient(FlagCalcError):
    pass


class NotTangent(FlagCalcError):
    pass


class NotCompatible(FlagCalcError):
    pass


class InconsistentVelocities(FlagCalcError):
    pass


class StepTooLarge(FlagCalcError):
    pass


class UnknownSuite(FlagCalcError):
    pass


class BadDimension(FlagCalcError):
    pass


class FormatError(ValueError):
    """Malformed serialized input (I/O level, not a domain failure)."""
