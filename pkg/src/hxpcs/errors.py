"""Exception types raised across the package.

Everything derives from :class:`XpcsError` so callers (and the CLI) can
catch one base class.  The two intermediate classes decide the CLI exit
code: :class:`DataError` maps to 3, :class:`NumericalError` to 4.
"""


class XpcsError(Exception):
    """Base class for all package errors."""


class DataError(XpcsError):
    """Bad input data, shapes, or files."""


class NumericalError(XpcsError):
    """A computation could not produce a meaningful result."""


class ContractError(DataError, ValueError):
    """An argument violates a documented precondition."""


class ShapeError(DataError, ValueError):
    """Array dimensions do not agree."""


class NormalizationError(DataError, ValueError):
    """A frame has zero norm and cannot be normalized.

    ``index`` is the offending frame (row) index.
    """

    def __init__(self, index, message=None):
        self.index = int(index)
        super().__init__(message or f"frame {self.index} has zero norm (dead-detector frame)")


class MaskError(DataError, ValueError):
    """A pixel mask is invalid for the frames it is applied to."""


class BindingError(DataError):
    """Compressed data and encoding matrix do not belong together."""


class FormatError(DataError):
    """A file does not follow its binary layout.

    ``offset`` is the byte offset where the problem was detected.
    """

    def __init__(self, message, offset=0):
        self.offset = int(offset)
        super().__init__(f"{message} (at byte offset {self.offset})")


class LengthError(FormatError):
    """A file ended before its declared payload did."""


class IntegrityError(FormatError):
    """File content parsed but failed a numerical integrity check."""


class RankError(NumericalError):
    """Requested more components than the data's numerical rank.

    ``achievable`` is the largest rank that can be delivered.
    """

    def __init__(self, requested, achievable):
        self.requested = int(requested)
        self.achievable = int(achievable)
        super().__init__(
            f"requested k={self.requested} but numerical rank is only {self.achievable}"
        )


class FitDegenerateError(NumericalError):
    """The curve has no decay to fit."""


class FitConvergenceError(NumericalError):
    """The fit did not converge; ``best`` holds the best iterate seen."""

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)
