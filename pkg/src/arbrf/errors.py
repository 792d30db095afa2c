"""Exception hierarchy shared across the package."""


class ArbrfError(Exception):
    """Base class for all errors raised by arbrf."""


class TaxaMismatch(ArbrfError, ValueError):
    """Two trees (or a tree and a universe) disagree on their taxa."""


class NewickError(ArbrfError, ValueError):
    """Base class for Newick parse failures.

    ``position`` is the character offset in the source text where the
    problem was detected, or ``None`` when it is not tied to one spot.
    """

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)
        self.position = position


class UnbalancedParens(NewickError):
    pass


class EmptyLabel(NewickError):
    pass


class DuplicateTaxon(NewickError):
    pass


class TrailingGarbage(NewickError):
    pass


class NewickSyntaxError(NewickError):
    """Any other grammar violation: bad branch length, missing ';', stray
    characters, unterminated quote, empty document."""


class DocumentTaxaMismatch(NewickError, TaxaMismatch):
    """Trees in one Newick document are not over the same taxa."""


class BothGaps(ArbrfError, ValueError):
    """A cost was requested for a pair of two gap symbols."""


class InvalidMatching(ArbrfError, ValueError):
    pass


class TooLarge(ArbrfError, ValueError):
    """Input exceeds the brute-force enumeration bound."""
