"""Exception hierarchy shared by all techrank modules."""


class TechRankError(Exception):
    """Base class for every error raised by techrank."""


class UnknownLabel(TechRankError):
    """An edge references a node label that is not part of the graph."""


class DuplicateLabel(TechRankError):
    """A label appears twice within one layer."""


class EmptyLayer(TechRankError):
    """A layer of the bipartite graph has no nodes."""


class ParseError(TechRankError):
    """An input file could not be parsed."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class MissingColumn(ParseError):
    """A required column or field is absent."""


class DuplicateEntity(ParseError):
    """A baseline ranking lists the same entity more than once."""


class NumericalOverflow(TechRankError):
    """Degree powers left the floating point range."""


class InsufficientOverlap(TechRankError):
    """Fewer than two entities are shared by the compared rankings."""


class ZeroVariance(TechRankError):
    """One of the compared rankings has all entities tied."""


class OracleTooLarge(TechRankError):
    """The graph is too large for the dense reference iteration."""
