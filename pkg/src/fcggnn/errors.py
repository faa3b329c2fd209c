"""Exception hierarchy. Every error raised on bad input derives from FcgError."""


class FcgError(Exception):
    pass


class GraphError(FcgError):
    pass


class ParseError(GraphError):
    pass


class EmptyGraphError(GraphError):
    pass


class ShapeError(FcgError, ValueError):
    pass


class DataError(FcgError):
    """Bad manifest, corpus layout, or labels."""


class ModelFormatError(FcgError):
    """Unreadable or inconsistent model container."""


class TrainingError(FcgError):
    pass
