"""Exception types shared across the package."""


class InvalidSequenceError(ValueError):
    """A recommendation sequence repeats an item or overlaps the exposed set."""


class DataError(ValueError):
    """Malformed or unusable input data (rating logs, vector files, ...)."""


class UsageError(ValueError):
    """Invalid configuration, e.g. an incompatible model/distance pair."""
