"""Figure generation for forksim CSV outputs."""

__version__ = "0.1.0"


class FigureError(Exception):
    """Raised when the input CSV cannot produce the requested figure."""
