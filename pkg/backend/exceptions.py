"""
Common exception base for the Scherk Lab backend.
Each module defines its own domain exceptions deriving from ScherkLabError.
"""


class ScherkLabError(Exception):
    """Base class for all domain errors raised by the backend."""
    pass
