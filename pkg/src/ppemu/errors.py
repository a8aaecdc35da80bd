"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError -> 2, NumericalError -> 3.
"""


class PpemuError(Exception):
    """Base class for all package errors."""


class InputError(PpemuError):
    """Invalid user input: bad shapes, unknown columns, malformed files."""


class NumericalError(PpemuError):
    """A numerical routine failed beyond recovery (e.g. factorization)."""


class SchemaError(InputError):
    """A serialized artifact has an unknown or incompatible schema."""
