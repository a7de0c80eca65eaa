"""Exception types shared across the package.

``ValueError`` is still raised for plain API misuse (wrong shapes, bad
arguments); the classes below mark conditions the CLI maps to dedicated
exit codes.
"""


class LinkGPError(Exception):
    """Base class for package-specific errors."""


class DataError(LinkGPError):
    """Malformed or inconsistent input data (files, splits, manifests)."""


class NumericsError(LinkGPError):
    """Numerical failure: factorization breakdown, non-finite loss or gradient."""
