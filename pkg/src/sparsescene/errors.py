"""Exception types shared across the package.

The command-line interface maps these onto distinct process exit codes:
usage problems exit 1, :class:`DataError` exits 2, and
:class:`NumericalError` exits 3.
"""


class SparseSceneError(Exception):
    """Base class for all package-specific errors."""


class DataError(SparseSceneError):
    """Raised when input data (corpus, manifest, bank, audio) is missing or malformed."""


class NumericalError(SparseSceneError):
    """Raised when an iterative numerical routine fails to produce a usable result."""
