"""Exception types shared across the package."""

from __future__ import annotations

__all__ = ["DataError", "DegenerateVarianceError"]


class DataError(ValueError):
    """Input cannot be used: bad columns, non-finite values, or degenerate design.

    Mapped to exit code 2 by the command line frontend.
    """


class DegenerateVarianceError(RuntimeError):
    """Every scale has numerically zero variance, so no statistic can be formed.

    Usually means the bandwidths do not match the spread of the data.
    Mapped to exit code 3 by the command line frontend.
    """
