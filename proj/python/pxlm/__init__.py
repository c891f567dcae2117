"""Pixel language model laboratory: python surface over the C++ core.

The compiled extension lives at ``pxlm._core`` when installed via pip; a
plain CMake build leaves it as a top-level ``_core`` module instead, so both
locations are tried.
"""

try:
    from ._core import (  # type: ignore[attr-defined]
        Atlas,
        AttackTable,
        Checkpoint,
        DataError,
        NumericError,
        UsageError,
        init_checkpoint,
        lambda_auto,
        lr_at,
        segment_text,
        __version__,
    )
except ImportError:  # pragma: no cover - cmake-build layout
    from _core import (  # type: ignore[no-redef]
        Atlas,
        AttackTable,
        Checkpoint,
        DataError,
        NumericError,
        UsageError,
        init_checkpoint,
        lambda_auto,
        lr_at,
        segment_text,
        __version__,
    )

__all__ = [
    "Atlas",
    "AttackTable",
    "Checkpoint",
    "DataError",
    "NumericError",
    "UsageError",
    "init_checkpoint",
    "lambda_auto",
    "lr_at",
    "segment_text",
    "__version__",
]
