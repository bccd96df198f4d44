"""Trend-figure regeneration for pcstream sweep CSVs."""

from .figures import (
    FIGURE_IDS,
    SOURCE_SCHEMA,
    TABLE_SCHEMA,
    AnalysisError,
    FigureSpec,
    default_spec,
    read_rows,
    render,
)

__all__ = [
    "FIGURE_IDS",
    "SOURCE_SCHEMA",
    "TABLE_SCHEMA",
    "AnalysisError",
    "FigureSpec",
    "default_spec",
    "read_rows",
    "render",
]
