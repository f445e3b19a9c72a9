"""Group-aware pedestrian trajectory forecasting (C++ core with Python bindings)."""

from ._core import (
    ConfigError,
    ContractViolation,
    DuplicateRecordError,
    FormatError,
    ParameterSet,
    ParseError,
    TrajectoryWindow,
    best_of_n,
    build_windows,
    coherent_filter,
    dbscan_refine,
    discrete_frechet,
    displacement_errors,
    hybrid_label,
    make_window,
    masked_adjacency,
    parse_dataset,
    parse_text,
    selftest,
    synthetic_scenes,
    to_absolute,
    to_relative,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
