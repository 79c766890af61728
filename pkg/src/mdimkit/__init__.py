"""Metric mean dimension, entropy growth and box dimension for sequences of maps."""

from __future__ import annotations

from .core import BowenContext, MetricSpace, SystemSequence, bowen_distance, compose_block
from .errors import (
    MdimError,
    PrecisionBudgetError,
    ResolutionError,
    UnknownFixtureError,
    UnsupportedParameterError,
)
from .estimate import CountTable, DimensionReport, mmd_estimate, rate_curve
from .fixtures import Fixture, fixture_ids, get_fixture
from .oracle import OracleBound
from .props import EstimationParams, RelationCheck, estimate_fixture, run_check

__version__ = "0.1.0"

__all__ = [
    "BowenContext",
    "CountTable",
    "DimensionReport",
    "EstimationParams",
    "Fixture",
    "MdimError",
    "MetricSpace",
    "OracleBound",
    "PrecisionBudgetError",
    "RelationCheck",
    "ResolutionError",
    "SystemSequence",
    "UnknownFixtureError",
    "UnsupportedParameterError",
    "bowen_distance",
    "compose_block",
    "estimate_fixture",
    "fixture_ids",
    "get_fixture",
    "mmd_estimate",
    "rate_curve",
    "run_check",
    "__version__",
]
