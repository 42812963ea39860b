"""Switching solutions of two-branch differential inclusions in the plane,
the solution-space metric, chaos indicators and path conditions."""

from .core import DEFAULT_TOL, Arc, Branch, BranchField, Inclusion, Region, RegionKind, Tolerances
from .errors import (BlowUpError, ClosureError, ConcatenationError, GeometryError, InclusionError,
                     NoEventError, ParameterError, SearchExhaustedError, WindowError)
from .metric import DEFAULT_METRIC, MetricConfig, nu, orbit_metric
from .solution import Ensemble, EventRule, Schedule, SolutionWindow, build_from_events, build_from_schedule

__version__ = "0.1.0"
