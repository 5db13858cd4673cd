"""Active-time and busy-time scheduling: approximation algorithms, bounds and exact oracles."""
from .core import ActiveInstance, BusyInstance, Job, TimeInterval, demand_profile, lower_bounds, span_of

__all__ = ["ActiveInstance", "BusyInstance", "Job", "TimeInterval", "demand_profile", "lower_bounds", "span_of"]
__version__ = "0.1.0"
