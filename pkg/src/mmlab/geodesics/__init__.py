"""Exact polyhedral distances, the exponential map and the geodesic flow."""

from .distance import DistanceAnswer, analytic_distances, distance
from .flow import Event, FlowResult, events_to_csv, exp_map, flow
from .unfold import WindowSet, propagate, propagate_with_relay

__all__ = ["DistanceAnswer", "analytic_distances", "distance", "Event", "FlowResult", "events_to_csv",
           "exp_map", "flow", "WindowSet", "propagate", "propagate_with_relay"]
