"""Projection-free first-order optimization over smooth and strongly convex sets.

Feasibility and constrained concave-quadratic maximization are reduced to
unconstrained minimization of finite maximums of Minkowski gauges, whose
squares inherit smoothness and strong convexity from the underlying sets.
"""

from . import finitemax, gauge, instances, sets, solvers, steps, verify

__all__ = ["sets", "gauge", "finitemax", "steps", "solvers", "verify", "instances"]

__version__ = "0.1.0"
