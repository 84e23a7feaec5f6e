"""Stroke-optimization toolkit for a planar potential-flow swimmer.

The shape of the swimmer lives on an ellipsoid of conformal coefficients;
net displacement is the line integral of a 1-form along closed shape curves
(strokes), and effort is measured by an added-mass Riemannian metric.  The
package evaluates these objects in closed form, certifies controllability by
a Lie-rank test, and solves the five classical stroke-optimization problems
over a periodic-spline stroke parameterization.
"""

from .errors import (
    ChartOverflow,
    ConfigError,
    DegenerateMetric,
    DomainError,
    Infeasible,
    NoSignChange,
    NotSimple,
    PoleDegeneracy,
    StrokeOptError,
    ZeroControl,
    ZeroDisplacement,
)
from .manifold import ChartCoord, ChartId, SwimmerConfig

__all__ = [
    "ChartCoord",
    "ChartId",
    "SwimmerConfig",
    "StrokeOptError",
    "ConfigError",
    "DomainError",
    "DegenerateMetric",
    "ZeroDisplacement",
    "ZeroControl",
    "PoleDegeneracy",
    "NotSimple",
    "ChartOverflow",
    "NoSignChange",
    "Infeasible",
]

__version__ = "0.1.0"
