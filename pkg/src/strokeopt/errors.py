"""Exception types shared across the toolkit."""


class StrokeOptError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(StrokeOptError):
    """Invalid swimmer or run configuration."""


class DomainError(StrokeOptError):
    """Input outside the valid shape domain (e.g. the conformal map degenerates)."""


class DegenerateMetric(StrokeOptError):
    """The cost metric lost positive definiteness on the tangent plane."""


class ZeroDisplacement(StrokeOptError):
    """Efficiency is undefined for strokes with no net displacement."""


class ZeroControl(StrokeOptError):
    """Constant-speed reparameterization of an (essentially) zero control."""


class PoleDegeneracy(StrokeOptError):
    """A curve passes too close to the poles of both charts at once."""


class NotSimple(StrokeOptError):
    """The stroke self-intersects where a simple curve is required."""


class ChartOverflow(StrokeOptError):
    """The curve leaves the chart required by the computation."""


class NoSignChange(StrokeOptError):
    """The displacement density has constant sign; no zero level set exists."""


class Infeasible(StrokeOptError):
    """No optimizer start satisfied the constraints to the coarse tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics
