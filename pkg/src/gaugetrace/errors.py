"""Exception types shared across the package."""


class GaugeTraceError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(GaugeTraceError):
    pass


class SingularInput(GaugeTraceError):
    pass


class OutOfDomain(GaugeTraceError):
    pass


class StencilOutOfRange(GaugeTraceError):
    pass


class IntegrationDiverged(GaugeTraceError):
    pass


class NonOrthogonalGauge(GaugeTraceError):
    pass


class WeightOutOfRange(GaugeTraceError):
    pass


class UnsupportedField(GaugeTraceError):
    pass


class ConfigError(GaugeTraceError):
    pass


class PropertyViolation(GaugeTraceError):
    """A checked mathematical inequality or identity failed beyond tolerance."""
