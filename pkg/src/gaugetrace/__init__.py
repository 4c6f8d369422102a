"""Numerics for trace and extension theory of transported-derivative
(gauge-covariant) Sobolev fields on the half-space."""

from . import errors
from ._kernels import HAVE_NUMBA
from .connection import (
    AbelianMagneticConnection,
    AffineConnection,
    BoundaryRestriction,
    Chart,
    ConnectionForm,
    ConstantConnection,
    GaugeField,
    GaugeTransformedConnection,
    PullbackConnection,
    SampledConnection,
    ZeroConnection,
    boundary_restriction,
    commutator_defect,
    covariant_derivative,
    covariant_derivative_many,
    curvature,
    curvature_many,
    curvature_sup_norm,
    eval_connection,
    gauge_transform,
    pullback,
)
from .fields import (
    AnalyticBoundaryField,
    AnalyticField,
    SampledBoundaryField,
    SampledField,
)
from .grids import Box, HalfSpaceGrid, QuadratureSpec
from .lie import (
    OrthoOp,
    SkewMap,
    commutator,
    expm,
    hs_norm,
    op_norm,
    polar_retract,
    so3_generators,
)
from .sobolev import (
    GagliardoParams,
    SegmentTransportCache,
    SeminormResult,
    boundary_lp_energy,
    diamagnetic_defect,
    gagliardo_report,
    gagliardo_seminorm,
    weighted_w1p_energy,
)
from .trace_ext import (
    ExtensionConfig,
    InequalityReport,
    Mollifier,
    extend,
    extend_pointwise,
    extension_inequality_report,
    trace,
    trace_inequality_report,
)
from .transport import (
    AnalyticPath,
    Homotopy,
    PiecewiseLinearPath,
    Segment,
    TransportResult,
    ftc_reconstruct,
    holonomy_triangle,
    segment_transports,
    transport_parameter_derivative,
    transport_path,
    transport_segment,
    triangle_difference_bound,
)

__version__ = "0.1.0"
