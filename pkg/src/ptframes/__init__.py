"""Frenet and parallel-transport (Bishop) frames for parametric curves in
E3/E4, harmonic curvature and Darboux fields, and generalized-helix detection
with axis and angle recovery.
"""

from .builtin_curves import BUILTIN_CURVES, builtin_names, get_builtin
from .curve import (
    CurveSpec,
    FrameAnchor,
    SampledCurve,
    VanishingSpeedError,
    curve_from_positions,
    ensure_unit_speed,
    read_curve_spec,
    realize_curve,
    reparametrize_by_arclength,
    write_curve_spec,
)
from .exprlang import (
    EvaluationDomainError,
    ExpressionSyntaxError,
    ParseDiagnostic,
    evaluate,
    evaluate_on_grid,
    parse_expression,
    to_text,
)
from .frames import (
    DegenerateCurveError,
    EulerAngles,
    FrenetFrameField,
    PTFrameField,
    angles_between_frames,
    bishop_via_rotation_angle,
    compute_frenet,
    compute_pt_frame,
)
from .helix import (
    DarbouxField,
    HarmonicCurvatures,
    InclinedVerdict,
    NonzeroCurvatureRequired,
    SphericalVerdict,
    compute_axis,
    darboux_vector_field,
    detect_inclined,
    detect_spherical,
    harmonic_by_integration,
    harmonic_closed_form,
    spherical_image,
)
from .numerics import SampleGrid, ToleranceConfig
from .report import AnalysisReport, analyze_curve

__version__ = "0.1.0"
