"""Harmonic curvature functions, the Darboux vector field, and detection of
inclined curves (generalized helices) with axis and angle recovery.

The detection criterion: a curve is inclined exactly when constants c_i exist
making H_i = -integral(k_i) + c_i satisfy sum k_i H_i = 0, equivalently when
the Darboux field D = T + sum H_i M_i is a constant vector. The constants are
fitted by least squares because the antiderivatives are only defined up to
constants. Two independent routes must agree before a verdict is issued: the
Darboux construction, and a tangent-covariance oracle (the tangent image of an
inclined curve lies in a fixed hyperplane whose normal is the axis).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve import SampledCurve, curve_from_positions, ensure_unit_speed, reparametrize_by_arclength
from .frames import (
    DegenerateCurveError,
    PTFrameField,
    compute_frenet,
    compute_pt_frame,
)
from .numerics import (
    ToleranceConfig,
    constancy_score,
    cumulative_antiderivative,
    finite_difference,
    linear_least_squares,
    smallest_eigenvector_symmetric,
)

__all__ = [
    "HarmonicCurvatures",
    "DarbouxField",
    "InclinedVerdict",
    "SphericalVerdict",
    "NonzeroCurvatureRequired",
    "NotInclinedError",
    "harmonic_closed_form",
    "harmonic_by_integration",
    "darboux_vector_field",
    "detect_inclined",
    "compute_axis",
    "spherical_image",
    "detect_spherical",
]

# stencil halo: nodes this close to a masked node inherit its contamination
MASK_HALO = 4
PLANAR_ANGLE_EPS = 1e-3


class NonzeroCurvatureRequired(ValueError):
    """A transported curvature is identically zero where the closed-form
    harmonic functions need to divide by it."""


class NotInclinedError(ValueError):
    """Axis extraction requested for a curve that is not inclined."""


@dataclass(frozen=True)
class HarmonicCurvatures:
    """Per-node harmonic curvature functions H_i.

    ``values`` is (d-1, n); masked nodes (closed-form denominators vanishing,
    plus a stencil halo) are flagged in ``mask`` and hold NaN. The integral
    route masks nothing beyond the boundary nodes. ``constants`` are the
    fitted integration constants (integral route only); ``variant_form_gap``
    records, for the 4d closed form, the median disagreement between the
    derivation used here and an alternative form of the same formulas (see
    harmonic_closed_form).
    """

    values: np.ndarray
    mask: np.ndarray
    method: str
    constants: np.ndarray | None = None
    fit_rank_deficient: bool = False
    variant_form_gap: float | None = None

    @property
    def count(self):
        return self.values.shape[0]

    def retained(self, interior):
        keep = ~self.mask
        keep[:interior.start] = False
        keep[interior.stop:] = False
        return keep

    def squared_norm(self):
        return np.sum(self.values ** 2, axis=0)


@dataclass(frozen=True)
class DarbouxField:
    """D = T + sum H_i M_i with per-component constancy diagnostics.

    Component scores are std(D_j) / (|mean vector| + tiny): the natural scale
    of a constant vector field is its magnitude, and normalizing per-component
    means would explode for axis components that are legitimately zero.
    """

    vectors: np.ndarray
    mean: np.ndarray
    component_scores: np.ndarray
    retained: np.ndarray

    @property
    def constancy(self):
        return float(np.max(self.component_scores))


@dataclass(frozen=True)
class InclinedVerdict:
    is_inclined: bool
    inconclusive: bool
    criterion_residual: float        # scale-normalized RMS of sum k_i H_i
    criterion_rms: float             # absolute RMS of sum k_i H_i
    darboux_constancy: float
    axis: np.ndarray
    varphi: float
    oracle_axis: np.ndarray
    axis_agreement: float
    degenerate_planar: bool
    oracle_score: float
    tangent_plane_eigenvalue: float
    fit_rank_deficient: bool

    def exit_status(self):
        if self.inconclusive:
            return "inconclusive"
        return "inclined" if self.is_inclined else "not_inclined"


@dataclass(frozen=True)
class SphericalVerdict:
    is_spherical: bool
    constants: np.ndarray
    residual: float
    rank_deficient: bool


# ---------------------------------------------------------------------------
# harmonic curvature functions
# ---------------------------------------------------------------------------

def _grow_mask(mask, halo=MASK_HALO):
    out = mask.copy()
    for shift in range(1, halo + 1):
        out[shift:] |= mask[:-shift]
        out[:-shift] |= mask[shift:]
    return out


# closed-form masking: the cascades divide by derivative quantities that pass
# through zero and by ratios with poles; a node survives only when every
# divisor sits above this fraction of its own (already-guarded) median scale
# and every intermediate stays below the pole cap, with a halo wide enough to
# clear the nested stencils
_GUARD_FRACTION = 0.3
_POLE_CAP = 10.0
_CLOSED_FORM_HALO = 8


class _MaskBuilder:
    def __init__(self, n):
        self.bad = np.zeros(n, dtype=bool)

    def good(self):
        return ~_grow_mask(self.bad, _CLOSED_FORM_HALO)

    def _scale(self, magnitudes):
        kept = magnitudes[self.good()]
        return float(np.median(kept)) if kept.size else 0.0

    def guard_divisor(self, values, absolute_floor=1e-8):
        mags = np.abs(values)
        self.bad |= mags < max(_GUARD_FRACTION * self._scale(mags), absolute_floor)

    def cap_pole(self, values):
        mags = np.abs(values)
        scale = self._scale(mags)
        if scale > 0:
            self.bad |= mags > _POLE_CAP * scale


def harmonic_closed_form(pt: PTFrameField, tol: ToleranceConfig | None = None) -> HarmonicCurvatures:
    """Closed-form harmonic curvatures from the transported curvature ratios.

    3d: with f = k1/k2, H1 = k2 (1 + f^2) / f', H2 = -k1 (1 + f^2) / f'.
    4d: eliminate <M_i, X> from the derivative cascade of
    sum k_i <M_i, X> = 0 using A = k2/k1, B = k3/k1 and G = |k|^2 / (k1 A'):
        H3 = [k2 + (B'/A') k3 + G'] / (B'/A')',   H2 = -(B'/A') H3 + G,
        H1 = -(A H2 + B H3).
    An alternative form sometimes quoted for these formulas divides by (k1 A) instead of
    (k1 A'); re-running the elimination shows the A' denominator is the one
    the cascade actually produces, so that is computed here and the median
    gap to the variant is recorded in ``variant_form_gap``.

    Nodes where any divisor vanishes or any intermediate ratio blows up are
    masked, with a stencil halo. Diagnostics only: the detection verdict never
    uses this route. Raises NonzeroCurvatureRequired when a curvature is zero
    on essentially the whole grid (planar curves), and ValueError when masking
    removes every node.
    """
    tol = tol or ToleranceConfig()
    grid = pt.grid
    d1 = len(pt.k)
    k = np.stack(pt.k)

    k_scale = np.median(np.abs(k), axis=1)
    dead = k_scale < 1e-10 * max(float(np.max(np.abs(k))), 1e-300)
    if np.any(dead):
        raise NonzeroCurvatureRequired(
            f"transported curvature k{int(np.nonzero(dead)[0][0]) + 1} vanishes identically")

    builder = _MaskBuilder(grid.n)
    variant_gap = None
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if d1 == 2:
            builder.guard_divisor(k[1])
            f = k[0] / k[1]
            builder.cap_pole(f)
            f_dot = finite_difference(np.where(np.isfinite(f), f, 0.0), grid, 1)
            builder.guard_divisor(f_dot)
            h1 = k[1] * (1 + f ** 2) / f_dot
            h2 = -k[0] * (1 + f ** 2) / f_dot
            values = np.stack([h1, h2])
        else:
            builder.guard_divisor(k[0])
            a = k[1] / k[0]
            b = k[2] / k[0]
            builder.cap_pole(a)
            builder.cap_pole(b)
            a_dot = finite_difference(np.where(np.isfinite(a), a, 0.0), grid, 1)
            b_dot = finite_difference(np.where(np.isfinite(b), b, 0.0), grid, 1)
            builder.guard_divisor(a_dot)
            ratio = b_dot / a_dot
            builder.cap_pole(ratio)
            ratio_dot = finite_difference(np.where(np.isfinite(ratio), ratio, 0.0), grid, 1)
            builder.guard_divisor(ratio_dot)
            norm2 = np.sum(k ** 2, axis=0)
            g = norm2 / (k[0] * a_dot)
            builder.cap_pole(g)
            g_dot = finite_difference(np.where(np.isfinite(g), g, 0.0), grid, 1)
            h3 = (k[1] + ratio * k[2] + g_dot) / ratio_dot
            h2 = -ratio * h3 + g
            h1 = -(a * h2 + b * h3)
            values = np.stack([h1, h2, h3])

            g_var = norm2 / (k[0] * a)
            g_var_dot = finite_difference(np.where(np.isfinite(g_var), g_var, 0.0), grid, 1)
            h3_var = (k[1] + ratio * k[2] + g_var_dot) / ratio_dot
            h2_var = -ratio * h3_var + g_var
            usable = builder.good() & np.all(np.isfinite(values), axis=0)
            if np.any(usable):
                gap = np.concatenate([(h2 - h2_var)[usable], (h3 - h3_var)[usable]])
                gap = gap[np.isfinite(gap)]
                # median: the variant has extra poles, so an RMS would only
                # measure how close the worst retained node sits to one
                variant_gap = float(np.median(np.abs(gap))) if gap.size else None

    builder.bad |= ~np.all(np.isfinite(values), axis=0)
    mask = _grow_mask(builder.bad, _CLOSED_FORM_HALO)
    if np.all(mask):
        raise ValueError("closed-form harmonic curvatures are undefined at every node "
                         "(constant curvature ratios)")
    values = np.where(mask[None, :], np.nan, values)
    return HarmonicCurvatures(values=values, mask=mask, method="closed_form",
                              variant_form_gap=variant_gap)


def harmonic_by_integration(pt: PTFrameField,
                            tol: ToleranceConfig | None = None,
                            interior: slice | None = None) -> HarmonicCurvatures:
    """Harmonic curvatures from H_i' = -k_i with fitted integration constants.

    H_i = -integral(k_i) + c_i where the c_i minimize the RMS of
    sum k_i(s) H_i(s) over the retained nodes: the defining relation fixes
    only the derivatives, and the fit makes the criterion well posed for any
    anchoring. Raises ValueError when every curvature is identically zero.
    """
    tol = tol or ToleranceConfig()
    grid = pt.grid
    d1 = len(pt.k)
    k = np.stack(pt.k)
    if np.max(np.abs(k)) < 1e-14:
        raise ValueError("all transported curvatures vanish: nothing to fit")
    interior = interior or slice(MASK_HALO, grid.n - MASK_HALO)

    integrals = np.stack([cumulative_antiderivative(ki, grid, 0.0) for ki in pt.k])
    design = k[:, interior].T
    target = np.sum(k * integrals, axis=0)[interior]
    fit = linear_least_squares(design, target)

    values = -integrals + fit.coefficients[:, None]
    mask = np.zeros(grid.n, dtype=bool)
    return HarmonicCurvatures(values=values, mask=mask, method="integral_fit",
                              constants=fit.coefficients,
                              fit_rank_deficient=fit.rank_deficient)


def criterion_residuals(pt: PTFrameField, harmonics: HarmonicCurvatures, interior):
    """(absolute RMS, scale-normalized RMS) of sum k_i H_i over retained nodes."""
    keep = harmonics.retained(interior)
    k = np.stack(pt.k)
    combo = np.sum(k * harmonics.values, axis=0)[keep]
    rms = float(np.sqrt(np.mean(combo ** 2)))
    scale = float(np.sqrt(np.mean((np.linalg.norm(k, axis=0)
                                   * np.linalg.norm(harmonics.values, axis=0))[keep] ** 2)))
    return rms, rms / (scale + 1e-300)


# ---------------------------------------------------------------------------
# Darboux vector field and axis recovery
# ---------------------------------------------------------------------------

def darboux_vector_field(pt: PTFrameField, harmonics: HarmonicCurvatures,
                         interior: slice | None = None) -> DarbouxField:
    """Assemble D = T + sum H_i M_i and score its constancy per component."""
    interior = interior or slice(MASK_HALO, pt.grid.n - MASK_HALO)
    vectors = pt.T.copy()
    for hi, mi in zip(harmonics.values, pt.M):
        vectors = vectors + np.where(np.isfinite(hi), hi, 0.0)[:, None] * mi
    keep = harmonics.retained(interior)
    kept = vectors[keep]
    mean = kept.mean(axis=0)
    scale = np.linalg.norm(mean) + 1e-300
    scores = np.std(kept, axis=0) / scale
    return DarbouxField(vectors=vectors, mean=mean, component_scores=scores,
                        retained=keep)


def compute_axis(darboux: DarbouxField, pt: PTFrameField,
                 tol: ToleranceConfig | None = None, require_inclined=True):
    """Axis and constant angle from the mean Darboux vector.

    X = mean(D)/|mean(D)| with the sign fixed so <T(anchor), X> > 0, and
    varphi = arccos(1/|mean(D)|). With ``require_inclined`` the Darboux field
    must actually be constant to tolerance (NotInclinedError otherwise).
    """
    tol = tol or ToleranceConfig()
    if require_inclined and darboux.constancy > tol.constancy_tol:
        raise NotInclinedError(
            f"Darboux field is not constant (score {darboux.constancy:.3g})")
    magnitude = float(np.linalg.norm(darboux.mean))
    axis = darboux.mean / (magnitude + 1e-300)
    if float(pt.T[pt.anchor_index] @ axis) < 0:
        axis = -axis
    varphi = float(np.arccos(np.clip(1.0 / max(magnitude, 1.0), -1.0, 1.0)))
    return axis, varphi


def _tangent_covariance_axis(tangents):
    centered = tangents - tangents.mean(axis=0)
    cov = centered.T @ centered / len(tangents)
    return smallest_eigenvector_symmetric(cov)


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------

def detect_inclined(curve: SampledCurve,
                    tol: ToleranceConfig | None = None,
                    normal_rotation: np.ndarray | None = None,
                    pipeline=None) -> InclinedVerdict:
    """Full inclined-curve decision for a sampled curve.

    Reparametrizes to arc length when needed, builds Frenet (falling back to
    a coordinate-completed transport when the Frenet frame is degenerate but
    the curve is regular), transports the normal frame, fits the harmonic
    curvatures and assembles the Darboux field. The verdict requires the
    integral criterion and the Darboux constancy to pass, and is
    cross-checked against the tangent-covariance oracle: when the two routes
    disagree the verdict is flagged inconclusive. ``normal_rotation`` rotates
    the initial normal frame (the verdict is invariant to it; exposed for the
    convention test). ``pipeline``, when given, receives the intermediate
    fields (dict) for reporting.
    """
    tol = tol or ToleranceConfig()
    unit = ensure_unit_speed(curve, tol)
    try:
        frenet = compute_frenet(unit, tol)
    except DegenerateCurveError:
        frenet = None
    pt = compute_pt_frame(unit, frenet, tol, normal_rotation=normal_rotation)
    interior = unit.interior

    try:
        harmonics = harmonic_by_integration(pt, tol, interior)
    except ValueError as err:
        raise DegenerateCurveError(f"no transported curvature to analyze ({err})") from err
    darboux = darboux_vector_field(pt, harmonics, interior)
    criterion_rms, criterion_rel = criterion_residuals(pt, harmonics, interior)

    axis, varphi = compute_axis(darboux, pt, tol, require_inclined=False)

    tangents = pt.T[interior]
    plane_eigenvalue, oracle_axis = _tangent_covariance_axis(tangents)
    alignment = tangents @ oracle_axis
    oracle_score = constancy_score(alignment)
    mean_alignment = float(np.mean(alignment))

    # the oracle axis sign is arbitrary; orient it like the Darboux axis
    if mean_alignment < 0:
        oracle_axis = -oracle_axis
        alignment = -alignment
        mean_alignment = -mean_alignment

    degenerate_planar = (float(np.std(alignment)) <= PLANAR_ANGLE_EPS
                         and abs(mean_alignment) <= PLANAR_ANGLE_EPS)

    darboux_route = (criterion_rel <= tol.residual_tol
                     and darboux.constancy <= tol.constancy_tol
                     and not degenerate_planar)
    oracle_route = (oracle_score <= tol.constancy_tol
                    and not degenerate_planar)

    if pipeline is not None:
        pipeline.update(unit_curve=unit, frenet=frenet, pt=pt,
                        harmonics=harmonics, darboux=darboux)

    return InclinedVerdict(
        is_inclined=bool(darboux_route and oracle_route),
        inconclusive=bool(darboux_route != oracle_route),
        criterion_residual=criterion_rel,
        criterion_rms=criterion_rms,
        darboux_constancy=darboux.constancy,
        axis=axis,
        varphi=varphi,
        oracle_axis=oracle_axis,
        axis_agreement=float(abs(axis @ oracle_axis)),
        degenerate_planar=bool(degenerate_planar),
        oracle_score=float(oracle_score),
        tangent_plane_eigenvalue=float(plane_eigenvalue),
        fit_rank_deficient=harmonics.fit_rank_deficient,
    )


# ---------------------------------------------------------------------------
# spherical images and the spherical criterion
# ---------------------------------------------------------------------------

def spherical_image(pt: PTFrameField, which: int,
                    tol: ToleranceConfig | None = None) -> SampledCurve:
    """Curve traced by the transported normal M_which on the unit sphere,
    reparametrized by its own arc length (the image speed is |k_which|).
    Raises ValueError when that curvature vanishes somewhere on the grid."""
    tol = tol or ToleranceConfig()
    if which not in range(1, len(pt.M) + 1):
        raise ValueError(f"which must be in 1..{len(pt.M)}")
    k = pt.k[which - 1]
    interior = slice(MASK_HALO, pt.grid.n - MASK_HALO)
    kin = k[interior]
    crosses = np.any(kin[:-1] * kin[1:] < 0)
    if crosses or np.min(np.abs(kin)) < 1e-6:
        bad = pt.grid.values[int(np.argmin(np.abs(k)))]
        raise ValueError(f"transported curvature k{which} vanishes near s={bad:.6g}; "
                         "the spherical image is singular there")
    image = curve_from_positions(pt.grid.values, pt.M[which - 1],
                                 name=f"spherical-image-M{which}")
    return reparametrize_by_arclength(image, tol)


def detect_spherical(pt: PTFrameField,
                     tol: ToleranceConfig | None = None,
                     interior: slice | None = None) -> SphericalVerdict:
    """Fit constants c with sum c_i k_i = -1; small residual means the curve
    lies on some sphere (any center). Rank-deficient designs (constant or
    vanishing curvature components) are solved minimum-norm and flagged."""
    tol = tol or ToleranceConfig()
    interior = interior or slice(MASK_HALO, pt.grid.n - MASK_HALO)
    design = np.stack(pt.k, axis=1)[interior]
    target = -np.ones(design.shape[0])
    fit = linear_least_squares(design, target)
    return SphericalVerdict(
        is_spherical=bool(fit.residual_rms <= tol.residual_tol),
        constants=fit.coefficients,
        residual=fit.residual_rms,
        rank_deficient=fit.rank_deficient,
    )
