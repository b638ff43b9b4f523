"""Full-curve analysis assembled into a report, with text and structured
(key = value) renderings."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curve import CurveSpec, SampledCurve, realize_curve
from .frames import (
    DegenerateCurveError,
    angles_between_frames,
    compute_frenet,
    random_normal_rotation,
)
from .helix import (
    InclinedVerdict,
    NonzeroCurvatureRequired,
    SphericalVerdict,
    detect_inclined,
    detect_spherical,
    harmonic_closed_form,
)
from .numerics import ToleranceConfig, constancy_score

__all__ = ["AnalysisReport", "analyze_curve"]


def _span(values, interior):
    kept = values[interior]
    return float(np.min(kept)), float(np.max(kept))


@dataclass
class AnalysisReport:
    curve_name: str
    dimension: int
    domain: tuple
    samples: int
    unit_speed_input: bool
    reparametrized: bool
    arclength_domain: tuple
    frenet_available: bool
    frenet_note: str
    curvature_ranges: dict              # kappa_i -> (min, max) on the input grid
    lancret_ratio_mean: float | None    # kappa2/kappa1 (3d, Frenet available)
    lancret_ratio_score: float | None
    transported_ranges: dict            # k_i -> (min, max), unit-speed grid
    inclined: InclinedVerdict
    spherical: SphericalVerdict
    harmonic_constants: np.ndarray
    closed_form_note: str
    closed_form_masked: int
    variant_form_gap: float | None
    gimbal_nodes: int | None            # 4d only
    tolerances: ToleranceConfig
    notes: list = field(default_factory=list)

    # ------------------------------------------------------------------
    def verdict_word(self):
        return self.inclined.exit_status()

    def to_text(self):
        lines = [
            f"curve {self.curve_name} (E{self.dimension}), "
            f"domain [{self.domain[0]:g}, {self.domain[1]:g}], {self.samples} samples",
        ]
        if self.reparametrized:
            lines.append(
                f"  input speed is not unit: reparametrized by arc length to "
                f"[{self.arclength_domain[0]:.6g}, {self.arclength_domain[1]:.6g}]")
        else:
            lines.append("  input is unit speed (arc-length parameter)")
        if self.frenet_available:
            for name, (lo, hi) in self.curvature_ranges.items():
                lines.append(f"  {name}: min {lo:.6g}, max {hi:.6g}")
            if self.lancret_ratio_mean is not None:
                lines.append(
                    f"  torsion/curvature: mean {self.lancret_ratio_mean:.6g} "
                    f"(constancy score {self.lancret_ratio_score:.3g})")
        else:
            lines.append(f"  Frenet frame unavailable: {self.frenet_note}")
        for name, (lo, hi) in self.transported_ranges.items():
            lines.append(f"  {name}: min {lo:.6g}, max {hi:.6g}")

        v = self.inclined
        word = {"inclined": "INCLINED (generalized helix)",
                "not_inclined": "NOT INCLINED",
                "inconclusive": "INCONCLUSIVE (detection routes disagree)"}[v.exit_status()]
        lines.append(f"verdict: {word}")
        lines.append(f"  integral criterion residual: {v.criterion_rms:.3g} RMS "
                     f"(normalized {v.criterion_residual:.3g})")
        lines.append(f"  Darboux constancy: {v.darboux_constancy:.3g}; "
                     f"tangent-covariance score: {v.oracle_score:.3g}")
        if v.is_inclined:
            axis = ", ".join(f"{x:+.6f}" for x in v.axis)
            lines.append(f"  axis: ({axis})")
            lines.append(f"  constant angle: {v.varphi:.6f} rad "
                         f"(cos = {np.cos(v.varphi):.6f})")
            lines.append(f"  axis agreement between routes: {v.axis_agreement:.8f}")
        if v.degenerate_planar:
            lines.append("  curve is planar (tangent orthogonal to the fixed "
                         "direction): excluded from the inclined class")
        s = self.spherical
        lines.append(f"spherical: {'yes' if s.is_spherical else 'no'} "
                     f"(residual {s.residual:.3g}"
                     + (", rank-deficient fit)" if s.rank_deficient else ")"))
        lines.append(f"harmonic integration constants: "
                     + ", ".join(f"{c:.6g}" for c in self.harmonic_constants))
        if self.closed_form_note:
            lines.append(f"closed-form harmonic functions: {self.closed_form_note}")
        elif self.closed_form_masked:
            lines.append(f"closed-form harmonic functions: {self.closed_form_masked} "
                         "node(s) masked")
        if self.variant_form_gap is not None:
            lines.append(f"  alternative-form gap (median): {self.variant_form_gap:.3g}")
        if self.gimbal_nodes is not None:
            lines.append(f"frame-angle chart: {self.gimbal_nodes} gimbal-degenerate node(s)")
        t = self.tolerances
        lines.append(f"tolerances: residual {t.residual_tol:g}, constancy "
                     f"{t.constancy_tol:g}, quadrature {t.quadrature_abs_tol:g}")
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines)

    def to_structured(self):
        """Flat machine-readable 'key = value' rendering (documented format:
        one pair per line, dotted keys, vectors as comma-separated floats)."""
        v = self.inclined
        s = self.spherical
        pairs = [
            ("curve.name", self.curve_name),
            ("curve.dimension", self.dimension),
            ("curve.domain", f"{self.domain[0]!r}, {self.domain[1]!r}"),
            ("curve.samples", self.samples),
            ("curve.unit_speed_input", self.unit_speed_input),
            ("curve.reparametrized", self.reparametrized),
            ("curve.arclength_domain",
             f"{self.arclength_domain[0]!r}, {self.arclength_domain[1]!r}"),
            ("frenet.available", self.frenet_available),
        ]
        if self.frenet_available:
            for name, (lo, hi) in self.curvature_ranges.items():
                pairs += [(f"frenet.{name}.min", lo), (f"frenet.{name}.max", hi)]
            if self.lancret_ratio_mean is not None:
                pairs += [("frenet.torsion_curvature_ratio.mean", self.lancret_ratio_mean),
                          ("frenet.torsion_curvature_ratio.score", self.lancret_ratio_score)]
        else:
            pairs.append(("frenet.note", self.frenet_note))
        for name, (lo, hi) in self.transported_ranges.items():
            pairs += [(f"transport.{name}.min", lo), (f"transport.{name}.max", hi)]
        pairs += [
            ("inclined.verdict", v.exit_status()),
            ("inclined.is_inclined", v.is_inclined),
            ("inclined.inconclusive", v.inconclusive),
            ("inclined.criterion_rms", v.criterion_rms),
            ("inclined.criterion_residual", v.criterion_residual),
            ("inclined.darboux_constancy", v.darboux_constancy),
            ("inclined.oracle_score", v.oracle_score),
            ("inclined.axis", ", ".join(repr(float(x)) for x in v.axis)),
            ("inclined.varphi", v.varphi),
            ("inclined.axis_agreement", v.axis_agreement),
            ("inclined.degenerate_planar", v.degenerate_planar),
            ("spherical.is_spherical", s.is_spherical),
            ("spherical.residual", s.residual),
            ("spherical.constants", ", ".join(repr(float(c)) for c in s.constants)),
            ("spherical.rank_deficient", s.rank_deficient),
            ("harmonic.constants",
             ", ".join(repr(float(c)) for c in self.harmonic_constants)),
            ("harmonic.closed_form_masked", self.closed_form_masked),
        ]
        if self.closed_form_note:
            pairs.append(("harmonic.closed_form_note", self.closed_form_note))
        if self.variant_form_gap is not None:
            pairs.append(("harmonic.variant_form_gap", self.variant_form_gap))
        if self.gimbal_nodes is not None:
            pairs.append(("angles.gimbal_nodes", self.gimbal_nodes))
        t = self.tolerances
        pairs += [
            ("tolerances.residual", t.residual_tol),
            ("tolerances.constancy", t.constancy_tol),
            ("tolerances.quadrature", t.quadrature_abs_tol),
        ]
        for i, note in enumerate(self.notes):
            pairs.append((f"note.{i}", note))

        def fmt(value):
            if isinstance(value, bool):
                return "true" if value else "false"
            if isinstance(value, float):
                return repr(value)
            return str(value)

        return "\n".join(f"{key} = {fmt(val)}" for key, val in pairs)


def analyze_curve(spec: CurveSpec,
                  tol: ToleranceConfig | None = None,
                  seed: int | None = None,
                  pipeline=None):
    """Run the whole pipeline on a curve spec and assemble the report.

    ``seed`` rotates the initial transported normals by a random rotation
    (the verdict is invariant; the seed is logged). ``pipeline`` (dict)
    receives the intermediate fields when provided.
    """
    tol = tol or ToleranceConfig()
    notes = []
    native = realize_curve(spec, tol)

    # geometric curvature summary in the curve's own parametrization
    curvature_ranges = {}
    lancret_mean = lancret_score = None
    frenet_note = ""
    try:
        native_frenet = compute_frenet(native, tol)
        frenet_available = True
        names = ["kappa1", "kappa2", "kappa3"][: native.dimension - 1]
        for name, values in zip(names, native_frenet.curvatures):
            curvature_ranges[name] = _span(values, native.interior)
        if native.dimension == 3:
            ratio = native_frenet.kappa2 / native_frenet.kappa1
            lancret_mean = float(np.mean(ratio[native.interior]))
            lancret_score = float(constancy_score(ratio[native.interior]))
    except DegenerateCurveError as err:
        frenet_available = False
        frenet_note = str(err)
        notes.append(f"Frenet frame degenerate ({err}); transported frame "
                     "anchored to a coordinate completion instead")

    rotation = None
    if seed is not None:
        rotation = random_normal_rotation(spec.dimension - 1, seed)
        notes.append(f"initial normal frame rotated with seed {seed}")

    sink = {} if pipeline is None else pipeline
    verdict = detect_inclined(native, tol, normal_rotation=rotation, pipeline=sink)
    unit: SampledCurve = sink["unit_curve"]
    pt = sink["pt"]
    if unit.reparametrized:
        notes.append("curve reparametrized by arc length before frame transport")

    transported_ranges = {}
    for i, ki in enumerate(pt.k, start=1):
        transported_ranges[f"k{i}"] = _span(ki, unit.interior)

    spherical = detect_spherical(pt, tol, unit.interior)

    closed_note = ""
    closed_masked = 0
    variant_gap = None
    try:
        closed = harmonic_closed_form(pt, tol)
        closed_masked = int(np.sum(closed.mask))
        variant_gap = closed.variant_form_gap
        sink["closed_form"] = closed
    except (NonzeroCurvatureRequired, ValueError) as err:
        closed_note = str(err)

    gimbal_nodes = None
    if spec.dimension == 4 and sink.get("frenet") is not None:
        angles = angles_between_frames(sink["frenet"], pt)
        gimbal_nodes = int(np.sum(angles.gimbal_mask))
        sink["angles"] = angles

    return AnalysisReport(
        curve_name=spec.name,
        dimension=spec.dimension,
        domain=(spec.s_min, spec.s_max),
        samples=spec.samples,
        unit_speed_input=native.unit_speed,
        reparametrized=unit.reparametrized,
        arclength_domain=(float(unit.grid.values[0]), float(unit.grid.values[-1])),
        frenet_available=frenet_available,
        frenet_note=frenet_note,
        curvature_ranges=curvature_ranges,
        lancret_ratio_mean=lancret_mean,
        lancret_ratio_score=lancret_score,
        transported_ranges=transported_ranges,
        inclined=verdict,
        spherical=spherical,
        harmonic_constants=sink["harmonics"].constants,
        closed_form_note=closed_note,
        closed_form_masked=closed_masked,
        variant_form_gap=variant_gap,
        gimbal_nodes=gimbal_nodes,
        tolerances=tol,
        notes=notes,
    )
