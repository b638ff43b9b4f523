import numpy as np
import pytest

from ptframes.builtin_curves import BUILTIN_CURVES, HELIX4D_ANGLE
from ptframes.curve import CurveSpec, ensure_unit_speed, realize_curve
from ptframes.frames import compute_frenet, compute_pt_frame, random_normal_rotation
from ptframes.helix import (
    NonzeroCurvatureRequired,
    NotInclinedError,
    compute_axis,
    criterion_residuals,
    darboux_vector_field,
    detect_inclined,
    detect_spherical,
    harmonic_by_integration,
    harmonic_closed_form,
    spherical_image,
)
from ptframes.numerics import constancy_score, finite_difference, linear_least_squares


@pytest.fixture(scope="module")
def pipelines():
    cache = {}

    def load(name):
        if name not in cache:
            sink = {}
            verdict = detect_inclined(realize_curve(BUILTIN_CURVES[name]), pipeline=sink)
            sink["verdict"] = verdict
            cache[name] = sink
        return cache[name]

    return load


@pytest.fixture(scope="module")
def planar_arc():
    spec = CurveSpec("arc", 3, ("cos(s)", "sin(s)", "0"), 0.0, 3.0, 501)
    curve = realize_curve(spec)
    return curve, compute_pt_frame(curve, compute_frenet(curve))


def sphere_torus_spec(drift=0.0):
    r = float(np.sqrt(0.5))
    a = float(np.sqrt(2 / 5))
    b = float(np.sqrt(8 / 5))
    comps = [f"{r!r}*cos({a!r}*s)", f"{r!r}*sin({a!r}*s)",
             f"{r!r}*cos({b!r}*s)", f"{r!r}*sin({b!r}*s)"]
    if drift:
        comps[0] += f" + {drift!r}*s"
    name = "sphere-torus" if not drift else "sphere-torus-drift"
    return CurveSpec(name, 4, tuple(comps), 0.0, 12.0, 2001)


class TestHarmonicByIntegration:
    def test_example2_analytic_antiderivative(self, pipelines):
        # H1 = -(3/4) sin(4 s^2 / 5): axis e3 at cos(varphi) = 4/5 forces the
        # integration constant; the fit must recover it (approximately 0
        # relative to the domain-start anchoring)
        pipe = pipelines("example2")
        curve, harmonics = pipe["unit_curve"], pipe["harmonics"]
        s = curve.source_params
        expected = -0.75 * np.sin(0.8 * s ** 2)
        inner = curve.interior
        assert np.max(np.abs(harmonics.values[0] - expected)[inner]) < 1e-4
        assert abs(harmonics.constants[0] + 0.75 * np.sin(0.8 * 0.04)) < 1e-4

    def test_example1_criterion_residual(self, pipelines):
        pipe = pipelines("example1")
        rms, rel = criterion_residuals(pipe["pt"], pipe["harmonics"],
                                       pipe["unit_curve"].interior)
        assert rms < 1e-5
        assert rel < 1e-5

    def test_cubic_no_constants_work(self, pipelines):
        # brute-force oracle: scan integration constants on a grid and check
        # no choice beats the least-squares residual scale
        pipe = pipelines("cubic")
        pt, curve = pipe["pt"], pipe["unit_curve"]
        inner = curve.interior
        k = np.stack(pt.k)[:, inner]
        from ptframes.numerics import cumulative_antiderivative
        integrals = np.stack([cumulative_antiderivative(ki, pt.grid, 0.0)
                              for ki in pt.k])[:, inner]
        best = np.inf
        for c1 in np.linspace(-3, 3, 41):
            for c2 in np.linspace(-3, 3, 41):
                combo = k[0] * (c1 - integrals[0]) + k[1] * (c2 - integrals[1])
                best = min(best, float(np.sqrt(np.mean(combo ** 2))))
        assert best > 1e-3
        assert pipe["verdict"].criterion_rms > 1e-3

    def test_rejects_zero_curvatures(self):
        spec = CurveSpec("line-ish", 3, ("s", "0", "0"), 0.0, 1.0, 201)
        curve = realize_curve(spec)
        pt = compute_pt_frame(curve, None)
        with pytest.raises(ValueError, match="vanish"):
            harmonic_by_integration(pt)


class TestHarmonicClosedForm:
    def test_example1_squared_norm_constant(self, pipelines):
        pipe = pipelines("example1")
        hc = harmonic_closed_form(pipe["pt"])
        keep = hc.retained(pipe["unit_curve"].interior)
        sq = hc.squared_norm()[keep]
        assert constancy_score(sq) < 1e-4
        assert np.mean(sq) == pytest.approx(16.0, rel=1e-4)  # tan^2(arctan 4)

    def test_helix4d_squared_norm_matches_angle(self, pipelines):
        pipe = pipelines("helix4d")
        hc = harmonic_closed_form(pipe["pt"])
        keep = hc.retained(pipe["unit_curve"].interior)
        sq = hc.squared_norm()[keep]
        assert constancy_score(sq) < 1e-4
        assert np.mean(sq) == pytest.approx(np.tan(HELIX4D_ANGLE) ** 2, rel=1e-3)

    def test_planar_curve_rejected(self, planar_arc):
        _, pt = planar_arc
        with pytest.raises(NonzeroCurvatureRequired):
            harmonic_closed_form(pt)

    def test_printed_variant_gap_recorded(self, pipelines):
        hc = harmonic_closed_form(pipelines("helix4d")["pt"])
        assert hc.variant_form_gap is not None
        assert hc.variant_form_gap > 0.1  # the variant genuinely differs

    def test_routes_agree_exactly_on_inclined(self, pipelines):
        # closed form vs fitted antiderivatives: same functions exactly when
        # the curve is inclined (the two-direction content of H' = -k)
        for name, inclined in (("example1", True), ("example2", True),
                               ("helix3d", True), ("helix4d", True),
                               ("cubic", False)):
            pipe = pipelines(name)
            hc = harmonic_closed_form(pipe["pt"])
            keep = hc.retained(pipe["unit_curve"].interior)
            diff = np.max(np.abs(hc.values - pipe["harmonics"].values)[:, keep])
            scale = max(float(np.nanmax(np.abs(hc.values[:, keep]))), 1.0)
            assert (diff / scale <= 1e-3) == inclined, name

    def test_fitted_route_derivative_identity(self, pipelines):
        # fitted antiderivatives satisfy H_i' = -k_i by construction
        for name in ("example2", "cubic"):
            pipe = pipelines(name)
            pt, harmonics = pipe["pt"], pipe["harmonics"]
            inner = pipe["unit_curve"].interior
            for hi, ki in zip(harmonics.values, pt.k):
                resid = finite_difference(hi, pt.grid, 1) + ki
                assert np.sqrt(np.mean(resid[inner] ** 2)) < 1e-3


class TestDarboux:
    def test_norm_identity(self, pipelines):
        # |D|^2 = 1 + sum H_i^2 pointwise (orthonormal frame algebra)
        for name in ("example1", "helix4d", "cubic"):
            pipe = pipelines(name)
            darboux, harmonics = pipe["darboux"], pipe["harmonics"]
            inner = pipe["unit_curve"].interior
            lhs = np.sum(darboux.vectors ** 2, axis=1)
            rhs = 1.0 + harmonics.squared_norm()
            assert np.max(np.abs(lhs - rhs)[inner]) < 1e-10

    def test_constancy_separates_helix_from_cubic(self, pipelines):
        assert pipelines("example1")["darboux"].constancy < 1e-4
        assert pipelines("cubic")["darboux"].constancy > 1e-3

    def test_tangent_angle_constant_along_axis(self, pipelines):
        pipe = pipelines("example1")
        verdict = pipe["verdict"]
        inner = pipe["unit_curve"].interior
        alignment = (pipe["pt"].T @ verdict.axis)[inner]
        assert constancy_score(alignment) < 1e-4
        assert np.mean(alignment) == pytest.approx(np.cos(verdict.varphi), abs=1e-6)


class TestDetectInclined:
    @pytest.mark.parametrize("name,expected", [
        ("example1", True),
        ("example2", True),
        ("helix3d", True),
        ("helix4d", True),
        ("cubic", False),
    ])
    def test_verdicts(self, pipelines, name, expected):
        verdict = pipelines(name)["verdict"]
        assert verdict.is_inclined is expected
        assert not verdict.inconclusive

    def test_invariant_fields(self, pipelines):
        for name in ("example1", "helix4d"):
            v = pipelines(name)["verdict"]
            assert v.criterion_residual <= 1e-4
            assert v.darboux_constancy <= 1e-4
            assert np.linalg.norm(v.axis) == pytest.approx(1.0, abs=1e-12)

    def test_helix_axis_and_angle(self, pipelines):
        v = pipelines("helix3d")["verdict"]
        assert v.varphi == pytest.approx(np.pi / 4, abs=1e-4)
        assert abs(v.axis @ np.array([0.0, 0.0, 1.0])) >= 1 - 1e-6

    def test_helix4d_axis_and_angle(self, pipelines):
        v = pipelines("helix4d")["verdict"]
        assert v.varphi == pytest.approx(HELIX4D_ANGLE, abs=1e-3)
        assert abs(v.axis @ np.array([0.0, 0.0, 0.0, 1.0])) >= 1 - 1e-3

    def test_example_axes(self, pipelines):
        # both reference examples ride around e3
        for name, varphi in (("example1", np.arctan(4.0)),
                             ("example2", np.arccos(0.8))):
            v = pipelines(name)["verdict"]
            assert abs(v.axis[2]) >= 1 - 1e-6
            assert v.varphi == pytest.approx(varphi, abs=1e-5)

    def test_oracle_agreement(self, pipelines):
        for name in ("example1", "example2", "helix3d", "helix4d"):
            v = pipelines(name)["verdict"]
            assert v.axis_agreement >= 1 - 1e-3

    def test_planar_circle_degenerate(self):
        spec = CurveSpec("circle", 3, ("cos(s)", "sin(s)", "0"), 0.0, 6.0, 501)
        v = detect_inclined(realize_curve(spec))
        assert v.degenerate_planar
        assert not v.is_inclined
        assert not v.inconclusive

    def test_circle4d_planar_not_inclined(self, pipelines):
        v = pipelines("circle4d")["verdict"]
        assert v.degenerate_planar
        assert not v.is_inclined

    def test_lancret_consistency(self, pipelines):
        # 3d: verdict agrees with constancy of torsion/curvature, away from
        # the planar degeneracy
        for name, expected in (("example1", True), ("example2", True),
                               ("helix3d", True), ("cubic", False)):
            pipe = pipelines(name)
            frenet = pipe["frenet"]
            inner = pipe["unit_curve"].interior
            ratio = (frenet.kappa2 / frenet.kappa1)[inner]
            assert (constancy_score(ratio) < 1e-4) is expected, name

    def test_convention_invariance(self, pipelines):
        for name in ("example1", "helix4d"):
            curve = realize_curve(BUILTIN_CURVES[name])
            base = pipelines(name)["verdict"]
            for seed in (0, 1):
                rot = random_normal_rotation(curve.dimension - 1, seed)
                v = detect_inclined(curve, normal_rotation=rot)
                assert v.is_inclined == base.is_inclined
                assert abs(v.varphi - base.varphi) <= 1e-6
                assert np.max(np.abs(v.axis - base.axis)) <= 1e-6


class TestComputeAxis:
    def test_helix_angle(self, pipelines):
        pipe = pipelines("helix3d")
        axis, varphi = compute_axis(pipe["darboux"], pipe["pt"])
        assert varphi == pytest.approx(np.pi / 4, abs=1e-4)

    def test_consistency_with_squared_harmonics(self, pipelines):
        # 1/|D|^2 = cos^2 varphi and sum H^2 = tan^2 varphi
        pipe = pipelines("helix4d")
        axis, varphi = compute_axis(pipe["darboux"], pipe["pt"])
        mean_sq = float(np.mean(pipe["harmonics"].squared_norm()[
            pipe["unit_curve"].interior]))
        assert mean_sq == pytest.approx(np.tan(varphi) ** 2, rel=1e-3)

    def test_sign_fixed_toward_tangent(self, pipelines):
        pipe = pipelines("example2")
        axis, _ = compute_axis(pipe["darboux"], pipe["pt"])
        assert pipe["pt"].T[pipe["pt"].anchor_index] @ axis > 0

    def test_rejects_non_inclined(self, pipelines):
        pipe = pipelines("cubic")
        with pytest.raises(NotInclinedError):
            compute_axis(pipe["darboux"], pipe["pt"])


class TestSphericalImage:
    def test_unit_norm_positions(self, pipelines):
        pt = pipelines("example1")["pt"]
        image = spherical_image(pt, 1)
        norms = np.linalg.norm(image.positions, axis=1)
        # the image is resampled through splines; stays on the sphere
        assert np.max(np.abs(norms - 1.0)) < 1e-7

    def test_image_speed_is_curvature_magnitude(self, pipelines):
        pipe = pipelines("example1")
        pt = pipe["pt"]
        m1_rate = finite_difference(pt.M[0], pt.grid, 1)
        speed = np.linalg.norm(m1_rate, axis=1)
        inner = pipe["unit_curve"].interior
        rel = np.abs(speed - np.abs(pt.k[0]))[inner] / np.abs(pt.k[0])[inner]
        assert np.max(rel) < 1e-4

    def test_image_tangent_is_minus_tangent(self, pipelines):
        # dM1/ds = -k1 T with k1 > 0 here, so the image tangent is -T
        pipe = pipelines("example1")
        pt = pipe["pt"]
        m1_rate = finite_difference(pt.M[0], pt.grid, 1)
        t_img = m1_rate / np.linalg.norm(m1_rate, axis=1)[:, None]
        inner = pipe["unit_curve"].interior
        assert np.max(np.linalg.norm((t_img + pt.T)[inner], axis=1)) < 1e-3

    def test_image_inclined_with_same_axis(self, pipelines):
        pipe = pipelines("example1")
        image = spherical_image(pipe["pt"], 1)
        v_img = detect_inclined(image)
        assert v_img.is_inclined
        assert abs(v_img.axis @ pipelines("example1")["verdict"].axis) >= 1 - 1e-3

    def test_vanishing_curvature_rejected(self, pipelines):
        # anchoring at the domain start instead of the curve anchor makes k1
        # cross zero inside the window
        pipe = pipelines("example1")
        curve = pipe["unit_curve"]
        pt0 = compute_pt_frame(curve, pipe["frenet"], anchor_index=4)
        with pytest.raises(ValueError, match="vanishes"):
            spherical_image(pt0, 1)

    def test_which_bounds(self, pipelines):
        with pytest.raises(ValueError):
            spherical_image(pipelines("example1")["pt"], 3)


class TestDetectSpherical:
    def test_torus_curve_on_sphere(self):
        curve = ensure_unit_speed(realize_curve(sphere_torus_spec()))
        assert np.max(np.abs(np.linalg.norm(curve.positions, axis=1) - 1.0)) < 1e-12
        pt = compute_pt_frame(curve, compute_frenet(curve))
        verdict = detect_spherical(pt)
        assert verdict.is_spherical
        assert verdict.residual < 1e-5

    def test_drifted_copy_not_spherical(self):
        curve = ensure_unit_speed(realize_curve(sphere_torus_spec(drift=0.15)))
        pt = compute_pt_frame(curve, compute_frenet(curve))
        verdict = detect_spherical(pt)
        assert not verdict.is_spherical
        assert verdict.residual > 1e-2

    def test_rigid_translation_preserves_spherical(self):
        # curvatures are translation invariant, so a rigidly shifted copy of
        # a sphere curve is still a sphere curve (about the shifted center)
        spec = sphere_torus_spec()
        shifted = CurveSpec("shifted", 4,
                            tuple(c + " + 0.3" for c in spec.components),
                            spec.s_min, spec.s_max, spec.samples)
        curve = ensure_unit_speed(realize_curve(shifted))
        pt = compute_pt_frame(curve, compute_frenet(curve))
        assert detect_spherical(pt).is_spherical

    def test_circle4d_rank_deficient_fit(self, pipelines):
        pipe = pipelines("circle4d")
        verdict = detect_spherical(pipe["pt"])
        assert verdict.is_spherical
        assert verdict.rank_deficient
        assert verdict.residual < 1e-8
        # |c| = sphere radius projection: the circle's own radius 4/5
        assert np.linalg.norm(verdict.constants) == pytest.approx(0.8, abs=1e-6)

    def test_helix4d_not_spherical(self, pipelines):
        verdict = detect_spherical(pipelines("helix4d")["pt"])
        assert not verdict.is_spherical
        assert verdict.residual > 1e-2

    def test_planar_circle_3d(self, planar_arc):
        # two-constant analogue: c1 k1 + c2 k2 = -1 with k = (1, 0)
        _, pt = planar_arc
        verdict = detect_spherical(pt)
        assert verdict.is_spherical
        assert verdict.rank_deficient
        assert verdict.constants[0] == pytest.approx(-1.0, abs=1e-8)


class TestTheoremRelations:
    def test_normal_axis_projections(self, pipelines):
        # <M_i, X> = H_i <T, X> on inclined curves
        for name in ("example1", "example2", "helix3d", "helix4d"):
            pipe = pipelines(name)
            verdict, pt, harmonics = pipe["verdict"], pipe["pt"], pipe["harmonics"]
            inner = pipe["unit_curve"].interior
            t_axis = pt.T @ verdict.axis
            for hi, mi in zip(harmonics.values, pt.M):
                resid = (mi @ verdict.axis - hi * t_axis)[inner]
                assert np.sqrt(np.mean(resid ** 2)) < 1e-3, name

    def test_transport_matrix_row_identity(self, pipelines):
        # d/ds (1, H1, ..) = F (1, H1, ..) reduces to sum k_i H_i = 0 and
        # H_i' = -k_i; the scalar row discriminates
        for name, inclined in (("example1", True), ("helix4d", True),
                               ("cubic", False)):
            pipe = pipelines(name)
            rms, _ = criterion_residuals(pipe["pt"], pipe["harmonics"],
                                         pipe["unit_curve"].interior)
            assert (rms <= 1e-4) is inclined, name

    def test_sum_squares_constancy(self, pipelines):
        for name in ("example1", "example2", "helix3d", "helix4d"):
            pipe = pipelines(name)
            sq = pipe["harmonics"].squared_norm()[pipe["unit_curve"].interior]
            assert constancy_score(sq) <= 1e-4, name
            varphi = pipe["verdict"].varphi
            assert np.mean(sq) == pytest.approx(np.tan(varphi) ** 2, rel=1e-3)
        cubic_sq = pipelines("cubic")["harmonics"].squared_norm()[
            pipelines("cubic")["unit_curve"].interior]
        assert constancy_score(cubic_sq) > 1e-2
