"""Moving frames along sampled curves.

compute_frenet builds the orthonormal Frenet frame by Gram-Schmidt on the
derivative vectors and reads curvatures off the frame derivatives. The
read-offs divide by the parametrization speed, so the curvature values are the
geometric (arc-length-rate) invariants for any regular parametrization and
reduce to the plain inner products on unit-speed curves.

compute_pt_frame transports the normal frame by the self-consistent ODE
M' = -<T', M> T (fixed-step RK4, re-orthonormalized at every node), anchored
to the Frenet normals at the anchor node. bishop_via_rotation_angle is the
3-dimensional shortcut: rotate the Frenet normals by the running integral of
minus the torsion, taken over the curve's own grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .curve import FrameAnchor, SampledCurve
from .numerics import (
    SampleGrid,
    ToleranceConfig,
    cumulative_antiderivative,
    finite_difference,
    integrate_linear_ode,
)

__all__ = [
    "DegenerateCurveError",
    "FrenetFrameField",
    "PTFrameField",
    "EulerAngles",
    "compute_frenet",
    "compute_pt_frame",
    "bishop_via_rotation_angle",
    "angles_between_frames",
    "rotation_2d",
    "random_normal_rotation",
    "orthonormality_error",
    "determinant_error",
    "frenet_equation_residuals",
    "pt_equation_residuals",
    "pt_parallelism_error",
]

GIMBAL_EPS = 1e-6
CURVATURE_FLOOR = 1e-8
GRAM_FLOOR = 1e-10


class DegenerateCurveError(ValueError):
    """Frame construction failed (vanishing curvature or dependent
    derivatives); carries the parameter location."""

    def __init__(self, message, node_s=None):
        where = f" at s={node_s:.6g}" if node_s is not None else ""
        super().__init__(message + where)
        self.node_s = node_s


@dataclass(frozen=True)
class FrenetFrameField:
    """Per-node orthonormal frame {T, N, B1[, B2]} with curvatures.

    B2/kappa3 are None for 3-dimensional curves. ``speed`` records the
    parametrization rate the curvatures were corrected by.
    """

    grid: SampleGrid
    dimension: int
    T: np.ndarray
    N: np.ndarray
    B1: np.ndarray
    B2: np.ndarray | None
    kappa1: np.ndarray
    kappa2: np.ndarray
    kappa3: np.ndarray | None
    speed: np.ndarray

    @property
    def vectors(self):
        vecs = [self.T, self.N, self.B1]
        if self.B2 is not None:
            vecs.append(self.B2)
        return vecs

    @property
    def curvatures(self):
        ks = [self.kappa1, self.kappa2]
        if self.kappa3 is not None:
            ks.append(self.kappa3)
        return ks

    @property
    def normals(self):
        return self.vectors[1:]


@dataclass(frozen=True)
class PTFrameField:
    """Per-node parallel-transport frame {T, M1, M2[, M3]} with the
    transported curvatures k_i = <T', M_i>."""

    grid: SampleGrid
    dimension: int
    T: np.ndarray
    M: tuple
    k: tuple
    anchor_index: int

    @property
    def vectors(self):
        return [self.T, *self.M]

    @property
    def normals(self):
        return list(self.M)

    @property
    def curvature_magnitude(self):
        return np.sqrt(sum(ki ** 2 for ki in self.k))


@dataclass(frozen=True)
class EulerAngles:
    """Rotation angles carrying the Frenet normals onto the transported
    normals; just the rotation angle theta for 3-dimensional curves, the
    (theta, phi, psi) chart in four dimensions. Angles are unwrapped along the
    grid; gimbal_mask flags nodes where the chart degenerates."""

    grid: SampleGrid
    theta: np.ndarray
    phi: np.ndarray | None = None
    psi: np.ndarray | None = None
    gimbal_mask: np.ndarray | None = None


def _dots(a, b):
    return np.sum(a * b, axis=1)


def _normalize_rows(v):
    return v / np.linalg.norm(v, axis=1)[:, None]


def _reject(v, unit):
    return v - _dots(v, unit)[:, None] * unit


def _first_interior_violation(values, threshold, interior):
    inside = values[interior]
    idx = np.nonzero(inside <= threshold)[0]
    return None if idx.size == 0 else idx[0] + interior.start


def _cross4(a, b, c):
    """Vector orthogonal to a, b, c in E4 (rows), by cofactor expansion."""
    m = np.stack([a, b, c], axis=1)  # (n, 3, 4)
    out = np.empty_like(a)
    cols = np.arange(4)
    for j in range(4):
        rest = m[:, :, cols != j]
        out[:, j] = (-1.0) ** j * np.linalg.det(rest)
    return out


def compute_frenet(curve: SampledCurve, tol: ToleranceConfig | None = None) -> FrenetFrameField:
    """Frenet frame and signed curvatures of a regular sampled curve.

    Raises DegenerateCurveError when the first d-1 derivatives become
    dependent or the first curvature vanishes in the interior (the location
    is reported). The d-th derivative may be dependent: curves with vanishing
    final curvature (planar curves in E3) are fine.
    """
    tol = tol or ToleranceConfig()
    d = curve.dimension
    grid = curve.grid
    interior = curve.interior
    v = curve.speed

    bad = _first_interior_violation(v, 1e-8, interior)
    if bad is not None:
        raise DegenerateCurveError("vanishing speed", grid.values[bad])

    T = _normalize_rows(curve.velocity)

    n_raw = _reject(curve.derivatives[2], T)
    n_norm = np.linalg.norm(n_raw, axis=1)
    bad = _first_interior_violation(n_norm / v ** 2, CURVATURE_FLOOR, interior)
    if bad is not None:
        raise DegenerateCurveError("first curvature vanishes", grid.values[bad])
    N = n_raw / np.maximum(n_norm, 1e-300)[:, None]

    if d == 3:
        B1 = np.cross(T, N)
        B2 = None
        gram_vecs = (T, N)
    else:
        b_raw = _reject(_reject(curve.derivatives[3], T), N)
        b_norm = np.linalg.norm(b_raw, axis=1)
        scale = np.maximum(np.linalg.norm(curve.derivatives[3], axis=1), 1e-300)
        bad = _first_interior_violation(b_norm / scale, np.sqrt(GRAM_FLOOR), interior)
        if bad is not None:
            raise DegenerateCurveError(
                "first three derivatives are linearly dependent", grid.values[bad])
        B1 = b_raw / np.maximum(b_norm, 1e-300)[:, None]
        B2 = _cross4(T, N, B1)
        B2 = _normalize_rows(B2)
        frame = np.stack([T, N, B1, B2], axis=1)
        flip = np.linalg.det(frame) < 0
        B2[flip] = -B2[flip]
        gram_vecs = (T, N, B1)

    # scale-free Gram check on the orthonormalized span
    gram = np.ones(grid.n)
    for i, a in enumerate(gram_vecs):
        for b in gram_vecs[i + 1:]:
            gram = gram * (1.0 - _dots(a, b) ** 2)
    bad = _first_interior_violation(gram, GRAM_FLOOR, interior)
    if bad is not None:
        raise DegenerateCurveError("derivatives are linearly dependent", grid.values[bad])

    T_dot = finite_difference(T, grid, order=1)
    N_dot = finite_difference(N, grid, order=1)
    kappa1 = _dots(T_dot, N) / v
    kappa2 = _dots(N_dot, B1) / v
    if d == 4:
        B1_dot = finite_difference(B1, grid, order=1)
        kappa3 = _dots(B1_dot, B2) / v
    else:
        kappa3 = None

    bad = _first_interior_violation(kappa1, CURVATURE_FLOOR, interior)
    if bad is not None:
        raise DegenerateCurveError("first curvature vanishes", grid.values[bad])

    return FrenetFrameField(grid=grid, dimension=d, T=T, N=N, B1=B1, B2=B2,
                            kappa1=kappa1, kappa2=kappa2, kappa3=kappa3, speed=v)


# ---------------------------------------------------------------------------
# parallel transport
# ---------------------------------------------------------------------------

def _coordinate_completion(t):
    """Deterministic orthonormal completion of the unit vector t."""
    d = t.shape[0]
    rows = [t]
    for j in range(d):
        cand = np.zeros(d)
        cand[j] = 1.0
        for r in rows:
            cand = cand - (cand @ r) * r
        norm = np.linalg.norm(cand)
        if norm > 1e-6:
            rows.append(cand / norm)
        if len(rows) == d:
            break
    frame = np.stack(rows)
    if np.linalg.det(frame) < 0:
        frame[-1] = -frame[-1]
    return frame[1:]


def rotation_2d(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]])


def random_normal_rotation(dim, seed):
    """Random rotation of the normal space (dim = d-1), det +1, seeded."""
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _orthonormalize_against(t, rows):
    out = []
    for row in rows:
        w = row - (row @ t) * t
        for prev in out:
            w = w - (w @ prev) * prev
        out.append(w / np.linalg.norm(w))
    return np.stack(out)


def compute_pt_frame(curve: SampledCurve,
                     frenet: FrenetFrameField | None,
                     tol: ToleranceConfig | None = None,
                     anchor_index: int | None = None,
                     normal_rotation: np.ndarray | None = None) -> PTFrameField:
    """Parallel-transport the normal frame along a unit-speed curve.

    The initial normals are the Frenet normals at the anchor node (optionally
    rotated by ``normal_rotation``, a (d-1)x(d-1) rotation acting on the
    normal space; the curve's anchor angle supplies a default rotation in 3d).
    When ``frenet`` is None a deterministic coordinate completion of T at the
    anchor is used instead, which keeps Frenet-degenerate but regular curves
    (circles in E4) transportable. Each normal follows M' = -<T', M> T via
    fixed-step RK4 with modified Gram-Schmidt re-orthonormalization, keeping T
    exact, at every node.
    """
    tol = tol or ToleranceConfig()
    if not curve.unit_speed:
        raise ValueError("parallel transport requires a unit-speed curve; "
                         "reparametrize by arc length first")
    d = curve.dimension
    grid = curve.grid
    T = _normalize_rows(curve.velocity)
    T_dot = finite_difference(T, grid, order=1)

    i0 = curve.anchor_index() if anchor_index is None else int(anchor_index)
    if frenet is not None:
        normals0 = np.stack([vec[i0] for vec in frenet.normals])
    else:
        normals0 = _coordinate_completion(T[i0])

    if normal_rotation is None and curve.anchor_angle() != 0.0:
        if d != 3:
            raise ValueError("anchor angles only define a rotation in 3 dimensions")
        normal_rotation = rotation_2d(curve.anchor_angle())
    if normal_rotation is not None:
        rot = np.asarray(normal_rotation, dtype=float)
        if rot.shape != (d - 1, d - 1):
            raise ValueError(f"normal rotation must be {(d - 1, d - 1)}")
        normals0 = rot @ normals0
    normals0 = _orthonormalize_against(T[i0], normals0)

    t_spline = CubicSpline(grid.values, T, axis=0)
    tdot_spline = CubicSpline(grid.values, T_dot, axis=0)

    def rhs(s, state):
        m = state.reshape(d - 1, d)
        tv = t_spline(s)
        td = tdot_spline(s)
        return (-np.outer(m @ td, tv)).ravel()

    def project(s, state):
        i = grid.index_of(s)
        return _orthonormalize_against(T[i], state.reshape(d - 1, d)).ravel()

    states = np.empty((grid.n, (d - 1) * d))
    states[i0] = normals0.ravel()

    s_values = grid.values
    if i0 < grid.n - 1:
        states[i0:] = integrate_linear_ode(rhs, states[i0], s_values[i0:], project=project)
    if i0 > 0:
        bwd = integrate_linear_ode(rhs, states[i0], s_values[i0::-1], project=project)
        states[:i0 + 1] = bwd[::-1]

    normals = states.reshape(grid.n, d - 1, d)
    M = tuple(normals[:, i, :].copy() for i in range(d - 1))
    k = tuple(_dots(T_dot, mi) for mi in M)
    return PTFrameField(grid=grid, dimension=d, T=T, M=M, k=k, anchor_index=i0)


def bishop_via_rotation_angle(curve: SampledCurve,
                              frenet: FrenetFrameField,
                              anchor: FrameAnchor | None = None):
    """Rotation-angle construction of the Bishop frame (3d only).

    The rotation angle is the running integral of minus the torsion over the
    curve's own grid, pinned to ``anchor.angle`` at ``anchor.s`` (the curve's
    anchor, or the first node, by default). On a unit-speed curve this is the
    genuine parallel-transport frame; on other parametrizations it reproduces
    the classical "integrate -tau ds" construction in the given parameter.
    Returns (PTFrameField, EulerAngles).
    """
    if curve.dimension != 3:
        raise ValueError("the rotation-angle construction is specific to 3 dimensions")
    grid = curve.grid
    anchor = anchor or curve.anchor or FrameAnchor(grid.values[0], 0.0)

    running = cumulative_antiderivative(-frenet.kappa2, grid, 0.0)
    theta = running - np.interp(anchor.s, grid.values, running) + anchor.angle

    cos_t = np.cos(theta)[:, None]
    sin_t = np.sin(theta)[:, None]
    m1 = cos_t * frenet.N + sin_t * frenet.B1
    m2 = -sin_t * frenet.N + cos_t * frenet.B1
    k1 = frenet.kappa1 * np.cos(theta)
    k2 = frenet.kappa1 * np.sin(theta)
    field = PTFrameField(grid=grid, dimension=3, T=frenet.T, M=(m1, m2),
                         k=(k1, k2), anchor_index=grid.index_of(anchor.s))
    return field, EulerAngles(grid=grid, theta=theta)


def angles_between_frames(frenet: FrenetFrameField, pt: PTFrameField) -> EulerAngles:
    """Euler angles of the rotation carrying the Frenet normals onto the
    transported normals (4d). Nodes where the chart degenerates
    (|cos theta| < 1e-6) are flagged in gimbal_mask and excluded from
    unwrapping anchors; angle values there are still reported."""
    if frenet.dimension != 4 or pt.dimension != 4:
        raise ValueError("the three-angle chart applies to 4-dimensional frames")
    if frenet.grid != pt.grid:
        raise ValueError("frame fields live on different grids")

    f_normals = frenet.normals      # N, B1, B2
    m_normals = pt.normals          # M1, M2, M3
    r = np.empty((frenet.grid.n, 3, 3))
    for i, f in enumerate(f_normals):
        for j, m in enumerate(m_normals):
            r[:, i, j] = _dots(f, m)

    sin_theta = np.clip(-r[:, 2, 0], -1.0, 1.0)
    theta = np.arcsin(sin_theta)
    cos_theta = np.cos(theta)
    gimbal = np.abs(cos_theta) < GIMBAL_EPS

    psi = np.unwrap(np.arctan2(r[:, 1, 0], r[:, 0, 0]))
    phi = np.unwrap(np.arctan2(r[:, 2, 1], r[:, 2, 2]))
    return EulerAngles(grid=frenet.grid, theta=theta, phi=phi, psi=psi,
                       gimbal_mask=gimbal)


# ---------------------------------------------------------------------------
# frame diagnostics (shared by tests and reports)
# ---------------------------------------------------------------------------

def orthonormality_error(field, interior=None):
    """Max deviation of the per-node frame Gram matrix from the identity."""
    frame = np.stack(field.vectors, axis=1)
    gram = np.einsum("nid,njd->nij", frame, frame)
    dev = np.abs(gram - np.eye(frame.shape[1]))
    if interior is not None:
        dev = dev[interior]
    return float(np.max(dev))


def determinant_error(field, interior=None):
    frame = np.stack(field.vectors, axis=1)
    det = np.linalg.det(frame)
    if interior is not None:
        det = det[interior]
    return float(np.max(np.abs(det - 1.0)))


def _rms(rows):
    return float(np.sqrt(np.mean(np.sum(rows ** 2, axis=1))))


def frenet_equation_residuals(frenet: FrenetFrameField, interior):
    """RMS residuals of the frame transport equations on a unit-speed curve."""
    grid = frenet.grid
    k1, k2 = frenet.kappa1[:, None], frenet.kappa2[:, None]
    T_dot = finite_difference(frenet.T, grid, order=1)
    N_dot = finite_difference(frenet.N, grid, order=1)
    B1_dot = finite_difference(frenet.B1, grid, order=1)
    out = {
        "T": _rms((T_dot - k1 * frenet.N)[interior]),
        "N": _rms((N_dot + k1 * frenet.T - k2 * frenet.B1)[interior]),
    }
    if frenet.dimension == 3:
        out["B1"] = _rms((B1_dot + k2 * frenet.N)[interior])
    else:
        k3 = frenet.kappa3[:, None]
        B2_dot = finite_difference(frenet.B2, grid, order=1)
        out["B1"] = _rms((B1_dot + k2 * frenet.N - k3 * frenet.B2)[interior])
        out["B2"] = _rms((B2_dot + k3 * frenet.B1)[interior])
    return out


def pt_equation_residuals(pt: PTFrameField, interior):
    grid = pt.grid
    T_dot = finite_difference(pt.T, grid, order=1)
    drive = sum(ki[:, None] * mi for ki, mi in zip(pt.k, pt.M))
    out = {"T": _rms((T_dot - drive)[interior])}
    for i, (ki, mi) in enumerate(zip(pt.k, pt.M), start=1):
        mi_dot = finite_difference(mi, grid, order=1)
        out[f"M{i}"] = _rms((mi_dot + ki[:, None] * pt.T)[interior])
    return out


def pt_parallelism_error(pt: PTFrameField, interior):
    """Max |<M_i', M_j>| over normal pairs: transported normals must have
    purely tangential derivatives."""
    worst = 0.0
    m_dots = [finite_difference(mi, pt.grid, order=1) for mi in pt.M]
    for mi_dot in m_dots:
        for mj in pt.M:
            worst = max(worst, float(np.max(np.abs(_dots(mi_dot, mj)[interior]))))
    return worst
