"""Shared numerical kernels: finite differences, running integrals, a fixed-step
RK4 marcher, small symmetric eigenproblems, least squares and constancy scoring.

Everything here is a pure function over immutable inputs; callers are free to
parallelize across curves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SampleGrid",
    "ToleranceConfig",
    "LeastSquaresFit",
    "finite_difference",
    "cumulative_antiderivative",
    "integrate_linear_ode",
    "jacobi_eigh",
    "smallest_eigenvector_symmetric",
    "linear_least_squares",
    "constancy_score",
    "adaptive_simpson",
]


@dataclass(frozen=True)
class SampleGrid:
    """Uniform sample grid s_i = start + i*step, i = 0..n-1.

    Stored canonically as (start, step, n) so uniformity is exact by
    construction; ``from_values`` validates and snaps externally supplied
    arrays (e.g. re-ingested CSV columns).
    """

    start: float
    step: float
    n: int

    def __post_init__(self):
        if self.n < 9:
            raise ValueError(f"grid needs at least 9 samples, got {self.n}")
        if not np.isfinite(self.start) or not np.isfinite(self.step) or self.step <= 0:
            raise ValueError("grid start/step must be finite with step > 0")

    @classmethod
    def from_range(cls, s_min, s_max, n):
        if not s_min < s_max:
            raise ValueError(f"empty domain [{s_min}, {s_max}]")
        return cls(float(s_min), (float(s_max) - float(s_min)) / (n - 1), int(n))

    @classmethod
    def from_values(cls, s):
        s = np.asarray(s, dtype=float)
        if s.ndim != 1:
            raise ValueError("grid values must be one-dimensional")
        diffs = np.diff(s)
        h = (s[-1] - s[0]) / (len(s) - 1)
        if h <= 0:
            raise ValueError("grid values must be strictly increasing")
        if np.max(np.abs(diffs - h)) > 1e-9 * abs(h):
            raise ValueError("grid values are not uniformly spaced")
        return cls(float(s[0]), float(h), len(s))

    @property
    def values(self):
        return self.start + self.step * np.arange(self.n)

    @property
    def span(self):
        return self.step * (self.n - 1)

    def index_of(self, s):
        """Nearest grid index to the parameter value s."""
        i = int(round((float(s) - self.start) / self.step))
        return min(max(i, 0), self.n - 1)


@dataclass(frozen=True)
class ToleranceConfig:
    derivative_tol: float = 1e-6
    constancy_tol: float = 1e-4
    residual_tol: float = 1e-4
    quadrature_abs_tol: float = 1e-10
    frame_ortho_tol: float = 1e-8

    def __post_init__(self):
        for name in ("derivative_tol", "constancy_tol", "residual_tol",
                     "quadrature_abs_tol", "frame_ortho_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def _first_derivative(values, h):
    v = values
    out = np.empty_like(v)
    out[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
    # one-sided 4th order stencils at the two nodes on each end
    out[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h)
    out[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h)
    out[-2] = (3.0 * v[-1] + 10.0 * v[-2] - 18.0 * v[-3] + 6.0 * v[-4] - v[-5]) / (12.0 * h)
    out[-1] = (25.0 * v[-1] - 48.0 * v[-2] + 36.0 * v[-3] - 16.0 * v[-4] + 3.0 * v[-5]) / (12.0 * h)
    return out


def finite_difference(values, grid, order=1):
    """Numerical derivative of sampled values on a uniform grid.

    Central 4th-order stencils in the interior, one-sided 4th-order stencils
    at the boundaries. Derivative orders 2..4 are obtained by repeated
    application of the first-derivative operator, which keeps the interior
    operator central. ``values`` may be (n,) or (n, d); differentiation runs
    along axis 0.
    """
    if not 1 <= order <= 4:
        raise ValueError(f"derivative order must be in 1..4, got {order}")
    v = np.asarray(values, dtype=float)
    if v.shape[0] != grid.n:
        raise ValueError("values length does not match grid")
    if grid.n < order + 5:
        raise ValueError(f"grid too short for order {order}: n={grid.n}")
    for _ in range(order):
        v = _first_derivative(v, grid.step)
    return v


# ---------------------------------------------------------------------------
# running integral
# ---------------------------------------------------------------------------

def cumulative_antiderivative(values, grid, constant=0.0):
    """Running integral of sampled values from the first grid node.

    Each interval is integrated with the 4-point interpolatory rule
    (weights (-1, 13, 13, -1)/24 interior, (9, 19, -5, 1)/24 at the ends),
    the node-by-node refinement of composite Simpson. Exact for cubics at
    every node. ``values`` may be (n,) or (n, d).
    """
    v = np.asarray(values, dtype=float)
    if v.shape[0] != grid.n:
        raise ValueError("values length does not match grid")
    h = grid.step
    pieces = np.empty_like(v)
    pieces[0] = 0.0
    pieces[1] = h * (9.0 * v[0] + 19.0 * v[1] - 5.0 * v[2] + v[3]) / 24.0
    pieces[2:-1] = h * (-v[:-3] + 13.0 * v[1:-2] + 13.0 * v[2:-1] - v[3:]) / 24.0
    pieces[-1] = h * (9.0 * v[-1] + 19.0 * v[-2] - 5.0 * v[-3] + v[-4]) / 24.0
    return np.cumsum(pieces, axis=0) + constant


# ---------------------------------------------------------------------------
# fixed-step RK4
# ---------------------------------------------------------------------------

def integrate_linear_ode(rhs, initial, grid, project=None):
    """March a state vector over the grid with classical fixed-step RK4.

    ``rhs(s, state) -> dstate/ds``. The step equals the node spacing, so every
    state sample lands exactly on a grid node. ``grid`` may be a SampleGrid or
    a plain array of node values. ``project``, when given, is applied to the
    state after each accepted step (frame re-orthonormalization hooks in
    here). Raises ValueError if the state stops being finite.
    """
    s_values = grid.values if isinstance(grid, SampleGrid) else np.asarray(grid, dtype=float)
    y = np.asarray(initial, dtype=float).copy()
    out = np.empty((len(s_values),) + y.shape)
    out[0] = y
    for i in range(len(s_values) - 1):
        s = s_values[i]
        h = s_values[i + 1] - s
        k1 = rhs(s, y)
        k2 = rhs(s + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(s + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(s + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise ValueError(f"non-finite state while integrating at s={s_values[i + 1]:.6g}")
        if project is not None:
            y = project(s_values[i + 1], y)
        out[i + 1] = y
    return out


# ---------------------------------------------------------------------------
# small symmetric eigenproblems
# ---------------------------------------------------------------------------

def jacobi_eigh(matrix, sweeps=64):
    """Eigendecomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvalues ascending and
    eigenvectors in the corresponding columns.
    """
    a = np.asarray(matrix, dtype=float).copy()
    m = a.shape[0]
    if a.shape != (m, m):
        raise ValueError("matrix must be square")
    if np.max(np.abs(a - a.T)) > 1e-10 * max(1.0, np.max(np.abs(a))):
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(m)
    if m == 1:
        return a.diagonal().copy(), v
    scale = np.max(np.abs(a)) or 1.0
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= 1e-15 * scale:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                if abs(a[p, q]) <= 1e-18 * scale:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / a[p, q]
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(m)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    order = np.argsort(a.diagonal())
    return a.diagonal()[order].copy(), v[:, order]


def smallest_eigenvector_symmetric(matrix):
    """Minimal eigenpair of a small symmetric matrix via Jacobi rotations.

    The returned vector is unit norm with its largest-magnitude component
    positive. Degenerate eigenvalues yield an arbitrary vector from the
    eigenspace.
    """
    eigenvalues, eigenvectors = jacobi_eigh(matrix)
    vec = eigenvectors[:, 0]
    vec = vec / np.linalg.norm(vec)
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    return float(eigenvalues[0]), vec


# ---------------------------------------------------------------------------
# least squares
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeastSquaresFit:
    coefficients: np.ndarray
    residual_rms: float
    rank_deficient: bool
    singular_values: np.ndarray = field(repr=False, default=None)


def linear_least_squares(design, target):
    """Minimum-residual coefficients via the normal equations.

    The symmetric normal matrix is diagonalized with Jacobi rotations; modes
    whose eigenvalue falls below 1e-12 of the largest are dropped (minimum
    norm solution) and the fit is flagged rank deficient.
    """
    a = np.asarray(design, dtype=float)
    y = np.asarray(target, dtype=float)
    if a.ndim != 2 or a.shape[0] != y.shape[0]:
        raise ValueError("design and target shapes do not agree")
    if a.shape[0] < a.shape[1]:
        raise ValueError("fewer rows than unknowns")
    gram = a.T @ a
    rhs = a.T @ y
    eigenvalues, eigenvectors = jacobi_eigh(gram)
    cutoff = 1e-12 * max(eigenvalues[-1], 0.0)
    keep = eigenvalues > cutoff
    inv = np.where(keep, 1.0 / np.where(keep, eigenvalues, 1.0), 0.0)
    coeffs = eigenvectors @ (inv * (eigenvectors.T @ rhs))
    residual = a @ coeffs - y
    return LeastSquaresFit(
        coefficients=coeffs,
        residual_rms=float(np.sqrt(np.mean(residual ** 2))),
        rank_deficient=bool(np.any(~keep)),
        singular_values=np.sqrt(np.maximum(eigenvalues, 0.0))[::-1],
    )


# ---------------------------------------------------------------------------
# constancy
# ---------------------------------------------------------------------------

def constancy_score(values):
    """Relative spread of a sample: std / (|mean| + 1e-300).

    Zero for exactly constant input; huge for zero-mean oscillation, which is
    the intended reading (nowhere near constant).
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two samples")
    return float(np.std(v) / (abs(float(np.mean(v))) + 1e-300))


# ---------------------------------------------------------------------------
# adaptive quadrature (used by the expression integral primitive)
# ---------------------------------------------------------------------------

def _simpson(f, a, fa, b, fb, fm):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive(f, a, fa, b, fb, fm, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(f, a, fa, m, fm, flm)
    right = _simpson(f, m, fm, b, fb, frm)
    err = left + right - whole
    if abs(err) <= 15.0 * tol or depth >= 50:
        return left + right + err / 15.0
    return (_adaptive(f, a, fa, m, fm, flm, left, 0.5 * tol, depth + 1)
            + _adaptive(f, m, fm, b, fb, frm, right, 0.5 * tol, depth + 1))


def adaptive_simpson(f, a, b, abs_tol=1e-10):
    """Adaptive Simpson quadrature of a scalar callable on [a, b]."""
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(f, a, fa, b, fb, fm)
    return sign * _adaptive(f, a, fa, b, fb, fm, whole, max(abs_tol, 1e-15), 0)
