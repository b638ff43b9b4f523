"""Figure rendering for curves, frames and detection diagnostics.

Everything renders to files through the Agg backend; nothing opens a window.
Figures sit alongside the CSV exports: frame exports get a companion image,
analyze can drop a diagnostics sheet into a directory.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["save_frame_figure", "save_analysis_figures"]


def _plot_curve(ax3d, ax_fallback, curve):
    pos = curve.positions
    if curve.dimension == 3:
        ax3d.plot(pos[:, 0], pos[:, 1], pos[:, 2], lw=0.9)
        ax3d.set_title(curve.name)
        ax3d.set_xlabel("x1")
        ax3d.set_ylabel("x2")
        ax3d.set_zlabel("x3")
    else:
        ax_fallback.plot(pos[:, 0], pos[:, 1], lw=0.9, label="x1, x2")
        ax_fallback.plot(pos[:, 2], pos[:, 3], lw=0.9, label="x3, x4")
        ax_fallback.set_title(f"{curve.name} (coordinate-plane projections)")
        ax_fallback.set_aspect("equal", adjustable="datalim")
        ax_fallback.legend(fontsize=8)


def save_frame_figure(path, curve, field, kind, angles=None):
    """Companion figure for a frame export: the curve and its curvature
    profiles (plus the rotation angle for the bishop-angle construction)."""
    fig = plt.figure(figsize=(10, 4.2))
    if curve.dimension == 3:
        ax_curve = fig.add_subplot(1, 2, 1, projection="3d")
        ax_flat = None
    else:
        ax_curve = None
        ax_flat = fig.add_subplot(1, 2, 1)
    _plot_curve(ax_curve, ax_flat, curve)

    ax = fig.add_subplot(1, 2, 2)
    s = field.grid.values
    if kind == "frenet":
        for i, values in enumerate(field.curvatures, start=1):
            ax.plot(s, values, lw=1.0, label=f"kappa{i}")
    else:
        for i, values in enumerate(field.k, start=1):
            ax.plot(s, values, lw=1.0, label=f"k{i}")
        if kind == "bishop-angle" and angles is not None:
            ax.plot(s, angles.theta, lw=1.0, ls="--", label="theta")
    ax.set_xlabel("s")
    ax.set_title(f"{kind} curvatures")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)
    return path


def save_analysis_figures(directory, report, pipeline):
    """Diagnostics sheet for an analyze run: curve, transported curvatures,
    harmonic functions with the squared-norm constancy, and the Darboux
    components. Returns the list of files written."""
    from pathlib import Path

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    curve = pipeline["unit_curve"]
    pt = pipeline["pt"]
    harmonics = pipeline["harmonics"]
    darboux = pipeline["darboux"]
    s = pt.grid.values

    fig = plt.figure(figsize=(11, 8))
    if curve.dimension == 3:
        ax_curve = fig.add_subplot(2, 2, 1, projection="3d")
        ax_flat = None
    else:
        ax_curve = None
        ax_flat = fig.add_subplot(2, 2, 1)
    _plot_curve(ax_curve, ax_flat, curve)

    ax = fig.add_subplot(2, 2, 2)
    for i, values in enumerate(pt.k, start=1):
        ax.plot(s, values, lw=1.0, label=f"k{i}")
    ax.set_title("transported curvatures")
    ax.set_xlabel("s")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)

    ax = fig.add_subplot(2, 2, 3)
    for i, values in enumerate(harmonics.values, start=1):
        ax.plot(s, values, lw=1.0, label=f"H{i}")
    ax.plot(s, harmonics.squared_norm(), lw=1.2, ls="--", label="sum H^2")
    ax.set_title("harmonic curvature functions")
    ax.set_xlabel("s")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)

    ax = fig.add_subplot(2, 2, 4)
    for i in range(darboux.vectors.shape[1]):
        ax.plot(s, darboux.vectors[:, i], lw=1.0, label=f"D{i + 1}")
    word = report.verdict_word().replace("_", " ")
    ax.set_title(f"Darboux components ({word}, "
                 f"constancy {report.inclined.darboux_constancy:.2g})")
    ax.set_xlabel("s")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)

    fig.suptitle(f"{report.curve_name}: {word}")
    fig.tight_layout()
    target = out / f"{report.curve_name}_analysis.png"
    fig.savefig(target, dpi=140)
    plt.close(fig)
    return [target]
