"""Built-in demonstration curves.

Two reproduce textbook closed-form frame data (a wave-modulated helix whose
printed parametrization runs at speed 4*cos(s), and a unit-speed Euler
spiral). The others are standard fixtures: a circular helix, the twisted
cubic (not a helix), a constructed 4-dimensional inclined curve with
prescribed axis e4 and angle pi/3, and a planar circle on the unit 3-sphere
for the spherical test.

Frame anchors pin the rotation-angle convention: the Euler spiral's published
angle is the antiderivative of -tau vanishing at s=0, which sits outside its
domain, so the anchor carries that antiderivative's value at the domain start
(4 * 0.2^2 / 5 = 0.032).
"""

from __future__ import annotations

import numpy as np

from .curve import CurveSpec, FrameAnchor

__all__ = ["BUILTIN_CURVES", "builtin_names", "get_builtin", "HELIX4D_ANGLE", "is_builtin"]

# construction parameter of helix4d: constant angle against e4
HELIX4D_ANGLE = np.pi / 3

_SQ17 = "sqrt(17)"

EXAMPLE1 = CurveSpec(
    name="example1",
    dimension=3,
    components=(
        f"cos(s)*cos({_SQ17}*s) + (1/{_SQ17})*sin(s)*sin({_SQ17}*s)",
        f"-cos(s)*sin({_SQ17}*s) + (1/{_SQ17})*sin(s)*cos({_SQ17}*s)",
        f"(4/{_SQ17})*sin(s)",
    ),
    s_min=-1.2,
    s_max=1.2,
    samples=2001,
    anchor=FrameAnchor(0.0, 0.0),
    description="wave-modulated generalized helix, torsion/curvature = -1/4",
)

EXAMPLE2 = CurveSpec(
    name="example2",
    dimension=3,
    components=(
        "(3/5) * integral(sin(u^2 + 1), 0, s)",
        "(3/5) * integral(cos(u^2 + 1), 0, s)",
        "(4/5) * s",
    ),
    s_min=0.2,
    s_max=2.0,
    samples=2001,
    anchor=FrameAnchor(0.2, 0.032),
    description="Euler spiral lifted to a generalized helix, curvature 6s/5",
)

HELIX3D = CurveSpec(
    name="helix3d",
    dimension=3,
    components=("cos(s/sqrt(2))", "sin(s/sqrt(2))", "s/sqrt(2)"),
    s_min=0.0,
    s_max=12.0,
    samples=2001,
    description="circular helix, axis e3, constant angle pi/4",
)

CUBIC = CurveSpec(
    name="cubic",
    dimension=3,
    components=("s", "s^2", "s^3"),
    s_min=0.1,
    s_max=1.0,
    samples=2001,
    description="twisted cubic, torsion/curvature not constant: not a helix",
)

_H4_WOBBLE = "0.4*sin(2*u)"
HELIX4D = CurveSpec(
    name="helix4d",
    dimension=4,
    components=(
        f"(sqrt(3)/2) * integral(cos({_H4_WOBBLE})*cos(u), 0, s)",
        f"(sqrt(3)/2) * integral(cos({_H4_WOBBLE})*sin(u), 0, s)",
        f"(sqrt(3)/2) * integral(sin({_H4_WOBBLE}), 0, s)",
        "s/2",
    ),
    s_min=0.0,
    s_max=2 * np.pi,
    samples=2001,
    description="constructed inclined curve: tangent at angle varphi0 = pi/3 "
                "(cos = 1/2) against the fixed axis e4",
)

CIRCLE4D = CurveSpec(
    name="circle4d",
    dimension=4,
    components=("(4/5)*cos(5*s/4)", "(4/5)*sin(5*s/4)", "3/5", "0"),
    s_min=0.0,
    s_max=5.0,
    samples=2001,
    description="planar circle of radius 4/5 on the unit 3-sphere "
                "(Frenet-degenerate in E4; spherical-criterion fixture)",
)

BUILTIN_CURVES = {
    spec.name: spec
    for spec in (EXAMPLE1, EXAMPLE2, HELIX3D, CUBIC, HELIX4D, CIRCLE4D)
}


def builtin_names():
    return list(BUILTIN_CURVES)


def is_builtin(name):
    return name in BUILTIN_CURVES


def get_builtin(name) -> CurveSpec:
    try:
        return BUILTIN_CURVES[name]
    except KeyError:
        raise KeyError(f"unknown built-in curve {name!r}; "
                       f"available: {', '.join(BUILTIN_CURVES)}") from None
