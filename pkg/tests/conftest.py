import numpy as np
import pytest

from ptframes.builtin_curves import get_builtin
from ptframes.curve import CurveSpec, ensure_unit_speed, realize_curve
from ptframes.frames import compute_frenet, compute_pt_frame


def random_trig_spec(seed, dimension, harmonics=3, samples=2001, amplitude=0.2):
    """Random trigonometric-polynomial curve as a CurveSpec.

    A fixed non-degenerate base (circular helix in 3d, two-frequency torus
    curve in 4d) plus a random trig perturbation with 1/k^2 falloff: random in
    shape, but regular and resolvable at the default sampling for every seed.
    """
    rng = np.random.default_rng(seed)
    if dimension == 3:
        base = ["cos(s)", "sin(s)", "0.6*s"]
    else:
        base = ["0.8*cos(s)", "0.8*sin(s)", "0.3*cos(2*s)", "0.3*sin(2*s)"]
    comps = []
    for j in range(dimension):
        terms = [base[j]]
        for k in range(1, harmonics + 1):
            a, b = (float(x) for x in amplitude * rng.normal(size=2) / k ** 2)
            terms.append(f"{a!r}*cos({k}*s) + {b!r}*sin({k}*s)")
        comps.append(" + ".join(terms))
    return CurveSpec(f"trig-{dimension}d-{seed}", dimension, tuple(comps),
                     0.0, 2 * np.pi, samples)


def pick_random_curves(dimension, count, start_seed=1, max_seed=200):
    """First ``count`` seeds whose random curve satisfies the frame-theory
    hypotheses after arc-length resampling: regular, first curvature bounded
    away from zero, and (4d) final curvature bounded (wild final curvature
    means a near-degenerate derivative span the sampling cannot resolve).
    Returns [(seed, unit_curve, frenet), ...].
    """
    from ptframes.curve import VanishingSpeedError
    from ptframes.frames import DegenerateCurveError

    picked = []
    for seed in range(start_seed, max_seed):
        if len(picked) == count:
            break
        try:
            curve = ensure_unit_speed(realize_curve(random_trig_spec(seed, dimension)))
            frenet = compute_frenet(curve)
        except (VanishingSpeedError, DegenerateCurveError):
            continue
        inner = curve.interior
        if frenet.kappa1[inner].min() < 0.05:
            continue
        if dimension == 4 and np.max(np.abs(frenet.kappa3[inner])) > 5.0:
            continue
        picked.append((seed, curve, frenet))
    if len(picked) < count:
        raise RuntimeError(f"only {len(picked)} valid random curves found")
    return picked


@pytest.fixture(scope="session")
def curves():
    """Realized built-ins, cached across the whole test session."""
    cache = {}

    def load(name):
        if name not in cache:
            cache[name] = realize_curve(get_builtin(name))
        return cache[name]

    return load


@pytest.fixture(scope="session")
def unit_curves(curves):
    cache = {}

    def load(name):
        if name not in cache:
            cache[name] = ensure_unit_speed(curves(name))
        return cache[name]

    return load


@pytest.fixture(scope="session")
def frenet_fields(unit_curves):
    cache = {}

    def load(name):
        if name not in cache:
            cache[name] = compute_frenet(unit_curves(name))
        return cache[name]

    return load


@pytest.fixture(scope="session")
def pt_fields(unit_curves, frenet_fields):
    cache = {}

    def load(name):
        if name not in cache:
            cache[name] = compute_pt_frame(unit_curves(name), frenet_fields(name))
        return cache[name]

    return load
