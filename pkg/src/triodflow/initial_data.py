"""Initial triods for the bundled experiment scenarios.

All constructors sample continuous curves at the uniform mesh nodes; each
curve runs from the shared junction (parameter 0) to its pinned endpoint
(parameter 1).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .mesh import CurveChain, TriodState, interpolate_curve, rotation_matrix

# Junction abscissa of the relaxation benchmark; chosen so the straight
# second curve ends exactly on the unit circle.
Z_TILDE = (np.sqrt(3.0) - np.sqrt(2.0)) / 2.0


def _circle_hit(junction_x: float, angle: float) -> float:
    """Distance from (junction_x, 0) to the unit circle along a ray at angle."""
    s = np.sin(angle)
    return -junction_x * np.cos(angle) + np.sqrt(1.0 - (junction_x * s) ** 2)


def convergence_junction_directions() -> np.ndarray:
    """Unit tangents of the convergence benchmark at the junction, pre-rotation.

    The middle direction is that of the straight second curve; the other two
    sit at exactly 120 degrees on either side, which pins the whole
    configuration.
    """
    theta2 = np.arctan2(np.sqrt(2.0) / 2.0, -np.sqrt(3.0) / 2.0)
    thetas = np.array([theta2 - 2.0 * np.pi / 3.0, theta2, theta2 + 2.0 * np.pi / 3.0])
    return np.stack([np.cos(thetas), np.sin(thetas)], axis=1)


def convergence_curve_functions():
    """Continuous curves of the convergence benchmark, pre-rotation.

    Curve 2 is the straight segment from (z, 0) to (z - sqrt(3)/2, sqrt(2)/2).
    Curve 1 carries a sine bump transverse to its run, curve 3 a parabolic
    bend with quadratically stretched parametrisation. Curves 1 and 3 are the
    bump and bend shapes rigidly rotated about the junction so the three
    junction tangents form exact 120 degree angles, then radially rescaled so
    the endpoints land on the unit circle.
    """
    zt = Z_TILDE
    theta2 = np.arctan2(np.sqrt(2.0) / 2.0, -np.sqrt(3.0) / 2.0)
    theta1 = theta2 - 2.0 * np.pi / 3.0
    theta3 = theta2 + 2.0 * np.pi / 3.0

    # shape 1: graph over [0,1] with a sine bump; junction tangent atan(1/2)
    rot1 = theta1 - np.arctan2(0.5, 1.0)
    R1 = np.array([[np.cos(rot1), -np.sin(rot1)], [np.sin(rot1), np.cos(rot1)]])
    scale1 = _circle_hit(zt, rot1) / (1.0 - zt)

    # shape 3: parabolic bend, junction tangent straight down; its endpoint
    # direction after rotation is exactly 7 pi / 6
    rot3 = theta3 - (-np.pi / 2.0)
    R3 = np.array([[np.cos(rot3), -np.sin(rot3)], [np.sin(rot3), np.cos(rot3)]])
    end3 = np.arctan2(-np.sqrt(2.0) / 2.0, -np.sqrt(3.0) / 2.0) + rot3
    scale3 = _circle_hit(zt, end3) / (np.sqrt(5.0) / 2.0)

    junction = np.array([zt, 0.0])

    def curve1(x):
        base = np.array([(1.0 - zt) * x, (1.0 - zt) * np.sin(np.pi * x) / (2.0 * np.pi)])
        return junction + scale1 * (R1 @ base)

    def curve2(x):
        return np.array([zt - np.sqrt(3.0) * x / 2.0, np.sqrt(2.0) * x / 2.0])

    def curve3(x):
        base = np.array([-np.sqrt(3.0) * x * x / 2.0, -np.sqrt(2.0) * x / 2.0])
        return junction + scale3 * (R3 @ base)

    return curve1, curve2, curve3


def convergence_initial(num_elements: int, rotation_deg: float = 18.0) -> TriodState:
    """Initial triod of the convergence benchmark, rotated about the origin.

    The rotation avoids axis alignment artefacts; pass 0 to inspect the raw
    configuration.
    """
    if num_elements < 2:
        raise ConfigError("convergence initial data needs at least 2 elements per curve")
    fns = convergence_curve_functions()
    curves = [interpolate_curve(fn, num_elements) for fn in fns]
    state = TriodState.from_curves(curves)
    if rotation_deg:
        R = rotation_matrix(rotation_deg)
        state = TriodState(state.nodes @ R.T, state.time)
    return state


def epsilon_study_initial(num_elements: int, z: float = 0.1) -> TriodState:
    """Inconsistent initial data for the relaxation study.

    A horizontal curve along the first axis and two short vertical curves;
    the initial sectors are 90/90/180 degrees, far from the equilibrium
    angles, and the junction starts at (-sqrt(1-z^2), 0).
    """
    if num_elements < 2:
        raise ConfigError("relaxation initial data needs at least 2 elements per curve")
    if not (0.0 < z < 1.0):
        raise ConfigError(f"z must be in (0, 1), got {z}")
    zt = np.sqrt(1.0 - z * z)

    curves = [
        interpolate_curve(lambda x: np.array([-zt + x * (1.0 + zt), 0.0]), num_elements),
        interpolate_curve(lambda x: np.array([-zt, x * z]), num_elements),
        interpolate_curve(lambda x: np.array([-zt, -x * z]), num_elements),
    ]
    return TriodState.from_curves(curves)


def spiral_initial(num_elements: int, turns: float = 3.0) -> TriodState:
    """Three Archimedean-type spirals with threefold rotational symmetry.

    Each curve winds outward from the junction at the origin to a point on
    the unit circle; strong curvature near the centre exercises the
    tangential redistribution.
    """
    if num_elements < 2:
        raise ConfigError("spiral initial data needs at least 2 elements per curve")
    omega = 2.0 * np.pi * turns

    def make(phase):
        def fn(x):
            a = omega * x + phase
            return np.array([x * np.cos(a), x * np.sin(a)])
        return fn

    curves = [interpolate_curve(make(2.0 * np.pi * i / 3.0), num_elements) for i in range(3)]
    return TriodState.from_curves(curves)


def self_intersect_bend(x: float) -> float:
    """Parabolic height profile of the self-intersection test, offset so it
    vanishes at the junction."""
    b = 1.5 * np.sqrt(3.0) * (x - 1.0 / 3.0) ** 2 - np.sqrt(3.0) / 2.0
    b0 = 1.5 * np.sqrt(3.0) / 9.0 - np.sqrt(3.0) / 2.0
    return b - b0


def self_intersect_initial(num_elements: int, junction_fix: str = "shift") -> TriodState:
    """Initial data whose third curve crosses the first one.

    The bend profile as written does not vanish at the curve starts, so the
    two bent curves cannot meet the straight one in a single junction. The
    default "shift" moves each bent curve vertically so its start hits the
    origin (equivalently, the profile's constant offset is dropped); "raw"
    refuses with a diagnostic instead of building an invalid state.
    """
    if num_elements < 2:
        raise ConfigError("self-intersection initial data needs at least 2 elements per curve")
    if junction_fix == "raw":
        b0 = 1.5 * np.sqrt(3.0) / 9.0 - np.sqrt(3.0) / 2.0
        raise ConfigError(
            "raw junction handling requested, but the bent curves start at "
            f"(0, {b0:+.6f}) and (0, {-b0:+.6f}) instead of the origin; "
            "use junction_fix='shift'"
        )
    if junction_fix != "shift":
        raise ConfigError(f"unknown junction_fix {junction_fix!r}, expected 'shift' or 'raw'")

    curves = [
        interpolate_curve(lambda x: np.array([x, 0.0]), num_elements),
        interpolate_curve(lambda x: np.array([-x, self_intersect_bend(x)]), num_elements),
        interpolate_curve(lambda x: np.array([x, -self_intersect_bend(x)]), num_elements),
    ]
    return TriodState.from_curves(curves)


def equilateral_initial(num_elements: int, radius: float = 1.0) -> TriodState:
    """Three straight segments from the origin at 90, 210 and 330 degrees.

    This configuration is stationary for the discrete evolution and serves
    as a fixed-point check.
    """
    if num_elements < 1:
        raise ConfigError("equilateral initial data needs at least 1 element per curve")
    curves = []
    for ang in (90.0, 210.0, 330.0):
        tip = radius * np.array([np.cos(np.radians(ang)), np.sin(np.radians(ang))])
        curves.append(interpolate_curve(lambda x, tip=tip: x * tip, num_elements))
    return TriodState.from_curves(curves)
