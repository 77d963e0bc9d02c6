"""Thermal interaction matrices: temperature-rate sensitivity to pose rates.

A row l = lambda1 * d(F21)/dx maps end-effector velocity to the object's
temperature-rate change. Rows are stacked into L for the model-based
controller; dividing each row by its lambda1 gives the parameter-free
matrix J built from view-factor gradients alone.
"""
from __future__ import annotations

import math

import numpy as np

from .geometry import DegeneratePoseError, Pose, TWO_PI
from .viewfactor import (
    DEFAULT_SPEC,
    MIN_KERNEL_DISTANCE,
    QuadratureSpec,
    _general_value,
    simpson_2d,
)

# Forward-difference perturbations: balance quadrature noise against
# truncation at the centimeter geometry scale of the setup.
DEFAULT_TRANSLATION_STEP = 5e-6  # m
DEFAULT_ROTATION_STEP = 5e-5  # rad


def l_parallel(
    pose: Pose,
    r1: float,
    r2: float,
    lambda1: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> np.ndarray:
    """Analytic-integrand interaction row for parallel circular surfaces.

    The three translation sensitivities are double integrals of the shared
    scalar kernel h = lambda1 * r1 r2 cos(w1 - w2) / (2 pi A2 s^2) against
    the components of the contour-point difference.

    Returns:
        (3,) array: d(rate)/d(p1, p2, p3) in K/s per m/s.
    """
    if pose.theta_x != 0.0 or pose.theta_y != 0.0 or pose.theta_z != 0.0:
        raise ValueError("l_parallel requires a zero-rotation pose")
    if pose.p3 <= 0.0:
        raise ValueError("requires p3 > 0")
    p1, p2, p3 = pose.p1, pose.p2, pose.p3
    area2 = math.pi * r2**2
    prefactor = lambda1 * r1 * r2 / (TWO_PI * area2)

    def make_integrand(component: int):
        def integrand(w1, w2):
            dx = p1 + r2 * np.cos(w2) - r1 * np.cos(w1)
            dy = p2 + r2 * np.sin(w2) - r1 * np.sin(w1)
            s_sq = np.maximum(dx * dx + dy * dy + p3 * p3, MIN_KERNEL_DISTANCE**2)
            g = (dx, dy, p3)[component]
            return np.cos(w1 - w2) / s_sq * g

        return integrand

    ranges = ((0.0, TWO_PI), (0.0, TWO_PI))
    return np.array(
        [
            -prefactor * simpson_2d(make_integrand(k), ranges, spec)
            for k in range(3)
        ]
    )


def view_factor_gradient(
    pose: Pose,
    source_radius: float,
    contour,
    spec: QuadratureSpec = DEFAULT_SPEC,
    translation_step: float = DEFAULT_TRANSLATION_STEP,
    rotation_step: float = DEFAULT_ROTATION_STEP,
    indices: tuple[int, ...] = (0, 1, 2, 3, 4, 5),
    base_value: float | None = None,
) -> np.ndarray:
    """Forward-difference gradient of F21 over the 6 pose coordinates.

    Each component is independently computable; `indices` restricts which
    components are evaluated (the rest stay zero). A component whose forward
    pose is degenerate falls back to a backward difference.

    Args:
        base_value: F21 at the base pose, if the caller already has it.

    Returns:
        (6,) array d(F21)/d(p1, p2, p3, theta_x, theta_y, theta_z).

    Raises:
        DegeneratePoseError: Base pose degenerate, or both one-sided
            differences of a component degenerate.
    """
    if base_value is None:
        f0 = _general_value(pose, source_radius, contour, spec)
    else:
        f0 = base_value
    grad = np.zeros(6)
    for i in indices:
        h = translation_step if i < 3 else rotation_step
        try:
            f_fwd = _general_value(
                pose.perturbed(i, h), source_radius, contour, spec
            )
            grad[i] = (f_fwd - f0) / h
        except DegeneratePoseError:
            try:
                f_bwd = _general_value(
                    pose.perturbed(i, -h), source_radius, contour, spec
                )
            except DegeneratePoseError as exc:
                raise DegeneratePoseError(
                    f"both perturbations of pose coordinate {i} are degenerate"
                ) from exc
            grad[i] = (f0 - f_bwd) / h
    return grad


def l_finite_diff(
    pose: Pose,
    source_radius: float,
    contour,
    lambda1: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    translation_step: float = DEFAULT_TRANSLATION_STEP,
    rotation_step: float = DEFAULT_ROTATION_STEP,
    indices: tuple[int, ...] = (0, 1, 2, 3, 4, 5),
) -> np.ndarray:
    """Numerically differentiated interaction row for arbitrary 6-DOF poses.

    Returns:
        (6,) array, lambda1-scaled view-factor gradient.
    """
    return lambda1 * view_factor_gradient(
        pose,
        source_radius,
        contour,
        spec,
        translation_step,
        rotation_step,
        indices,
    )


def assemble(rows, lambda1s) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-object interaction rows into L and the parameter-free J.

    J divides each row by its object's lambda1, so diag(lambda1) @ J
    reproduces L exactly (bit for bit; L is recomposed from J to make the
    identity hold in floating point).

    Args:
        rows: N interaction rows of equal length n, N <= n.
        lambda1s: N positive scalars.

    Returns:
        (L, J): arrays of shape (N, n).
    """
    stacked = np.atleast_2d(np.asarray(rows, dtype=float))
    lam = np.asarray(lambda1s, dtype=float).reshape(-1)
    n_obj, n_dof = stacked.shape
    if lam.shape != (n_obj,):
        raise ValueError("one lambda1 per row required")
    if np.any(lam <= 0.0):
        raise ValueError("lambda1 values must be positive")
    if n_obj > n_dof:
        raise ValueError(
            f"need at least as many DOF as objects (N={n_obj} > n={n_dof})"
        )
    j_matrix = stacked / lam[:, None]
    l_matrix = lam[:, None] * j_matrix
    return l_matrix, j_matrix
