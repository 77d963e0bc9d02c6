"""View factors between a circular source disk and a posed planar contour.

The production path converts the classical double surface integral into
double contour integrals (ln-distance kernel) evaluated with tensor-product
composite Simpson quadrature. Self-obstructed configurations integrate over
the contributing arc + chord split of the source boundary. A brute-force
discrete surface integral (DSI) over facet pairs serves as the independent
oracle.

Orientation convention: both contours are parametrized counterclockwise in
their own planes and the sign of the kernel is folded into the final
prefactor, so that admissible configurations yield F21 >= 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:  # numba only accelerates the brute-force oracle; optional
    import numba as _numba

    _numba.config.THREADING_LAYER = "workqueue"
except ImportError:  # pragma: no cover
    _numba = None

from .geometry import (
    MIN_SURFACE_CLEARANCE,
    CircleContour,
    Common,
    Complete,
    Contour,
    DegeneratePoseError,
    FourierContour,
    Pose,
    TWO_PI,
    classify_occlusion,
    contributing_arc,
    pose_rotation,
)

# Floor on the contour-point distance inside the ln kernel; the integrable
# singularity is otherwise sharp when surfaces nearly touch.
MIN_KERNEL_DISTANCE = 1e-9


class NonFiniteIntegrandError(RuntimeError):
    """An integrand sample evaluated to NaN/inf; carries the sample location."""

    def __init__(self, location: tuple[float, float]):
        self.location = location
        super().__init__(f"non-finite integrand sample at {location}")


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite-Simpson resolution: even subinterval count per dimension."""

    n_per_dim: int = 64

    def __post_init__(self) -> None:
        if self.n_per_dim < 2 or self.n_per_dim % 2 != 0:
            raise ValueError("n_per_dim must be an even integer >= 2")


#: Production default; keeps a single evaluation well under a millisecond.
DEFAULT_SPEC = QuadratureSpec(64)
#: Cheaper resolution for interaction-matrix inner loops.
FAST_SPEC = QuadratureSpec(16)


@dataclass(frozen=True)
class ViewFactor:
    """Dimensionless view factor in [0, 1)."""

    value: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.value < 1.0):
            raise ValueError(f"view factor outside [0, 1): {self.value}")

    @staticmethod
    def from_raw(value: float) -> "ViewFactor":
        """Wrap a quadrature result, absorbing sub-1e-9 negative noise."""
        if -1e-9 < value < 0.0:
            value = 0.0
        if value < 0.0 or value >= 1.0 or not math.isfinite(value):
            raise ValueError(f"computed view factor outside [0, 1): {value}")
        return ViewFactor(value)


def _simpson_nodes(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.linspace(a, b, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (b - a) / (3.0 * n)
    return x, w


def simpson_2d(f, ranges, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Tensor-product composite Simpson estimate of f over a rectangle.

    Args:
        f: Integrand f(x, y). Called once with broadcastable column/row node
            arrays; plain scalar functions are vectorized as a fallback.
        ranges: ((x_lo, x_hi), (y_lo, y_hi)).
        spec: Quadrature resolution.

    Raises:
        NonFiniteIntegrandError: A sampled value is NaN or infinite.
    """
    (a1, b1), (a2, b2) = ranges
    n = spec.n_per_dim
    x1, w1 = _simpson_nodes(a1, b1, n)
    x2, w2 = _simpson_nodes(a2, b2, n)
    try:
        vals = np.asarray(f(x1[:, None], x2[None, :]), dtype=float)
        if vals.shape != (n + 1, n + 1):
            raise ValueError
    except (ValueError, TypeError):
        vals = np.vectorize(f)(x1[:, None], x2[None, :]).astype(float)
    if not np.isfinite(vals).all():
        i, j = np.argwhere(~np.isfinite(vals))[0]
        raise NonFiniteIntegrandError((float(x1[i]), float(x2[j])))
    return float(w1 @ vals @ w2)


# ---------------------------------------------------------------------------
# Contour-integral engine
# ---------------------------------------------------------------------------


def _object_curve(contour: Contour, pose: Pose, n: int):
    """Sampled object boundary (points, tangents, weights) over one period."""
    t, w = _simpson_nodes(0.0, contour.period, n)
    local_pt = contour.local_point(t)
    local_tan = contour.local_tangent(t)
    rotation = pose_rotation(pose)
    zeros = np.zeros((len(t), 1))
    pts = np.concatenate([local_pt, zeros], axis=1) @ rotation.T + pose.translation
    tans = np.concatenate([local_tan, zeros], axis=1) @ rotation.T
    return pts, tans, w


def _circle_arc_curve(radius: float, lo: float, hi: float, n: int):
    t, w = _simpson_nodes(lo, hi, n)
    pts = np.stack(
        [radius * np.cos(t), radius * np.sin(t), np.zeros_like(t)], axis=1
    )
    tans = np.stack(
        [-radius * np.sin(t), radius * np.cos(t), np.zeros_like(t)], axis=1
    )
    return pts, tans, w


def _chord_curve(start: np.ndarray, end: np.ndarray, n: int):
    """Straight chord from start to end, parametrized by normalized length."""
    t, w = _simpson_nodes(0.0, 1.0, n)
    pts = start[None, :] + t[:, None] * (end - start)[None, :]
    tans = np.broadcast_to(end - start, pts.shape).copy()
    return pts, tans, w


def _pair_integral(curve1, curve2) -> float:
    """Quadrature of ln(s) * (ds2 . ds1) over a pair of sampled curves."""
    pts1, tans1, w1 = curve1
    pts2, tans2, w2 = curve2
    diff = pts2[None, :, :] - pts1[:, None, :]
    s = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.maximum(s, MIN_KERNEL_DISTANCE, out=s)
    kernel = np.log(s)
    kernel *= tans1 @ tans2.T
    return float(w1 @ kernel @ w2)


def _general_value(
    pose: Pose, source_radius: float, contour: Contour, spec: QuadratureSpec
) -> float:
    occlusion = classify_occlusion(pose, source_radius)
    if isinstance(occlusion, Complete):
        return 0.0

    n = spec.n_per_dim
    obj_curve = _object_curve(contour, pose, n)
    min_z = float(obj_curve[0][:, 2].min())
    if min_z < MIN_SURFACE_CLEARANCE:
        raise DegeneratePoseError(
            f"object boundary within {MIN_SURFACE_CLEARANCE} m of the source plane "
            f"(min clearance {min_z:.3e} m)"
        )

    total = 0.0
    if isinstance(occlusion, Common):
        total += _pair_integral(
            _circle_arc_curve(source_radius, 0.0, TWO_PI, n), obj_curve
        )
    else:
        lo, hi = contributing_arc(occlusion, pose, source_radius)
        arc_start = source_radius * np.array([math.cos(lo), math.sin(lo), 0.0])
        arc_end = source_radius * np.array([math.cos(hi), math.sin(hi), 0.0])
        total += _pair_integral(
            _circle_arc_curve(source_radius, lo, hi, n), obj_curve
        )
        total += _pair_integral(_chord_curve(arc_end, arc_start, n), obj_curve)
    return -total / (TWO_PI * contour.area)


def vf_general(
    pose: Pose,
    source_radius: float,
    contour: Contour,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> ViewFactor:
    """View factor from a posed planar contour to the circular source disk.

    Dispatches on the occlusion class: the common case integrates over the
    full source circle, partial self-obstruction over the contributing
    arc + chord, complete self-obstruction returns exactly 0.

    Raises:
        DegeneratePoseError: Coplanar or near-contact configurations, and
            any non-obstructed pose whose boundary dips to or below the
            source plane (the model covers objects above the source only).
    """
    return ViewFactor.from_raw(_general_value(pose, source_radius, contour, spec))


def vf_parallel_disks(
    pose: Pose, r1: float, r2: float, spec: QuadratureSpec = DEFAULT_SPEC
) -> ViewFactor:
    """View factor between parallel circular surfaces (zero-rotation pose).

    Evaluates the closed-form-kernel double integral over the two boundary
    angles directly, with the contour-point distance expanded analytically.

    Raises:
        ValueError: Non-zero rotation, non-positive radii, or p3 <= 0.
    """
    if pose.theta_x != 0.0 or pose.theta_y != 0.0 or pose.theta_z != 0.0:
        raise ValueError("vf_parallel_disks requires a zero-rotation pose")
    if pose.p3 <= 0.0:
        raise ValueError("requires p3 > 0 (object above the source plane)")
    if r1 <= 0.0 or r2 <= 0.0:
        raise ValueError("radii must be positive")
    p1, p2, p3 = pose.p1, pose.p2, pose.p3
    area2 = math.pi * r2**2

    def integrand(w1, w2):
        s_sq = (
            p1**2
            + p2**2
            + p3**2
            + 2.0 * p1 * (r2 * np.cos(w2) - r1 * np.cos(w1))
            + 2.0 * p2 * (r2 * np.sin(w2) - r1 * np.sin(w1))
            + r1**2
            + r2**2
            - 2.0 * r1 * r2 * np.cos(w2 - w1)
        )
        s = np.sqrt(np.maximum(s_sq, MIN_KERNEL_DISTANCE**2))
        return r1 * r2 * np.cos(w1 - w2) * np.log(s)

    raw = simpson_2d(integrand, ((0.0, TWO_PI), (0.0, TWO_PI)), spec)
    return ViewFactor.from_raw(-raw / (TWO_PI * area2))


# ---------------------------------------------------------------------------
# Discrete surface integral oracle
# ---------------------------------------------------------------------------


def _disk_facets(radius: float, n_facets: int) -> tuple[np.ndarray, np.ndarray]:
    """Polar-grid facet centers and areas covering a disk, about n_facets cells."""
    n_rings = max(2, int(round(math.sqrt(n_facets / math.pi))))
    centers = []
    areas = []
    for k in range(n_rings):
        r_in = radius * k / n_rings
        r_out = radius * (k + 1) / n_rings
        r_mid = 0.5 * (r_in + r_out)
        n_sec = max(8, int(round(TWO_PI * max(r_mid, radius / (2 * n_rings)) * n_rings / radius)))
        theta = (np.arange(n_sec) + 0.5) * TWO_PI / n_sec
        # Area centroid radius of an annular sector.
        r_c = (2.0 / 3.0) * (r_out**3 - r_in**3) / (r_out**2 - r_in**2)
        centers.append(
            np.stack([r_c * np.cos(theta), r_c * np.sin(theta)], axis=1)
        )
        areas.append(np.full(n_sec, 0.5 * (r_out**2 - r_in**2) * TWO_PI / n_sec))
    return np.concatenate(centers), np.concatenate(areas)


def _fourier_facets(contour: FourierContour, n_facets: int) -> tuple[np.ndarray, np.ndarray]:
    """Fan triangulation from the centroid: centers and areas of n_facets triangles."""
    phi = np.arange(n_facets) / n_facets
    boundary = contour.local_point(phi)
    nxt = np.roll(boundary, -1, axis=0)
    # Polygon area centroid.
    cross = boundary[:, 0] * nxt[:, 1] - nxt[:, 0] * boundary[:, 1]
    poly_area = 0.5 * cross.sum()
    centroid = ((boundary + nxt) * cross[:, None]).sum(axis=0) / (6.0 * poly_area)
    areas = 0.5 * (
        (boundary[:, 0] - centroid[0]) * (nxt[:, 1] - centroid[1])
        - (nxt[:, 0] - centroid[0]) * (boundary[:, 1] - centroid[1])
    )
    if np.any(areas <= 0.0):
        raise ValueError("non-positive facet area: contour not star-shaped from centroid")
    centers = (boundary + nxt + centroid[None, :]) / 3.0
    return centers, areas


def _dsi_sum_numpy(obj_centers, obj_areas, src_centers, src_areas, normal) -> float:
    total = 0.0
    chunk = max(1, int(8e6 // max(len(src_centers), 1)))
    sx, sy = src_centers[:, 0], src_centers[:, 1]
    for lo in range(0, len(obj_centers), chunk):
        oc = obj_centers[lo : lo + chunk]
        oa = obj_areas[lo : lo + chunk]
        dx = oc[:, 0, None] - sx[None, :]
        dy = oc[:, 1, None] - sy[None, :]
        dz = np.broadcast_to(oc[:, 2, None], dx.shape)
        r_sq = dx * dx
        r_sq += dy * dy
        r_sq += dz * dz
        cos_obj = dx * normal[0]
        cos_obj += dy * normal[1]
        cos_obj += dz * normal[2]
        np.negative(cos_obj, out=cos_obj)
        kernel = dz * cos_obj
        kernel *= (dz > 0.0) & (cos_obj > 0.0)
        r_sq *= r_sq
        kernel /= r_sq
        total += float((oa @ kernel) @ src_areas)
    return total / math.pi


if _numba is not None:

    @_numba.njit(parallel=True, cache=True)
    def _dsi_sum_numba(obj_centers, obj_areas, src_centers, src_areas, normal):
        total = 0.0
        for i in _numba.prange(obj_centers.shape[0]):
            acc = 0.0
            for j in range(src_centers.shape[0]):
                dx = obj_centers[i, 0] - src_centers[j, 0]
                dy = obj_centers[i, 1] - src_centers[j, 1]
                dz = obj_centers[i, 2] - src_centers[j, 2]
                cos_obj = -(dx * normal[0] + dy * normal[1] + dz * normal[2])
                if dz > 0.0 and cos_obj > 0.0:
                    r_sq = dx * dx + dy * dy + dz * dz
                    acc += dz * cos_obj / (r_sq * r_sq) * src_areas[j]
            total += acc * obj_areas[i]
        return total / math.pi


def vf_dsi_oracle(
    pose: Pose, source_radius: float, contour: Contour, n_facets: int
) -> ViewFactor:
    """Brute-force view factor via the discrete surface integral.

    Both surfaces are meshed into about n_facets planar facets each; the
    classical cos(theta2) cos(theta1) / (pi r^2) kernel is summed over
    facet-center pairs, skipping pairs whose connecting ray has a
    non-positive cosine at either surface. Intended as a slow, independent
    check of the contour-integral path (numba-accelerated when available).

    Args:
        n_facets: Facet count per surface, >= 16.

    Raises:
        ValueError: Too few facets or a contour yielding non-positive facets.
    """
    if n_facets < 16:
        raise ValueError("n_facets must be >= 16")
    src_centers2d, src_areas = _disk_facets(source_radius, n_facets)
    src_centers = np.concatenate(
        [src_centers2d, np.zeros((len(src_centers2d), 1))], axis=1
    )
    if isinstance(contour, CircleContour):
        obj2d, obj_areas = _disk_facets(contour.radius, n_facets)
    else:
        obj2d, obj_areas = _fourier_facets(contour, n_facets)
    rotation = pose_rotation(pose)
    obj_centers = (
        np.concatenate([obj2d, np.zeros((len(obj2d), 1))], axis=1) @ rotation.T
        + pose.translation
    )
    normal = -rotation[:, 2]
    area2 = float(obj_areas.sum())

    if _numba is not None:
        total = float(
            _dsi_sum_numba(
                np.ascontiguousarray(obj_centers),
                np.ascontiguousarray(obj_areas),
                np.ascontiguousarray(src_centers),
                np.ascontiguousarray(src_areas),
                np.ascontiguousarray(normal),
            )
        )
    else:
        total = _dsi_sum_numpy(obj_centers, obj_areas, src_centers, src_areas, normal)
    return ViewFactor.from_raw(total / area2)
