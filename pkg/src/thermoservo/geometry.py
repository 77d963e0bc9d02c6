"""Frames, rotations, contour parametrizations and source-plane occlusion.

Geometry backbone for all view-factor computations: 6-DOF poses of a planar
object relative to a circular source, closed contours (circles or truncated
Fourier series fitted to boundary polylines), and the classification of how
the object plane cuts the bounded source disk.

Euler convention: angles (theta_x, theta_y, theta_z) compose extrinsically
about the fixed source-frame axes X, then Y, then Z, i.e. R = Rz @ Ry @ Rx.
All tests and scenario files assume this convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Poses closer than this to the source plane are treated as contact and
# rejected; the physical setup never approaches the source surface.
MIN_SURFACE_CLEARANCE = 1e-6


class DegeneratePoseError(ValueError):
    """Pose places the object surface in (or touching) the source plane."""


def wrap_angle(angle: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    if not math.isfinite(angle):
        raise ValueError(f"angle must be finite, got {angle}")
    return math.pi - (math.pi - angle) % TWO_PI


@dataclass(frozen=True)
class Pose:
    """6-DOF configuration of the object center in the source frame.

    Translations are meters, angles radians. Angles are stored wrapped to
    (-pi, pi]. The source frame has its origin at the source disk center
    with the +z axis along the source normal.
    """

    p1: float
    p2: float
    p3: float
    theta_x: float = 0.0
    theta_y: float = 0.0
    theta_z: float = 0.0

    def __post_init__(self) -> None:
        for name in ("p1", "p2", "p3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        for name in ("theta_x", "theta_y", "theta_z"):
            object.__setattr__(self, name, wrap_angle(getattr(self, name)))

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3])

    def as_vector(self) -> np.ndarray:
        """Pose as [p1, p2, p3, theta_x, theta_y, theta_z]."""
        return np.array(
            [self.p1, self.p2, self.p3, self.theta_x, self.theta_y, self.theta_z]
        )

    @staticmethod
    def from_vector(x: np.ndarray) -> "Pose":
        return Pose(*(float(v) for v in x))

    def perturbed(self, index: int, delta: float) -> "Pose":
        """Pose with a single coordinate shifted by delta (for gradients)."""
        x = self.as_vector()
        x[index] += delta
        return Pose.from_vector(x)


def rotation_from_euler(theta_x: float, theta_y: float, theta_z: float) -> np.ndarray:
    """Rotation matrix for extrinsic X-Y-Z angles, R = Rz @ Ry @ Rx."""
    cx, sx = math.cos(theta_x), math.sin(theta_x)
    cy, sy = math.cos(theta_y), math.sin(theta_y)
    cz, sz = math.cos(theta_z), math.sin(theta_z)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    ry = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    rz = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry @ rx


def euler_from_rotation(rotation: np.ndarray) -> tuple[float, float, float]:
    """Extrinsic X-Y-Z angles of a rotation matrix (inverse of rotation_from_euler).

    At the gimbal-lock singularity (|R[2,0]| = 1) theta_z is set to 0 and the
    remaining freedom folded into theta_x.
    """
    r = np.asarray(rotation, dtype=float)
    sy = -r[2, 0]
    sy = min(1.0, max(-1.0, sy))
    theta_y = math.asin(sy)
    if abs(sy) < 1.0 - 1e-12:
        theta_x = math.atan2(r[2, 1], r[2, 2])
        theta_z = math.atan2(r[1, 0], r[0, 0])
    else:
        theta_x = math.atan2(-r[0, 1], r[1, 1]) * (1.0 if sy > 0 else -1.0)
        theta_z = 0.0
    return theta_x, theta_y, theta_z


def pose_rotation(pose: Pose) -> np.ndarray:
    return rotation_from_euler(pose.theta_x, pose.theta_y, pose.theta_z)


def object_normal(rotation: np.ndarray) -> np.ndarray:
    """Unit normal of the object plane: the rotated -z axis."""
    return -np.asarray(rotation, dtype=float)[:, 2]


# ---------------------------------------------------------------------------
# Contours
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircleContour:
    """Circular boundary of radius `radius` (meters), parametrized by the
    angle omega in [0, 2*pi), counterclockwise in the local plane."""

    radius: float

    def __post_init__(self) -> None:
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive, got {self.radius}")

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def period(self) -> float:
        return TWO_PI

    def local_point(self, param: np.ndarray) -> np.ndarray:
        """Local (x, y) boundary points, shape (..., 2)."""
        w = np.asarray(param, dtype=float)
        return np.stack(
            [self.radius * np.cos(w), self.radius * np.sin(w)], axis=-1
        )

    def local_tangent(self, param: np.ndarray) -> np.ndarray:
        """d(point)/d(param), shape (..., 2)."""
        w = np.asarray(param, dtype=float)
        return np.stack(
            [-self.radius * np.sin(w), self.radius * np.cos(w)], axis=-1
        )


@dataclass(frozen=True)
class FourierContour:
    """Closed boundary as a truncated Fourier series in arc length phi in [0, 1).

    Coefficient pairs (beta[j], b[j]) for harmonics j = -F..F enter the local
    coordinates as

        x(phi) = sum_j beta_j sin(2 pi j phi) + b_j cos(2 pi j phi)
        y(phi) = sum_j beta_j cos(2 pi j phi) - b_j sin(2 pi j phi)

    which is the complex series sum_j (b_j + i beta_j) exp(-2 pi i j phi).
    The truncated series is closed by construction. Stored contours are
    counterclockwise (positive enclosed area).
    """

    beta: np.ndarray  # shape (2F+1,), harmonic order j = -F..F
    b: np.ndarray
    harmonics: int

    def __post_init__(self) -> None:
        beta = np.asarray(self.beta, dtype=float)
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "b", b)
        n = 2 * self.harmonics + 1
        if self.harmonics < 1:
            raise ValueError("harmonics must be >= 1")
        if beta.shape != (n,) or b.shape != (n,):
            raise ValueError(f"coefficient arrays must have shape ({n},)")
        if not (np.isfinite(beta).all() and np.isfinite(b).all()):
            raise ValueError("coefficients must be finite")
        if self.area <= 0.0:
            raise ValueError("contour must enclose positive area (counterclockwise)")

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.harmonics, self.harmonics + 1)

    @property
    def coefficients(self) -> np.ndarray:
        """Complex coefficients c_j = b_j + i*beta_j."""
        return self.b + 1j * self.beta

    @property
    def area(self) -> float:
        # Signed area of z(phi) = sum c_j exp(-2 pi i j phi) is
        # -pi * sum_j j |c_j|^2 by orthogonality of the harmonics.
        c = self.b + 1j * self.beta
        return float(-math.pi * np.sum(self.orders * np.abs(c) ** 2))

    @property
    def period(self) -> float:
        return 1.0

    def local_point(self, param: np.ndarray) -> np.ndarray:
        phi = np.asarray(param, dtype=float)
        z = np.exp(-2j * math.pi * np.multiply.outer(phi, self.orders)) @ self.coefficients
        return np.stack([z.real, z.imag], axis=-1)

    def local_tangent(self, param: np.ndarray) -> np.ndarray:
        phi = np.asarray(param, dtype=float)
        dc = -2j * math.pi * self.orders * self.coefficients
        dz = np.exp(-2j * math.pi * np.multiply.outer(phi, self.orders)) @ dc
        return np.stack([dz.real, dz.imag], axis=-1)

    def harmonic_magnitude(self, order: int) -> float:
        """Combined magnitude of the +order and -order coefficient pairs."""
        if order < 0 or order > self.harmonics:
            raise ValueError("order out of range")
        c = self.coefficients
        f = self.harmonics
        if order == 0:
            return float(abs(c[f]))
        return float(math.hypot(abs(c[f + order]), abs(c[f - order])))


Contour = CircleContour | FourierContour


def contour_eval(
    contour: Contour, pose: Pose, param: float | np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """World-frame point and tangent differential of a posed object contour.

    The local boundary point is rotated by the pose rotation and translated
    by the pose position. The returned tangent is the exact derivative of the
    world point with respect to the parameter (radians for circles, unit arc
    length for Fourier contours).

    Args:
        contour: Object boundary.
        pose: Object pose in the source frame.
        param: Scalar or array parameter inside the contour's domain.

    Returns:
        (point, tangent): arrays of shape (..., 3).

    Raises:
        ValueError: If the parameter lies outside the contour's domain.
    """
    p = np.asarray(param, dtype=float)
    if np.any(p < 0.0) or np.any(p >= contour.period):
        raise ValueError(f"parameter outside [0, {contour.period})")
    rotation = pose_rotation(pose)
    local_pt = contour.local_point(p)
    local_tan = contour.local_tangent(p)
    zeros = np.zeros(local_pt.shape[:-1] + (1,))
    pt3 = np.concatenate([local_pt, zeros], axis=-1)
    tan3 = np.concatenate([local_tan, zeros], axis=-1)
    point = pt3 @ rotation.T + pose.translation
    tangent = tan3 @ rotation.T
    return point, tangent


# ---------------------------------------------------------------------------
# Fourier fitting
# ---------------------------------------------------------------------------


def _segments_intersect(p1, p2, q1, q2) -> bool:
    """Proper intersection test between segments p1p2 and q1q2."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return (d1 * d2 < 0.0) and (d3 * d4 < 0.0)


def _is_simple_polygon(points: np.ndarray) -> bool:
    """Pairwise O(n^2) segment test; contours are small so this is fine."""
    n = len(points)
    segs = [(points[i], points[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent segments share an endpoint
            if _segments_intersect(*segs[i], *segs[j]):
                return False
    return True


def fourier_fit(polyline: np.ndarray, harmonics: int) -> FourierContour:
    """Fit a truncated Fourier contour to an ordered closed boundary polyline.

    Points are parametrized by normalized arc length and the coefficient
    pairs solve the least-squares boundary-position residual. The fitted
    contour is normalized to counterclockwise orientation.

    Args:
        polyline: (n, 2) ordered boundary points of a simple closed polygon
            (the closing edge from the last to the first point is implicit).
        harmonics: Harmonic count F >= 1; the series keeps 2F+1 terms.

    Raises:
        ValueError: Fewer than 2F+2 distinct points, a self-intersecting
            polygon, or a degenerate (zero-area) boundary.
    """
    pts = np.asarray(polyline, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("polyline must have shape (n, 2)")
    if harmonics < 1:
        raise ValueError("harmonics must be >= 1")
    # Drop a duplicated closing point and any consecutive duplicates.
    if len(pts) > 1 and np.allclose(pts[0], pts[-1]):
        pts = pts[:-1]
    keep = np.ones(len(pts), dtype=bool)
    for i in range(1, len(pts)):
        if np.allclose(pts[i], pts[i - 1]):
            keep[i] = False
    pts = pts[keep]
    n = len(pts)
    if n < 2 * harmonics + 2:
        raise ValueError(
            f"need at least {2 * harmonics + 2} distinct points for F={harmonics}, got {n}"
        )
    # Signed polygon area; zero means collinear/degenerate input.
    x, y = pts[:, 0], pts[:, 1]
    signed_area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if abs(signed_area) < 1e-12 * max(1.0, np.abs(pts).max() ** 2):
        raise ValueError("degenerate boundary: points enclose no area")
    if not _is_simple_polygon(pts):
        raise ValueError("boundary polygon is self-intersecting")
    if signed_area < 0.0:
        pts = pts[::-1]

    closed = np.vstack([pts, pts[:1]])
    seg_len = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    total = float(seg_len.sum())
    phi = np.concatenate([[0.0], np.cumsum(seg_len[:-1])]) / total

    orders = np.arange(-harmonics, harmonics + 1)
    design = np.exp(-2j * math.pi * np.outer(phi, orders))
    z = pts[:, 0] + 1j * pts[:, 1]
    coeffs, *_ = np.linalg.lstsq(design, z, rcond=None)
    return FourierContour(
        beta=coeffs.imag.copy(), b=coeffs.real.copy(), harmonics=harmonics
    )


def fit_circle_contour(radius: float, harmonics: int = 5, samples: int = 64) -> FourierContour:
    """Fourier contour of a circle, via fitting sampled boundary points."""
    w = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    pts = radius * np.stack([np.cos(w), np.sin(w)], axis=-1)
    return fourier_fit(pts, harmonics)


# ---------------------------------------------------------------------------
# Occlusion classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Common:
    """The whole bounded source disk radiates to the object's front side."""


@dataclass(frozen=True)
class Partial:
    """The object plane cuts the source disk; only the circular segment on
    the object's front side contributes.

    phi1 < phi2 are the two intersection angles on the source circle, both in
    [0, 2*pi). Which of the two arcs bounds the contributing segment is
    re-derived from the pose by a side test (see viewfactor internals).
    """

    phi1: float
    phi2: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.phi1 < self.phi2 < TWO_PI):
            raise ValueError("require 0 <= phi1 < phi2 < 2*pi")


@dataclass(frozen=True)
class Complete:
    """The source disk sees only the object's back side; the view factor is 0."""


Occlusion = Common | Partial | Complete


def classify_occlusion(pose: Pose, source_radius: float) -> Occlusion:
    """Classify how the object plane relates to the bounded source disk.

    Substituting the source circle x = r1 cos(phi), y = r1 sin(phi), z = 0
    into the object plane equation gives a*cos(phi) + b*sin(phi) = d. Two
    real roots with the plane actually cutting the disk yield the partial
    self-obstruction case. Otherwise the whole disk lies on one side of the
    object plane: the side the object normal faces gives the common case,
    the far side gives complete self-obstruction.

    Raises:
        DegeneratePoseError: Object coplanar with the source plane.
        ValueError: Non-positive source radius.
    """
    if source_radius <= 0.0:
        raise ValueError("source_radius must be positive")
    normal = object_normal(pose_rotation(pose))
    d = float(normal @ pose.translation)
    amp = source_radius * math.hypot(normal[0], normal[1])

    if abs(pose.p3) < 1e-12 and amp < 1e-12 * source_radius:
        raise DegeneratePoseError("object lies in the source plane")

    # Tangent or non-intersecting chord: one-sided disk, sign of d decides.
    # d < 0 means the disk center is on the front side of the object plane.
    if amp - abs(d) <= 1e-12 * max(amp, abs(d), source_radius):
        return Common() if d < 0.0 else Complete()

    psi = math.atan2(normal[1], normal[0])
    delta = math.acos(min(1.0, max(-1.0, d / amp)))

    def wrap_2pi(x: float) -> float:
        w = x % TWO_PI
        # x % 2*pi rounds up to exactly 2*pi for tiny negative x
        return 0.0 if w >= TWO_PI else w

    phi1, phi2 = sorted((wrap_2pi(psi + delta), wrap_2pi(psi - delta)))
    if phi2 - phi1 < 1e-12 or TWO_PI - (phi2 - phi1) < 1e-12:
        # Numerically tangent: fall back to the one-sided classification.
        return Common() if d < 0.0 else Complete()
    return Partial(phi1=phi1, phi2=phi2)


def contributing_arc(
    occlusion: Partial, pose: Pose, source_radius: float
) -> tuple[float, float]:
    """Angle range (start, end) with end > start whose counterclockwise arc
    bounds the contributing segment of the source disk."""
    normal = object_normal(pose_rotation(pose))
    d = float(normal @ pose.translation)
    phi1, phi2 = occlusion.phi1, occlusion.phi2
    mid = 0.5 * (phi1 + phi2)
    front = (
        source_radius * (normal[0] * math.cos(mid) + normal[1] * math.sin(mid)) - d
    )
    if front > 0.0:
        return phi1, phi2
    return phi2, phi1 + TWO_PI
