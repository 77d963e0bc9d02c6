"""Steady-state temperature analysis and thermal-target feasibility.

For a fixed pose the thermal ODE has a unique attracting equilibrium
T_v0(F21) = ((lambda1 F21 + lambda3) / lambda2)^(1/4), strictly increasing
in the view factor. Reachable targets are bounded by the ambient
temperature and eps1^(1/4) T1 (condition 1); multiple objects rigidly fixed
to one end-effector are additionally constrained by their fixed spatial
arrangement (condition 2), checked here by grid search over end-effector
poses. Scalar fields of F21 over pose grids back both the analysis and the
isosurface export.

Grid coordinates at this boundary use centimeters (translation subsets) and
degrees (rotation subsets), the reporting units of the lab setup; poses and
temperatures everywhere else stay SI.
"""
from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Contour, DegeneratePoseError, Pose
from .thermal import Environment, LambdaParams
from .units import cm_to_m
from .viewfactor import DEFAULT_SPEC, QuadratureSpec, _general_value

#: Target counts as met when the steady-state temperature at the witness
#: pose is within this band (Kelvin), mirroring the closed-loop band.
FEASIBILITY_TOLERANCE_K = 0.5

#: Default translation grid step for condition-2 searches, in cm.
DEFAULT_GRID_STEP_CM = 0.5


def steady_state_temperature(f21: float, lam: LambdaParams) -> float:
    """Equilibrium temperature T_v0 for a given view factor, in Kelvin."""
    if not 0.0 <= f21 < 1.0:
        raise ValueError("view factor must be in [0, 1)")
    return ((lam.lambda1 * f21 + lam.lambda3) / lam.lambda2) ** 0.25


def required_view_factor(target_temp: float, lam: LambdaParams) -> float:
    """Inverse of steady_state_temperature: the view factor whose
    equilibrium equals the target (may fall outside [0, 1) for
    unreachable targets)."""
    return (lam.lambda2 * target_temp**4 - lam.lambda3) / lam.lambda1


def target_bounds(env: Environment) -> tuple[float, float]:
    """Half-open interval [T3, eps1^(1/4) T1) of reachable single-object
    steady-state temperatures (Kelvin), assuming gray surfaces with equal
    emittance and absorptance."""
    return env.ambient_temp, env.source_emittance**0.25 * env.source_temp


def target_within_bounds(target_temp: float, env: Environment) -> bool:
    lo, hi = target_bounds(env)
    return lo <= target_temp < hi


# ---------------------------------------------------------------------------
# Scalar fields over pose grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Regular half-open grid: values lo, lo+step, ... strictly below hi.

    Units are cm for translation subsets, degrees for rotation subsets.
    """

    ranges: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    step: float

    def __post_init__(self) -> None:
        if self.step <= 0.0:
            raise ValueError("step must be positive")
        for lo, hi in self.ranges:
            if hi <= lo:
                raise ValueError("each range needs hi > lo")

    def axis_values(self, axis: int) -> np.ndarray:
        lo, hi = self.ranges[axis]
        n = int(math.ceil((hi - lo) / self.step - 1e-9))
        return lo + self.step * np.arange(n)

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(len(self.axis_values(k)) for k in range(3))  # type: ignore[return-value]


#: Paper-style default grids for the two controlled-variable subsets.
TRANSLATION_GRID = GridSpec(ranges=((-20.0, 20.0), (-20.0, 20.0), (0.0, 30.0)), step=1.0)
ROTATION_GRID = GridSpec(ranges=((-90.0, 90.0), (-90.0, 90.0), (-90.0, 90.0)), step=2.0)


@dataclass(frozen=True)
class ScalarField:
    """Per-cell view-factor or steady-state-temperature values over a
    3-coordinate pose subset.

    axis_names are ("p1","p2","p3") in cm or ("tx","ty","tz") in degrees.
    Degenerate poses are recorded with the flag set, never dropped.
    View-factor fields must lie in [0, 1); steady-state fields are Kelvin
    and must be positive.
    """

    axis_names: tuple[str, str, str]
    axis_values: tuple[np.ndarray, np.ndarray, np.ndarray]
    values: np.ndarray
    degenerate: np.ndarray
    kind: str = "view_factor"  # view_factor | steady_state

    def __post_init__(self) -> None:
        shape = tuple(len(a) for a in self.axis_values)
        if self.values.shape != shape or self.degenerate.shape != shape:
            raise ValueError("values/degenerate must match the grid shape")
        if self.kind == "view_factor":
            ok = (self.values >= 0.0) & (self.values < 1.0)
            if not ok.all():
                raise ValueError("view-factor field values outside [0, 1)")
        elif self.kind == "steady_state":
            if not (self.values > 0.0).all():
                raise ValueError("steady-state field values must be positive")
        else:
            raise ValueError(f"unknown field kind: {self.kind}")

    @property
    def n_cells(self) -> int:
        return int(self.values.size)


def _cell_pose(subset: str, coords: tuple[float, float, float]) -> Pose:
    if subset == "translation":
        return Pose(cm_to_m(coords[0]), cm_to_m(coords[1]), cm_to_m(coords[2]))
    return Pose(
        0.0,
        0.0,
        cm_to_m(5.0),
        math.radians(coords[0]),
        math.radians(coords[1]),
        math.radians(coords[2]),
    )


def _grid_chunk(args) -> list[tuple[float, bool]]:
    subset, coord_list, source_radius, contour, spec = args
    out = []
    for coords in coord_list:
        try:
            value = _general_value(_cell_pose(subset, coords), source_radius, contour, spec)
            # absorb quadrature noise at the range ends (coarse rules can
            # overshoot slightly for near-contact cells); physical F < 1
            value = min(max(value, 0.0), 1.0 - 1e-12)
            out.append((value, False))
        except DegeneratePoseError:
            out.append((0.0, True))
    return out


def isosurface_grid(
    source_radius: float,
    contour: Contour,
    subset: str = "translation",
    grid: GridSpec | None = None,
    spec: QuadratureSpec = DEFAULT_SPEC,
    workers: int | None = None,
) -> ScalarField:
    """Evaluate F21 over a regular grid of one controlled-variable subset.

    The translation subset varies (p1, p2, p3) in cm at zero rotation; the
    rotation subset varies (theta_x, theta_y, theta_z) in degrees at the
    fixed translation (0, 0, 5 cm). Cells are evaluated independently
    (optionally across worker processes) and merged deterministically in
    row-major cell order.

    Args:
        workers: Process count; None picks the CPU count, 1 stays serial.
    """
    if subset not in ("translation", "rotation"):
        raise ValueError("subset must be 'translation' or 'rotation'")
    if grid is None:
        grid = TRANSLATION_GRID if subset == "translation" else ROTATION_GRID
    axes = tuple(grid.axis_values(k) for k in range(3))
    coords = [
        (float(a), float(b), float(c))
        for a in axes[0]
        for b in axes[1]
        for c in axes[2]
    ]
    if workers is None:
        workers = multiprocessing.cpu_count()
    if workers > 1 and len(coords) > 256:
        n_chunks = workers * 8
        chunk_size = max(1, (len(coords) + n_chunks - 1) // n_chunks)
        chunks = [
            (subset, coords[i : i + chunk_size], source_radius, contour, spec)
            for i in range(0, len(coords), chunk_size)
        ]
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_grid_chunk, chunks)
        flat = [item for chunk in results for item in chunk]
    else:
        flat = _grid_chunk((subset, coords, source_radius, contour, spec))

    shape = tuple(len(a) for a in axes)
    values = np.array([v for v, _ in flat]).reshape(shape)
    degenerate = np.array([d for _, d in flat]).reshape(shape)
    names = ("p1", "p2", "p3") if subset == "translation" else ("tx", "ty", "tz")
    return ScalarField(
        axis_names=names, axis_values=axes, values=values, degenerate=degenerate
    )


def steady_state_field(field: ScalarField, lam: LambdaParams) -> ScalarField:
    """Map a view-factor field to the steady-state temperature field T_v0.

    Degenerate cells map to the ambient equilibrium (their view factor is
    recorded as 0) and keep their flag.
    """
    if field.kind != "view_factor":
        raise ValueError("input must be a view-factor field")
    values = ((lam.lambda1 * field.values + lam.lambda3) / lam.lambda2) ** 0.25
    return ScalarField(
        axis_names=field.axis_names,
        axis_values=field.axis_values,
        values=values,
        degenerate=field.degenerate.copy(),
        kind="steady_state",
    )


# ---------------------------------------------------------------------------
# Pairwise (condition 2) feasibility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the two necessary target-feasibility conditions.

    Condition 1 failures list the offending target indices. For condition 2
    the grid search reports either a witness end-effector pose whose
    steady-state temperatures all sit within tolerance of their targets, or
    the smallest residual found. delta_range is the (min, max) of the
    steady-state temperature difference of the first two objects over the
    grid, the interval-form diagnostic.
    """

    feasible: bool
    reason: str
    bounds: tuple[float, float]
    bound_violations: tuple[int, ...]
    witness: Pose | None = None
    residual: float = math.inf
    steady_states: tuple[float, ...] = ()
    delta_range: tuple[float, float] | None = None


def pairwise_feasibility(
    targets: Sequence[float],
    displacements: Sequence[Sequence[float]],
    objects: Sequence[tuple[Contour, LambdaParams]],
    source_radius: float,
    env: Environment,
    grid: GridSpec,
    spec: QuadratureSpec = DEFAULT_SPEC,
    tolerance: float = FEASIBILITY_TOLERANCE_K,
    refine_levels: int = 2,
    refine_factor: int = 4,
) -> FeasibilityReport:
    """Check whether rigidly arranged objects can all reach their targets.

    Every candidate end-effector pose x on the (translation, cm) grid places
    object i at x + displacement_i with zero rotation; the pose is a witness
    when each object's steady-state temperature lies within tolerance of its
    target. Degenerate object poses (touching the source plane) are skipped.
    After the base sweep the grid is re-centered on the best cell and
    refined `refine_levels` times (step / refine_factor each level), since
    steady-state temperatures move by several Kelvin per base grid cell.

    Args:
        targets: Per-object target temperatures, Kelvin.
        displacements: Per-object (dx, dy, dz) from the end-effector, meters.
        objects: Per-object (contour, rate parameters).
        grid: End-effector translation grid in cm.

    Raises:
        ValueError: Mismatched lengths or an empty workspace grid.
    """
    n_obj = len(targets)
    if n_obj < 1:
        raise ValueError("need at least one target")
    if len(displacements) != n_obj or len(objects) != n_obj:
        raise ValueError("targets, displacements and objects must align")
    axes = tuple(grid.axis_values(k) for k in range(3))
    if any(len(a) == 0 for a in axes):
        raise ValueError("empty workspace grid")

    bounds = target_bounds(env)
    violations = tuple(
        i for i, t in enumerate(targets) if not bounds[0] <= t < bounds[1]
    )
    if violations:
        return FeasibilityReport(
            feasible=False,
            reason=(
                "condition 1 violated: targets outside the reachable "
                f"steady-state interval [{bounds[0]:.2f} K, {bounds[1]:.2f} K)"
            ),
            bounds=bounds,
            bound_violations=violations,
        )

    disp = np.asarray(displacements, dtype=float)
    best_residual = math.inf
    best_pose: Pose | None = None
    best_tv0: tuple[float, ...] = ()
    delta_min, delta_max = math.inf, -math.inf

    def evaluate(cells_cm) -> None:
        nonlocal best_residual, best_pose, best_tv0, delta_min, delta_max
        for a, b, c in cells_cm:
            base = np.array([cm_to_m(a), cm_to_m(b), cm_to_m(c)])
            tv0 = []
            try:
                for i in range(n_obj):
                    p = base + disp[i]
                    value = _general_value(
                        Pose(p[0], p[1], p[2]), source_radius, objects[i][0], spec
                    )
                    # Coarse quadrature can overshoot 1 slightly for
                    # near-contact sweep cells; physical F stays below 1.
                    value = min(max(value, 0.0), 1.0 - 1e-12)
                    tv0.append(steady_state_temperature(value, objects[i][1]))
            except DegeneratePoseError:
                continue
            if n_obj >= 2:
                delta = tv0[0] - tv0[1]
                delta_min = min(delta_min, delta)
                delta_max = max(delta_max, delta)
            residual = max(abs(t - ts) for t, ts in zip(tv0, targets))
            if residual < best_residual:
                best_residual = residual
                best_pose = Pose(base[0], base[1], base[2])
                best_tv0 = tuple(tv0)

    evaluate(
        (float(a), float(b), float(c))
        for a in axes[0]
        for b in axes[1]
        for c in axes[2]
    )

    step = grid.step
    for _ in range(refine_levels):
        if best_pose is None or best_residual <= tolerance:
            break
        center = np.array([best_pose.p1, best_pose.p2, best_pose.p3]) * 1e2
        fine = step / refine_factor
        offsets = fine * np.arange(-refine_factor, refine_factor + 1)
        local_axes = []
        for k in range(3):
            lo, hi = grid.ranges[k]
            vals = center[k] + offsets
            flat = len(axes[k]) == 1  # collapsed axis (e.g. slab grids) stays collapsed
            local_axes.append(
                np.array([center[k]]) if flat else vals[(vals >= lo) & (vals < hi)]
            )
        evaluate(
            (float(a), float(b), float(c))
            for a in local_axes[0]
            for b in local_axes[1]
            for c in local_axes[2]
        )
        step = fine

    delta_range = (delta_min, delta_max) if n_obj >= 2 else None
    if best_pose is not None and best_residual <= tolerance:
        return FeasibilityReport(
            feasible=True,
            reason="witness pose places every object within tolerance of its target",
            bounds=bounds,
            bound_violations=(),
            witness=best_pose,
            residual=best_residual,
            steady_states=best_tv0,
            delta_range=delta_range,
        )
    return FeasibilityReport(
        feasible=False,
        reason=(
            "condition 2 violated: no grid pose places all objects on their "
            f"target isosurfaces (best residual {best_residual:.3f} K)"
        ),
        bounds=bounds,
        bound_violations=(),
        witness=best_pose,
        residual=best_residual,
        steady_states=best_tv0,
        delta_range=delta_range,
    )
