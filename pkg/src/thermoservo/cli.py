"""Command-line interface.

Subcommands: simulate, viewfactor, isosurface, feasibility, estimate-bench.
Exit codes: 0 success, 2 invalid scenario/arguments, 3 workspace violation,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .estimation import SampleWindow
from .feasibility import (
    DEFAULT_GRID_STEP_CM,
    GridSpec,
    isosurface_grid,
    pairwise_feasibility,
    target_bounds,
)
from .geometry import CircleContour, DegeneratePoseError, Pose, fourier_fit
from .simulator import ScenarioError, export_field, load_scenario, run_simulation
from .thermal import ThermalDivergenceError, lambdas
from .units import cm_to_m, kelvin_to_celsius, m_to_cm
from .viewfactor import (
    NonFiniteIntegrandError,
    QuadratureSpec,
    vf_dsi_oracle,
    vf_general,
)

EXIT_OK = 0
EXIT_INVALID_SCENARIO = 2
EXIT_WORKSPACE_VIOLATION = 3
EXIT_NUMERICAL_FAILURE = 4


def _parse_pose(text: str) -> Pose:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 6:
        raise ValueError("pose needs 6 comma-separated values: p1,p2,p3,tx,ty,tz")
    return Pose(
        cm_to_m(parts[0]),
        cm_to_m(parts[1]),
        cm_to_m(parts[2]),
        math.radians(parts[3]),
        math.radians(parts[4]),
        math.radians(parts[5]),
    )


def _object_contour(args):
    if args.contour_csv:
        points = np.loadtxt(args.contour_csv, delimiter=",", ndmin=2)
        return fourier_fit(points * 1e-2, args.harmonics)
    return CircleContour(cm_to_m(args.object_radius_cm))


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    log = run_simulation(scenario)
    log.to_csv(args.out)
    last = log.rows[-1]
    t_end = last[log.columns.index("time_s")]
    errors = [
        abs(last[log.columns.index(f"dtau_K_{i + 1}")])
        for i in range(scenario.n_objects)
    ]
    print(f"simulated {t_end:.9g} s, log written to {args.out}")
    print("final |dtau| per object [K]: " + ", ".join(f"{e:.3f}" for e in errors))
    if log.violation:
        print("workspace violation: run terminated early", file=sys.stderr)
        return EXIT_WORKSPACE_VIOLATION
    return EXIT_OK


def _cmd_viewfactor(args) -> int:
    pose = _parse_pose(args.pose)
    contour = _object_contour(args)
    if args.method == "contour":
        value = vf_general(
            pose, cm_to_m(args.source_radius_cm), contour, QuadratureSpec(args.quadrature_n)
        ).value
    else:
        value = vf_dsi_oracle(
            pose, cm_to_m(args.source_radius_cm), contour, args.facets
        ).value
    print(f"{value:.9g}")
    return EXIT_OK


def _cmd_isosurface(args) -> int:
    contour = _object_contour(args)
    grid = None
    if args.step is not None:
        if args.subset == "translation":
            grid = GridSpec(ranges=((-20.0, 20.0), (-20.0, 20.0), (0.0, 30.0)), step=args.step)
        else:
            grid = GridSpec(ranges=((-90.0, 90.0), (-90.0, 90.0), (-90.0, 90.0)), step=args.step)
    field = isosurface_grid(
        cm_to_m(args.source_radius_cm),
        contour,
        subset=args.subset,
        grid=grid,
        spec=QuadratureSpec(args.quadrature_n),
        workers=args.workers,
    )
    export_field(field, args.out)
    print(f"{field.n_cells} cells written to {args.out}")
    return EXIT_OK


def _cmd_feasibility(args) -> int:
    scenario = load_scenario(args.scenario)
    env = scenario.environment
    lo, hi = target_bounds(env)
    print(
        f"condition 1 interval: [{kelvin_to_celsius(lo):.2f} C, "
        f"{kelvin_to_celsius(hi):.2f} C)"
    )
    ws = scenario.workspace.bounds
    grid = GridSpec(
        ranges=tuple((m_to_cm(b[0]), m_to_cm(b[1]) + 1e-9) for b in ws),
        step=args.grid_step_cm,
    )
    n_poses = int(np.prod(grid.shape))
    print(f"searching {n_poses} end-effector poses at {args.grid_step_cm} cm step")
    report = pairwise_feasibility(
        targets=scenario.targets,
        displacements=[o.displacement for o in scenario.objects],
        objects=[(o.contour, lambdas(o.material, env)) for o in scenario.objects],
        source_radius=scenario.source_radius,
        env=env,
        grid=grid,
        spec=scenario.quadrature,
    )
    print(f"feasible: {report.feasible}")
    print(f"reason: {report.reason}")
    if report.bound_violations:
        print(f"targets violating condition 1 (0-based): {list(report.bound_violations)}")
    if report.witness is not None:
        w = report.witness
        print(
            f"best pose [cm]: ({m_to_cm(w.p1):.2f}, {m_to_cm(w.p2):.2f}, {m_to_cm(w.p3):.2f}), "
            f"residual {report.residual:.3f} K"
        )
    if report.delta_range is not None:
        print(
            f"steady-state difference range over grid [K]: "
            f"[{report.delta_range[0]:.2f}, {report.delta_range[1]:.2f}]"
        )
    return EXIT_OK


def _cmd_estimate_bench(args) -> int:
    rng = np.random.default_rng(args.seed)
    window = SampleWindow()
    errors = []
    for k in range(40):
        t = float(k)
        temp = 300.0 + 2.0 * t + rng.uniform(-0.1, 0.1)
        est = window.push_and_estimate(t, temp)
        if est is not None:
            errors.append(abs(est[1] - 2.0))
    print(f"samples: 40, estimates: {len(errors)}")
    print(f"max slope error [K/s]: {max(errors):.4f}")
    print(f"mean slope error [K/s]: {sum(errors) / len(errors):.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermoservo",
        description="Radiation-based thermal servoing simulator and analysis tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a closed-loop scenario")
    p.add_argument("scenario", help="YAML scenario file")
    p.add_argument("--out", required=True, help="output CSV log path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("viewfactor", help="single view-factor evaluation")
    p.add_argument("--pose", required=True, help="p1,p2,p3 [cm], tx,ty,tz [deg]")
    p.add_argument("--source-radius-cm", type=float, default=10.0)
    p.add_argument("--object-radius-cm", type=float, default=1.5)
    p.add_argument("--contour-csv", help="boundary points (x_cm,y_cm) for a Fourier contour")
    p.add_argument("--harmonics", type=int, default=5)
    p.add_argument("--method", choices=("contour", "dsi"), default="contour")
    p.add_argument("--facets", type=int, default=20000)
    p.add_argument("--quadrature-n", type=int, default=64)
    p.set_defaults(func=_cmd_viewfactor)

    p = sub.add_parser("isosurface", help="export a view-factor grid")
    p.add_argument("--subset", choices=("translation", "rotation"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--source-radius-cm", type=float, default=10.0)
    p.add_argument("--object-radius-cm", type=float, default=1.5)
    p.add_argument("--contour-csv")
    p.add_argument("--harmonics", type=int, default=5)
    p.add_argument("--step", type=float, default=None, help="grid step (cm or deg)")
    p.add_argument("--quadrature-n", type=int, default=64)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_isosurface)

    p = sub.add_parser("feasibility", help="target feasibility report for a scenario")
    p.add_argument("scenario")
    p.add_argument("--grid-step-cm", type=float, default=DEFAULT_GRID_STEP_CM)
    p.set_defaults(func=_cmd_feasibility)

    p = sub.add_parser("estimate-bench", help="seeded estimator noise benchmark")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_estimate_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID_SCENARIO
    except (ValueError, DegeneratePoseError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID_SCENARIO
    except (NonFiniteIntegrandError, ThermalDivergenceError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_FAILURE


if __name__ == "__main__":
    sys.exit(main())
