"""Radiation-based thermal servoing: models, controllers and simulation.

The package computes source-object view factors for posed planar surfaces
by contour integration, derives thermal interaction matrices, and closes
the loop with model-based and adaptive temperature controllers, including
target-feasibility analysis and isosurface grid export.
"""
from .control import (
    AdaptiveState,
    ControlOutput,
    Gains,
    VelocityLimits,
    adaptive_control,
    adaptive_lyapunov,
    adaptive_update,
    damped_pseudoinverse,
    model_based_control,
)
from .estimation import SampleWindow
from .feasibility import (
    FeasibilityReport,
    GridSpec,
    ScalarField,
    isosurface_grid,
    pairwise_feasibility,
    required_view_factor,
    steady_state_field,
    steady_state_temperature,
    target_bounds,
)
from .geometry import (
    CircleContour,
    Common,
    Complete,
    Contour,
    DegeneratePoseError,
    FourierContour,
    Occlusion,
    Partial,
    Pose,
    classify_occlusion,
    contour_eval,
    euler_from_rotation,
    fourier_fit,
    object_normal,
    rotation_from_euler,
    wrap_angle,
)
from .interaction import assemble, l_finite_diff, l_parallel, view_factor_gradient
from .simulator import (
    AdaptiveInit,
    ObjectSpec,
    RunLog,
    Scenario,
    ScenarioError,
    SensorSpec,
    SourceSchedule,
    Workspace,
    aluminum_reference_params,
    export_field,
    load_scenario,
    run_simulation,
    scenario_from_dict,
)
from .thermal import (
    Environment,
    LambdaParams,
    ThermalDivergenceError,
    ThermalState,
    ThermoParams,
    integrate_thermal,
    lambdas,
    temperature_rate,
)
from .viewfactor import (
    DEFAULT_SPEC,
    FAST_SPEC,
    NonFiniteIntegrandError,
    QuadratureSpec,
    ViewFactor,
    simpson_2d,
    vf_dsi_oracle,
    vf_general,
    vf_parallel_disks,
)

__version__ = "0.1.0"
