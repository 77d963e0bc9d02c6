"""Lumped radiative thermal plant for gray planar objects.

Maps thermophysical constants to the three rate parameters of the
temperature ODE

    dT2/dt = lambda1 * F21 - lambda2 * T2^4 + lambda3

and integrates that ODE for a (possibly time-varying) view factor. All
temperatures are Kelvin; Celsius exists only at I/O boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

STEFAN_BOLTZMANN = 5.670374419e-8  # W m^-2 K^-4


class ThermalDivergenceError(RuntimeError):
    """Temperature integration produced a non-finite value."""


@dataclass(frozen=True)
class ThermoParams:
    """Per-object thermophysical constants.

    emittance/absorptance are gray-surface fractions in (0, 1];
    specific_heat is J kg^-1 K^-1, mass kg, area m^2.
    """

    emittance: float
    absorptance: float
    specific_heat: float
    mass: float
    area: float

    def __post_init__(self) -> None:
        for name in ("emittance", "absorptance"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        for name in ("specific_heat", "mass", "area"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v}")

    @staticmethod
    def from_disk(
        emittance: float,
        absorptance: float,
        specific_heat: float,
        density: float,
        radius: float,
        thickness: float,
    ) -> "ThermoParams":
        """Constants of a homogeneous disk given material density and size."""
        area = math.pi * radius**2
        return ThermoParams(
            emittance=emittance,
            absorptance=absorptance,
            specific_heat=specific_heat,
            mass=density * area * thickness,
            area=area,
        )

    def with_area(self, area: float) -> "ThermoParams":
        """Same sheet material (mass scales with area, thickness fixed)."""
        return ThermoParams(
            emittance=self.emittance,
            absorptance=self.absorptance,
            specific_heat=self.specific_heat,
            mass=self.mass * area / self.area,
            area=area,
        )


@dataclass(frozen=True)
class Environment:
    """Source and ambient radiative conditions (temperatures in Kelvin)."""

    source_temp: float
    source_emittance: float
    ambient_temp: float
    sigma: float = STEFAN_BOLTZMANN

    def __post_init__(self) -> None:
        if not (self.source_temp > self.ambient_temp > 0.0):
            raise ValueError("require source_temp > ambient_temp > 0")
        if not 0.0 < self.source_emittance <= 1.0:
            raise ValueError("source_emittance must be in (0, 1]")


@dataclass(frozen=True)
class LambdaParams:
    """Rate parameters of the thermal ODE; all strictly positive.

    Units: lambda1 and lambda3 in K/s, lambda2 in K^-3 s^-1.
    """

    lambda1: float
    lambda2: float
    lambda3: float

    def __post_init__(self) -> None:
        for name in ("lambda1", "lambda2", "lambda3"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ThermalState:
    """Object temperature and rate."""

    temperature: float
    rate: float = 0.0

    def __post_init__(self) -> None:
        if not (self.temperature > 0.0 and math.isfinite(self.temperature)):
            raise ValueError("temperature must be positive and finite")


def lambdas(obj: ThermoParams, env: Environment) -> LambdaParams:
    """Rate parameters for an object in a given radiative environment.

    Raises:
        ValueError: Source too cold (eps1*T1^4 <= T3^4), which would make
            lambda1 non-positive; the adaptive formulation needs lambda1 > 0.
    """
    drive = env.source_emittance * env.source_temp**4 - env.ambient_temp**4
    if drive <= 0.0:
        raise ValueError(
            "source too cold: eps1*T1^4 must exceed T3^4 for lambda1 > 0"
        )
    scale = obj.area * env.sigma / (obj.mass * obj.specific_heat)
    return LambdaParams(
        lambda1=scale * obj.absorptance * drive,
        lambda2=scale * obj.emittance,
        lambda3=scale * obj.absorptance * env.ambient_temp**4,
    )


def temperature_rate(f21: float, temperature: float, lam: LambdaParams) -> float:
    """Instantaneous temperature rate dT2/dt in K/s."""
    if temperature <= 0.0:
        raise ValueError("temperature must be positive")
    return lam.lambda1 * f21 - lam.lambda2 * temperature**4 + lam.lambda3


def integrate_thermal(
    state: ThermalState,
    f21_of_t: Callable[[float], float],
    lam: LambdaParams,
    dt: float,
    steps: int,
    t0: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the thermal ODE with the classical 4th-order one-step method.

    Args:
        state: Initial state at time t0.
        f21_of_t: View factor as a function of absolute time.
        lam: Rate parameters.
        dt: Step size in seconds (> 0).
        steps: Number of steps.

    Returns:
        (times, temperatures): arrays of length steps + 1.

    Raises:
        ThermalDivergenceError: The trajectory left the finite range.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")

    def rate(f21: float, temp_k: float) -> float:
        # stage evaluations may transiently leave the physical range; the
        # per-step divergence check below rejects such trajectories
        return lam.lambda1 * f21 - lam.lambda2 * temp_k**4 + lam.lambda3

    times = t0 + dt * np.arange(steps + 1)
    temps = np.empty(steps + 1)
    temps[0] = state.temperature
    temp = state.temperature
    for k in range(steps):
        t = times[k]
        try:
            k1 = rate(f21_of_t(t), temp)
            k2 = rate(f21_of_t(t + 0.5 * dt), temp + 0.5 * dt * k1)
            k3 = rate(f21_of_t(t + 0.5 * dt), temp + 0.5 * dt * k2)
            k4 = rate(f21_of_t(t + dt), temp + dt * k3)
            temp += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        except OverflowError:
            temp = math.inf
        if not math.isfinite(temp) or temp <= 0.0:
            raise ThermalDivergenceError(
                f"temperature diverged at t={times[k + 1]:.6g} s (step {k + 1}): {temp}"
            )
        temps[k + 1] = temp
    return times, temps
