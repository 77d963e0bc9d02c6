"""Unit conversions between boundary units (cm, Celsius) and SI internals.

Everything inside the library works in meters and Kelvin. Scenario files,
CLI flags and log columns use centimeters and Celsius, matching the lab
conventions of the hardware this simulates.
"""
from __future__ import annotations

ZERO_CELSIUS_K = 273.15


def cm_to_m(value_cm: float) -> float:
    return value_cm * 1e-2


def m_to_cm(value_m: float) -> float:
    return value_m * 1e2


def celsius_to_kelvin(temp_c: float) -> float:
    return temp_c + ZERO_CELSIUS_K


def kelvin_to_celsius(temp_k: float) -> float:
    return temp_k - ZERO_CELSIUS_K
