"""Sliding-window cubic smoothing of noisy discrete temperature samples.

Raw feedback temperatures are too coarse and noisy to difference directly.
A cubic polynomial is least-squares fitted over the 10 newest samples and
evaluated (with its derivative) at the newest timestamp, yielding a
smoothed temperature and temperature-rate estimate. No estimate is emitted
while the window is underfilled; the control loop holds the robot still
during that initialization stage.
"""
from __future__ import annotations

from collections import deque

import numpy as np

WINDOW_SIZE = 10
_POLY_ORDER = 3


class SampleWindow:
    """Ring of (time, temperature) samples with strictly increasing times."""

    def __init__(self) -> None:
        self._times: deque[float] = deque(maxlen=WINDOW_SIZE)
        self._temps: deque[float] = deque(maxlen=WINDOW_SIZE)

    def __len__(self) -> int:
        return len(self._times)

    @property
    def filled(self) -> bool:
        return len(self._times) == WINDOW_SIZE

    def push_and_estimate(
        self, time_s: float, temperature: float
    ) -> tuple[float, float] | None:
        """Insert a sample; return (T_hat, v_hat) once the window is full.

        Timestamps are re-centered at the window mean before building the
        fitting system, which keeps the Vandermonde matrix well conditioned
        for large absolute times.

        Raises:
            ValueError: Timestamp not greater than the last one.
        """
        if self._times and time_s <= self._times[-1]:
            raise ValueError(
                f"timestamps must be strictly increasing ({time_s} after {self._times[-1]})"
            )
        self._times.append(float(time_s))
        self._temps.append(float(temperature))
        if not self.filled:
            return None
        times = np.array(self._times)
        temps = np.array(self._temps)
        t_ref = times.mean()
        shifted = times - t_ref
        coeffs = np.polyfit(shifted, temps, _POLY_ORDER)
        t_now = shifted[-1]
        t_hat = float(np.polyval(coeffs, t_now))
        v_hat = float(np.polyval(np.polyder(coeffs), t_now))
        return t_hat, v_hat
