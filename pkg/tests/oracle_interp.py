"""Brute-force piecewise-linear interpolation, independent of the converter.

Written against the definition alone (scan segments, apply the two-point
formula); the gesture module's numpy path is checked against this.
"""
from __future__ import annotations


def interp_scalar(x: float, xs: list[float], ys: list[float]) -> float:
    if x <= xs[0]:
        return ys[0]
    if x >= xs[-1]:
        return ys[-1]
    for i in range(len(xs) - 1):
        if xs[i] <= x <= xs[i + 1]:
            span = xs[i + 1] - xs[i]
            w = (x - xs[i]) / span
            return ys[i] * (1.0 - w) + ys[i + 1] * w
    raise AssertionError("unreachable: x inside range but no segment found")


def linear_interp_error_bound(step_s: float, max_second_derivative: float) -> float:
    """Worst-case |f - linear interpolant| for a C2 function sampled at step_s."""
    return step_s * step_s * max_second_derivative / 8.0
