"""Dormand-Prince 5(4) integrator with PI step-size control.

Works on complex state arrays of any shape. The fifth-order solution is
propagated; the embedded fourth-order one supplies the local error estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import StepUnderflow

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])

_SAFETY = 0.9
_BETA = 0.04
_EXPO1 = 0.2 - 0.75 * _BETA
_FAC_MIN, _FAC_MAX = 0.2, 10.0
MAX_STEPS = 200_000


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    h_last: float = 0.0


def integrate(f: Callable[[float, np.ndarray], np.ndarray], t0: float, t1: float,
              y0: np.ndarray, tol: float, h0: float | None = None,
              on_accept: Callable[[float, np.ndarray], None] | None = None,
              stats: StepStats | None = None) -> np.ndarray:
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t1`` (real times).

    The local error per step is kept below ``tol`` in the scaled RMS norm with
    absolute and relative weights both equal to ``tol``.
    """
    stats = stats if stats is not None else StepStats()
    span = t1 - t0
    if span == 0:
        return np.array(y0, dtype=complex)
    direction = np.sign(span)
    length = abs(span)
    h_min = 1e-13 * length
    y = np.array(y0, dtype=complex)
    t = t0
    k1 = f(t, y)
    if h0 is None:
        d0 = np.sqrt(np.mean(np.abs(y / (tol + tol * np.abs(y))) ** 2))
        d1 = np.sqrt(np.mean(np.abs(k1 / (tol + tol * np.abs(y))) ** 2))
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6 * length
        h = min(max(h, 1e-6 * length), length)
    else:
        h = min(abs(h0), length)
    err_old = 1e-4
    steps = 0
    while True:
        remaining = (t1 - t) * direction
        if remaining <= 1e-15 * length:
            break
        last = h >= remaining
        if last:
            h = remaining
        ks = [k1]
        for s in range(1, 7):
            ys = y + (direction * h) * sum(a * k for a, k in zip(_A[s], ks) if a)
            ks.append(f(t + direction * h * _C[s], ys))
        y_new = y + (direction * h) * sum(b * k for b, k in zip(_B, ks) if b)
        err_vec = (direction * h) * sum(e * k for e, k in zip(_E, ks) if e)
        sc = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean(np.abs(err_vec / sc) ** 2)))
        steps += 1
        if steps > MAX_STEPS:
            raise StepUnderflow("step budget exhausted")
        if err <= 1.0:
            t = t1 if last else t + direction * h
            y = y_new
            k1 = ks[6]
            stats.accepted += 1
            stats.h_last = h
            if on_accept is not None:
                on_accept(t, y)
            fac = err ** _EXPO1 / err_old ** _BETA if err > 0 else 1 / _FAC_MAX
            h = h / min(1 / _FAC_MIN, max(1 / _FAC_MAX, fac / _SAFETY))
            err_old = max(err, 1e-4)
        else:
            stats.rejected += 1
            h = h / min(1 / _FAC_MIN, err ** _EXPO1 / _SAFETY)
        if h < h_min and (t1 - t) * direction > h_min:
            raise StepUnderflow(f"step {h:.3e} below 1e-13 of the interval near t={t:.6g}")
    return y
