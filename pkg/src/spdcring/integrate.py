"""Adaptive Dormand-Prince 5(4) integrator for complex-valued linear systems.

Written for the amplitude and density-matrix equations in this package, which
are non-stiff but need tight, tolerance-controlled accuracy so that two
independent solution routes can be compared at the 1e-6 level.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import AccuracyError, StiffnessError, ValidationError

# Dormand & Prince (1980) tableau; the 7th stage is FSAL.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B - _B_LOW

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray  # shape (len(t), *y0.shape)
    n_steps: int
    n_rejected: int
    n_rhs: int


def _hermite(t0, y0, f0, t1, y1, f1, t):
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def solve(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_eval,
    *,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    first_step: Optional[float] = None,
    max_step: float = np.inf,
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    reduce: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
    max_steps: int = 10_000_000,
) -> Solution:
    """Integrate ``y' = rhs(t, y)`` from ``t_eval[0]`` and sample at ``t_eval``.

    Error control uses the max-norm of the embedded 5(4) difference scaled by
    ``atol + rtol * |y|``, so a single badly resolved component cannot hide
    behind thousands of quiet ones. Output between accepted steps comes from
    cubic Hermite interpolation. ``project`` is applied to every accepted
    state (e.g. Hermitian re-symmetrization of a density matrix).
    ``reduce(t, y)`` maps each output sample to a smaller array before
    storage, for large systems where only a few observables are needed.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1 or t_eval.size == 0:
        raise ValidationError("t_eval must be a non-empty 1-D sequence")
    if np.any(np.diff(t_eval) < 0):
        raise ValidationError("t_eval must be non-decreasing")
    if rtol <= 0 or atol < 0:
        raise ValidationError("rtol must be positive and atol non-negative")

    y = np.array(y0, dtype=complex)
    shape = y.shape
    y = y.ravel()
    t = float(t_eval[0])
    t_end = float(t_eval[-1])

    def f(tt, yy):
        return np.asarray(rhs(tt, yy.reshape(shape)), dtype=complex).ravel()

    if reduce is None:
        def keep(tt, yy):
            return yy
        out_shape = shape
    else:
        def keep(tt, yy):
            return np.asarray(reduce(tt, yy.reshape(shape)), dtype=complex).ravel()
        out_shape = np.shape(reduce(t, y.reshape(shape)))
    out = np.empty((t_eval.size, int(np.prod(out_shape))), dtype=complex)
    fy = f(t, y)
    n_rhs = 1
    idx = 0
    while idx < t_eval.size and t_eval[idx] <= t:
        out[idx] = keep(t, y)
        idx += 1

    span = t_end - t
    if first_step is None:
        scale = atol + rtol * np.abs(y)
        d0 = np.max(np.abs(y) / scale) if y.size else 0.0
        d1 = np.max(np.abs(fy) / scale) if y.size else 0.0
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6 * max(span, 1.0)
    else:
        h = float(first_step)
    h = min(h, max_step, span) if span > 0 else 0.0

    K = np.empty((7, y.size), dtype=complex)
    n_steps = n_rejected = 0
    while idx < t_eval.size:
        if n_steps + n_rejected >= max_steps:
            raise AccuracyError(f"exceeded {max_steps} steps at t={t:.6g}")
        h = min(h, t_end - t)
        if h <= 16 * np.spacing(max(abs(t), 1e-300)):
            raise StiffnessError(
                f"step size underflow at t={t:.6g} (h={h:.3g}); the fastest "
                f"scale in the system is not resolvable at rtol={rtol:g}"
            )
        K[0] = fy
        for i in range(1, 7):
            yi = y + h * (_A[i] @ K[:i])
            K[i] = f(t + _C[i] * h, yi)
        n_rhs += 6
        y_new = yi  # stage 7 is evaluated at the 5th-order solution
        err = h * (_E @ K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = np.max(np.abs(err) / scale) if y.size else 0.0
        if not np.isfinite(err_norm) or not np.all(np.isfinite(y_new)):
            if not np.all(np.isfinite(y)):
                raise AccuracyError(f"non-finite state at t={t:.6g}")
            h *= _MIN_FACTOR
            n_rejected += 1
            continue
        if err_norm <= 1.0:
            t_new = t + h
            f_new = K[6].copy()
            if project is not None:
                y_new = np.asarray(project(y_new.reshape(shape)), dtype=complex).ravel()
                f_new = f(t_new, y_new)
                n_rhs += 1
            while idx < t_eval.size and t_eval[idx] <= t_new:
                te = t_eval[idx]
                out[idx] = keep(te, _hermite(t, y, fy, t_new, y_new, f_new, te))
                idx += 1
            t, y, fy = t_new, y_new, f_new
            n_steps += 1
            factor = _MAX_FACTOR if err_norm == 0 else min(
                _MAX_FACTOR, _SAFETY * err_norm ** -0.2
            )
            h = min(h * factor, max_step)
        else:
            n_rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)

    return Solution(
        t=t_eval.copy(),
        y=out.reshape((t_eval.size,) + tuple(out_shape)),
        n_steps=n_steps,
        n_rejected=n_rejected,
        n_rhs=n_rhs,
    )
