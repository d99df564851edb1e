"""Adaptive Dormand-Prince 5(4) integrator with cubic Hermite dense output."""

from __future__ import annotations

import numpy as np

from .errors import StepSizeUnderflow

# Dormand & Prince (1980) tableau; the 5th order weights are the last row of A.
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
A_ROWS = [np.array(r) for r in A]
B5 = np.array(A[6] + [0.0])
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


def _hermite(t0, y0, f0, t1, y1, f1, t):
    h = t1 - t0
    s = (t - t0) / h
    s2, s3 = s * s, s * s * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return (h00[:, None] * y0 + (h10 * h)[:, None] * f0
            + h01[:, None] * y1 + (h11 * h)[:, None] * f1)


def _rms(x):
    return float(np.sqrt(np.mean(x * x)))


def _initial_step(fun, t0, y0, f0, direction_span, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    f1 = fun(t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, direction_span)


def dopri5(fun, t_span, y0, t_eval, rtol=1e-10, atol=1e-12, h_min=1e-14, max_steps=10_000_000):
    """Integrate ``y' = fun(t, y)`` over ``t_span`` and sample it at ``t_eval``.

    Dense output between accepted steps is the cubic Hermite interpolant of
    the state and its derivative; samples that coincide with step ends are
    exact step values. Returns ``(y_eval, stats)`` with ``y_eval`` of shape
    (len(t_eval), len(y0)).
    """
    t0, t1 = map(float, t_span)
    if t1 <= t0:
        raise ValueError("t_span must be increasing")
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.size and (t_eval.min() < t0 - 1e-12 * max(1, abs(t0)) or t_eval.max() > t1 + 1e-12 * max(1, abs(t1))):
        raise ValueError("t_eval outside t_span")
    y = np.array(y0, dtype=float)
    out = np.empty((t_eval.size, y.size))
    done = np.zeros(t_eval.size, dtype=bool)
    at_start = np.abs(t_eval - t0) <= 1e-15 * max(1.0, abs(t0))
    out[at_start] = y
    done |= at_start

    t = t0
    f = fun(t, y)
    h = _initial_step(fun, t, y, f, t1 - t0, rtol, atol)
    k = np.empty((7, y.size))
    n_accept = n_reject = 0
    err_max = 0.0
    while t < t1:
        if n_accept + n_reject > max_steps:
            raise StepSizeUnderflow(t, h)
        if h < h_min * max(1.0, abs(t)):
            raise StepSizeUnderflow(t, h)
        last = t + h >= t1 - 1e-14 * max(1.0, abs(t1))
        if last:
            h = t1 - t
        k[0] = f
        for s in range(1, 7):
            k[s] = fun(t + C[s] * h, y + h * (A_ROWS[s] @ k[:s]))
        y_new = y + h * (B5[:6] @ k[:6])
        err = h * (E @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = _rms(err / scale)
        if err_norm <= 1.0:
            t_new = t1 if last else t + h
            f_new = k[6].copy()
            sel = ~done & (t_eval <= t_new)
            if np.any(sel):
                out[sel] = _hermite(t, y, f, t_new, y_new, f_new, t_eval[sel])
                exact = sel & (np.abs(t_eval - t_new) <= 1e-15 * max(1.0, abs(t_new)))
                out[exact] = y_new
                done |= sel
            t, y, f = t_new, y_new, f_new
            err_max = max(err_max, err_norm)
            n_accept += 1
            factor = MAX_FACTOR if err_norm == 0 else min(MAX_FACTOR, SAFETY * err_norm ** -0.2)
            h *= factor
        else:
            n_reject += 1
            h *= max(MIN_FACTOR, SAFETY * err_norm ** -0.2)
    if not np.all(done):
        out[~done] = y
    return out, {"accepted": n_accept, "rejected": n_reject, "max_error_norm": err_max}
