"""Embedded Dormand-Prince 5(4) integrator with PI step control and blow-up detection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# Dormand-Prince 5(4) tableau
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
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
ALPHA = 0.7 / 5
BETA = 0.4 / 5
MAX_STEPS = 1_000_000
STATUSES = ("completed", "blew_up", "step_failure", "exited")


@dataclass(frozen=True, eq=False)
class IVPProblem:
    """``y' = rhs(t, y)`` on ``[t0, t_end]`` from ``y(t0) = y0``."""

    rhs: Callable = field(repr=False)
    t0: float
    t_end: float
    y0: np.ndarray
    blow_up_threshold: float = 1e12
    tol: float = 1e-10

    def __post_init__(self):
        if not self.t0 < self.t_end:
            raise ValueError(f"need t0 < t_end, got [{self.t0}, {self.t_end}]")
        if not 1e-14 <= self.tol <= 1e-3:
            raise ValueError(f"tol must lie in [1e-14, 1e-3], got {self.tol}")
        if not self.blow_up_threshold > 0:
            raise ValueError("blow_up_threshold must be positive")
        object.__setattr__(self, "y0", np.atleast_1d(np.asarray(self.y0, dtype=float)).copy())


@dataclass(frozen=True, eq=False)
class ODESolution:
    """Accepted steps of an integration plus cubic Hermite dense output."""

    ts: np.ndarray
    ys: np.ndarray
    fs: np.ndarray
    status: str
    t_stop: float
    message: str = ""
    n_rejected: int = 0

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def t0(self) -> float:
        return float(self.ts[0])

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.ts[0] - 1e-15) or np.any(t > self.ts[-1] + 1e-15):
            raise ValueError(f"dense output requested outside [{self.ts[0]}, {self.ts[-1]}]")
        i = np.clip(np.searchsorted(self.ts, t, side="right") - 1, 0, len(self.ts) - 2)
        return t, i

    def __call__(self, t) -> np.ndarray:
        """Hermite interpolant; shape ``(k,)`` for scalar ``t``, else ``(k, len(t))``."""
        if len(self.ts) == 1:
            return self.ys[0].copy() if np.ndim(t) == 0 else np.repeat(self.ys[0][:, None], np.size(t), axis=1)
        t, i = self._locate(t)
        t0, t1 = self.ts[i], self.ts[i + 1]
        h = t1 - t0
        s = (t - t0) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        y0, y1 = self.ys[i].T, self.ys[i + 1].T
        f0, f1 = self.fs[i].T, self.fs[i + 1].T
        return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1

    def derivative(self, t) -> np.ndarray:
        """Derivative of the Hermite interpolant."""
        t, i = self._locate(t)
        t0, t1 = self.ts[i], self.ts[i + 1]
        h = t1 - t0
        s = (t - t0) / h
        d00 = 6 * s * (s - 1) / h
        d10 = (1 - s) * (1 - 3 * s)
        d01 = -d00
        d11 = s * (3 * s - 2)
        return d00 * self.ys[i].T + d10 * self.fs[i].T + d01 * self.ys[i + 1].T + d11 * self.fs[i + 1].T


def _dp_step(rhs, t, y, f0, h):
    k = [f0]
    for s in range(1, 7):
        yi = y + h * np.dot(_A[s], k[:s]) if s else y
        k.append(np.asarray(rhs(t + _C[s] * h, yi), dtype=float))
    K = np.array(k)
    y_new = y + h * np.dot(_B5, K)
    err = h * np.dot(_E, K)
    return y_new, err, K[6]  # FSAL: last stage is f(t + h, y_new)


def integrate_ivp(
    problem: IVPProblem,
    *,
    max_step: float = np.inf,
    first_step: Optional[float] = None,
    fixed_step: Optional[float] = None,
    exit_when: Optional[Callable] = None,
) -> ODESolution:
    """Integrate an :class:`IVPProblem`.

    Parameters
    ----------
    max_step : float
        Upper bound on accepted step sizes (keeps the Hermite dense output accurate).
    first_step : float, optional
        Initial trial step; estimated from the problem scale otherwise.
    fixed_step : float, optional
        Take uniform steps with no error control (for order studies).
    exit_when : callable, optional
        ``exit_when(t, y) -> bool``; a step landing where it returns True is
        discarded and the run ends with status ``exited``.
    """
    rhs, tol = problem.rhs, problem.tol
    t, t_end = float(problem.t0), float(problem.t_end)
    y = problem.y0.copy()
    f = np.asarray(rhs(t, y), dtype=float)
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(y))):
        raise ValueError(f"right-hand side is not finite at the initial point t0={t}")
    ts, ys, fs = [t], [y.copy()], [f.copy()]
    span = t_end - t

    def finish(status, msg="", rejected=0):
        return ODESolution(np.array(ts), np.array(ys), np.array(fs), status, ts[-1], msg, rejected)

    if fixed_step is not None:
        n = int(np.ceil(span / fixed_step - 1e-9))
        h = span / n
        for i in range(n):
            y, _, f = _dp_step(rhs, t, y, f, h)
            t = problem.t0 + (i + 1) * h
            if not np.all(np.isfinite(y)):
                return finish("step_failure", f"non-finite state at t={t}")
            ts.append(t), ys.append(y.copy()), fs.append(f.copy())
            if np.max(np.abs(y)) >= problem.blow_up_threshold:
                return finish("blew_up", f"|y| exceeded {problem.blow_up_threshold:g}")
        return finish("completed")

    if first_step is None:
        scale = tol + tol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((f / scale) ** 2))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h = min(h, span, max_step)
    else:
        h = min(float(first_step), span, max_step)
    err_prev = 1e-4
    rejected = 0
    steps = 0
    while t < t_end:
        if steps >= MAX_STEPS:
            return finish("step_failure", f"exceeded {MAX_STEPS} steps", rejected)
        h = min(h, t_end - t, max_step)
        if h <= 1e-14 * max(1.0, abs(t)):
            return finish("step_failure", f"step size underflow at t={t:.17g}", rejected)
        y_new, err_vec, f_new = _dp_step(rhs, t, y, f, h)
        if np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new)):
            scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        else:
            err = np.inf
        if err <= 1.0:
            t_new = t + h if t_end - (t + h) > 1e-14 * max(1.0, abs(t_end)) else t_end
            if exit_when is not None and exit_when(t_new, y_new):
                return finish("exited", f"trajectory left the domain after t={t:.17g}", rejected)
            t, y, f = t_new, y_new, f_new
            ts.append(t), ys.append(y.copy()), fs.append(f.copy())
            steps += 1
            if np.max(np.abs(y)) >= problem.blow_up_threshold:
                return finish("blew_up", f"|y| exceeded {problem.blow_up_threshold:g} at t={t:.17g}", rejected)
            err = max(err, 1e-10)
            factor = SAFETY * err ** (-ALPHA) * err_prev**BETA
            h *= min(5.0, max(0.2, factor))
            err_prev = err
        else:
            rejected += 1
            factor = 0.2 if not np.isfinite(err) else max(0.1, SAFETY * err ** (-1 / 5))
            h *= factor
    return finish("completed", rejected=rejected)
