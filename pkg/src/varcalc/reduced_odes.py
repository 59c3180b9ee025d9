"""Reduced one-dimensional problems.

* the latitude-only critical-profile ODE of the Perelman entropy on S^2,
  written for ``w = f'`` as ``w' = (w^2 + 2 tan(t) w - 2) / 2``;
* parallels where ``|w|`` first reaches a level (the truncation used to
  obtain a cap on which ``|grad f|^2 < 2``);
* radially symmetric harmonic functions in R^n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotAttainedError
from .fields import ScalarField
from .geometry import HALF_PI, Chart
from .ivp import IVPProblem, ODESolution, integrate_ivp

PROFILE_BLOW_UP = 1e3
PROFILE_MAX_STEP = 0.01
CROSSING_TOL = 1e-10


def perelman_rhs(t, y):
    w = y[0]
    return np.array([0.5 * (w * w + 2.0 * np.tan(t) * w - 2.0), w])


def perelman_s2_profile(eps: float = 1e-6, tol: float = 1e-10, *, max_step: float = PROFILE_MAX_STEP) -> ODESolution:
    """Integrate the reduced profile ODE for ``(w, f)`` from the south pole.

    Starts at ``t = -pi/2 + eps`` with the regular-branch value
    ``w = -eps/2`` (substituting ``w ~ a s``, ``s = t + pi/2``, into the ODE
    forces ``a = -1/2``) and ``f = 0``, and runs toward ``pi/2`` until
    ``|w|`` exceeds ``1e3``.
    """
    if not 1e-8 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-8, 1e-3], got {eps}")
    problem = IVPProblem(
        perelman_rhs, -HALF_PI + eps, HALF_PI, np.array([-0.5 * eps, 0.0]), blow_up_threshold=PROFILE_BLOW_UP, tol=tol
    )
    return integrate_ivp(problem, max_step=max_step)


def find_parallel_crossing(sol: ODESolution, level: float, component: int = 0, xtol: float = CROSSING_TOL) -> float:
    """First parameter where ``|y_component| = |level|``, by bisection on the dense output."""
    level = abs(float(level))
    vals = np.abs(sol.ys[:, component]) - level
    if vals[0] >= 0:
        return float(sol.ts[0])
    hits = np.nonzero(vals >= 0)[0]
    if not len(hits):
        raise NotAttainedError(f"|y| never reaches {level:g} on [{sol.ts[0]:.6g}, {sol.ts[-1]:.6g}]")
    j = int(hits[0])
    a, b = float(sol.ts[j - 1]), float(sol.ts[j])

    def g(t):
        return abs(float(sol(t)[component])) - level

    while b - a > xtol:
        mid = 0.5 * (a + b)
        if g(mid) >= 0:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


def profile_field(chart: Chart, sol: ODESolution, axis: int = 1, label: str = "profile") -> ScalarField:
    """Pull the profile ``f(u_axis)`` back to a chart, with exact partial ``w``."""

    def f(u):
        return sol(u[axis].ravel())[1].reshape(u.shape[1:])

    def partials(u):
        out = np.zeros(u.shape)
        out[axis] = sol(u[axis].ravel())[0].reshape(u.shape[1:])
        return out

    return ScalarField(chart, f, partials, label=label)


@dataclass(frozen=True)
class RadialHarmonic:
    """Radial solution ``psi(r)`` of Laplace's equation in R^n with ``psi' = alpha r^(1-n)``."""

    dim: int
    alpha: float = 1.0
    k: float = 0.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.dim}")

    @staticmethod
    def _r(r):
        r = np.asarray(r, dtype=float)
        if np.any(~(r > 0)):
            raise DomainError("radial harmonics are only defined for r > 0")
        return r

    def __call__(self, r):
        r = self._r(r)
        n = self.dim
        if n == 2:
            return self.alpha * np.log(r) + self.k
        return self.alpha * r ** (2 - n) / (2 - n) + self.k

    def d1(self, r):
        r = self._r(r)
        return self.alpha * r ** (1 - self.dim)

    def d2(self, r):
        r = self._r(r)
        return self.alpha * (1 - self.dim) * r ** (-self.dim)

    def ambient(self):
        """``(v, grad)`` handles for ``x -> psi(||x||)`` on ambient arrays ``(n, ...)``."""

        def v(x):
            return self(np.linalg.norm(x, axis=0))

        def grad(x):
            r = np.linalg.norm(x, axis=0)
            return self.d1(r) * x / r

        return v, grad


def radial_harmonic(n: int, alpha: float = 1.0, k: float = 0.0) -> RadialHarmonic:
    return RadialHarmonic(n, alpha, k)


def radial_laplace_residual(h: RadialHarmonic, r) -> float | np.ndarray:
    """``psi'' + (n-1)/r psi'`` from the closed-form derivatives."""
    r = RadialHarmonic._r(r)
    out = h.d2(r) + (h.dim - 1) / r * h.d1(r)
    return float(out) if np.ndim(out) == 0 else out
