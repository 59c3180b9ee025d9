"""Scalar and frame vector fields on a chart.

Vector quantities are stored in the orthonormal frame
``E_i = Phi_{u_i} / |Phi_{u_i}|``, so the intrinsic gradient of ``f`` has
components ``f_{u_i} / sqrt(g_ii)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import Chart, QuadratureGrid, as_points, fd_steps

FD_STEP = 1e-5
DIV_STEP = 1e-4


def _broadcast(values, shape) -> np.ndarray:
    return np.broadcast_to(np.asarray(values, dtype=float), shape).astype(float, copy=False)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A function on a chart domain, given by its pullback ``f(u)``.

    ``f`` maps an array of shape ``(m, ...)`` to values of shape ``(...)``.
    ``partials``, when given, maps the same input to ``(m, ...)``; without it
    first derivatives come from central differences at ``fd_step``.
    """

    chart: Chart
    f: Callable = field(repr=False)
    partials: Optional[Callable] = field(default=None, repr=False)
    fd_step: float = FD_STEP
    label: str = "field"

    def __call__(self, u) -> np.ndarray:
        u = as_points(u, self.chart.intrinsic_dim)
        return _broadcast(self.f(u), u.shape[1:])

    def derivatives(self, u) -> np.ndarray:
        """Coordinate partials ``df/du_i``, shape ``(m, ...)``."""
        u = as_points(u, self.chart.intrinsic_dim)
        if self.partials is not None:
            return _broadcast(self.partials(u), u.shape)
        return self.fd_derivatives(u)

    def fd_derivatives(self, u) -> np.ndarray:
        u = as_points(u, self.chart.intrinsic_dim)
        steps = fd_steps(self.chart, u, self.fd_step)
        out = np.empty(u.shape)
        for i in range(u.shape[0]):
            du = np.zeros_like(u)
            du[i] = steps[i]
            out[i] = (self(u + du) - self(u - du)) / (2.0 * steps[i])
        return out

    def check_grid(self, grid: QuadratureGrid) -> None:
        if grid.chart is not self.chart:
            raise ValueError(f"field {self.label!r} and the quadrature grid live on different charts")

    # linear structure -------------------------------------------------------

    def _combine(self, other: "ScalarField", a: float, b: float, label: str) -> "ScalarField":
        if other.chart is not self.chart:
            raise ValueError("cannot combine fields on different charts")
        partials = None
        if self.partials is not None and other.partials is not None:
            sp, op = self.partials, other.partials

            def partials(u):
                return a * _broadcast(sp(u), u.shape) + b * _broadcast(op(u), u.shape)

        sf, of = self, other
        return ScalarField(
            self.chart,
            lambda u: a * sf(u) + b * of(u),
            partials,
            min(self.fd_step, other.fd_step),
            label,
        )

    def __add__(self, other):
        if isinstance(other, ScalarField):
            return self._combine(other, 1.0, 1.0, f"({self.label} + {other.label})")
        return self._combine(constant(self.chart, float(other)), 1.0, 1.0, f"({self.label} + {other})")

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            return self._combine(other, 1.0, -1.0, f"({self.label} - {other.label})")
        return self + (-float(other))

    def __mul__(self, c):
        c = float(c)
        sf = self
        partials = None if self.partials is None else (lambda u: c * _broadcast(sf.partials(u), u.shape))
        return ScalarField(self.chart, lambda u: c * sf(u), partials, self.fd_step, f"{c:g}*{self.label}")

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    # constructors ----------------------------------------------------------

    @classmethod
    def from_ambient(cls, chart: Chart, v: Callable, grad: Optional[Callable] = None, label: str = "field"):
        """Pull back an ambient function ``v(x)``, ``x`` of shape ``(n, ...)``.

        If the ambient gradient ``grad(x) -> (n, ...)`` is supplied, exact
        partials follow from the chain rule through the chart Jacobian.
        """
        partials = None
        if grad is not None:

            def partials(u):
                x = chart.embed(u)
                return np.einsum("a...,ai...->i...", _broadcast(grad(x), x.shape), chart.jacobian(u))

        return cls(chart, lambda u: v(chart.embed(u)), partials, label=label)


def constant(chart: Chart, k: float) -> ScalarField:
    k = float(k)
    return ScalarField(chart, lambda u: np.full(u.shape[1:], k), lambda u: np.zeros(u.shape), label=f"{k:g}")


def coordinate(chart: Chart, i: int) -> ScalarField:
    """The coordinate function ``u -> u_i``."""

    def partials(u):
        out = np.zeros(u.shape)
        out[i] = 1.0
        return out

    return ScalarField(chart, lambda u: u[i].copy(), partials, label=f"u{i + 1}")


@dataclass(frozen=True, eq=False)
class FrameVectorField:
    """A vector field given by its components in the orthonormal frame ``E_i``.

    ``components`` maps ``(m, ...)`` points to ``(m, ...)`` components.
    """

    chart: Chart
    components: Callable = field(repr=False)

    def __call__(self, u) -> np.ndarray:
        u = as_points(u, self.chart.intrinsic_dim)
        return _broadcast(self.components(u), u.shape)

    @classmethod
    def from_handles(cls, chart: Chart, handles: Sequence[Callable]) -> "FrameVectorField":
        if len(handles) != chart.intrinsic_dim:
            raise ValueError(f"need {chart.intrinsic_dim} component handles, got {len(handles)}")
        return cls(chart, lambda u: np.stack([_broadcast(h(u), u.shape[1:]) for h in handles]))


def intrinsic_gradient(fld: ScalarField, u, *, check: bool = True) -> np.ndarray:
    """Frame components ``(1/sqrt(g_ii)) df/du_i`` of the gradient."""
    chart = fld.chart
    u = chart.check_interior(u) if check else as_points(u, chart.intrinsic_dim)
    return fld.derivatives(u) / np.sqrt(chart.g_diag(u))


def gradient_field(fld: ScalarField) -> FrameVectorField:
    return FrameVectorField(fld.chart, lambda u: intrinsic_gradient(fld, u, check=False))


def divergence(vfield: FrameVectorField, u, h: float = DIV_STEP) -> float | np.ndarray:
    """Riemannian divergence of a frame field by central differences.

    ``div X = (1/sqrt|g|) sum_j d/du_j ( sqrt|g| X_j / sqrt(g_jj) )``
    """
    chart = vfield.chart
    u = chart.check_interior(u)
    steps = fd_steps(chart, u, h)

    def flux(p, j):
        g = chart.g_diag(p)
        return np.sqrt(np.prod(g, axis=0)) * vfield(p)[j] / np.sqrt(g[j])

    total = np.zeros(u.shape[1:])
    for j in range(u.shape[0]):
        du = np.zeros_like(u)
        du[j] = steps[j]
        total = total + (flux(u + du, j) - flux(u - du, j)) / (2.0 * steps[j])
    out = total / np.sqrt(np.prod(chart.g_diag(u), axis=0))
    return float(out) if out.ndim == 0 else out


def laplace_beltrami(fld: ScalarField, u, h: float = DIV_STEP) -> float | np.ndarray:
    """``div grad f`` with nested central differences."""
    return divergence(gradient_field(fld), u, h)
