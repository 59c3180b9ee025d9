"""Energy functionals ``E(v) = int F(x, v, grad v) dmu - int g(x, v) dS``."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .fields import ScalarField, intrinsic_gradient
from .geometry import Chart, QuadratureGrid, boundary_faces, check_finite, scalar_curvature

FD_FIRST = 1e-6
FD_SECOND = 1e-4


@dataclass(frozen=True, eq=False)
class Integrand:
    """An integrand ``F(x, v, p)`` with its partial derivatives.

    All handles are vectorised: ``x`` has shape ``(n, N)``, ``v`` shape
    ``(N,)`` and ``p`` (the frame gradient) shape ``(m, N)``.  ``F_v`` and
    ``F_vv`` return ``(N,)``, ``F_p`` and ``F_vp`` return ``(m, N)``,
    ``F_pp`` returns ``(m, m, N)``.
    """

    F: Callable = field(repr=False)
    F_v: Callable = field(repr=False)
    F_p: Callable = field(repr=False)
    F_vv: Callable = field(repr=False)
    F_vp: Callable = field(repr=False)
    F_pp: Callable = field(repr=False)
    provenance: str = "analytic"
    name: str = "integrand"


def fd_integrand(F: Callable, name: str = "integrand") -> Integrand:
    """Wrap a bare ``F`` with central-difference partials."""
    h1, h2 = FD_FIRST, FD_SECOND

    def unit(p, i, scale):
        e = np.zeros_like(p)
        e[i] = scale
        return e

    def F_v(x, v, p):
        return (F(x, v + h1, p) - F(x, v - h1, p)) / (2 * h1)

    def F_p(x, v, p):
        return np.stack([(F(x, v, p + unit(p, i, h1)) - F(x, v, p - unit(p, i, h1))) / (2 * h1) for i in range(len(p))])

    def F_vv(x, v, p):
        return (F(x, v + h2, p) - 2 * F(x, v, p) + F(x, v - h2, p)) / h2**2

    def F_vp(x, v, p):
        rows = []
        for i in range(len(p)):
            e = unit(p, i, h2)
            rows.append(
                (F(x, v + h2, p + e) - F(x, v + h2, p - e) - F(x, v - h2, p + e) + F(x, v - h2, p - e)) / (4 * h2**2)
            )
        return np.stack(rows)

    def F_pp(x, v, p):
        m = len(p)
        out = np.empty((m, m) + np.shape(v))
        base = F(x, v, p)
        for i in range(m):
            ei = unit(p, i, h2)
            out[i, i] = (F(x, v, p + ei) - 2 * base + F(x, v, p - ei)) / h2**2
            for j in range(i + 1, m):
                ej = unit(p, j, h2)
                val = (F(x, v, p + ei + ej) - F(x, v, p + ei - ej) - F(x, v, p - ei + ej) + F(x, v, p - ei - ej)) / (
                    4 * h2**2
                )
                out[i, j] = out[j, i] = val
        return out

    return Integrand(F, F_v, F_p, F_vv, F_vp, F_pp, provenance="fd", name=name)


@dataclass(frozen=True, eq=False)
class EnergyFunctional:
    """``E(v) = int F dmu`` on a chart, optionally minus a boundary term.

    The boundary integrand ``g(x, v)`` (with ``g_v``) is only supported on
    flat box charts, whose faces carry the product measure of the
    remaining intervals.
    """

    chart: Chart
    integrand: Integrand
    boundary: Optional[Callable] = field(default=None, repr=False)
    boundary_v: Optional[Callable] = field(default=None, repr=False)
    name: str = "energy"

    def __post_init__(self):
        if self.boundary is not None:
            if self.chart.kind != "flat_box":
                raise ValueError("boundary integrands are only supported on flat_box charts")
            if self.boundary_v is None:
                raise ValueError("a boundary integrand needs its partial g_v")

    def with_boundary(self, g: Callable, g_v: Callable) -> "EnergyFunctional":
        return replace(self, boundary=g, boundary_v=g_v)


def make_dirichlet(chart: Chart) -> EnergyFunctional:
    """Dirichlet energy, ``F = |p|^2``."""
    m = chart.intrinsic_dim

    def F(x, v, p):
        return np.sum(p * p, axis=0)

    integrand = Integrand(
        F=F,
        F_v=lambda x, v, p: np.zeros(np.shape(v)),
        F_p=lambda x, v, p: 2.0 * p,
        F_vv=lambda x, v, p: np.zeros(np.shape(v)),
        F_vp=lambda x, v, p: np.zeros(np.shape(p)),
        F_pp=lambda x, v, p: 2.0 * np.broadcast_to(np.eye(m).reshape((m, m) + (1,) * np.ndim(v)), (m, m) + np.shape(v)),
        name="dirichlet",
    )
    return EnergyFunctional(chart, integrand, name="dirichlet")


def make_perelman(chart: Chart) -> EnergyFunctional:
    """Perelman entropy, ``F = (R + |p|^2) exp(-v)`` with R the scalar curvature."""
    R = scalar_curvature(chart)
    m = chart.intrinsic_dim

    def F(x, v, p):
        return (R + np.sum(p * p, axis=0)) * np.exp(-v)

    def F_pp(x, v, p):
        eye = np.eye(m).reshape((m, m) + (1,) * np.ndim(v))
        return 2.0 * eye * np.exp(-v)

    integrand = Integrand(
        F=F,
        F_v=lambda x, v, p: -F(x, v, p),
        F_p=lambda x, v, p: 2.0 * np.exp(-v) * p,
        F_vv=F,
        F_vp=lambda x, v, p: -2.0 * np.exp(-v) * p,
        F_pp=F_pp,
        name="perelman",
    )
    return EnergyFunctional(chart, integrand, name="perelman")


def field_state(v: ScalarField, u: np.ndarray):
    """Ambient point, value and frame gradient of a field at nodes ``u``."""
    chart = v.chart
    return chart.embed(u), v(u), intrinsic_gradient(v, u)


def sqrt_det(chart: Chart, u: np.ndarray) -> np.ndarray:
    return np.sqrt(np.prod(chart.g_diag(u), axis=0))


def boundary_energy(E: EnergyFunctional, v: ScalarField, order: int) -> float:
    total = 0.0
    for face in boundary_faces(E.chart, order):
        vals = check_finite(E.boundary(E.chart.embed(face.nodes), v(face.nodes)), face.nodes, "boundary integrand")
        total += float(np.dot(face.weights, vals))
    return total


def eval_energy(E: EnergyFunctional, v: ScalarField, grid: QuadratureGrid, boundary_order: Optional[int] = None) -> float:
    """Quadrature value of ``E(v)``."""
    if v.chart is not E.chart:
        raise ValueError("field and functional live on different charts")
    v.check_grid(grid)
    u = grid.nodes
    x, f, p = field_state(v, u)
    with np.errstate(over="ignore", invalid="ignore"):  # non-finite values are reported below
        vals = E.integrand.F(x, f, p)
    vals = check_finite(vals, u, f"{E.name} integrand")
    total = float(np.dot(grid.weights, vals * sqrt_det(E.chart, u)))
    if E.boundary is not None:
        total -= boundary_energy(E, v, boundary_order or max(grid.order))
    return total
