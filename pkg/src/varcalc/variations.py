"""First and second variations, Euler-Lagrange residuals and critical-point classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, UnsupportedError, VarcalcError
from .fields import FrameVectorField, ScalarField, divergence, intrinsic_gradient
from .functionals import EnergyFunctional, eval_energy, field_state, sqrt_det
from .geometry import QuadratureGrid, boundary_faces, check_finite, face_point, parse_face

GATEAUX_STEP = 1e-4
SADDLE_MARGIN = 0.1
SADDLE_WEIGHT_FRACTION = 1e-3
DEFAULT_PROBES = 25
VERDICTS = ("strict_local_min_candidate", "saddle", "inconclusive")


def _same_chart(*objs) -> None:
    charts = {id(o.chart) for o in objs}
    if len(charts) != 1:
        raise ValueError("all arguments must live on the same chart")


# ---------------------------------------------------------------------------
# first variation


def gateaux_first(E: EnergyFunctional, v: ScalarField, phi: ScalarField, grid: QuadratureGrid, boundary_order=None) -> float:
    """Analytic first variation ``int (F_v phi + F_p . grad phi) dmu`` (minus ``int g_v phi dS``)."""
    _same_chart(E, v, phi, grid)
    u = grid.nodes
    x, f, p = field_state(v, u)
    I = E.integrand
    dens = I.F_v(x, f, p) * phi(u) + np.sum(I.F_p(x, f, p) * intrinsic_gradient(phi, u), axis=0)
    dens = check_finite(dens, u, "first-variation integrand")
    total = float(np.dot(grid.weights, dens * sqrt_det(E.chart, u)))
    if E.boundary is not None:
        for face in boundary_faces(E.chart, boundary_order or max(grid.order)):
            xs = E.chart.embed(face.nodes)
            vals = E.boundary_v(xs, v(face.nodes)) * phi(face.nodes)
            total -= float(np.dot(face.weights, check_finite(vals, face.nodes, "boundary variation")))
    return total


def gateaux_fd(
    E: EnergyFunctional, v: ScalarField, phi: ScalarField, grid: QuadratureGrid, h: float = GATEAUX_STEP, boundary_order=None
) -> float:
    """Central-difference oracle ``(E(v + h phi) - E(v - h phi)) / 2h``."""
    if not 1e-8 <= h <= 1e-2:
        raise ValueError(f"step h must lie in [1e-8, 1e-2], got {h}")
    _same_chart(E, v, phi, grid)
    up = eval_energy(E, v + h * phi, grid, boundary_order)
    down = eval_energy(E, v - h * phi, grid, boundary_order)
    return (up - down) / (2.0 * h)


def flux_field(E: EnergyFunctional, v: ScalarField) -> FrameVectorField:
    """The frame field ``u -> F_p(Phi(u), f(u), grad v(u))``."""
    chart = E.chart

    def comps(u):
        return E.integrand.F_p(chart.embed(u), v(u), intrinsic_gradient(v, u, check=False))

    return FrameVectorField(chart, comps)


def el_residual(E: EnergyFunctional, v: ScalarField, u) -> float | np.ndarray:
    """Euler-Lagrange residual ``F_v - div F_p`` at interior point(s) ``u``."""
    _same_chart(E, v)
    u = E.chart.check_interior(u)
    x, f, p = field_state(v, u)
    out = E.integrand.F_v(x, f, p) - divergence(flux_field(E, v), u)
    return float(out) if np.ndim(out) == 0 else out


def boundary_derivatives(v: ScalarField, u: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Coordinate partials at a point that may sit on the box boundary.

    Uses analytic partials when available, otherwise central differences
    where the stencil fits and second-order one-sided ones where it does not.
    """
    if v.partials is not None:
        return v.derivatives(u)
    chart = v.chart
    out = np.empty(u.shape)
    for i, (lo, hi) in enumerate(chart.domain):
        e = np.zeros_like(u)
        e[i] = h
        if u[i] - lo >= h and hi - u[i] >= h:
            out[i] = (v.f(u + e) - v.f(u - e)) / (2 * h)
        else:
            sgn = 1.0 if u[i] - lo < h else -1.0
            out[i] = sgn * (-3 * v.f(u) + 4 * v.f(u + sgn * e) - v.f(u + 2 * sgn * e)) / (2 * h)
    return out


def neumann_residual(E: EnergyFunctional, v: ScalarField, face, s) -> float:
    """Natural boundary residual ``<F_p, N> - g_v`` at a point of a box face."""
    chart = E.chart
    if chart.kind != "flat_box":
        raise UnsupportedError("Neumann residuals are only defined on flat_box charts")
    if E.boundary is None:
        raise ValueError("functional has no boundary integrand")
    _same_chart(E, v)
    axis, side = parse_face(face, chart.intrinsic_dim)
    u = face_point(chart, (axis, side), s)
    for i, (lo, hi) in enumerate(chart.domain):
        if not lo <= u[i] <= hi:
            raise DomainError(f"in-face coordinates {np.asarray(s).tolist()} fall outside the face")
    x = chart.embed(u)
    f = float(v.f(u))
    p = boundary_derivatives(v, u)  # identity metric on flat boxes
    normal = np.zeros(chart.intrinsic_dim)
    normal[axis] = side
    return float(np.dot(E.integrand.F_p(x, f, p), normal) - E.boundary_v(x, f))


# ---------------------------------------------------------------------------
# second variation


def _second_density(E, v, phi, u):
    x, f, p = field_state(v, u)
    I = E.integrand
    ph = phi(u)
    dph = intrinsic_gradient(phi, u)
    return (
        I.F_vv(x, f, p) * ph**2
        + 2.0 * ph * np.sum(I.F_vp(x, f, p) * dph, axis=0)
        + np.einsum("i...,ij...,j...->...", dph, I.F_pp(x, f, p), dph)
    )


def second_variation(E: EnergyFunctional, v: ScalarField, phi: ScalarField, grid: QuadratureGrid) -> float:
    """Quadratic form ``E''(v)(phi)(phi)`` from the general second-partial expression."""
    _same_chart(E, v, phi, grid)
    u = grid.nodes
    dens = check_finite(_second_density(E, v, phi, u), u, "second-variation integrand")
    return float(np.dot(grid.weights, dens * sqrt_det(E.chart, u)))


def perelman_o1_density(v: ScalarField, phi: ScalarField, u, R: float = 2.0) -> np.ndarray:
    """``e^{-v}[(R + |grad v|^2) phi^2 - 4 phi <grad phi, grad v> + 2 |grad phi|^2]``."""
    gv = intrinsic_gradient(v, u)
    gp = intrinsic_gradient(phi, u)
    ph = phi(u)
    s = np.sum(gv * gv, axis=0)
    return np.exp(-v(u)) * ((R + s) * ph**2 - 4.0 * ph * np.sum(gp * gv, axis=0) + 2.0 * np.sum(gp * gp, axis=0))


def perelman_second_variation_o1(E: EnergyFunctional, v: ScalarField, phi: ScalarField, grid: QuadratureGrid) -> float:
    """Second variation of the Perelman entropy in its expanded gradient form."""
    _same_chart(E, v, phi, grid)
    R = _perelman_curvature(E)
    u = grid.nodes
    dens = check_finite(perelman_o1_density(v, phi, u, R), u, "second-variation integrand")
    return float(np.dot(grid.weights, dens * sqrt_det(E.chart, u)))


def o2_split(v: ScalarField, phi: ScalarField, u, R: float = 2.0):
    """Pointwise sides of the lower bound for the Perelman second-variation bracket.

    Returns ``(lhs, rhs)`` with ``lhs = (R + s) phi^2 - 4 phi <grad phi, grad v> + 2 |grad phi|^2``
    and ``rhs = 2 |phi grad v - grad phi|^2 + (R - s) phi^2``, ``s = |grad v|^2``.
    """
    gv = intrinsic_gradient(v, u)
    gp = intrinsic_gradient(phi, u)
    ph = phi(u)
    s = np.sum(gv * gv, axis=0)
    lhs = (R + s) * ph**2 - 4.0 * ph * np.sum(gp * gv, axis=0) + 2.0 * np.sum(gp * gp, axis=0)
    diff = ph * gv - gp
    rhs = 2.0 * np.sum(diff * diff, axis=0) + (R - s) * ph**2
    return lhs, rhs


def _perelman_curvature(E: EnergyFunctional) -> float:
    if E.integrand.name != "perelman":
        raise UnsupportedError(f"expected a Perelman functional, got {E.integrand.name!r}")
    m = E.chart.intrinsic_dim
    return float(m * (m - 1))


# ---------------------------------------------------------------------------
# classification


def grad_sq(v: ScalarField, u) -> np.ndarray:
    g = intrinsic_gradient(v, u)
    return np.sum(g * g, axis=0)


def blend(t):
    """C^1 ramp: 0 for t <= 0, 1 for t >= 1, ``1 - (1 - t^2)^2`` in between."""
    t = np.clip(t, 0.0, 1.0)
    return 1.0 - (1.0 - t * t) ** 2


def urysohn_saddle_witness(v: ScalarField, margin: float = SADDLE_MARGIN, grid: Optional[QuadratureGrid] = None) -> ScalarField:
    """Test function equal to ``e^v`` where ``|grad v|^2 >= 2 + margin`` and 0 where it is ``<= 2``.

    The transition uses the C^1 ramp :func:`blend` in ``(|grad v|^2 - 2) / margin``.
    The super-level set is checked on ``grid`` (or on a sample lattice).
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    chart = v.chart
    pts = grid.nodes if grid is not None else chart.sample_points(32)
    if not np.any(grad_sq(v, pts) >= 2.0 + margin):
        raise VarcalcError(f"|grad v|^2 never reaches 2 + {margin:g} on the sampled nodes")

    def f(u):
        return np.exp(v(u)) * blend((grad_sq(v, u) - 2.0) / margin)

    return ScalarField(chart, f, label=f"urysohn({v.label})")


def probe_basis(chart, count: int = DEFAULT_PROBES, seed: Optional[int] = None) -> list[ScalarField]:
    """Low-order probe directions: the ambient monomials restricted to the chart.

    On hypersphere charts these are products of sines and cosines of the
    chart coordinates (spherical-harmonic-like).  The list starts with the
    constant.  With ``seed`` the probes become random Gaussian combinations
    of the same monomials.
    """
    n = chart.ambient_dim
    exps = []
    deg = 0
    while len(exps) < count:
        for combo in combinations_with_replacement(range(n), deg):
            exps.append(np.bincount(np.array(combo, dtype=int), minlength=n))
            if len(exps) == count:
                break
        deg += 1
    exps = np.array(exps)

    def mono(e):
        def v(x):
            return np.prod([x[a] ** int(e[a]) for a in range(n)], axis=0) * np.ones(x.shape[1:])

        def grad(x):
            out = []
            for a in range(n):
                if e[a] == 0:
                    out.append(np.zeros(x.shape[1:]))
                    continue
                d = e.copy()
                d[a] -= 1
                out.append(e[a] * np.prod([x[b] ** int(d[b]) for b in range(n)], axis=0) * np.ones(x.shape[1:]))
            return np.stack(out)

        return v, grad

    if seed is None:
        out = []
        for e in exps:
            v, grad = mono(e)
            label = "1" if not e.any() else "*".join(f"x{a + 1}^{k}" if k > 1 else f"x{a + 1}" for a, k in enumerate(e) if k)
            out.append(ScalarField.from_ambient(chart, v, grad, label=label))
        return out

    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((count, len(exps)))
    monos = [mono(e) for e in exps]
    out = []
    for r, c in enumerate(coeffs):
        def v(x, c=c):
            return sum(ci * m[0](x) for ci, m in zip(c, monos))

        def grad(x, c=c):
            return sum(ci * m[1](x) for ci, m in zip(c, monos))

        out.append(ScalarField.from_ambient(chart, v, grad, label=f"probe{r}"))
    return out


@dataclass(frozen=True, eq=False)
class ClassificationReport:
    """Outcome of :func:`classify_critical_point`."""

    verdict: str
    sup_grad_sq: float
    witness: Optional[ScalarField] = field(default=None, repr=False)
    witness_value: Optional[float] = None
    probe_values: dict = field(default_factory=dict)
    super_level_weight: float = 0.0

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "saddle" and (self.witness is None or not self.witness_value < 0):
            raise ValueError("a saddle verdict needs a witness with negative value")
        if self.verdict == "strict_local_min_candidate" and not self.sup_grad_sq < 2:
            raise ValueError("a minimum candidate needs sup |grad v|^2 < 2")

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "sup_grad_sq": self.sup_grad_sq,
            "super_level_weight": self.super_level_weight,
            "witness": None if self.witness is None else self.witness.label,
            "witness_value": self.witness_value,
            "probe_values": dict(self.probe_values),
        }


def classify_critical_point(
    E: EnergyFunctional,
    v: ScalarField,
    grid: QuadratureGrid,
    probes: Optional[Sequence[ScalarField]] = None,
    *,
    margin: float = SADDLE_MARGIN,
    weight_fraction: float = SADDLE_WEIGHT_FRACTION,
) -> ClassificationReport:
    """Apply the ``|grad v|^2 < 2`` criterion and, failing it, search for a saddle witness.

    Second-variation values of every probe are attached to the report.
    """
    _perelman_curvature(E)
    _same_chart(E, v, grid)
    if probes is None:
        probes = probe_basis(E.chart)
    probe_values = {p.label: second_variation(E, v, p, grid) for p in probes}

    s = grad_sq(v, grid.nodes)
    sup = float(np.max(s))
    if sup < 2.0:
        return ClassificationReport("strict_local_min_candidate", sup, probe_values=probe_values)

    weight = float(np.sum(grid.weights[s > 2.0]))
    if weight >= weight_fraction * float(np.sum(grid.weights)) and np.any(s >= 2.0 + margin):
        witness = urysohn_saddle_witness(v, margin, grid)
        value = second_variation(E, v, witness, grid)
        if value < 0:
            return ClassificationReport("saddle", sup, witness, value, probe_values, weight)
        return ClassificationReport("inconclusive", sup, witness, value, probe_values, weight)
    return ClassificationReport("inconclusive", sup, probe_values=probe_values, super_level_weight=weight)
