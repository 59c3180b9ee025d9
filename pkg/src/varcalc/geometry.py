"""Charts, diagonal metrics, quadrature grids and curvature data.

Points are passed as arrays whose *first* axis indexes the chart
coordinates: a single point has shape ``(m,)``, a batch of points
``(m, N)``.  Every routine is vectorised over the trailing axes.

Three chart kinds are built in, all with orthogonal coordinates:

``hypersphere``
    The unit sphere S^m in hyperspherical coordinates.  ``m = 2`` uses
    (azimuth, latitude) ordering by default, the ordering used for the
    Perelman computation; ``ordering="latitude_first"`` gives the
    (latitude, azimuth) chart used for geodesics.  ``m = 3`` is always
    latitude first, ``(u1, u2, u3) -> (c1 c2 c3, c1 c2 s3, c1 s2, s1)``.
``flat_box``
    An open box in R^m with the identity embedding.
``annulus``
    A planar annulus in polar coordinates ``(r, theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, EvaluationError, UnsupportedError

# minimum distance from a domain endpoint for a point to count as interior
INTERIOR_MARGIN = 1e-9
H_METRIC = 1e-5
H_CHRISTOFFEL = 1e-4

TWO_PI = 2.0 * np.pi
HALF_PI = 0.5 * np.pi

CHART_KINDS = ("hypersphere", "flat_box", "annulus")


def as_points(u, m: int) -> np.ndarray:
    """Return ``u`` as a float array with leading axis of length ``m``."""
    arr = np.asarray(u, dtype=float)
    if arr.ndim == 0 or arr.shape[0] != m:
        raise ValueError(f"expected points with leading axis {m}, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class Chart:
    """A parametrisation of an open box U in R^m onto a submanifold of R^n.

    The embedding, its Jacobian and the diagonal metric are vectorised
    callables acting on arrays of shape ``(m, ...)``.  ``cyclic_axis`` is
    the coordinate that does not appear in the metric (the azimuth of a
    hypersphere chart), or ``None``.
    """

    name: str
    kind: str
    intrinsic_dim: int
    ambient_dim: int
    domain: tuple
    embed: Callable = field(repr=False)
    jacobian: Callable = field(repr=False)
    g_diag: Callable = field(repr=False)
    cyclic_axis: Optional[int] = None

    def __post_init__(self):
        if len(self.domain) != self.intrinsic_dim:
            raise ValueError("domain must list one interval per intrinsic coordinate")
        for lo, hi in self.domain:
            if not lo < hi:
                raise ValueError(f"empty domain interval ({lo}, {hi})")
        self._reject_general_metric()

    def _reject_general_metric(self):
        pts = self.sample_points(3)
        jac = self.jacobian(pts)
        gram = np.einsum("aip,ajp->ijp", jac, jac)
        off = gram - np.einsum("ij,iip->ijp", np.eye(self.intrinsic_dim), gram)
        if np.max(np.abs(off)) > 1e-12:
            raise UnsupportedError(f"chart {self.name!r} has a non-diagonal metric")

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.domain])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.domain])

    def volume(self) -> float:
        """Lebesgue volume of the coordinate box (not the Riemannian volume)."""
        return float(np.prod(self.upper - self.lower))

    def sample_points(self, per_axis: int) -> np.ndarray:
        """Tensor grid of equally spaced interior points, shape ``(m, per_axis**m)``."""
        axes = [lo + (hi - lo) * (np.arange(per_axis) + 0.5) / per_axis for lo, hi in self.domain]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh])

    def distance_to_boundary(self, u) -> np.ndarray:
        u = as_points(u, self.intrinsic_dim)
        shape = (-1,) + (1,) * (u.ndim - 1)
        lo = self.lower.reshape(shape)
        hi = self.upper.reshape(shape)
        return np.minimum(u - lo, hi - u)

    def check_interior(self, u) -> np.ndarray:
        """Raise :class:`DomainError` unless every point is strictly interior."""
        u = as_points(u, self.intrinsic_dim)
        dist = self.distance_to_boundary(u)
        bad = ~(dist >= INTERIOR_MARGIN)
        if np.any(bad):
            idx = np.argwhere(bad)[0]
            node = u[(slice(None),) + tuple(idx[1:])]
            raise DomainError(
                f"point {np.round(node, 12).tolist()} is not strictly inside the domain of "
                f"chart {self.name!r} (axis {idx[0]})"
            )
        return u

    def embedding(self, u) -> np.ndarray:
        """Ambient image Phi(u), shape ``(n, ...)``."""
        return self.embed(as_points(u, self.intrinsic_dim))


@dataclass(frozen=True)
class MetricData:
    """Diagonal metric at one or more points."""

    g_diag: np.ndarray
    sqrt_det: np.ndarray
    inv_diag: np.ndarray


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Tensor Gauss-Legendre nodes on a chart's coordinate box.

    ``weights`` carry the coordinate measure only; the metric factor is
    applied by :func:`surface_integral`.
    """

    chart: Chart
    nodes: np.ndarray
    weights: np.ndarray
    order: tuple


@dataclass(frozen=True)
class BoundaryFace:
    """One face ``u[axis] = lo`` (side -1) or ``u[axis] = hi`` (side +1) of a flat box."""

    axis: int
    side: int
    nodes: np.ndarray
    weights: np.ndarray
    normal: np.ndarray

    @property
    def face_id(self) -> str:
        return f"x{self.axis + 1}{'+' if self.side > 0 else '-'}"


# ---------------------------------------------------------------------------
# built-in charts


def _sphere_factors(m: int):
    """Per-component factor table for the latitude-first hypersphere chart.

    Entry ``[i][j]`` is 'c', 's' or None: ambient component i is the product
    over j of cos(u_j), sin(u_j) or 1.
    """
    n = m + 1
    table = []
    for i in range(1, n + 1):
        row = [None] * m
        if i == 1:
            for j in range(m):
                row[j] = "c"
        elif i == n:
            row[0] = "s"
        else:
            for j in range(n - i):
                row[j] = "c"
            row[n - i] = "s"
        table.append(row)
    return table


def _latitude_first_sphere(m: int):
    table = _sphere_factors(m)
    n = m + 1

    def embed(u):
        cos, sin = np.cos(u), np.sin(u)
        out = np.ones((n,) + u.shape[1:])
        for i, row in enumerate(table):
            for j, code in enumerate(row):
                if code == "c":
                    out[i] = out[i] * cos[j]
                elif code == "s":
                    out[i] = out[i] * sin[j]
        return out

    def jacobian(u):
        cos, sin = np.cos(u), np.sin(u)
        val = {"c": cos, "s": sin}
        der = {"c": -sin, "s": cos}
        out = np.zeros((n, m) + u.shape[1:])
        for i, row in enumerate(table):
            for k in range(m):
                if row[k] is None:
                    continue
                prod = np.ones(u.shape[1:])
                for j, code in enumerate(row):
                    if code is None:
                        continue
                    prod = prod * (der[code][j] if j == k else val[code][j])
                out[i, k] = prod
        return out

    def g_diag(u):
        cos2 = np.cos(u) ** 2
        out = np.ones(u.shape)
        for j in range(1, m):
            out[j] = out[j - 1] * cos2[j - 1]
        return out

    return embed, jacobian, g_diag


def _permuted(funcs, perm):
    """Compose a chart with a coordinate permutation: new u[k] = old u[perm[k]]."""
    embed, jacobian, g_diag = funcs
    inv = np.argsort(perm)

    def to_old(u):
        return u[inv]

    return (
        lambda u: embed(to_old(u)),
        lambda u: jacobian(to_old(u))[:, perm],
        lambda u: g_diag(to_old(u))[perm],
    )


def _flat_box(m: int):
    def embed(u):
        return np.array(u, dtype=float, copy=True)

    def jacobian(u):
        eye = np.eye(m).reshape((m, m) + (1,) * (u.ndim - 1))
        return np.broadcast_to(eye, (m, m) + u.shape[1:]).copy()

    def g_diag(u):
        return np.ones(u.shape)

    return embed, jacobian, g_diag


def _annulus():
    def embed(u):
        r, th = u[0], u[1]
        return np.stack([r * np.cos(th), r * np.sin(th)])

    def jacobian(u):
        r, th = u[0], u[1]
        c, s = np.cos(th), np.sin(th)
        return np.stack([np.stack([c, -r * s]), np.stack([s, r * c])])

    def g_diag(u):
        return np.stack([np.ones_like(u[0]), u[0] ** 2])

    return embed, jacobian, g_diag


def _sub_box(domain, natural, name):
    out = []
    for (lo, hi), (nlo, nhi) in zip(domain, natural):
        lo, hi = float(lo), float(hi)
        if lo < nlo - 1e-15 or hi > nhi + 1e-15:
            raise DomainError(f"domain ({lo}, {hi}) exceeds the natural range ({nlo}, {nhi}) of {name}")
        out.append((lo, hi))
    return tuple(out)


def build_chart(
    kind: str,
    dim: int,
    *,
    box: Optional[Sequence] = None,
    domain: Optional[Sequence] = None,
    ordering: Optional[str] = None,
    radii: Optional[Sequence[float]] = None,
) -> Chart:
    """Construct a built-in chart.

    Parameters
    ----------
    kind : {'hypersphere', 'flat_box', 'annulus'}
    dim : int
        Intrinsic dimension m.
    box : sequence of (lo, hi), optional
        Coordinate box of a ``flat_box`` chart; defaults to (0, 1)^m.
    domain : sequence of (lo, hi), optional
        Restrict a hypersphere chart to a sub-box of its natural domain,
        e.g. a latitude band.
    ordering : {'azimuth_first', 'latitude_first'}, optional
        Coordinate ordering of the 2-sphere chart.
    radii : (r_in, r_out), optional
        Radii of an ``annulus`` chart; defaults to (0.5, 2).
    """
    if kind == "hypersphere":
        if dim not in (2, 3):
            raise UnsupportedError(f"hypersphere charts are available for m in {{2, 3}}, got m={dim}")
        if ordering is None:
            ordering = "azimuth_first" if dim == 2 else "latitude_first"
        lat_first = _latitude_first_sphere(dim)
        if ordering == "latitude_first":
            funcs = lat_first
            natural = ((-HALF_PI, HALF_PI),) * (dim - 1) + ((0.0, TWO_PI),)
            cyclic = dim - 1
        elif ordering == "azimuth_first" and dim == 2:
            funcs = _permuted(lat_first, [1, 0])
            natural = ((0.0, TWO_PI), (-HALF_PI, HALF_PI))
            cyclic = 0
        else:
            raise UnsupportedError(f"ordering {ordering!r} is not available for S^{dim}")
        dom = natural if domain is None else _sub_box(domain, natural, f"S^{dim}")
        return Chart(f"S{dim}-{ordering}", kind, dim, dim + 1, dom, *funcs, cyclic_axis=cyclic)

    if kind == "flat_box":
        if dim < 1:
            raise UnsupportedError("flat_box charts need dim >= 1")
        if box is None:
            box = [(0.0, 1.0)] * dim
        if len(box) != dim:
            raise ValueError(f"box has {len(box)} intervals for dim={dim}")
        dom = tuple((float(lo), float(hi)) for lo, hi in box)
        return Chart(f"box{dim}", kind, dim, dim, dom, *_flat_box(dim))

    if kind == "annulus":
        if dim != 2:
            raise UnsupportedError("annulus charts are two dimensional")
        r_in, r_out = (0.5, 2.0) if radii is None else (float(radii[0]), float(radii[1]))
        if not 0.0 < r_in < r_out:
            raise DomainError(f"annulus radii must satisfy 0 < r_in < r_out, got ({r_in}, {r_out})")
        dom = ((r_in, r_out), (0.0, TWO_PI))
        return Chart("annulus", kind, 2, 2, dom, *_annulus(), cyclic_axis=1)

    raise UnsupportedError(f"unknown chart kind {kind!r}; expected one of {CHART_KINDS}")


# ---------------------------------------------------------------------------
# metric data


def metric_at(chart: Chart, u) -> MetricData:
    """Analytic diagonal metric at interior point(s) ``u``."""
    u = chart.check_interior(u)
    g = chart.g_diag(u)
    return MetricData(g_diag=g, sqrt_det=np.sqrt(np.prod(g, axis=0)), inv_diag=1.0 / g)


def fd_steps(chart: Chart, u: np.ndarray, h: float, reach: int = 1) -> np.ndarray:
    """Per-axis FD steps clamped so a stencil of half-width ``reach*h`` stays interior."""
    dist = chart.distance_to_boundary(u)
    return np.minimum(h, 0.5 * dist / reach)


def metric_fd(chart: Chart, u, h: float = H_METRIC) -> np.ndarray:
    """Full metric matrix from central differences of the embedding, shape ``(m, m, ...)``."""
    u = chart.check_interior(u)
    m = chart.intrinsic_dim
    steps = fd_steps(chart, u, h)
    cols = []
    for i in range(m):
        du = np.zeros_like(u)
        du[i] = steps[i]
        cols.append((chart.embed(u + du) - chart.embed(u - du)) / (2.0 * steps[i]))
    jac = np.stack(cols, axis=1)
    return np.einsum("ai...,aj...->ij...", jac, jac)


def scalar_curvature(chart: Chart, u=None) -> float:
    """Scalar curvature of a built-in unit hypersphere chart, m(m-1)."""
    if chart.kind != "hypersphere":
        raise UnsupportedError(f"scalar curvature is not provided for {chart.kind!r} charts")
    if u is not None:
        chart.check_interior(u)
    m = chart.intrinsic_dim
    return float(m * (m - 1))


def christoffel(chart: Chart, u, h: float = H_CHRISTOFFEL, *, check: bool = True) -> np.ndarray:
    """Christoffel symbols ``G[k, i, j]`` from finite differences of the metric.

    Uses the fourth-order central stencil on the diagonal metric, with the
    step clamped so the stencil stays inside the domain.  ``check=False``
    skips the domain test, for curves that wrap around a cyclic coordinate.
    """
    m = chart.intrinsic_dim
    if check:
        u = chart.check_interior(u)
        steps = fd_steps(chart, u, h, reach=2)
    else:
        u = as_points(u, m)
        steps = np.full(u.shape, h)
    g = chart.g_diag(u)
    dg = np.empty((m,) + u.shape)  # dg[l, i] = d g_ii / d u_l
    for l in range(m):
        du = np.zeros_like(u)
        du[l] = steps[l]
        dg[l] = (
            -chart.g_diag(u + 2 * du) + 8 * chart.g_diag(u + du) - 8 * chart.g_diag(u - du) + chart.g_diag(u - 2 * du)
        ) / (12.0 * steps[l])
    eye = np.eye(m).reshape((m, m) + (1,) * (u.ndim - 1))
    # G^k_ij = (d_i g_jk + d_j g_ik - d_k g_ij) / (2 g_kk) for a diagonal metric
    term_i = np.einsum("jk...,ik...->kij...", eye, dg)  # delta_jk d_i g_kk
    term_j = np.einsum("ik...,jk...->kij...", eye, dg)  # delta_ik d_j g_kk
    term_k = np.einsum("ij...,ki...->kij...", eye, dg)  # delta_ij d_k g_ii
    return 0.5 * (term_i + term_j - term_k) / g[:, None, None]


# ---------------------------------------------------------------------------
# quadrature


def gauss_grid(chart: Chart, order) -> QuadratureGrid:
    """Tensor-product Gauss-Legendre grid on the open coordinate box."""
    m = chart.intrinsic_dim
    orders = (int(order),) * m if np.isscalar(order) else tuple(int(o) for o in order)
    if len(orders) != m or min(orders) < 1:
        raise ValueError(f"need {m} positive per-axis orders, got {order!r}")
    axes, wts = [], []
    for (lo, hi), n in zip(chart.domain, orders):
        x, w = np.polynomial.legendre.leggauss(n)
        axes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        wts.append(0.5 * (hi - lo) * w)
    nodes = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")])
    weights = np.ones(1)
    for w in wts:
        weights = np.outer(weights, w).ravel()
    return QuadratureGrid(chart=chart, nodes=nodes, weights=weights, order=orders)


def check_finite(values: np.ndarray, nodes: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        k = int(np.argwhere(bad)[0][-1])
        node = nodes[:, k]
        raise EvaluationError(f"{what} is not finite at node {node.tolist()}", node=node)
    return values


def surface_integral(chart: Chart, grid: QuadratureGrid, integrand: Callable) -> float:
    """Riemannian integral of ``integrand(u)`` over the chart, by quadrature."""
    if grid.chart is not chart:
        raise ValueError("quadrature grid was built for a different chart")
    vals = np.broadcast_to(np.asarray(integrand(grid.nodes), dtype=float), grid.weights.shape)
    vals = check_finite(vals, grid.nodes, "integrand")
    sqrt_det = np.sqrt(np.prod(chart.g_diag(grid.nodes), axis=0))
    return float(np.dot(grid.weights, vals * sqrt_det))


# ---------------------------------------------------------------------------
# flat-box boundary


def parse_face(face, m: Optional[int] = None) -> tuple[int, int]:
    """Normalise a face id: ``'x1+'``, ``'x2-'`` or a tuple ``(axis, side)``."""
    if isinstance(face, BoundaryFace):
        axis, side = face.axis, face.side
    elif isinstance(face, str):
        text = face.strip()
        if len(text) < 3 or text[0] != "x" or text[-1] not in "+-" or not text[1:-1].isdigit():
            raise ValueError(f"invalid face id {face!r}; expected e.g. 'x1+' or 'x2-'")
        axis, side = int(text[1:-1]) - 1, (1 if text[-1] == "+" else -1)
    else:
        axis, side = int(face[0]), int(face[1])
    if side not in (-1, 1) or axis < 0 or (m is not None and axis >= m):
        raise ValueError(f"invalid face {face!r}")
    return axis, side


def face_point(chart: Chart, face, s) -> np.ndarray:
    """Chart point on a face from its (m-1) in-face coordinates ``s``."""
    axis, side = parse_face(face, chart.intrinsic_dim)
    s = np.asarray(s, dtype=float)
    m = chart.intrinsic_dim
    s = s.reshape((m - 1,) + s.shape[1:]) if s.ndim else s.reshape((m - 1,))
    fixed = chart.domain[axis][1] if side > 0 else chart.domain[axis][0]
    rest = list(s)
    rest.insert(axis, np.full(s.shape[1:], fixed) if s.ndim > 1 else fixed)
    return np.array(rest, dtype=float)


def boundary_faces(chart: Chart, order) -> list[BoundaryFace]:
    """Gauss-Legendre grids on the 2m faces of a flat box chart."""
    if chart.kind != "flat_box":
        raise UnsupportedError("boundary faces are only provided for flat_box charts")
    m = chart.intrinsic_dim
    faces = []
    for axis in range(m):
        others = [i for i in range(m) if i != axis]
        axes, wts = [], []
        for i in others:
            lo, hi = chart.domain[i]
            x, w = np.polynomial.legendre.leggauss(int(order))
            axes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
            wts.append(0.5 * (hi - lo) * w)
        if others:
            mesh = [g.ravel() for g in np.meshgrid(*axes, indexing="ij")]
            weights = np.ones(1)
            for w in wts:
                weights = np.outer(weights, w).ravel()
        else:
            mesh, weights = [], np.ones(1)
        for side in (-1, 1):
            fixed = chart.domain[axis][1] if side > 0 else chart.domain[axis][0]
            coords = list(mesh)
            coords.insert(axis, np.full(weights.shape, fixed))
            normal = np.zeros(m)
            normal[axis] = side
            faces.append(BoundaryFace(axis, side, np.stack(coords), weights, normal))
    return faces
