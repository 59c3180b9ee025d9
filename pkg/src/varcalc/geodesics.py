"""Geodesics of S^2 and S^3 in latitude-first hyperspherical charts.

The charts used here put the latitude-like angles first and the cyclic
azimuth last:

* S^2: ``(cos u1 cos u2, cos u1 sin u2, sin u1)``, metric ``(1, cos^2 u1)``;
* S^3: ``(c1 c2 c3, c1 c2 s3, c1 s2, s1)``, metric ``(1, c1^2, c1^2 c2^2)``.

Closed-form solutions are parametrised by ``t = u1`` on ``|t| < T`` and
carry a continuous :class:`CurveTrace`, so lengths and arclength
reparametrisations are computed from the exact speed, not only from the
(endpoint-trimmed) samples.  A Christoffel-symbol shooting integrator
provides the independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, UnsupportedError
from .geometry import INTERIOR_MARGIN, TWO_PI, Chart, as_points, build_chart, christoffel
from .ivp import IVPProblem, integrate_ivp

ENDPOINT_MARGIN = 1e-6
DEFAULT_SAMPLES = 2001
LENGTH_ORDER = 256
SHOOT_MAX_STEP = 0.01
BRANCHES = ("principal", "extended")
PARAM_KINDS = ("u1", "arclength")


def geodesic_chart(dim: int) -> Chart:
    """Latitude-first unit-sphere chart of intrinsic dimension 2 or 3."""
    return build_chart("hypersphere", dim, ordering="latitude_first")


@dataclass(frozen=True)
class GeodesicParams:
    """Integration constants of a closed-form geodesic.

    ``gamma`` is the conserved momentum of the cyclic angle, ``phase`` the
    additive constant of the cyclic angle (delta on S^2, beta on S^3) and
    ``k`` the second constant of S^3, fixed to ``2 gamma^2 - gamma^4``.
    """

    gamma: float
    phase: float = 0.0
    branch: str = "principal"

    def __post_init__(self):
        if self.branch not in BRANCHES:
            raise ValueError(f"branch must be one of {BRANCHES}, got {self.branch!r}")
        if not abs(self.gamma) <= 1:
            raise DomainError(f"|gamma| must not exceed 1, got {self.gamma}")

    @property
    def k(self) -> float:
        g2 = self.gamma**2
        return 2 * g2 - g2 * g2

    def half_width(self, dim: int) -> float:
        """Half-width ``T`` of the admissible ``u1`` interval."""
        g = abs(self.gamma)
        if dim == 2:
            return float(np.arccos(g))
        return float(np.arccos(np.sqrt(self.k)))


@dataclass(frozen=True, eq=False)
class CurveTrace:
    """Continuous chart parametrisation ``t -> u(t)`` on ``(lo, hi)`` with derivative."""

    lo: float
    hi: float
    point: Callable = field(repr=False)
    deriv: Callable = field(repr=False)

    def t_of(self, theta):
        """Sine substitution ``t = mid + half sin(theta)``, ``theta in [-pi/2, pi/2]``."""
        mid, half = 0.5 * (self.hi + self.lo), 0.5 * (self.hi - self.lo)
        return mid + half * np.sin(theta)

    def dt_dtheta(self, theta):
        return 0.5 * (self.hi - self.lo) * np.cos(theta)


@dataclass(frozen=True, eq=False)
class CurveSamples:
    """A sampled chart curve and its ambient image.

    ``chart_pts`` is ``(m, N)``, ``ambient_pts`` and ``velocities`` are
    ``(n, N)``; velocities are ambient derivatives with respect to ``ts``.
    """

    ts: np.ndarray
    chart_pts: np.ndarray
    ambient_pts: np.ndarray
    velocities: np.ndarray
    param_kind: str
    chart_vel: Optional[np.ndarray] = None
    trace: Optional[CurveTrace] = field(default=None, repr=False)
    status: str = "completed"
    label: str = "curve"

    def __post_init__(self):
        if self.param_kind not in PARAM_KINDS:
            raise ValueError(f"param_kind must be one of {PARAM_KINDS}")
        ts = np.asarray(self.ts, dtype=float)
        if ts.ndim != 1 or ts.size < 1:
            raise ValueError("ts must be a non-empty 1-d array")
        if ts.size > 1 and np.any(np.diff(ts) <= 0):
            raise ValueError("ts must be strictly increasing")

    def __len__(self):
        return len(self.ts)


def _samples_from_chart(chart, ts, u, udot, kind, trace=None, status="completed", label="curve") -> CurveSamples:
    x = chart.embed(u)
    vel = np.einsum("ai...,i...->a...", chart.jacobian(u), udot)
    return CurveSamples(np.asarray(ts, float), u, x, vel, kind, udot, trace, status, label)


# ---------------------------------------------------------------------------
# conserved quantity


def _check_noncyclic(chart: Chart, a: np.ndarray) -> None:
    for i, (lo, hi) in enumerate(chart.domain):
        if i == chart.cyclic_axis:
            continue
        if not (a[i] - lo >= INTERIOR_MARGIN and hi - a[i] >= INTERIOR_MARGIN):
            raise DomainError(f"initial point {a.tolist()} is not inside the chart (axis {i})")


def speed(chart: Chart, u, udot) -> np.ndarray:
    """``Lambda = sqrt(sum g_ii udot_i^2)``."""
    return np.sqrt(np.sum(chart.g_diag(u) * udot**2, axis=0))


def cyclic_momentum(chart: Chart, u, udot) -> np.ndarray:
    """``g_cc udot_c / Lambda`` for the cyclic coordinate ``c`` of the chart."""
    c = chart.cyclic_axis
    if c is None:
        raise UnsupportedError(f"chart {chart.name!r} has no cyclic coordinate")
    return chart.g_diag(u)[c] * udot[c] / speed(chart, u, udot)


def gamma_from_initial(chart: Chart, a, psi) -> float:
    """Conserved cyclic momentum of the geodesic through ``a`` with chart velocity ``psi``.

    The cyclic coordinate itself may take any value (it is periodic).
    """
    m = chart.intrinsic_dim
    a = as_points(a, m).astype(float)
    psi = as_points(psi, m).astype(float)
    _check_noncyclic(chart, a)
    lam = float(speed(chart, a, psi))
    if not lam > 0:
        raise ValueError("initial velocity must be non-zero")
    return float(cyclic_momentum(chart, a, psi))


# ---------------------------------------------------------------------------
# closed forms


def _branch_sign(params: GeodesicParams) -> tuple[float, bool]:
    return (1.0 if params.gamma >= 0 else -1.0), params.branch == "extended"


def s2_trace(params: GeodesicParams) -> CurveTrace:
    """Continuous S^2 solution ``u2(u1) = arctan(sin u1 / sqrt(cos^2 u1/gamma^2 - 1)) + delta``."""
    g = abs(params.gamma)
    if g >= 1:
        raise DomainError("the S^2 closed form needs |gamma| < 1; |gamma| = 1 is the equator")
    T = params.half_width(2)
    sgn, ext = _branch_sign(params)
    delta = params.phase

    def point(t):
        t = np.asarray(t, dtype=float)
        root = np.sqrt(np.maximum(np.sin(T - t) * np.sin(T + t), 0.0))  # cos^2 t - gamma^2
        core = np.arctan2(g * np.sin(t), root) if g > 0 else np.zeros_like(t)
        u2 = sgn * (np.pi - core if ext else core) + delta
        return np.stack([t, u2])

    def deriv(t):
        t = np.asarray(t, dtype=float)
        root = np.sqrt(np.sin(T - t) * np.sin(T + t))
        du2 = g / (np.cos(t) * root) if g > 0 else np.zeros_like(t)
        return np.stack([np.ones_like(t), sgn * (-du2 if ext else du2)])

    return CurveTrace(-T, T, point, deriv)


def s3_trace(params: GeodesicParams) -> CurveTrace:
    """Continuous S^3 solution on ``|t| < arccos(sqrt(2 gamma^2 - gamma^4))``."""
    g = abs(params.gamma)
    if g >= 1:
        raise DomainError("the S^3 closed form needs |gamma| < 1")
    T = params.half_width(3)
    sgn, ext = _branch_sign(params)
    beta = params.phase
    g2 = g * g

    def point(t):
        t = np.asarray(t, dtype=float)
        if g == 0:
            u2 = np.zeros_like(t)
            core = np.zeros_like(t)
        else:
            u2 = np.arcsin(g * np.tan(t) / np.sqrt(1 - g2))
            c2 = np.cos(t) ** 2 - g2
            num = g * np.sin(t) / np.sqrt((1 - g2) * c2)  # A
            den = np.sqrt(np.maximum(np.sin(T - t) * np.sin(T + t), 0.0) / ((1 - g2) * c2))  # sqrt(1 - A^2)
            core = np.arctan2(num, den)
        u3 = sgn * (np.pi - core if ext else core) + beta
        return np.stack([t, u2, u3])

    def deriv(t):
        t = np.asarray(t, dtype=float)
        ct = np.cos(t)
        if g == 0:
            return np.stack([np.ones_like(t), np.zeros_like(t), np.zeros_like(t)])
        c2 = ct**2 - g2
        du2 = g / (ct * np.sqrt(c2))
        du3 = g * (1 - g2) * ct / (c2 * np.sqrt(np.sin(T - t) * np.sin(T + t)))
        return np.stack([np.ones_like(t), du2, sgn * (-du3 if ext else du3)])

    return CurveTrace(-T, T, point, deriv)


def _closed_samples(dim, trace, samples, label):
    if samples < 2:
        raise ValueError("need at least two samples")
    chart = geodesic_chart(dim)
    lo, hi = trace.lo + ENDPOINT_MARGIN, trace.hi - ENDPOINT_MARGIN
    ts = np.linspace(lo, hi, samples)
    return _samples_from_chart(chart, ts, trace.point(ts), trace.deriv(ts), "u1", trace, label=label)


def s2_geodesic_closed_form(params: GeodesicParams, samples: int = DEFAULT_SAMPLES) -> CurveSamples:
    """Closed-form S^2 geodesic for the given branch.

    ``gamma = 0`` gives the meridian ``u2 = delta`` (``pi + delta`` on the
    extended branch).  ``|gamma| = 1`` gives the equator, parametrised by
    its azimuth (which is arclength) over the closed interval ``[0, 2 pi]``.
    """
    if abs(params.gamma) == 1:
        chart = geodesic_chart(2)
        sgn = 1.0 if params.gamma > 0 else -1.0
        ts = np.linspace(0.0, TWO_PI, samples)

        def point(t):
            t = np.asarray(t, dtype=float)
            return np.stack([np.zeros_like(t), sgn * t + params.phase])

        def deriv(t):
            t = np.asarray(t, dtype=float)
            return np.stack([np.zeros_like(t), np.full_like(t, sgn)])

        trace = CurveTrace(0.0, TWO_PI, point, deriv)
        return _samples_from_chart(chart, ts, point(ts), deriv(ts), "arclength", trace, label="equator")
    label = "meridian" if params.gamma == 0 else f"s2-{params.branch}"
    return _closed_samples(2, s2_trace(params), samples, label)


def s3_geodesic_closed_form(params: GeodesicParams, samples: int = DEFAULT_SAMPLES) -> CurveSamples:
    """Closed-form S^3 geodesic; ``gamma = 0`` is the ``u2 = 0, u3 = beta`` meridian."""
    if abs(params.gamma) >= 1:
        raise DomainError("the S^3 closed form needs |gamma| < 1")
    label = "meridian" if params.gamma == 0 else f"s3-{params.branch}"
    return _closed_samples(3, s3_trace(params), samples, label)


# ---------------------------------------------------------------------------
# equation residuals


def _admissible(params: GeodesicParams, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    T = params.half_width(3)
    if params.gamma == 0 or abs(params.gamma) >= 1:
        raise DomainError("residuals need 0 < |gamma| < 1")
    if np.any(np.abs(t) >= T):
        raise DomainError(f"t must satisfy |t| < {T:.17g}")
    return t


def closed_du3(params: GeodesicParams, t) -> np.ndarray:
    """``|du3/dt| = |gamma|(1-gamma^2) / sqrt((cos t - gamma^2 sec t)^2 (cos^2 t - 2 gamma^2 + gamma^4))``."""
    g2 = params.gamma**2
    ct = np.cos(t)
    return abs(params.gamma) * (1 - g2) / np.sqrt((ct - g2 / ct) ** 2 * (ct**2 - 2 * g2 + g2 * g2))


def closed_du2(params: GeodesicParams, t) -> np.ndarray:
    """``du2/du1 = gamma sec u1 / sqrt(cos^2 u1 - gamma^2)``."""
    g = abs(params.gamma)
    return g / (np.cos(t) * np.sqrt(np.cos(t) ** 2 - g * g))


def eq1_residual(params: GeodesicParams, t, du2: Optional[float] = None):
    """``(du3/du1)^2 - gamma^2 (sec^2 u1 + du2^2) / (cos^2 u1 cos^4 u2 - gamma^2 cos^2 u2)``.

    ``du3/du1`` comes from the closed expression for its modulus and ``u2``
    from the closed-form solution; ``du2`` defaults to the closed-form slope
    and may be overridden to probe sensitivity.
    """
    t = _admissible(params, t)
    g2 = params.gamma**2
    u2 = s3_trace(params).point(t)[1]
    d2 = closed_du2(params, t) if du2 is None else np.asarray(du2, dtype=float)
    c1, cu2 = np.cos(t) ** 2, np.cos(u2) ** 2
    rhs = g2 * (1 / c1 + d2**2) / (c1 * cu2**2 - g2 * cu2)
    out = closed_du3(params, t) ** 2 - rhs
    return float(out) if np.ndim(out) == 0 else out


def eq3prime_residual(params: GeodesicParams, t, k: Optional[float] = None):
    """``gamma^2 sec^2 u2 - k - (du2/du1)^2 (k cos^2 u1 - cos^4 u1)`` on the closed form."""
    t = _admissible(params, t)
    k = params.k if k is None else float(k)
    u2 = s3_trace(params).point(t)[1]
    d2 = closed_du2(params, t)
    c1 = np.cos(t) ** 2
    out = params.gamma**2 / np.cos(u2) ** 2 - k - d2**2 * (k * c1 - c1 * c1)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# shooting oracle


def geodesic_rhs(chart: Chart):
    m = chart.intrinsic_dim

    def rhs(s, y):
        u, ud = y[:m], y[m:]
        G = christoffel(chart, u, check=False)
        return np.concatenate([ud, -np.einsum("kij,i,j->k", G, ud, ud)])

    return rhs


def geodesic_shoot(
    chart: Chart, a, psi, length: float, tol: float = 1e-12, samples: int = DEFAULT_SAMPLES
) -> CurveSamples:
    """Integrate ``u'' + Gamma(u', u') = 0`` at unit speed for the given arclength.

    The cyclic coordinate is left unbounded; leaving the range of any
    other coordinate ends the run early with ``status = 'exited'`` and
    the samples cover the part computed so far.
    """
    m = chart.intrinsic_dim
    a = as_points(a, m).astype(float)
    psi = as_points(psi, m).astype(float)
    _check_noncyclic(chart, a)
    lam = float(speed(chart, a, psi))
    if not lam > 0:
        raise ValueError("initial velocity must be non-zero")
    if not length > 0:
        raise ValueError("length must be positive")
    bounded = [i for i in range(m) if i != chart.cyclic_axis]
    lo = np.array([chart.domain[i][0] for i in bounded])
    hi = np.array([chart.domain[i][1] for i in bounded])

    def outside(s, y):
        ub = y[bounded]
        return bool(np.any(ub - lo < INTERIOR_MARGIN) or np.any(hi - ub < INTERIOR_MARGIN))

    problem = IVPProblem(geodesic_rhs(chart), 0.0, float(length), np.concatenate([a, psi / lam]), tol=tol)
    sol = integrate_ivp(problem, max_step=SHOOT_MAX_STEP, exit_when=outside)
    s_end = float(sol.ts[-1])
    n = max(2, int(round(samples * s_end / length))) if s_end > 0 else 1
    ts = np.linspace(0.0, s_end, n)
    Y = sol(ts)
    status = "completed" if sol.status == "completed" else sol.status
    return _samples_from_chart(chart, ts, Y[:m], Y[m:], "arclength", status=status, label="shoot")


# ---------------------------------------------------------------------------
# verification battery


def _ambient_speed(chart, trace, t):
    # the chart speed is singular at the branch ends; evaluate just inside
    pad = 1e-12 * (trace.hi - trace.lo)
    t = np.clip(t, trace.lo + pad, trace.hi - pad)
    u = trace.point(t)
    return np.linalg.norm(np.einsum("ai...,i...->a...", chart.jacobian(u), trace.deriv(t)), axis=0)


def _chart_for(samples: CurveSamples, chart: Optional[Chart]) -> Chart:
    if chart is not None:
        return chart
    return geodesic_chart(samples.chart_pts.shape[0])


def curve_length(chart: Optional[Chart], samples: CurveSamples, order: int = LENGTH_ORDER) -> float:
    """Length ``int ||D Phi (c')|| dt``.

    With a continuous trace, Gauss-Legendre quadrature in the sine
    substitution ``t = mid + half sin(theta)`` integrates the exact speed
    over the whole parameter interval (the endpoint singularity of the speed
    is cancelled by ``dt/dtheta``).  Otherwise the trapezoidal rule on the
    sampled speeds is used.
    """
    chart = _chart_for(samples, chart)
    if samples.trace is not None:
        tr = samples.trace
        x, w = np.polynomial.legendre.leggauss(order)
        theta = 0.5 * np.pi * x
        vals = _ambient_speed(chart, tr, tr.t_of(theta)) * tr.dt_dtheta(theta)
        return float(0.5 * np.pi * np.dot(w, vals))
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    sp = np.linalg.norm(samples.velocities, axis=0)
    return float(np.sum(0.5 * (sp[1:] + sp[:-1]) * np.diff(samples.ts)))


def planarity_defect(ambient_pts) -> float:
    """``sigma_3 / sigma_1`` of the ``n x N`` point matrix (0 for a plane through the origin)."""
    P = np.asarray(ambient_pts, dtype=float)
    if P.ndim != 2 or P.shape[1] < 3:
        raise ValueError("need an (n, N) array with at least 3 points")
    if np.max(np.abs(P - P[:, :1])) == 0.0:
        raise ValueError("degenerate input: all points coincide")
    sv = np.linalg.svd(P, compute_uv=False)
    if sv[0] == 0:
        raise ValueError("degenerate input: zero matrix")
    return float(sv[2] / sv[0]) if len(sv) > 2 else 0.0


def origin_plane_distance(ambient_pts) -> float:
    """Distance from the origin to the best-fit affine 2-plane of the points."""
    P = np.asarray(ambient_pts, dtype=float)
    c = P.mean(axis=1)
    U, _, _ = np.linalg.svd(P - c[:, None], full_matrices=False)
    basis = U[:, :2]
    return float(np.linalg.norm(c - basis @ (basis.T @ c)))


def _arclength_inverse(chart, tr, targets, panels=400, order=8):
    """Parameters ``theta`` with cumulative lengths ``targets`` along a trace."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-0.5 * np.pi, 0.5 * np.pi, panels + 1)

    def dens(theta):
        return _ambient_speed(chart, tr, tr.t_of(theta)) * tr.dt_dtheta(theta)

    def seg(a, b):
        a, b = np.asarray(a, float), np.asarray(b, float)
        th = 0.5 * (b - a)[..., None] * x + 0.5 * (b + a)[..., None]
        return 0.5 * (b - a) * np.sum(w * dens(th), axis=-1)

    cum = np.concatenate([[0.0], np.cumsum(seg(edges[:-1], edges[1:]))])
    idx = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, panels - 1)
    a = edges[idx]
    base = cum[idx]
    theta = a + (targets - base) / np.maximum(cum[idx + 1] - base, 1e-300) * (edges[idx + 1] - a)
    for _ in range(30):
        dth = (base + seg(a, theta) - targets) / np.maximum(dens(theta), 1e-300)
        theta = np.clip(theta - dth, edges[idx], edges[idx + 1])
        if np.max(np.abs(dth)) < 1e-15:
            break
    return theta, cum[-1]


def reparametrize_by_arclength(chart: Optional[Chart], samples: CurveSamples, n: Optional[int] = None) -> CurveSamples:
    """Resample on a uniform arclength grid with unit-speed velocities."""
    chart = _chart_for(samples, chart)
    n = len(samples) if n is None else int(n)
    if n < 2:
        raise ValueError("need at least two samples")
    if samples.trace is not None:
        tr = samples.trace
        total = curve_length(chart, samples)
        if not total > 0:
            raise ValueError("curve has zero length")
        s = np.linspace(0.0, total, n)
        theta, _ = _arclength_inverse(chart, tr, s)
        theta[0], theta[-1] = -0.5 * np.pi, 0.5 * np.pi
        t = tr.t_of(theta)
        u = tr.point(t)
        # the chart speed is singular at the branch ends; take the unit tangent just inside
        pad = 1e-12 * (tr.hi - tr.lo)
        tv = np.clip(t, tr.lo + pad, tr.hi - pad)
        ud = tr.deriv(tv)
        ud = ud / speed(chart, tr.point(tv), ud)

        # the arclength trace is the same geometric curve; keep it for idempotence
        return _samples_from_chart(chart, s, u, ud, "arclength", tr, samples.status, samples.label)

    sp = np.linalg.norm(samples.velocities, axis=0)
    if np.any(~(sp > 0)):
        raise ValueError("speed vanishes along the samples")
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (sp[1:] + sp[:-1]) * np.diff(samples.ts))])
    s = np.linspace(0.0, cum[-1], n)
    # cubic Hermite in the original parameter using chart velocities
    t_new = np.interp(s, cum, samples.ts)
    for _ in range(3):
        t_new = t_new - (np.interp(t_new, samples.ts, cum) - s) / np.interp(t_new, samples.ts, sp)
        t_new = np.clip(t_new, samples.ts[0], samples.ts[-1])
    cv = samples.chart_vel
    if cv is None:
        raise ValueError("samples without a trace need chart velocities")
    i = np.clip(np.searchsorted(samples.ts, t_new, side="right") - 1, 0, len(samples.ts) - 2)
    t0, t1 = samples.ts[i], samples.ts[i + 1]
    h = t1 - t0
    q = (t_new - t0) / h
    u0, u1 = samples.chart_pts[:, i], samples.chart_pts[:, i + 1]
    d0, d1 = cv[:, i], cv[:, i + 1]
    u = (1 + 2 * q) * (1 - q) ** 2 * u0 + q * (1 - q) ** 2 * h * d0 + q * q * (3 - 2 * q) * u1 + q * q * (q - 1) * h * d1
    du = (6 * q * (q - 1) / h) * (u0 - u1) + (1 - q) * (1 - 3 * q) * d0 + q * (3 * q - 2) * d1
    du = du / speed(chart, u, du)
    return _samples_from_chart(chart, s, u, du, "arclength", None, samples.status, samples.label)


def geodesic_defect(chart: Optional[Chart], samples: CurveSamples) -> float:
    """Max tangential part ``||c'' - <c'', nu> nu||`` over interior samples (``nu = c`` on unit spheres)."""
    chart = _chart_for(samples, chart)
    if samples.param_kind != "arclength":
        raise ValueError("geodesic_defect needs arclength-parametrised samples")
    if chart.kind != "hypersphere":
        raise UnsupportedError("geodesic_defect uses the position vector as the normal of a unit sphere")
    if len(samples) < 3:
        raise ValueError("need at least three samples")
    ds = np.diff(samples.ts)
    h = ds.mean()
    if np.max(np.abs(ds - h)) > 1e-9 * max(1.0, h):
        raise ValueError("samples are not on a uniform arclength grid")
    x = samples.ambient_pts
    acc = (x[:, 2:] - 2 * x[:, 1:-1] + x[:, :-2]) / h**2
    nu = x[:, 1:-1] / np.linalg.norm(x[:, 1:-1], axis=0)
    tang = acc - np.sum(acc * nu, axis=0) * nu
    return float(np.max(np.linalg.norm(tang, axis=0)))


def assemble_great_circle(params: GeodesicParams, dim: int, samples: int = DEFAULT_SAMPLES) -> CurveSamples:
    """Join the principal branch with the reversed extended branch into a closed curve.

    Each branch is reparametrised by arclength; the extended branch is
    traversed from ``t = T`` back to ``t = -T`` so the endpoints match.
    """
    make = s2_geodesic_closed_form if dim == 2 else s3_geodesic_closed_form
    chart = geodesic_chart(dim)
    p = reparametrize_by_arclength(chart, make(replace(params, branch="principal"), samples))
    e = reparametrize_by_arclength(chart, make(replace(params, branch="extended"), samples))
    L = p.ts[-1]
    ts = np.concatenate([p.ts, L + (e.ts[-1] - e.ts[::-1])[1:]])
    u = np.concatenate([p.chart_pts, e.chart_pts[:, ::-1][:, 1:]], axis=1)
    x = np.concatenate([p.ambient_pts, e.ambient_pts[:, ::-1][:, 1:]], axis=1)
    v = np.concatenate([p.velocities, -e.velocities[:, ::-1][:, 1:]], axis=1)
    cv = np.concatenate([p.chart_vel, -e.chart_vel[:, ::-1][:, 1:]], axis=1)
    return CurveSamples(ts, u, x, v, "arclength", cv, None, "completed", f"great-circle-s{dim}")


def compare_with_shooting(params: GeodesicParams, dim: int = 2, tol: float = 1e-12, samples: int = DEFAULT_SAMPLES):
    """Sup chart deviation between a closed-form branch and shooting from its midpoint.

    Shoots forward and backward from ``t = 0`` for nearly half the branch
    length each and compares the non-initial chart coordinates at the shot
    ``u1`` values.  Returns ``(deviation, shot_samples)``.
    """
    chart = geodesic_chart(dim)
    tr = s2_trace(params) if dim == 2 else s3_trace(params)
    a = tr.point(np.array(0.0))
    psi = tr.deriv(np.array(0.0))
    half = 0.5 * curve_length(chart, CurveSamples(np.array([0.0]), a[:, None], chart.embed(a)[:, None],
                                                 np.zeros((dim + 1, 1)), "u1", trace=tr))
    dev = 0.0
    shots = []
    for sgn in (1.0, -1.0):
        shot = geodesic_shoot(chart, a, sgn * psi, half - 1e-3, tol, samples)
        t = np.clip(shot.chart_pts[0], tr.lo, tr.hi)
        ref = tr.point(t)
        dev = max(dev, float(np.max(np.abs(shot.chart_pts[1:] - ref[1:]))), float(np.max(np.abs(shot.chart_pts[0] - t))))
        shots.append(shot)
    return dev, shots
