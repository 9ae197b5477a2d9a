"""Parameters, grids, trajectories, the gauge map and residual evaluators.

The gauge ``v = exp(lam t) u``, ``w = exp(lam t) c`` turns the tempered
system into one with a plain Caputo derivative and explicit
``exp(-lam t)`` coefficients::

    D^a v  = D v_xx - chi e^{-lam t} (v_x w_x + v w_xx) + r v - (r/K0) e^{-lam t} v^2
    tau_c w_t = (tau_c lam - kappa) w + D_c w_xx + v
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import frac_ops, stencils
from .errors import FrameError, ValidationError

FRAMES = ("original", "gauged")


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 0.8
    lam: float = 0.5
    D: float = 1.0
    D_c: float = 1.0
    chi: float = 1.0
    r: float = 1.0
    K0: float = 1.0
    kappa: float = 1.0
    tau_c: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValidationError(f"alpha must lie in (0, 2), got {self.alpha}")
        for name in ("lam", "D", "D_c", "chi", "r", "kappa", "tau_c"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValidationError(f"{name} must be finite and >= 0, got {value}")
        if not self.K0 > 0.0:
            raise ValidationError(f"K0 must be positive (inf allowed), got {self.K0}")

    @property
    def logistic_rate(self) -> float:
        """``r / K0`` (zero when ``K0`` is infinite)."""
        return 0.0 if math.isinf(self.K0) else self.r / self.K0

    @property
    def gauged_decay(self) -> float:
        """Coefficient ``tau_c*lam - kappa`` of ``w`` in the gauged chemical equation."""
        return self.tau_c * self.lam - self.kappa

    def regimes(self) -> set[str]:
        """Named parameter regimes this parameter set belongs to."""
        found = set()
        if self.lam > 0 and self.chi > 0 and self.r > 0:
            found.add("generic")
        if self.lam == 0:
            found.add("untempered")
        if self.chi == 0 and self.r == 0:
            found.add("chi0-r0")
        return found

    def with_(self, **changes) -> ModelParams:
        return replace(self, **changes)


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid.

    Periodic grids hold ``nx`` nodes ``x0 + i*dx`` with ``dx = (x1-x0)/nx``
    (``x1`` is identified with ``x0``); bounded grids include both end points.
    Time nodes are ``t0 + k*dt`` for ``k = 0..nt-1`` with ``dt = (T-t0)/(nt-1)``.
    """

    x0: float = 0.0
    x1: float = 2.0 * math.pi
    nx: int = 64
    T: float = 1.0
    nt: int = 101
    boundary: str = "periodic"
    t0: float = 0.0

    def __post_init__(self):
        if not self.x1 > self.x0:
            raise ValidationError("grid needs x1 > x0")
        if int(self.nx) != self.nx or self.nx < 4:
            raise ValidationError(f"nx must be an integer >= 4, got {self.nx}")
        if int(self.nt) != self.nt or self.nt < 2:
            raise ValidationError(f"nt must be an integer >= 2, got {self.nt}")
        if not self.T > self.t0:
            raise ValidationError("grid needs T > t0")
        if self.boundary not in stencils.BOUNDARIES:
            raise ValidationError(f"unknown boundary {self.boundary!r}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "nt", int(self.nt))

    @property
    def dx(self) -> float:
        span = self.x1 - self.x0
        return span / self.nx if self.boundary == "periodic" else span / (self.nx - 1)

    @property
    def dt(self) -> float:
        return (self.T - self.t0) / (self.nt - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nt, self.nx)


@dataclass(frozen=True)
class Trajectory:
    """Two fields sampled on a :class:`GridSpec`, tagged with their frame.

    ``first``/``second`` are ``(u, c)`` in the original frame and ``(v, w)``
    in the gauged frame, each of shape ``(nt, nx)``.
    """

    grid: GridSpec
    frame: str
    first: np.ndarray
    second: np.ndarray

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValidationError(f"unknown frame {self.frame!r}")
        for name in ("first", "second"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != self.grid.shape:
                raise ValidationError(
                    f"{name} field has shape {arr.shape}, grid expects {self.grid.shape}")
            object.__setattr__(self, name, arr)

    @property
    def fields(self) -> tuple[np.ndarray, np.ndarray]:
        return self.first, self.second

    def require(self, frame: str) -> None:
        if self.frame != frame:
            raise FrameError(f"expected a trajectory in the {frame} frame, got {self.frame}")


@dataclass(frozen=True)
class ResidualReport:
    eq1: np.ndarray
    eq2: np.ndarray
    sup: tuple[float, float] = field(init=False)
    l2: tuple[float, float] = field(init=False)
    cell: float = 1.0

    def __post_init__(self):
        sups, l2s = [], []
        for r in (self.eq1, self.eq2):
            sups.append(float(np.max(np.abs(r))) if r.size else 0.0)
            l2s.append(float(np.sqrt(self.cell * np.sum(r * r))))
        object.__setattr__(self, "sup", tuple(sups))
        object.__setattr__(self, "l2", tuple(l2s))

    @property
    def sup_total(self) -> float:
        return max(self.sup)

    @property
    def l2_total(self) -> float:
        return math.hypot(*self.l2)


# ---------------------------------------------------------------------------
# gauge map


def _time_column(grid: GridSpec) -> np.ndarray:
    return grid.t[:, None]


def to_gauged(traj: Trajectory, lam: float) -> Trajectory:
    """``v = e^{lam t} u``, ``w = e^{lam t} c``."""
    traj.require("original")
    grow = np.exp(lam * _time_column(traj.grid))
    return Trajectory(traj.grid, "gauged", grow * traj.first, grow * traj.second)


def from_gauged(traj: Trajectory, lam: float) -> Trajectory:
    """``u = e^{-lam t} v``, ``c = e^{-lam t} w``."""
    traj.require("gauged")
    decay = np.exp(-lam * _time_column(traj.grid))
    return Trajectory(traj.grid, "original", decay * traj.first, decay * traj.second)


# ---------------------------------------------------------------------------
# residuals


def _check_time_samples(grid: GridSpec, alpha: float) -> None:
    need = 3 if alpha > 1 else 2
    if grid.nt < need:
        raise ValidationError(f"residual needs at least {need} time levels, grid has {grid.nt}")


def _report(eq1: np.ndarray, eq2: np.ndarray, grid: GridSpec) -> ResidualReport:
    # node 0 carries no Caputo information
    eq1 = eq1.copy()
    eq1[0] = 0.0
    return ResidualReport(eq1, eq2, cell=grid.dt * grid.dx)


def residual_gauged(traj: Trajectory, params: ModelParams) -> ResidualReport:
    """Pointwise residuals of the gauged system.

    Time: L1 Caputo for ``v`` and an 8th-order finite difference for ``w_t``.
    Space: centered second-order differences with the grid's boundary rule.
    """
    traj.require("gauged")
    g = traj.grid
    _check_time_samples(g, params.alpha)
    v, w = traj.first, traj.second
    dx, bc = g.dx, g.boundary
    decay = np.exp(-params.lam * _time_column(g))

    v_x, v_xx = stencils.d1(v, dx, bc), stencils.d2(v, dx, bc)
    w_x, w_xx = stencils.d1(w, dx, bc), stencils.d2(w, dx, bc)

    rhs1 = (params.D * v_xx
            - params.chi * decay * (v_x * w_x + v * w_xx)
            + params.r * v
            - params.logistic_rate * decay * v * v)
    eq1 = frac_ops.caputo_l1_array(v, g.dt, params.alpha) - rhs1

    rhs2 = params.gauged_decay * w + params.D_c * w_xx + v
    eq2 = params.tau_c * stencils.time_derivative(w, g.dt) - rhs2
    return _report(eq1, eq2, g)


def spatial_operator(u: np.ndarray, grid: GridSpec, params: ModelParams,
                     laplacian_mode: str = "local",
                     laplacian: frac_ops.LaplacianSpec | None = None) -> np.ndarray:
    """The diffusion operator ``L u`` in either the local or nonlocal form."""
    if laplacian_mode == "local":
        return stencils.d2(u, grid.dx, grid.boundary)
    if laplacian_mode != "nonlocal":
        raise ValidationError(f"laplacian_mode must be 'local' or 'nonlocal', got {laplacian_mode!r}")
    extension = {"periodic": "periodic", "dirichlet": "zero"}.get(grid.boundary)
    if extension is None:
        raise ValidationError("the nonlocal Laplacian needs a periodic or dirichlet grid")
    if laplacian is None:
        laplacian = frac_ops.LaplacianSpec(alpha=params.alpha, lam=params.lam)
    return frac_ops.tempered_laplacian_1d(u, grid.dx, laplacian, extension=extension)


def residual_original(traj: Trajectory, params: ModelParams, laplacian_mode: str = "local",
                      laplacian: frac_ops.LaplacianSpec | None = None) -> ResidualReport:
    """Pointwise residuals of the tempered system in the original variables.

    With ``laplacian_mode="nonlocal"`` the diffusion term uses
    :func:`~tfks.frac_ops.tempered_laplacian_1d`; by default its order and
    tempering rate are taken from ``params``.
    """
    traj.require("original")
    g = traj.grid
    _check_time_samples(g, params.alpha)
    u, c = traj.first, traj.second
    dx, bc = g.dx, g.boundary

    u_x = stencils.d1(u, dx, bc)
    c_x, c_xx = stencils.d1(c, dx, bc), stencils.d2(c, dx, bc)
    lap_u = spatial_operator(u, g, params, laplacian_mode, laplacian)

    rhs1 = (params.D * lap_u
            - params.chi * (u_x * c_x + u * c_xx)
            + params.r * u
            - params.logistic_rate * u * u)
    lhs1 = frac_ops.tempered_caputo_array(u, g.t, g.dt, params.alpha, params.lam)
    eq1 = lhs1 - rhs1

    rhs2 = params.D_c * c_xx - params.kappa * c + u
    eq2 = params.tau_c * stencils.time_derivative(c, g.dt) - rhs2
    return _report(eq1, eq2, g)


# ---------------------------------------------------------------------------
# CSV serialization

CSV_HEADER = ("t", "x", "field1", "field2", "frame")


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def trajectory_to_csv(traj: Trajectory, x_name: str = "x") -> str:
    """Row-major (t outer, x inner) CSV text with 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("t", x_name, "field1", "field2", "frame"))
    t, x = traj.grid.t, traj.grid.x
    for k in range(traj.grid.nt):
        tk = _fmt(t[k])
        for i in range(traj.grid.nx):
            writer.writerow((tk, _fmt(x[i]), _fmt(traj.first[k, i]),
                             _fmt(traj.second[k, i]), traj.frame))
    return buf.getvalue()


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(trajectory_to_csv(traj))
    return path


def read_trajectory_csv(path: str | Path, grid: GridSpec) -> Trajectory:
    """Read a trajectory written by :func:`write_trajectory_csv` onto ``grid``.

    The time and space columns are checked against ``grid``.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != CSV_HEADER:
        raise ValidationError(f"unexpected CSV header {rows[0]}")
    body = rows[1:]
    if len(body) != grid.nt * grid.nx:
        raise ValidationError(f"CSV has {len(body)} rows, grid expects {grid.nt * grid.nx}")
    frames = {row[4] for row in body}
    if len(frames) != 1:
        raise ValidationError(f"mixed frames in CSV: {sorted(frames)}")
    data = np.array([[float(v) for v in row[:4]] for row in body]).reshape(grid.nt, grid.nx, 4)
    if not (np.allclose(data[:, 0, 0], grid.t, rtol=0, atol=1e-12 * max(1.0, abs(grid.T)))
            and np.allclose(data[0, :, 1], grid.x, rtol=0, atol=1e-12 * max(1.0, abs(grid.x1)))):
        raise ValidationError("CSV sample points do not match the grid")
    return Trajectory(grid, frames.pop(), data[:, :, 2], data[:, :, 3])


def residual_to_csv(report: ResidualReport, grid: GridSpec) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("t", "x", "eq1", "eq2"))
    t, x = grid.t, grid.x
    for k in range(grid.nt):
        for i in range(grid.nx):
            writer.writerow((_fmt(t[k]), _fmt(x[i]), _fmt(report.eq1[k, i]), _fmt(report.eq2[k, i])))
    return buf.getvalue()


def sample_fields(grid: GridSpec, first, second, frame: str) -> Trajectory:
    """Evaluate callables ``f(t, x)`` on the grid (broadcast over ``t[:,None], x[None,:]``)."""
    t = grid.t[:, None]
    x = grid.x[None, :]
    a = np.broadcast_to(np.asarray(first(t, x), dtype=float), grid.shape)
    b = np.broadcast_to(np.asarray(second(t, x), dtype=float), grid.shape)
    return Trajectory(grid, frame, np.array(a), np.array(b))
