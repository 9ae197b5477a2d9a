"""Time marching for the gauged system and, through it, the tempered system.

Each step advances the first equation with the L1 Caputo scheme, a
theta-weighted implicit diffusion term and explicit chemotaxis/logistic
terms taken from the previous level, then advances the chemical equation
with a theta scheme using the freshly computed cell density. Both linear
systems have constant matrices, factorized once per solve.

The marching core supports ``0 < alpha <= 1`` only: for ``alpha > 1`` an
initial slope would be needed that the model does not supply.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import stencils
from .errors import InstabilityError, ValidationError
from .frac_ops import l1_weights
from .model import GridSpec, ModelParams, Trajectory, from_gauged, to_gauged

log = logging.getLogger(__name__)

BLOWUP_LIMIT = 1.0e12


@dataclass(frozen=True)
class SolverConfig:
    theta: float = 1.0
    newton_tol: float = 1.0e-10
    newton_max_iter: int = 20
    history_mode: str = "full"

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValidationError(f"theta must lie in [0, 1], got {self.theta}")
        if not self.newton_tol > 0:
            raise ValidationError("newton_tol must be positive")
        if int(self.newton_max_iter) != self.newton_max_iter or self.newton_max_iter < 1:
            raise ValidationError("newton_max_iter must be a positive integer")
        if self.history_mode != "full":
            raise ValidationError(f"unsupported history_mode {self.history_mode!r}")


def _check_inputs(params: ModelParams, grid: GridSpec, a0, b0) -> tuple[np.ndarray, np.ndarray]:
    if params.alpha > 1.0:
        raise ValidationError(
            f"the PDE solver supports 0 < alpha <= 1 (got {params.alpha}); "
            "use the reductions module for 1 < alpha < 2")
    if not params.tau_c > 0:
        raise ValidationError("time marching needs tau_c > 0")
    a0 = np.asarray(a0, dtype=float)
    b0 = np.asarray(b0, dtype=float)
    for name, arr in (("first", a0), ("second", b0)):
        if arr.shape != (grid.nx,):
            raise ValidationError(f"initial {name} field has shape {arr.shape}, expected ({grid.nx},)")
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"initial {name} field is not finite")
    return a0, b0


def _pin_dirichlet(mat: sp.spmatrix, boundary: str) -> sp.csc_matrix:
    mat = sp.lil_matrix(mat)
    if boundary == "dirichlet":
        n = mat.shape[0]
        for i in (0, n - 1):
            mat[i, :] = 0.0
            mat[i, i] = 1.0
    return mat.tocsc()


def _march(params: ModelParams, grid: GridSpec, a0: np.ndarray, b0: np.ndarray,
           cfg: SolverConfig, tempered: bool) -> tuple[np.ndarray, np.ndarray]:
    """Shared stepping loop.

    ``tempered=False`` marches the gauged pair ``(v, w)``; ``tempered=True``
    marches ``(u, c)`` directly with the tempered L1 derivative
    ``e^{-lam t} L1[e^{lam t} u]``. The arithmetic is arranged so both
    branches perform identical floating-point operations when ``lam == 0``.
    """
    nt, nx = grid.shape
    dt, dx, bc = grid.dt, grid.dx, grid.boundary
    t = grid.t
    alpha, lam, theta = params.alpha, params.lam, cfg.theta

    b = l1_weights(nt, alpha)
    coef = dt ** (-alpha) / math.gamma(2.0 - alpha)
    lap = stencils.d2_matrix(nx, dx, bc)
    eye = sp.identity(nx, format="csr")

    decay_rate = -params.kappa if tempered else params.gauged_decay
    lu1 = splu(_pin_dirichlet(coef * b[0] * eye - theta * params.D * lap, bc))
    chem_op = decay_rate * eye + params.D_c * lap
    lu2 = splu(_pin_dirichlet(params.tau_c / dt * eye - theta * chem_op, bc))

    first = np.empty((nt, nx))
    second = np.empty((nt, nx))
    first[0], second[0] = a0, b0
    # z is the variable the Caputo history acts on: v, or e^{lam t} u
    z_prev = np.exp(lam * t[0]) * a0 if tempered else a0
    diffs = np.zeros((nt, nx))
    scale0 = max(float(np.max(np.abs(a0))), 1e-300)

    for n in range(1, nt):
        a_prev, b_prev = first[n - 1], second[n - 1]
        hist = b[1:n][::-1] @ diffs[1:n] if n > 1 else 0.0
        frame_scale = math.exp(-lam * t[n]) if tempered else 1.0
        coupling = 1.0 if tempered else math.exp(-lam * t[n - 1])

        a_x, b_x = stencils.d1(a_prev, dx, bc), stencils.d1(b_prev, dx, bc)
        b_xx = stencils.d2(b_prev, dx, bc)
        explicit = (-params.chi * coupling * (a_x * b_x + a_prev * b_xx)
                    + params.r * a_prev
                    - params.logistic_rate * coupling * a_prev * a_prev)
        rhs1 = frame_scale * (coef * (b[0] * z_prev - hist)) + explicit
        if theta < 1.0:
            rhs1 = rhs1 + (1.0 - theta) * params.D * (lap @ a_prev)
        if bc == "dirichlet":
            rhs1[0] = rhs1[-1] = 0.0
        a_new = lu1.solve(rhs1)

        rhs2 = params.tau_c / dt * b_prev + a_new
        if theta < 1.0:
            rhs2 = rhs2 + (1.0 - theta) * (chem_op @ b_prev)
        if bc == "dirichlet":
            rhs2[0] = rhs2[-1] = 0.0
        b_new = lu2.solve(rhs2)

        first[n], second[n] = a_new, b_new
        z_new = math.exp(lam * t[n]) * a_new if tempered else a_new
        diffs[n] = z_new - z_prev
        z_prev = z_new

        peak = max(float(np.max(np.abs(a_new))), float(np.max(np.abs(b_new))))
        if not math.isfinite(peak) or peak > BLOWUP_LIMIT:
            raise InstabilityError(
                f"field norm {peak:.3e} exceeded {BLOWUP_LIMIT:.0e} at step {n} (t = {t[n]:.6g})",
                step=n, norm=peak)

    if params.chi == 0 and np.all(a0 >= 0):
        lowest = float(first.min())
        if lowest < -1e-8 * scale0:
            log.warning("cell density went negative (min %.3e) despite nonnegative data", lowest)
    return first, second


def solve_gauged(params: ModelParams, grid: GridSpec, v0, w0,
                 cfg: SolverConfig | None = None) -> Trajectory:
    """March the gauged system from ``(v0, w0)`` over ``grid``."""
    cfg = cfg or SolverConfig()
    v0, w0 = _check_inputs(params, grid, v0, w0)
    v, w = _march(params, grid, v0, w0, cfg, tempered=False)
    return Trajectory(grid, "gauged", v, w)


def solve_original(params: ModelParams, grid: GridSpec, u0, c0,
                   cfg: SolverConfig | None = None, path: str = "gauge") -> Trajectory:
    """Solve the tempered system in the original variables.

    ``path="gauge"`` maps the data to the gauged frame, marches there and
    maps back. ``path="direct"`` marches ``(u, c)`` with the tempered L1
    derivative and the original chemical equation.
    """
    cfg = cfg or SolverConfig()
    u0, c0 = _check_inputs(params, grid, u0, c0)
    if path == "gauge":
        start = np.exp(params.lam * grid.t0)
        traj = solve_gauged(params, grid, start * u0, start * c0, cfg)
        return from_gauged(traj, params.lam)
    if path == "direct":
        u, c = _march(params, grid, u0, c0, cfg, tempered=True)
        return Trajectory(grid, "original", u, c)
    raise ValidationError(f"path must be 'gauge' or 'direct', got {path!r}")


def shift_cells(traj: Trajectory, m: int) -> Trajectory:
    """Cyclic shift of both fields by ``m`` cells along x."""
    return Trajectory(traj.grid, traj.frame,
                      np.roll(traj.first, m, axis=1), np.roll(traj.second, m, axis=1))


__all__ = ["SolverConfig", "solve_gauged", "solve_original", "shift_cells", "to_gauged",
           "BLOWUP_LIMIT"]
