"""Empirical convergence studies shared by the CLI and the test suite."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import frac_ops, reductions
from .errors import ValidationError
from .model import GridSpec, ModelParams
from .pde_solver import solve_original


@dataclass(frozen=True)
class ConvergenceResult:
    name: str
    steps: tuple[float, ...]
    errors: tuple[float, ...]
    target: tuple[float, float]

    @property
    def order(self) -> float:
        return fitted_order(self.steps, self.errors)

    @property
    def pairwise(self) -> tuple[float, ...]:
        s, e = np.log(self.steps), np.log(self.errors)
        return tuple((e[1:] - e[:-1]) / (s[1:] - s[:-1]))

    @property
    def in_window(self) -> bool:
        lo, hi = self.target
        return lo <= self.order <= hi

    def to_csv(self) -> str:
        lines = ["step,error"]
        lines += [f"{s:.17g},{e:.17g}" for s, e in zip(self.steps, self.errors)]
        return "\n".join(lines) + "\n"


def fitted_order(steps: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of ``log error`` against ``log step``."""
    s = np.log(np.asarray(steps, dtype=float))
    e = np.log(np.asarray(errors, dtype=float))
    if len(s) < 2:
        raise ValidationError("need at least two levels to fit an order")
    return float(np.polyfit(s, e, 1)[0])


def _levels(levels: Sequence[int]) -> list[int]:
    levels = [int(n) for n in levels]
    if len(levels) < 3:
        raise ValidationError("a convergence study needs at least 3 refinement levels")
    return levels


def caputo_power_study(alpha: float, levels: Sequence[int] = (100, 200, 400, 800),
                       window: float = 0.2) -> ConvergenceResult:
    """L1 derivative of ``t^3`` at ``t = 1``; the expected order is ``2 - alpha``."""
    errs, steps = [], []
    exact = math.gamma(4.0) / math.gamma(4.0 - alpha)
    for n in _levels(levels):
        dt = 1.0 / n
        t = dt * np.arange(n + 1)
        approx = frac_ops.caputo_l1_array(t ** 3, dt, alpha)[-1]
        steps.append(dt)
        errs.append(abs(approx - exact))
    target = 2.0 - alpha
    return ConvergenceResult(f"caputo t^3 alpha={alpha:g}", tuple(steps), tuple(errs),
                             (target - window, target + window))


def abm_linear_study(alpha: float = 0.8, r: float = 1.0, v0: float = 1.0,
                     levels: Sequence[int] = (250, 500, 1000)) -> ConvergenceResult:
    """ABM on ``D^alpha v = r v`` against ``v0 E_alpha(r t^alpha)``; max relative error on [0, 1]."""
    p = ModelParams(alpha=alpha, lam=0.0, r=r, K0=1e12)
    errs, steps = [], []
    for n in _levels(levels):
        dt = 1.0 / n
        sol = reductions.solve_fractional_logistic(p, v0, 1.0, dt)
        ref = v0 * np.array([frac_ops.mittag_leffler(alpha, r * t ** alpha) for t in sol.times])
        steps.append(dt)
        errs.append(float(np.max(np.abs(sol.values - ref) / np.abs(ref))))
    return ConvergenceResult(f"abm linear alpha={alpha:g}", tuple(steps), tuple(errs), (0.5, 3.0))


def heat_study(levels: Sequence[int] = (50, 100, 200, 400), nx: int = 32) -> ConvergenceResult:
    """alpha = 1, chi = r = 0, lam = 0: backward Euler on ``u_t = u_xx`` with ``u0 = cos x``.

    The reference is the semi-discrete solution ``exp(-k t) cos x`` with
    ``k = (2 - 2 cos dx) / dx^2``, so the error is purely temporal.
    """
    p = ModelParams(alpha=1.0, lam=0.0, chi=0.0, r=0.0)
    errs, steps = [], []
    for nt in _levels(levels):
        grid = GridSpec(nx=nx, nt=nt + 1)
        k = (2.0 - 2.0 * math.cos(grid.dx)) / grid.dx ** 2
        traj = solve_original(p, grid, np.cos(grid.x), np.zeros(nx))
        ref = math.exp(-k * grid.T) * np.cos(grid.x)
        steps.append(grid.dt)
        errs.append(float(np.max(np.abs(traj.first[-1] - ref))))
    return ConvergenceResult("heat alpha=1 backward Euler", tuple(steps), tuple(errs), (0.8, 1.2))


def gauge_study(alpha: float = 0.7, lam: float = 0.5, levels: Sequence[int] = (100, 200, 400),
                nx: int = 16) -> ConvergenceResult:
    """Sup difference between the gauge and direct paths (chi = r = 0, x-independent data)."""
    p = ModelParams(alpha=alpha, lam=lam, chi=0.0, r=0.0)
    errs, steps = [], []
    for nt in _levels(levels):
        grid = GridSpec(nx=nx, nt=nt + 1)
        u0 = np.ones(nx)
        c0 = 0.5 * np.ones(nx)
        a = solve_original(p, grid, u0, c0, path="gauge")
        b = solve_original(p, grid, u0, c0, path="direct")
        steps.append(grid.dt)
        errs.append(float(max(np.max(np.abs(a.first - b.first)), np.max(np.abs(a.second - b.second)))))
    return ConvergenceResult(f"gauge vs direct alpha={alpha:g}", tuple(steps), tuple(errs), (0.8, 2.0))


STUDIES = {
    "caputo": caputo_power_study,
    "abm": abm_linear_study,
    "heat": heat_study,
    "gauge": gauge_study,
}
