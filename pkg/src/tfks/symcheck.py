"""Numerical symmetry checks: push a trajectory through a group flow and
measure how well the image still satisfies the governing system.

Flow of ``tau d/dt + (c1 x + c2) d/dx`` (dependent parts must vanish)::

    t -> t + tau eps
    x -> (x + c2/c1) exp(c1 eps) - c2/c1      (x + c2 eps when c1 = 0)

Time shifts must be whole multiples of ``dt``. A forward shift
(``tau eps > 0``) relabels the time axis so the image starts at
``t0 + tau eps`` and keeps the full history. A backward shift drops the
first ``|tau eps|`` of data and restarts at ``t0``, so the Caputo lower
terminal cuts the memory. :func:`invariance_residual` accepts either sign,
so both conventions can be reported side by side.

Spatial preimages wrap around on periodic grids; on bounded grids a
preimage outside ``[x0, x1]`` is an error.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import lie
from .errors import DomainExitError, RegimeError, ValidationError
from .lie import Generator
from .model import GridSpec, ModelParams, ResidualReport, Trajectory, residual_gauged, residual_original
from .pde_solver import SolverConfig, solve_gauged

INTERPOLATIONS = ("whole-cell", "cubic")
DECAY_RATIO = 0.5
_SNAP = 1e-9


@dataclass(frozen=True)
class FlowSpec:
    generator: Generator
    eps: float
    interpolation: str = "whole-cell"

    def __post_init__(self):
        if self.interpolation not in INTERPOLATIONS:
            raise ValidationError(f"interpolation must be one of {INTERPOLATIONS}")
        g = self.generator
        if any((g.phi_C, g.phi_D, g.psi_A, g.psi_B)):
            raise ValidationError("flows with nonzero dependent-variable parts are not supported")
        if not math.isfinite(self.eps):
            raise ValidationError("eps must be finite")

    @property
    def time_shift(self) -> float:
        return self.generator.tau * self.eps

    def map_x(self, x, eps: float | None = None) -> np.ndarray:
        """Image of ``x`` under the spatial part of the flow at parameter ``eps``."""
        eps = self.eps if eps is None else eps
        g = self.generator
        x = np.asarray(x, dtype=float)
        if g.xi_c1 == 0:
            return x + g.xi_c2 * eps
        shift = g.xi_c2 / g.xi_c1
        return (x + shift) * math.exp(g.xi_c1 * eps) - shift


def _time_steps(shift: float, dt: float) -> int:
    m = shift / dt
    k = int(round(m))
    if abs(m - k) > _SNAP * max(1.0, abs(m)):
        raise ValidationError(f"time shift {shift:.6g} is not a whole multiple of dt = {dt:.6g}")
    return k


def _resample_x(field_: np.ndarray, grid: GridSpec, pre: np.ndarray, mode: str) -> np.ndarray:
    """Sample ``field_`` (rows = time) at the spatial preimages ``pre``."""
    period = grid.x1 - grid.x0
    if grid.boundary == "periodic":
        pre = grid.x0 + np.mod(pre - grid.x0, period)
    else:
        lo, hi = grid.x0 - _SNAP * grid.dx, grid.x1 + _SNAP * grid.dx
        if np.any(pre < lo) or np.any(pre > hi):
            raise DomainExitError("flow maps sample points outside the spatial domain")
        pre = np.clip(pre, grid.x0, grid.x1)
    if mode == "whole-cell":
        idx = (pre - grid.x0) / grid.dx
        k = np.rint(idx)
        if np.any(np.abs(idx - k) > _SNAP * max(1.0, float(np.max(np.abs(idx))))):
            raise ValidationError("whole-cell mode needs the spatial shift to be a whole number of cells")
        k = k.astype(int)
        if grid.boundary == "periodic":
            k %= grid.nx
        return field_[:, k]
    if grid.boundary == "periodic":
        pad = 3
        ext_x = grid.x0 + grid.dx * np.arange(-pad, grid.nx + pad)
        ext = np.concatenate([field_[:, -pad:], field_, field_[:, :pad]], axis=1)
    else:
        ext_x, ext = grid.x, field_
    return PchipInterpolator(ext_x, ext, axis=1)(pre)


def apply_group(traj: Trajectory, flow: FlowSpec) -> Trajectory:
    """Push ``traj`` forward through the flow; the image is ``u o Phi_{-eps}``."""
    grid = traj.grid
    if flow.eps == 0:
        return traj
    m = _time_steps(flow.time_shift, grid.dt)
    if abs(m) > grid.nt - 2:
        raise DomainExitError(f"time shift of {m} steps leaves fewer than 2 time levels")
    if m >= 0:
        rows = slice(0, grid.nt - m)
        t0 = grid.t0 + m * grid.dt
    else:
        rows = slice(-m, grid.nt)
        t0 = grid.t0
    nt = grid.nt - abs(m)
    new_grid = GridSpec(grid.x0, grid.x1, grid.nx, t0 + (nt - 1) * grid.dt, nt, grid.boundary, t0)
    pre = flow.map_x(grid.x, -flow.eps)
    first = _resample_x(traj.first[rows], grid, pre, flow.interpolation)
    second = _resample_x(traj.second[rows], grid, pre, flow.interpolation)
    return Trajectory(new_grid, traj.frame, np.ascontiguousarray(first), np.ascontiguousarray(second))


def default_evaluator(traj: Trajectory, params: ModelParams) -> ResidualReport:
    if traj.frame == "gauged":
        return residual_gauged(traj, params)
    return residual_original(traj, params)


def invariance_residual(traj: Trajectory, flow: FlowSpec, params: ModelParams,
                        evaluator: Callable[[Trajectory, ModelParams], ResidualReport] | None = None
                        ) -> tuple[float, float]:
    """``(sup, l2)`` residual norms of the flowed trajectory."""
    evaluator = evaluator or default_evaluator
    report = evaluator(apply_group(traj, flow), params)
    return report.sup_total, report.l2_total


# ---------------------------------------------------------------------------
# refinement studies


@dataclass(frozen=True)
class StudySetup:
    """Everything needed to run one row of the symmetry table."""

    name: str
    regime: str
    params: ModelParams
    generator: Generator
    eps: float
    u0: Callable[[np.ndarray], np.ndarray]
    c0: Callable[[np.ndarray], np.ndarray]
    nx: int = 32
    T: float = 1.0
    levels: tuple[int, ...] = (101, 201, 401)
    interpolation: str = "whole-cell"
    note: str = ""


@dataclass(frozen=True)
class StudyRow:
    setup: StudySetup = field(repr=False)
    base: tuple[float, ...]
    flowed: tuple[float, ...]
    expected: bool

    @property
    def ratio(self) -> float:
        return self.flowed[-1] / self.flowed[0] if self.flowed[0] > 0 else 0.0

    @property
    def passed(self) -> bool:
        return self.ratio < DECAY_RATIO

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    @property
    def agrees(self) -> bool:
        return self.passed == self.expected


def run_study(setup: StudySetup, cfg: SolverConfig | None = None) -> StudyRow:
    """Solve the gauged system at each level, flow, and record sup residuals."""
    p = setup.params
    base, flowed = [], []
    for nt in setup.levels:
        grid = GridSpec(nx=setup.nx, T=setup.T, nt=nt)
        traj = solve_gauged(p, grid, setup.u0(grid.x), setup.c0(grid.x), cfg)
        base.append(residual_gauged(traj, p).sup_total)
        flow = FlowSpec(setup.generator, setup.eps, setup.interpolation)
        flowed.append(invariance_residual(traj, flow, p)[0])
    expected = lie.check_determining(setup.generator, p).admitted
    return StudyRow(setup, tuple(base), tuple(flowed), expected)


def _bump(x):
    return 1.0 + 0.2 * np.cos(x)


def _flat(x):
    return np.ones_like(x)


def _half(x):
    return 0.5 * np.ones_like(x)


_REGIME_DEFAULTS = {
    lie.Regime.Generic: dict(alpha=0.8, lam=0.5, chi=0.5, r=1.0, K0=1.0),
    lie.Regime.Untempered: dict(alpha=0.8, lam=0.0, chi=0.5, r=1.0, K0=1.0),
    lie.Regime.NoChemotaxisNoLogistic: dict(alpha=0.8, lam=0.5, chi=0.0, r=0.0),
}


def regime_params(regime) -> ModelParams:
    """Default parameters used by the symmetry table for ``regime``."""
    return ModelParams(**_REGIME_DEFAULTS[lie.parse_regime(regime)])


def standard_studies(regime: str, params: ModelParams | None = None,
                     levels: Sequence[int] = (101, 201, 401), nx: int = 32) -> list[StudySetup]:
    """Rows of the numerical symmetry table for one regime.

    Every row uses a periodic grid on ``[0, 2 pi)`` over ``t in [0, 1]`` and
    a time shift of 0.1 where one applies, so all shifts are whole cells.
    ``params`` must lie in ``regime``; the defaults come from
    :func:`regime_params`.
    """
    reg = lie.parse_regime(regime)
    p = regime_params(reg) if params is None else params
    if reg.value not in p.regimes():
        raise RegimeError(f"parameters are outside the {reg.value} regime "
                          f"({lie.REGIME_DESCRIPTIONS[reg]})",
                          constraint=lie.REGIME_DESCRIPTIONS[reg])
    if len(levels) < 3:
        raise ValidationError("a refinement study needs at least 3 levels")
    dx = 2.0 * math.pi / nx
    eps_x = 4 * dx
    eps_t = 0.1
    common = dict(nx=nx, levels=tuple(levels))
    if reg is lie.Regime.Generic:
        return [
            StudySetup("d/dx", reg.value, p, lie.DX, eps_x, _bump, _flat, **common),
            StudySetup("d/dt", reg.value, p, lie.DT, eps_t, _bump, _flat, **common),
        ]
    if reg is lie.Regime.Untempered:
        a = eps_x / eps_t
        return [
            StudySetup("d/dx", reg.value, p, lie.DX, eps_x, _bump, _flat, **common),
            StudySetup("d/dt", reg.value, p, lie.DT, eps_t, _bump, _flat, **common),
            StudySetup(f"d/dt + {a:.6g} d/dx", reg.value, p, lie.traveling(a), eps_t,
                       _bump, _flat, **common),
        ]
    note = ("linear autonomous gauged system: time translation maps solutions to solutions "
            "although the determining relations reject it")
    return [
        StudySetup("d/dx", reg.value, p, lie.DX, eps_x, _bump, _half, **common),
        StudySetup("X_t", reg.value, p, lie.time_scaling(p.lam), eps_t, _flat, _half,
                   interpolation="cubic", note="x-independent data", **common),
        StudySetup("d/dt", reg.value, p, lie.DT, eps_t, _flat, _half, note=note, **common),
    ]


TABLE_COLUMNS = ("generator", "regime", "eps", "levels", "base_sup", "sup", "ratio",
                 "verdict", "expected", "agrees")


def table_rows(rows: Sequence[StudyRow]) -> list[list[str]]:
    out = []
    for row in rows:
        s = row.setup
        out.append([
            s.name, s.regime, f"{s.eps:.12g}",
            " ".join(str(n) for n in s.levels),
            " ".join(f"{v:.6e}" for v in row.base),
            " ".join(f"{v:.6e}" for v in row.flowed),
            f"{row.ratio:.6f}", row.verdict,
            "admitted" if row.expected else "rejected",
            "yes" if row.agrees else "no",
        ])
    return out


def table_csv(rows: Sequence[StudyRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    writer.writerows(table_rows(rows))
    return buf.getvalue()


def table_text(rows: Sequence[StudyRow]) -> str:
    body = [list(TABLE_COLUMNS)] + table_rows(rows)
    widths = [max(len(r[i]) for r in body) for i in range(len(TABLE_COLUMNS))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in body]
    notes = [f"note ({row.setup.regime}, {row.setup.name}): {row.setup.note}"
             for row in rows if row.setup.note]
    return "\n".join(lines + notes) + "\n"
