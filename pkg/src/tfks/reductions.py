"""Similarity-reduced systems and their solvers.

Six cases are covered, keyed by :class:`CaseTag`:

=====================  ========================  ================================
tag                    regime                    invariant variables
=====================  ========================  ================================
GenericTranslation     any                       ``v = v(t), w = w(t)``
UntemperedTranslation  ``lam = 0``               ``v = v(t), w = w(t)``
SteadyState            ``lam = 0``               ``v = V(x), w = W(x)``
TravelingWave          ``lam = 0``               ``xi = x - a t``
DegenerateLinear       ``chi = r = 0``           ``v = v(t), w = w(t)``
SimilarityScaling      ``chi = r = 0``           ``zeta = x exp(lam t / 2)``
=====================  ========================  ================================
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from . import frac_ops, stencils
from .errors import (ConvergenceError, FormalIdentityRefusal, InstabilityError,
                     NumericalError, RegimeError, ValidationError)
from .frac_ops import TimeSeries
from .model import GridSpec, ModelParams, Trajectory, residual_gauged

TRAVELING_WAVE_CAVEAT = (
    "The Caputo derivative in t of V(x - a t) is non-local in time (history dependent); "
    "replacing it by (-a)^alpha times a fractional derivative in xi is a formal identity "
    "that holds only with careful justification.")
SIMILARITY_CAVEAT = (
    "The Caputo derivative in t of V(zeta(t)) remains non-local in time and does not "
    "automatically become an ordinary differential equation in zeta; only the chemical "
    "equation closes, and only when D_c = 0.")


class CaseTag(enum.Enum):
    GenericTranslation = "I"
    UntemperedTranslation = "II.A"
    SteadyState = "II.B"
    TravelingWave = "II.C"
    DegenerateLinear = "III.A"
    SimilarityScaling = "III.B"


_REQUIREMENTS = {
    CaseTag.GenericTranslation: (),
    CaseTag.UntemperedTranslation: ("lam == 0",),
    CaseTag.SteadyState: ("lam == 0",),
    CaseTag.TravelingWave: ("lam == 0",),
    CaseTag.DegenerateLinear: ("chi == 0", "r == 0"),
    CaseTag.SimilarityScaling: ("chi == 0", "r == 0"),
}


@dataclass(frozen=True)
class ReductionCase:
    tag: CaseTag
    speed: float = 0.0
    formal: bool = False

    def __post_init__(self):
        if isinstance(self.tag, str):
            object.__setattr__(self, "tag", parse_case(self.tag))
        if self.speed < 0:
            raise ValidationError("traveling-wave speed must be >= 0")

    @property
    def required_regime(self) -> tuple[str, ...]:
        return _REQUIREMENTS[self.tag]

    def check(self, params: ModelParams) -> None:
        for constraint in self.required_regime:
            name = constraint.split()[0]
            if getattr(params, name) != 0.0:
                raise RegimeError(
                    f"case {self.tag.value} ({self.tag.name}) requires {constraint}, "
                    f"got {name} = {getattr(params, name)}", constraint=constraint)


def parse_case(name: str) -> CaseTag:
    for tag in CaseTag:
        if name in (tag.name, tag.value):
            return tag
    raise ValidationError(f"unknown reduction case {name!r}")


@dataclass(frozen=True)
class ReducedSystem:
    """Description of a reduced system.

    Equality compares the mathematical content (variables, equations,
    coefficients, caveats); the originating case and the attached numerical
    helpers are ignored.
    """

    case: CaseTag = field(compare=False)
    invariant: str
    dependent: tuple[str, str]
    equations: tuple[str, str]
    coefficients: tuple[tuple[str, float], ...]
    caveats: tuple[str, ...] = ()
    evaluator: Callable | None = field(default=None, compare=False, repr=False)
    solver: Callable | None = field(default=None, compare=False, repr=False)

    def to_text(self) -> str:
        lines = [f"case: {self.case.value} ({self.case.name})",
                 f"invariant: {self.invariant}",
                 f"dependent: {', '.join(self.dependent)}"]
        lines += [f"eq{i + 1}: {eq}" for i, eq in enumerate(self.equations)]
        lines += [f"coef.{name} = {value:.17g}" for name, value in self.coefficients]
        lines += [f"caveat: {c}" for c in self.caveats]
        return "\n".join(lines) + "\n"


def _num(x: float) -> str:
    return format(x, ".12g")


def _time_system(params: ModelParams, case: CaseTag) -> ReducedSystem:
    rate = params.logistic_rate
    tempering = f" exp(-{_num(params.lam)} t)" if params.lam != 0 else ""
    eq1 = f"D_t^{_num(params.alpha)} v = {_num(params.r)} v - {_num(rate)}{tempering} v^2"
    eq2 = f"{_num(params.tau_c)} w' = {_num(params.gauged_decay)} w + v"
    coefs = (("alpha", params.alpha), ("r", params.r), ("r_over_K0", rate),
             ("lam", params.lam), ("tau_c", params.tau_c), ("w_rate", params.gauged_decay))
    return ReducedSystem(case, "t", ("v(t)", "w(t)"), (eq1, eq2), coefs)


# ---------------------------------------------------------------------------
# (I) / (II.A) / (III.A): time-only reductions


def _abm_weights(n: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(n + 2, dtype=float)
    pa = k ** alpha
    pa1 = k ** (alpha + 1.0)
    pred = pa[1:] - pa[:-1]  # pred[m] = (m+1)^a - m^a
    # corr[m] = (m+2)^{a+1} - 2 (m+1)^{a+1} + m^{a+1}
    corr = pa1[2:] - 2.0 * pa1[1:-1] + pa1[:-2]
    return pred, corr


def fractional_abm(rhs: Callable[[float, float], float], y0: float, alpha: float,
                   T: float, dt: float, slope0: float = 0.0,
                   blowup: float = math.inf) -> TimeSeries:
    """Adams-Bashforth-Moulton predictor-corrector for ``D^alpha y = rhs(t, y)``.

    Full-memory, one corrector sweep. ``slope0`` is ``y'(0)`` and is only
    used when ``alpha > 1``.
    """
    if not 0.0 < alpha < 2.0:
        raise ValidationError(f"alpha must lie in (0, 2), got {alpha}")
    if not dt > 0 or not T > 0:
        raise ValidationError("need dt > 0 and T > 0")
    n_steps = int(round(T / dt))
    if n_steps < 1 or abs(n_steps * dt - T) > 1e-9 * T:
        raise ValidationError(f"T = {T} is not an integer multiple of dt = {dt}")
    t = dt * np.arange(n_steps + 1)
    start = y0 + (slope0 * t if alpha > 1.0 else 0.0 * t)
    pred_w, corr_w = _abm_weights(n_steps + 1, alpha)
    c_pred = dt ** alpha / math.gamma(alpha + 1.0)
    c_corr = dt ** alpha / math.gamma(alpha + 2.0)

    y = np.empty(n_steps + 1)
    f = np.empty(n_steps + 1)
    y[0] = y0
    f[0] = rhs(t[0], y0)
    for n in range(n_steps):
        # predictor: sum_j b_{j,n+1} f_j with b = (n+1-j)^a - (n-j)^a
        p = start[n + 1] + c_pred * (pred_w[n::-1] @ f[:n + 1])
        # corrector weights: a_0 = n^{a+1} - (n-a)(n+1)^a, a_j = corr[n-j]
        a0 = n ** (alpha + 1.0) - (n - alpha) * (n + 1.0) ** alpha
        hist = a0 * f[0]
        if n > 0:
            hist += corr_w[n - 1::-1] @ f[1:n + 1]
        y[n + 1] = start[n + 1] + c_corr * (rhs(t[n + 1], p) + hist)
        f[n + 1] = rhs(t[n + 1], y[n + 1])
        if not math.isfinite(y[n + 1]) or abs(y[n + 1]) > blowup:
            raise InstabilityError(f"solution exceeded {blowup:.3e} at t = {t[n + 1]:.6g}",
                                   step=n + 1, norm=abs(y[n + 1]))
    return TimeSeries(0.0, dt, y)


def solve_fractional_logistic(params: ModelParams, v0: float, T: float, dt: float,
                              slope0: float = 0.0) -> TimeSeries:
    """Solve ``D^alpha v = r v - (r/K0) exp(-lam t) v^2`` from ``v(0) = v0``."""
    r, rate, lam = params.r, params.logistic_rate, params.lam

    def rhs(t, v):
        return r * v - rate * math.exp(-lam * t) * v * v

    limit = 1e12 * (params.K0 if math.isfinite(params.K0) else max(abs(v0), 1.0))
    return fractional_abm(rhs, v0, params.alpha, T, dt, slope0=slope0, blowup=limit)


def _phi12(z: float) -> tuple[float, float]:
    """``(e^z - 1)/z`` and ``(e^z - 1 - z)/z^2``, with series near 0."""
    if abs(z) < 1e-4:
        return 1.0 + z / 2 + z * z / 6, 0.5 + z / 6 + z * z / 24
    e = math.expm1(z)
    return e / z, (e - z) / (z * z)


def solve_w_ode(v: TimeSeries, params: ModelParams, w0: float) -> TimeSeries:
    """Integrate ``tau_c w' = (tau_c lam - kappa) w + v`` on the grid of ``v``.

    Each step uses the exact integrating factor and integrates the linear
    interpolant of ``v`` exactly; this is second order, reduces to the
    trapezoid rule when the rate vanishes, and keeps equilibria fixed.
    """
    if not params.tau_c > 0:
        raise ValidationError("solve_w_ode needs tau_c > 0")
    mu = params.gauged_decay / params.tau_c
    h = v.dt
    grow = math.exp(mu * h)
    phi1, phi2 = _phi12(mu * h)
    vals = v.values
    w = np.empty_like(vals)
    w[0] = w0
    scale = h / params.tau_c
    for n in range(len(vals) - 1):
        w[n + 1] = grow * w[n] + scale * (phi1 * vals[n] + phi2 * (vals[n + 1] - vals[n]))
    return TimeSeries(v.t0, v.dt, w)


# ---------------------------------------------------------------------------
# (III.A) exact solution


@dataclass(frozen=True)
class ExactLinearSolution:
    V0: float
    A: float
    params: ModelParams

    def __post_init__(self):
        p = self.params
        if p.chi != 0 or p.r != 0:
            raise RegimeError("the exact solution needs chi = 0 and r = 0", constraint="chi == 0, r == 0")
        if p.tau_c * p.lam == p.kappa:
            raise RegimeError("tau_c*lam == kappa is degenerate for the exact solution",
                              constraint="tau_c*lam != kappa")


@dataclass(frozen=True)
class ExactFields:
    """Closed-form ``u(t, x)``, ``c(t, x)`` and their gauged counterparts."""

    sol: ExactLinearSolution

    def u(self, t, x=0.0):
        p = self.sol.params
        return self.sol.V0 * np.exp(-p.lam * np.asarray(t, dtype=float)) + 0.0 * np.asarray(x, dtype=float)

    def c(self, t, x=0.0):
        p = self.sol.params
        t = np.asarray(t, dtype=float)
        return (self.sol.A * np.exp(-(p.kappa / p.tau_c) * t)
                - self.sol.V0 * np.exp(-p.lam * t) / (p.tau_c * p.lam - p.kappa)
                + 0.0 * np.asarray(x, dtype=float))

    def v(self, t, x=0.0):
        return self.sol.V0 + 0.0 * (np.asarray(t, dtype=float) + np.asarray(x, dtype=float))

    def w(self, t, x=0.0):
        p = self.sol.params
        t = np.asarray(t, dtype=float)
        return (self.sol.A * np.exp((p.lam - p.kappa / p.tau_c) * t)
                - self.sol.V0 / (p.tau_c * p.lam - p.kappa)
                + 0.0 * np.asarray(x, dtype=float))

    def trajectory(self, grid: GridSpec, frame: str = "original") -> Trajectory:
        from .model import sample_fields
        if frame == "original":
            return sample_fields(grid, self.u, self.c, "original")
        return sample_fields(grid, self.v, self.w, "gauged")


def exact_linear_solution(sol: ExactLinearSolution) -> ExactFields:
    """``u = V0 e^{-lam t}``, ``c = A e^{-(kappa/tau_c) t} - V0 e^{-lam t}/(tau_c lam - kappa)``."""
    return ExactFields(sol)


# ---------------------------------------------------------------------------
# (II.B) steady states and the formal traveling-wave system


@dataclass
class NewtonResult:
    V: np.ndarray
    W: np.ndarray
    iterations: int
    residual_history: list[float]

    @property
    def residual(self) -> float:
        return self.residual_history[-1]


class SpatialSystem:
    """Centered-difference discretization of the profile equations::

        0 = D V'' - chi (V' W' + V W'') + r V - (r/K0) V^2 + a V'
        0 = D_c W'' - kappa W + V + tau_c a W'

    ``a = 0`` is the steady-state system; ``a > 0`` is the traveling-wave
    system with ``alpha = 1``.
    """

    def __init__(self, params: ModelParams, n: int, dx: float, boundary: str, speed: float = 0.0):
        if boundary not in ("neumann", "periodic"):
            raise ValidationError("profile systems support neumann or periodic boundaries")
        self.params = params
        self.n, self.dx, self.boundary, self.speed = n, dx, boundary, speed
        self.Dx = stencils.d1_matrix(n, dx, boundary)
        self.Dxx = stencils.d2_matrix(n, dx, boundary)

    def residual(self, V: np.ndarray, W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p, a = self.params, self.speed
        Vx, Vxx = self.Dx @ V, self.Dxx @ V
        Wx, Wxx = self.Dx @ W, self.Dxx @ W
        f1 = (p.D * Vxx - p.chi * (Vx * Wx + V * Wxx) + p.r * V
              - p.logistic_rate * V * V + a * Vx)
        f2 = p.D_c * Wxx - p.kappa * W + V + p.tau_c * a * Wx
        return f1, f2

    def jacobian(self, V: np.ndarray, W: np.ndarray) -> sp.csr_matrix:
        p, a = self.params, self.speed
        diag = sp.diags
        Vx = self.Dx @ V
        Wx, Wxx = self.Dx @ W, self.Dxx @ W
        eye = sp.identity(self.n, format="csr")
        j11 = (p.D * self.Dxx - p.chi * (diag(Wx) @ self.Dx + diag(Wxx))
               + diag(p.r - 2.0 * p.logistic_rate * V) + a * self.Dx)
        j12 = -p.chi * (diag(Vx) @ self.Dx + diag(V) @ self.Dxx)
        j21 = eye
        j22 = p.D_c * self.Dxx - p.kappa * eye + p.tau_c * a * self.Dx
        return sp.bmat([[j11, j12], [j21, j22]], format="csr")

    def newton(self, V: np.ndarray, W: np.ndarray, tol: float = 1e-10,
               max_iter: int = 20) -> NewtonResult:
        V = np.array(V, dtype=float)
        W = np.array(W, dtype=float)
        history = []
        for it in range(max_iter + 1):
            f1, f2 = self.residual(V, W)
            res = float(max(np.max(np.abs(f1)), np.max(np.abs(f2))))
            history.append(res)
            if not math.isfinite(res):
                raise NumericalError(f"Newton residual became non-finite at iteration {it}")
            if res < tol:
                return NewtonResult(V, W, it, history)
            if it == max_iter:
                break
            jac = self.jacobian(V, W).tocsc()
            with np.errstate(all="ignore"):
                step = spsolve(jac, -np.concatenate([f1, f2]))
            if not np.all(np.isfinite(step)):
                raise NumericalError("singular Jacobian in Newton iteration")
            V = V + step[:self.n]
            W = W + step[self.n:]
        raise ConvergenceError(f"Newton did not converge in {max_iter} iterations "
                               f"(residual {history[-1]:.3e})", iterations=max_iter,
                               residual=history[-1])


def solve_steady_state(params: ModelParams, grid: GridSpec, guessV, guessW,
                       tol: float = 1e-10, max_iter: int = 20) -> NewtonResult:
    """Newton iteration for the steady-state profile system (requires ``lam = 0``)."""
    ReductionCase(CaseTag.SteadyState).check(params)
    system = SpatialSystem(params, grid.nx, grid.dx, grid.boundary)
    return system.newton(guessV, guessW, tol=tol, max_iter=max_iter)


def traveling_wave_residual(params: ModelParams, speed: float, V: Callable, W: Callable,
                            xi: np.ndarray, T: float, nt: int, h: float = 1e-3
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Residual of the exact traveling-wave reduction for candidate profiles.

    ``v(t, x) = V(x - a t)`` is sampled along each characteristic over
    ``[0, T]`` and its Caputo derivative in ``t`` is computed with the L1
    scheme; profile derivatives use centered differences with step ``h``.
    Returns arrays of shape ``(nt, len(xi))`` indexed by ``(t, x)``; row 0
    of the first equation is zero.
    """
    p, a = params, speed
    x = np.asarray(xi, dtype=float)[None, :]
    t = np.linspace(0.0, T, nt)[:, None]
    s = x - a * t
    dt = T / (nt - 1)
    Vs, Ws = V(s), W(s)
    V1 = (V(s + h) - V(s - h)) / (2 * h)
    V2 = (V(s + h) - 2 * Vs + V(s - h)) / (h * h)
    W1 = (W(s + h) - W(s - h)) / (2 * h)
    W2 = (W(s + h) - 2 * Ws + W(s - h)) / (h * h)
    lhs1 = frac_ops.caputo_l1_array(Vs, dt, p.alpha)
    rhs1 = p.D * V2 - p.chi * (V1 * W1 + Vs * W2) + p.r * Vs - p.logistic_rate * Vs * Vs
    eq1 = lhs1 - rhs1
    eq1[0] = 0.0
    eq2 = -p.tau_c * a * W1 - (-p.kappa * Ws + p.D_c * W2 + Vs)
    return eq1, eq2


def build_traveling_wave(params: ModelParams, speed: float, formal: bool = False) -> ReducedSystem:
    """Traveling-wave reduction in ``xi = x - a t`` (requires ``lam = 0``).

    With ``formal=False`` the record carries an evaluator of the exact,
    history-dependent reduced residual. With ``formal=True`` it describes
    the formal profile system; a classical solver is attached only when
    ``alpha == 1``, otherwise the solver raises
    :class:`~tfks.errors.FormalIdentityRefusal`.
    """
    case = ReductionCase(CaseTag.TravelingWave, speed=speed, formal=formal)
    case.check(params)
    p, a = params, speed
    rate = p.logistic_rate
    coefs = (("alpha", p.alpha), ("speed", a), ("D", p.D), ("chi", p.chi), ("r", p.r),
             ("r_over_K0", rate), ("kappa", p.kappa), ("D_c", p.D_c), ("tau_c", p.tau_c))
    rhs1 = f"{_num(p.D)} V'' - {_num(p.chi)} (V' W' + V W'') + {_num(p.r)} V - {_num(rate)} V^2"
    eq2 = (f"-{_num(p.tau_c * a)} W' = -{_num(p.kappa)} W + {_num(p.D_c)} W'' + V")

    def evaluator(V, W, xi, T, nt, h=1e-3):
        return traveling_wave_residual(p, a, V, W, xi, T, nt, h)

    if not formal:
        eq1 = f"D_t^{_num(p.alpha)} [V(x - {_num(a)} t)] = {rhs1}"
        return ReducedSystem(CaseTag.TravelingWave, "xi = x - a t", ("V(xi)", "W(xi)"),
                             (eq1, eq2), coefs, (TRAVELING_WAVE_CAVEAT,), evaluator=evaluator)

    eq1 = f"(-{_num(a)})^{_num(p.alpha)} D_xi^{_num(p.alpha)} V = {rhs1}"

    def solver(grid: GridSpec, guessV, guessW, tol=1e-10, max_iter=20) -> NewtonResult:
        if p.alpha != 1.0:
            raise FormalIdentityRefusal(
                f"formal identity not validated: refusing to solve the alpha = {p.alpha} "
                f"traveling-wave system. {TRAVELING_WAVE_CAVEAT}")
        system = SpatialSystem(p, grid.nx, grid.dx, grid.boundary, speed=a)
        return system.newton(guessV, guessW, tol=tol, max_iter=max_iter)

    def formal_residual(V: np.ndarray, W: np.ndarray, dx: float, boundary: str = "periodic"):
        """Residual of the formal system on sampled profiles.

        For ``alpha == 1`` this is the classical profile residual. Otherwise
        the fractional term is a left-sided L1 Caputo derivative in ``xi``
        scaled by the principal value of ``(-a)^alpha``, so the result may be
        complex.
        """
        if p.alpha == 1.0:
            return SpatialSystem(p, len(V), dx, boundary, speed=a).residual(V, W)
        base = SpatialSystem(p.with_(alpha=1.0), len(V), dx, boundary, speed=0.0)
        f1, f2 = base.residual(V, W)
        frac = complex(-a) ** p.alpha * frac_ops.caputo_l1_array(V, dx, p.alpha)
        f2 = f2 + p.tau_c * a * (base.Dx @ W)
        return frac - f1, f2

    return ReducedSystem(CaseTag.TravelingWave, "xi = x - a t", ("V(xi)", "W(xi)"),
                         (eq1, eq2), coefs + (("formal", 1.0),), (TRAVELING_WAVE_CAVEAT,),
                         evaluator=formal_residual, solver=solver)


# ---------------------------------------------------------------------------
# (III.B) similarity scaling


def _similarity_rhs(zeta: float, W: float, V: float, params: ModelParams) -> float:
    p = params
    return (p.gauged_decay * W + V) / (0.5 * p.tau_c * p.lam * zeta)


def solve_similarity_w(V: Callable[[float], float], params: ModelParams,
                       zeta: np.ndarray, h0: float | None = None) -> np.ndarray:
    """Bounded solution of ``tau_c (lam/2) zeta W' = (tau_c lam - kappa) W + V`` (``D_c = 0``).

    Starts at ``zeta = 0`` from ``W(0) = -V(0)/(tau_c lam - kappa)`` with a
    short Taylor step (derivatives ``W^(n)(0) = q V^(n)(0) / (n - p)``),
    then runs classical RK4 outward in both directions. Steps are
    subdivided so that ``h |p| / zeta`` stays below 0.1 near the singular
    point. ``zeta`` must be sorted.
    """
    p = params
    if p.chi != 0 or p.r != 0 or p.D_c != 0:
        raise RegimeError("the closed similarity equation needs chi = r = D_c = 0",
                          constraint="chi == 0, r == 0, D_c == 0")
    if not p.lam > 0:
        raise RegimeError("the similarity reduction needs lam > 0", constraint="lam > 0")
    if p.tau_c * p.lam == p.kappa:
        raise RegimeError("tau_c*lam == kappa is degenerate", constraint="tau_c*lam != kappa")
    zeta = np.asarray(zeta, dtype=float)
    if zeta.ndim != 1 or np.any(np.diff(zeta) <= 0):
        raise ValidationError("zeta must be a strictly increasing 1-D array")
    try:
        with np.errstate(divide="raise", invalid="raise"):
            v0 = float(V(0.0))
    except (ArithmeticError, FloatingPointError, ValueError):
        v0 = math.nan
    if not math.isfinite(v0):
        raise ValidationError("V must be defined at zeta = 0")

    expo = p.gauged_decay / (0.5 * p.tau_c * p.lam)  # ODE: zeta W' = expo W + q V
    q = 1.0 / (0.5 * p.tau_c * p.lam)
    w_origin = -v0 / p.gauged_decay
    span = float(max(abs(zeta[0]), abs(zeta[-1]), 1.0))
    hd = 1e-3 * span
    vd1 = (V(hd) - V(-hd)) / (2 * hd)
    vd2 = (V(hd) - 2 * v0 + V(-hd)) / (hd * hd)

    def taylor(z: float) -> float:
        out = w_origin
        for order, vd in ((1, vd1), (2, vd2)):
            if order == expo:
                raise NumericalError("resonant exponent: the bounded solution has log terms")
            out += q * vd / (order - expo) * z ** order / math.factorial(order)
        return out

    def f(z, w):
        return (expo * w + q * V(z)) / z

    def integrate(targets: np.ndarray, direction: float) -> np.ndarray:
        out = np.empty_like(targets)
        z0 = direction * (h0 if h0 is not None else 1e-6 * span)
        w = taylor(z0)
        z = z0
        for idx, target in enumerate(targets):
            if target == 0.0:
                out[idx] = w_origin
                continue
            while direction * (target - z) > 0:
                step = min(abs(target - z), 0.1 * abs(z) / max(abs(expo), 1.0), 2e-3 * span)
                hstep = direction * step
                k1 = f(z, w)
                k2 = f(z + hstep / 2, w + hstep * k1 / 2)
                k3 = f(z + hstep / 2, w + hstep * k2 / 2)
                k4 = f(z + hstep, w + hstep * k3)
                w = w + hstep * (k1 + 2 * k2 + 2 * k3 + k4) / 6
                z = z + hstep
                if direction * (z - target) > -1e-15 * span:
                    z = target
            out[idx] = w
        return out

    result = np.empty_like(zeta)
    pos = zeta >= 0
    result[pos] = integrate(zeta[pos], 1.0)
    neg = ~pos
    if np.any(neg):
        result[neg] = integrate(zeta[neg][::-1], -1.0)[::-1]
    return result


# ---------------------------------------------------------------------------
# dispatch


def reduce(case: ReductionCase | CaseTag | str, params: ModelParams) -> ReducedSystem:
    """Build the reduced-system record for ``case`` after checking its regime."""
    if not isinstance(case, ReductionCase):
        case = ReductionCase(case if isinstance(case, CaseTag) else parse_case(case))
    case.check(params)
    p = params
    tag = case.tag
    if tag in (CaseTag.GenericTranslation, CaseTag.UntemperedTranslation):
        return _time_system(p, tag)
    if tag is CaseTag.DegenerateLinear:
        eq1 = f"D_t^{_num(p.alpha)} v = 0"
        eq2 = f"{_num(p.tau_c)} w' = {_num(p.gauged_decay)} w + v"
        coefs = (("alpha", p.alpha), ("lam", p.lam), ("tau_c", p.tau_c),
                 ("w_rate", p.gauged_decay))
        return ReducedSystem(tag, "t", ("v(t)", "w(t)"), (eq1, eq2), coefs)
    if tag is CaseTag.SteadyState:
        rate = p.logistic_rate
        eq1 = f"0 = {_num(p.D)} V'' - {_num(p.chi)} (V' W' + V W'') + {_num(p.r)} V - {_num(rate)} V^2"
        eq2 = f"0 = {_num(p.D_c)} W'' - {_num(p.kappa)} W + V"
        coefs = (("D", p.D), ("chi", p.chi), ("r", p.r), ("r_over_K0", rate),
                 ("D_c", p.D_c), ("kappa", p.kappa))
        return ReducedSystem(tag, "x", ("V(x)", "W(x)"), (eq1, eq2), coefs)
    if tag is CaseTag.TravelingWave:
        return build_traveling_wave(p, case.speed, case.formal)
    # SimilarityScaling
    eq1 = f"D_t^{_num(p.alpha)} [V(zeta(t))] = {_num(p.D)} V''(zeta)"
    if p.D_c == 0:
        eq2 = f"{_num(0.5 * p.tau_c * p.lam)} zeta W' = {_num(p.gauged_decay)} W + V"
    else:
        eq2 = (f"{_num(0.5 * p.tau_c * p.lam)} zeta W' = {_num(p.gauged_decay)} W "
               f"+ {_num(p.D_c)} exp({_num(p.lam)} t) W'' + V   (not closed in zeta)")
    coefs = (("alpha", p.alpha), ("lam", p.lam), ("D", p.D), ("D_c", p.D_c),
             ("tau_c", p.tau_c), ("w_rate", p.gauged_decay))
    return ReducedSystem(tag, "zeta = x exp(lam t / 2)", ("V(zeta)", "W(zeta)"),
                         (eq1, eq2), coefs, (SIMILARITY_CAVEAT,))


def reconstructed_residual(params: ModelParams, grid: GridSpec, V: Callable, W: Callable,
                           speed: float) -> np.ndarray:
    """Gauged residual of ``v = V(x - a t)``, ``w = W(x - a t)`` sampled on ``grid``."""
    t = grid.t[:, None]
    x = grid.x[None, :]
    traj = Trajectory(grid, "gauged", V(x - speed * t), W(x - speed * t))
    return residual_gauged(traj, params).eq1
