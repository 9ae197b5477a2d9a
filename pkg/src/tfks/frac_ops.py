r"""Discrete fractional operators on uniform grids.

* :func:`caputo_l1` -- L1 scheme for the Caputo derivative, ``0 < alpha < 2``.
* :func:`tempered_caputo` -- tempered Caputo derivative, defined as
  ``exp(-lam t) * caputo_l1(exp(lam t) f)``.
* :func:`tempered_laplacian_1d` -- the 1-D tempered fractional Laplacian,
  stored with the diffusive (negative-definite) sign.
* :func:`mittag_leffler` -- one-parameter Mittag-Leffler function, used as
  an analytic oracle for linear Caputo ODEs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import special

from .errors import ValidationError

#: Toeplitz products are used for 2-D histories up to this many time levels;
#: beyond it the history is convolved column by column to bound memory.
_TOEPLITZ_MAX = 2048


@dataclass(frozen=True)
class TimeSeries:
    """Samples ``values[k] = f(t0 + k*dt)``."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if vals.ndim != 1 or vals.size < 2:
            raise ValidationError("a TimeSeries needs a 1-D array of at least 2 samples")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("TimeSeries values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    def __len__(self) -> int:
        return self.values.size


def _check_order(alpha: float) -> None:
    if not 0.0 < alpha < 2.0:
        raise ValidationError(f"fractional order must lie in (0, 2), got {alpha}")


def l1_weights(n: int, alpha: float) -> np.ndarray:
    """L1 weights ``b_k = (k+1)^(1-alpha) - k^(1-alpha)`` for ``k = 0..n-1``."""
    k = np.arange(n + 1, dtype=float)
    p = k ** (1.0 - alpha)
    p[0] = 0.0  # numpy gives 0**0 == 1; alpha == 1 must yield b = (1, 0, 0, ...)
    return p[1:] - p[:-1]


def _l1_history(diffs: np.ndarray, alpha: float) -> np.ndarray:
    """``out[n-1] = sum_{j=1}^{n} b_{n-j} d_j`` for the difference array ``diffs``.

    ``diffs`` has the time axis first (``d_1 .. d_N``); extra axes are
    carried along.
    """
    n = diffs.shape[0]
    b = l1_weights(n, alpha)
    if diffs.ndim == 1:
        return np.convolve(b, diffs)[:n]
    flat = diffs.reshape(n, -1)
    if n <= _TOEPLITZ_MAX:
        idx = np.arange(n)
        lag = idx[:, None] - idx[None, :]
        toeplitz = np.where(lag >= 0, b[np.clip(lag, 0, None)], 0.0)
        out = toeplitz @ flat
    else:
        out = np.empty_like(flat)
        for col in range(flat.shape[1]):
            out[:, col] = np.convolve(b, flat[:, col])[:n]
    return out.reshape(diffs.shape)


def caputo_l1_array(values: np.ndarray, dt: float, alpha: float) -> np.ndarray:
    """L1 Caputo derivative along axis 0 of ``values``.

    Node 0 is set to zero. For ``1 < alpha < 2`` the derivative is taken as
    the order ``alpha - 1`` L1 derivative of the centered first derivative.
    ``alpha == 1`` gives the backward difference exactly.
    """
    _check_order(alpha)
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n < 2 or (alpha > 1.0 and n < 3):
        raise ValidationError(f"too few samples ({n}) for Caputo order {alpha}")
    if alpha > 1.0:
        slope = np.gradient(values, dt, axis=0, edge_order=2)
        return caputo_l1_array(slope, dt, alpha - 1.0)
    out = np.zeros_like(values)
    diffs = np.diff(values, axis=0)
    if alpha == 1.0:
        out[1:] = diffs / dt
        return out
    scale = dt ** (-alpha) / math.gamma(2.0 - alpha)
    out[1:] = scale * _l1_history(diffs, alpha)
    return out


def caputo_l1(f: TimeSeries, alpha: float) -> TimeSeries:
    """L1 approximation of the Caputo derivative with lower terminal ``f.t0``."""
    return TimeSeries(f.t0, f.dt, caputo_l1_array(f.values, f.dt, alpha))


def tempered_caputo_array(values: np.ndarray, times: np.ndarray, dt: float,
                          alpha: float, lam: float) -> np.ndarray:
    """Tempered Caputo derivative along axis 0; ``times`` are absolute node times."""
    if lam < 0:
        raise ValidationError(f"tempering rate must be >= 0, got {lam}")
    values = np.asarray(values, dtype=float)
    shape = (-1,) + (1,) * (values.ndim - 1)
    grow = np.exp(lam * np.asarray(times, dtype=float)).reshape(shape)
    return (1.0 / grow) * caputo_l1_array(grow * values, dt, alpha)


def tempered_caputo(f: TimeSeries, alpha: float, lam: float) -> TimeSeries:
    """``exp(-lam t) * caputo_l1(exp(lam t) * f)`` evaluated node by node."""
    out = tempered_caputo_array(f.values, f.times, f.dt, alpha, lam)
    return TimeSeries(f.t0, f.dt, out)


# ---------------------------------------------------------------------------
# tempered fractional Laplacian


def fractional_laplacian_constant(alpha: float) -> float:
    """Normalization making the untempered operator have symbol ``-|k|^alpha``."""
    return (2.0 ** alpha * math.gamma((1.0 + alpha) / 2.0)
            / (math.sqrt(math.pi) * abs(math.gamma(-alpha / 2.0))))


@dataclass(frozen=True)
class LaplacianSpec:
    """Parameters of the 1-D tempered fractional Laplacian.

    ``sign_convention`` is fixed to ``"diffusive"``: the operator returned is
    ``-C * integral (u(x) - u(y)) exp(-lam|x-y|) / |x-y|^(1+alpha) dy``.
    """

    alpha: float
    lam: float = 0.0
    normalization: float | None = None
    truncation_radius: float = 1.0e3
    sign_convention: str = field(default="diffusive", init=False)

    def __post_init__(self):
        _check_order(self.alpha)
        if self.lam < 0:
            raise ValidationError(f"spatial tempering rate must be >= 0, got {self.lam}")
        if self.normalization is None:
            object.__setattr__(self, "normalization", fractional_laplacian_constant(self.alpha))
        if not self.normalization > 0:
            raise ValidationError("normalization constant must be positive")
        if not self.truncation_radius > 0:
            raise ValidationError("truncation_radius must be positive")


def _near_field_moment(alpha: float, lam: float, a: float) -> float:
    """``integral_0^a h^(1-alpha) exp(-lam h) dh``."""
    s = 2.0 - alpha
    if lam == 0.0:
        return a ** s / s
    return lam ** (-s) * special.gamma(s) * special.gammainc(s, lam * a)


def _tail_mass(alpha: float, lam: float, radius: float) -> float:
    """``integral_R^inf h^(-1-alpha) exp(-lam h) dh``."""
    if lam == 0.0:
        return radius ** (-alpha) / alpha
    x = lam * radius
    if x > 700.0:
        return 0.0
    # upper incomplete gamma with negative first argument
    return lam ** alpha * float(mpmath.gammainc(-alpha, x))


def tempered_laplacian_1d(u: np.ndarray, dx: float, spec: LaplacianSpec,
                          extension: str = "periodic") -> np.ndarray:
    """Apply the tempered fractional Laplacian along the last axis of ``u``.

    ``extension`` is ``"periodic"`` (the samples are one period) or
    ``"zero"`` (``u`` vanishes outside the sampled interval).

    The near field ``|x-y| <= 2 dx`` uses the second-order Taylor remainder
    with a centered ``u''`` and an exact moment of the kernel. The far field
    is a trapezoid sum over grid offsets up to the first offset where the
    tempering factor drops below 1e-14 or ``truncation_radius`` is passed;
    beyond that the ``u(x)`` part of the integrand is added in closed form,
    and for periodic data the ``u(y)`` part is replaced by the period mean.
    """
    if extension not in ("periodic", "zero"):
        raise ValidationError(f"unknown extension {extension!r}")
    if not dx > 0:
        raise ValidationError("grid spacing must be positive")
    if spec.truncation_radius < 2.0 * dx:
        raise ValidationError("truncation_radius must be at least 2*dx")
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    alpha, lam, cnorm = spec.alpha, spec.lam, spec.normalization

    j_max = int(math.floor(spec.truncation_radius / dx + 1e-12))
    if lam > 0:
        j_max = min(j_max, int(math.ceil(-math.log(1e-14) / (lam * dx))))
    j_max = max(j_max, 2)
    j = np.arange(2, j_max + 1, dtype=float)
    h = j * dx
    kern = np.exp(-lam * h) / h ** (1.0 + alpha)
    w = np.full_like(h, dx)
    w[0] *= 0.5
    w[-1] *= 0.5
    wk = w * kern
    radius = j_max * dx
    tail = _tail_mass(alpha, lam, radius)
    total = 2.0 * (wk.sum() + tail)

    if extension == "periodic":
        upp = np.roll(u, -1, axis=-1) - 2.0 * u + np.roll(u, 1, axis=-1)
        # fold offsets by residue modulo the period
        folded = np.bincount(np.arange(2, j_max + 1) % n, weights=wk, minlength=n)
        neigh = np.zeros_like(u)
        for m in np.nonzero(folded)[0]:
            neigh += folded[m] * (np.roll(u, -m, axis=-1) + np.roll(u, m, axis=-1))
        # past the radius a periodic u(y) averages to its mean
        neigh += 2.0 * tail * u.mean(axis=-1, keepdims=True)
    else:
        padded = np.concatenate([np.zeros(u.shape[:-1] + (1,)), u,
                                 np.zeros(u.shape[:-1] + (1,))], axis=-1)
        upp = padded[..., 2:] - 2.0 * u + padded[..., :-2]
        neigh = np.zeros_like(u)
        for m in range(2, min(j_max, n - 1) + 1):
            wm = wk[m - 2]
            neigh[..., :-m] += wm * u[..., m:]
            neigh[..., m:] += wm * u[..., :-m]
    upp = upp / (dx * dx)
    near = upp * _near_field_moment(alpha, lam, 2.0 * dx)
    far = -(total * u - neigh)
    return cnorm * (near + far)


# ---------------------------------------------------------------------------
# Mittag-Leffler function

#: Declared evaluation window: ``|z| <= ML_ZMAX`` and ``|z|^(1/alpha) <= ML_GROWTH_MAX``.
ML_ZMAX = 50.0
ML_GROWTH_MAX = 700.0


def mittag_leffler(alpha: float, z: float) -> float:
    """One-parameter Mittag-Leffler function ``E_alpha(z)`` for real ``z``.

    The power series is summed in extended precision, with the working
    precision raised to cover the cancellation between its largest terms,
    so the result is accurate to ~1e-12 relative inside the window.
    """
    _check_order(alpha)
    z = float(z)
    if not math.isfinite(z) or abs(z) > ML_ZMAX:
        raise ValidationError(f"|z| must be <= {ML_ZMAX}, got {z}")
    if z == 0.0:
        return 1.0
    growth = abs(z) ** (1.0 / alpha)
    if growth > ML_GROWTH_MAX:
        raise ValidationError(
            f"E_{alpha}({z}) lies outside the evaluation window (|z|^(1/alpha) = {growth:.1f} > {ML_GROWTH_MAX})")
    # largest term ~ exp(|z|^(1/alpha)); cancel it for negative z
    digits = 20 + int(growth / math.log(10.0)) + 5
    with mpmath.workdps(digits):
        zz = mpmath.mpf(z)
        a = mpmath.mpf(alpha)
        total = mpmath.mpf(0)
        tol = mpmath.mpf(10) ** (-digits + 2)
        n = 0
        peak = int(growth / alpha) + 10
        while True:
            term = zz ** n * mpmath.rgamma(a * n + 1)
            total += term
            n += 1
            if n > peak and abs(term) < tol * max(abs(total), mpmath.mpf(10) ** -300):
                break
        return float(total)
