"""Finite-difference building blocks on uniform 1-D grids.

Spatial operators act along the last axis and honour one of three
boundary treatments:

* ``periodic``: wrap-around neighbours.
* ``neumann``: homogeneous Neumann via an even ghost reflection
  (``u[-1] = u[1]``).
* ``dirichlet``: homogeneous Dirichlet via an odd ghost reflection
  (``u[-1] = -u[1]``); boundary values are expected to be zero.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError

BOUNDARIES = ("periodic", "neumann", "dirichlet")


def _check_boundary(boundary: str) -> None:
    if boundary not in BOUNDARIES:
        raise ValidationError(f"unknown boundary {boundary!r}; expected one of {BOUNDARIES}")


def pad_ghost(u: np.ndarray, boundary: str) -> np.ndarray:
    """Pad the last axis with one ghost cell on each side."""
    _check_boundary(boundary)
    u = np.asarray(u, dtype=float)
    if boundary == "periodic":
        left, right = u[..., -1:], u[..., :1]
    elif boundary == "neumann":
        left, right = u[..., 1:2], u[..., -2:-1]
    else:
        left, right = -u[..., 1:2], -u[..., -2:-1]
    return np.concatenate([left, u, right], axis=-1)


def d1(u: np.ndarray, dx: float, boundary: str) -> np.ndarray:
    """Centered first derivative along the last axis."""
    g = pad_ghost(u, boundary)
    return (g[..., 2:] - g[..., :-2]) / (2.0 * dx)


def d2(u: np.ndarray, dx: float, boundary: str) -> np.ndarray:
    """Centered second derivative along the last axis."""
    g = pad_ghost(u, boundary)
    return (g[..., 2:] - 2.0 * g[..., 1:-1] + g[..., :-2]) / (dx * dx)


def d1_matrix(n: int, dx: float, boundary: str) -> sp.csr_matrix:
    """Sparse matrix of :func:`d1` (same ghost conventions)."""
    _check_boundary(boundary)
    m = sp.lil_matrix((n, n))
    for i in range(n):
        for offset, coef in ((-1, -1.0), (1, 1.0)):
            j = i + offset
            if boundary == "periodic":
                m[i, j % n] += coef
            elif 0 <= j < n:
                m[i, j] += coef
            else:
                # ghost index -1 maps to 1, n maps to n-2
                mirror = 1 if j < 0 else n - 2
                sign = 1.0 if boundary == "neumann" else -1.0
                m[i, mirror] += sign * coef
    return (m / (2.0 * dx)).tocsr()


def d2_matrix(n: int, dx: float, boundary: str) -> sp.csr_matrix:
    """Sparse matrix of :func:`d2` (same ghost conventions)."""
    _check_boundary(boundary)
    m = sp.lil_matrix((n, n))
    for i in range(n):
        m[i, i] += -2.0
        for j in (i - 1, i + 1):
            if boundary == "periodic":
                m[i, j % n] += 1.0
            elif 0 <= j < n:
                m[i, j] += 1.0
            else:
                mirror = 1 if j < 0 else n - 2
                sign = 1.0 if boundary == "neumann" else -1.0
                m[i, mirror] += sign
    return (m / (dx * dx)).tocsr()


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives 0..m at ``z`` on nodes ``x``.

    Returns an array ``c`` of shape ``(len(x), m + 1)`` where ``c[:, k]``
    approximates the k-th derivative. Fornberg's recursive algorithm.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def time_derivative(values: np.ndarray, dt: float, order: int = 8) -> np.ndarray:
    """First derivative along axis 0 with an ``order``-accurate stencil.

    Interior nodes use centered stencils, the first/last few nodes use
    one-sided stencils of the same width. The width shrinks to the number
    of samples when fewer are available.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n < 2:
        raise ValidationError("time derivative needs at least 2 samples")
    width = min(order + 1, n)
    half = width // 2
    nodes = np.arange(n, dtype=float)
    out = np.empty_like(values)
    cache: dict[int, np.ndarray] = {}
    for k in range(n):
        start = min(max(k - half, 0), n - width)
        rel = k - start
        if rel not in cache:
            cache[rel] = fornberg_weights(float(rel), nodes[:width], 1)[:, 1]
        w = cache[rel]
        out[k] = np.tensordot(w, values[start:start + width], axes=(0, 0))
    return out / dt
