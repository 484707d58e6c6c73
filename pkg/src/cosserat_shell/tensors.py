"""Small batched 3x3 tensor helpers.

Every function accepts arrays with arbitrary leading batch dimensions and
operates on the trailing ``(3, 3)`` (or ``(3,)``) axes.
"""

from __future__ import annotations

import numpy as np

from .errors import NotSkew

SKEW_PATTERN = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
"""Constant planar alternator ((1,2) = 1, (2,1) = -1)."""


def transpose(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2)


def sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + transpose(a))


def skew(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a - transpose(a))


def trace(a: np.ndarray) -> np.ndarray:
    return np.trace(a, axis1=-2, axis2=-1)


def dev(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    return a - (trace(a) / n)[..., None, None] * np.eye(n)


def inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Frobenius product <a, b> = tr(a b^T) over the last two axes."""
    return np.einsum("...ij,...ij->...", a, b)


def norm2(a: np.ndarray) -> np.ndarray:
    """Squared Frobenius norm."""
    return inner(a, a)


def anti(v: np.ndarray) -> np.ndarray:
    """Skew matrix with ``anti(v) @ w == cross(v, w)``."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def axl(a: np.ndarray, tol: float | None = 1e-10) -> np.ndarray:
    """Axial vector ``(-A23, A13, -A12)`` of a skew matrix.

    ``tol`` bounds ``||A + A^T||`` (scaled by ``max(1, ||A||)``); pass ``None``
    to skip the check when the caller has already skew-projected.
    """
    a = np.asarray(a, dtype=float)
    if tol is not None:
        res = np.sqrt(norm2(a + transpose(a)))
        scale = np.maximum(1.0, np.sqrt(norm2(a)))
        if np.any(res > tol * scale):
            raise NotSkew(f"matrix is not skew-symmetric (||A+A^T|| = {np.max(res):.3e})")
    return np.stack([-a[..., 1, 2], a[..., 0, 2], -a[..., 0, 1]], axis=-1)


def rotation_exp(v: np.ndarray) -> np.ndarray:
    """Rodrigues formula for exp(anti(v))."""
    v = np.asarray(v, dtype=float)
    theta = np.sqrt(np.sum(v * v, axis=-1))
    small = theta < 1e-8
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - theta**2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    k = anti(v)
    return np.eye(3) + a[..., None, None] * k + b[..., None, None] * (k @ k)


def columns(*cols: np.ndarray) -> np.ndarray:
    """Assemble ``(c1 | c2 | c3)`` from column vectors with batch dims."""
    return np.stack(cols, axis=-1)
