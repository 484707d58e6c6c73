"""Strain measures of the Cosserat shell.

Point-level functions take the rotation and its two parameter derivatives
explicitly, so that closed-form fields can be checked without any grid.  The
``*_field`` variants differentiate nodal data on a uniform grid with
second-order differences (one-sided second order at the boundary).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .geometry import GeometryFrame
from .tensors import anti, axl, columns, norm2, skew, trace, transpose

__all__ = [
    "anti",
    "axl",
    "RotationField",
    "StrainState",
    "strain_tensor",
    "strain_tensor_total_rotation",
    "bending_curvature_tensor",
    "wryness",
    "dislocation_density",
    "nye_alpha_from_gamma",
    "nye_gamma_from_alpha",
    "nye_convert",
    "grid_derivatives",
    "strain_field",
    "curvature_field",
]


@dataclass(frozen=True)
class StrainState:
    E: np.ndarray
    Kc: np.ndarray


class RotationField:
    """Nodal rotations stored as unit quaternions (scalar-last).

    The matrix view is computed on demand; quaternions are renormalized on
    every construction so repeated updates do not drift off SO(3).
    """

    def __init__(self, quat: np.ndarray):
        q = np.asarray(quat, dtype=float)
        q = q / np.linalg.norm(q, axis=-1, keepdims=True)
        # fix the sign so that the stored representative is canonical
        q = np.where(q[..., 3:4] < 0, -q, q)
        self._q = q
        self._q.setflags(write=False)

    @classmethod
    def identity(cls, shape: tuple[int, ...]) -> "RotationField":
        q = np.zeros(tuple(shape) + (4,))
        q[..., 3] = 1.0
        return cls(q)

    @classmethod
    def from_matrix(cls, Q: np.ndarray) -> "RotationField":
        Q = np.asarray(Q, dtype=float)
        shape = Q.shape[:-2]
        q = Rotation.from_matrix(Q.reshape(-1, 3, 3)).as_quat()
        return cls(q.reshape(shape + (4,)))

    @classmethod
    def from_rotvec(cls, v: np.ndarray) -> "RotationField":
        v = np.asarray(v, dtype=float)
        q = Rotation.from_rotvec(v.reshape(-1, 3)).as_quat()
        return cls(q.reshape(v.shape[:-1] + (4,)))

    @property
    def quat(self) -> np.ndarray:
        return self._q

    @property
    def shape(self) -> tuple[int, ...]:
        return self._q.shape[:-1]

    def matrix(self) -> np.ndarray:
        q = self._q.reshape(-1, 4)
        return Rotation.from_quat(q).as_matrix().reshape(self.shape + (3, 3))

    def right_multiply_exp(self, omega: np.ndarray) -> "RotationField":
        """``Q <- Q exp(anti(omega))`` node by node."""
        omega = np.asarray(omega, dtype=float).reshape(-1, 3)
        r = Rotation.from_quat(self._q.reshape(-1, 4)) * Rotation.from_rotvec(omega)
        return RotationField(r.as_quat().reshape(self.shape + (4,)))

    def left_multiply(self, R: np.ndarray) -> "RotationField":
        r = Rotation.from_matrix(R) * Rotation.from_quat(self._q.reshape(-1, 4))
        return RotationField(r.as_quat().reshape(self.shape + (4,)))

    def with_values(self, mask: np.ndarray, other: "RotationField") -> "RotationField":
        q = np.where(mask[..., None], other.quat, self._q)
        return RotationField(q)


# ---------------------------------------------------------------------------
# point-level measures
# ---------------------------------------------------------------------------


def _tangent_columns(grad_m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    grad_m = np.asarray(grad_m, dtype=float)
    return grad_m[..., :, 0], grad_m[..., :, 1]


def strain_tensor(grad_m: np.ndarray, Q: np.ndarray, frame: GeometryFrame) -> np.ndarray:
    """``E = Q^T (grad m | Q n0) [grad Theta0]^{-1} - 1``.

    ``grad_m`` is ``(..., 3, 2)`` or ``(..., 3, 3)``; only the first two
    columns are read.
    """
    d1, d2 = _tangent_columns(grad_m)
    Qn = (Q @ frame.n0[..., None])[..., 0]
    return transpose(Q) @ columns(d1, d2, Qn) @ frame.grad_theta0_inv - np.eye(3)


def strain_tensor_total_rotation(grad_m: np.ndarray, Q: np.ndarray, frame: GeometryFrame) -> np.ndarray:
    """``E = Q0 (Rbar^T grad m - Q0^T grad y0 | 0) [grad Theta0]^{-1}`` with ``Rbar = Q Q0``."""
    d1, d2 = _tangent_columns(grad_m)
    Rbar = Q @ frame.Q0
    zero = np.zeros(np.broadcast_shapes(d1.shape, frame.n0.shape))
    X = transpose(Rbar) @ columns(d1, d2, zero) - transpose(frame.Q0) @ columns(
        frame.grad_y0[..., 0], frame.grad_y0[..., 1], zero
    )
    return frame.Q0 @ X @ frame.grad_theta0_inv


def wryness(Q: np.ndarray, dQ1: np.ndarray, dQ2: np.ndarray, tol: float | None = None) -> np.ndarray:
    """``Gamma = (axl(Q^T d1 Q) | axl(Q^T d2 Q) | 0)`` on the parameter plane.

    ``Q^T dQ`` is skew-projected first.  With ``tol`` set, the raw products
    are also checked for skewness (raises ``NotSkew``).
    """
    Qt = transpose(Q)
    g = []
    for d in (dQ1, dQ2):
        P = Qt @ d
        if tol is not None:
            axl(P, tol=tol)
        g.append(axl(skew(P), tol=None))
    return columns(g[0], g[1], np.zeros_like(g[0]))


def bending_curvature_tensor(Q, dQ1, dQ2, frame: GeometryFrame, tol: float | None = None) -> np.ndarray:
    """``Kc = (axl(Q^T d1 Q) | axl(Q^T d2 Q) | 0) [grad Theta0]^{-1}``."""
    return wryness(Q, dQ1, dQ2, tol=tol) @ frame.grad_theta0_inv


def dislocation_density(Q: np.ndarray, dQ1: np.ndarray, dQ2: np.ndarray) -> np.ndarray:
    """``alpha = Q^T Curl Q`` with the row-wise curl and no x3 dependence."""
    zero = np.zeros_like(Q)
    dQ3 = zero
    # row i of Curl Q is curl of row i of Q
    curl = np.stack(
        [
            dQ2[..., :, 2] - dQ3[..., :, 1],
            dQ3[..., :, 0] - dQ1[..., :, 2],
            dQ1[..., :, 1] - dQ2[..., :, 0],
        ],
        axis=-1,
    )
    return transpose(Q) @ curl


def nye_alpha_from_gamma(gamma: np.ndarray) -> np.ndarray:
    """``alpha = -Gamma^T + tr(Gamma) 1``."""
    gamma = np.asarray(gamma, dtype=float)
    return -transpose(gamma) + trace(gamma)[..., None, None] * np.eye(3)


def nye_gamma_from_alpha(alpha: np.ndarray) -> np.ndarray:
    """``Gamma = -alpha^T + tr(alpha)/2 1``."""
    alpha = np.asarray(alpha, dtype=float)
    return -transpose(alpha) + 0.5 * trace(alpha)[..., None, None] * np.eye(3)


def nye_convert(x: np.ndarray, to: str) -> np.ndarray:
    if to == "alpha":
        return nye_alpha_from_gamma(x)
    if to == "gamma":
        return nye_gamma_from_alpha(x)
    raise ValueError("to must be 'alpha' or 'gamma'")


# ---------------------------------------------------------------------------
# nodal fields on a grid
# ---------------------------------------------------------------------------


def grid_derivatives(F: np.ndarray, dx: float, dy: float) -> tuple[np.ndarray, np.ndarray]:
    """Second-order differences of a nodal field along the two grid axes."""
    d1 = np.gradient(F, dx, axis=0, edge_order=2)
    d2 = np.gradient(F, dy, axis=1, edge_order=2)
    return d1, d2


def strain_field(m: np.ndarray, Q: np.ndarray, frame: GeometryFrame, dx: float, dy: float) -> np.ndarray:
    d1, d2 = grid_derivatives(m, dx, dy)
    return strain_tensor(np.stack([d1, d2], axis=-1), Q, frame)


def curvature_field(Q: np.ndarray, frame: GeometryFrame, dx: float, dy: float) -> tuple[np.ndarray, float]:
    """Nodal ``Kc`` and the largest skewness defect of ``Q^T dQ`` removed by projection."""
    d1, d2 = grid_derivatives(Q, dx, dy)
    Qt = transpose(Q)
    defect = max(
        float(np.max(np.sqrt(norm2(Qt @ d + transpose(Qt @ d))))) for d in (d1, d2)
    )
    return bending_curvature_tensor(Q, d1, d2, frame), defect


def rigid_motion(patch, R: np.ndarray, c: np.ndarray):
    """Midsurface map and rotation of the rigid motion ``m = R y0 + c``, ``Q = R``."""

    def m(x1, x2):
        return patch.evaluate(x1, x2) @ R.T + c

    def grad_m(x1, x2):
        dy, _ = patch.derivatives(x1, x2)
        return R @ dy

    return m, grad_m

