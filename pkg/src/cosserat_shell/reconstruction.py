"""Three-dimensional deformation recovered from a two-dimensional solution.

The slab is sampled as

    phi(x1, x2, x3) = m + (x3 rho_m + x3^2 rho_b / 2) Q n0

with the thickness-stretch coefficients computed from nodal strains.  The
nodal strains use frames built from the same grid differences as ``m``, so the
reference solution has ``rho_m = 1`` and ``rho_b = 0`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discrete import ShellConfiguration
from .energy import MaterialParams
from .geometry import GeometryFrame, SurfacePatch
from .kinematics import bending_curvature_tensor, grid_derivatives, strain_tensor
from .tensors import columns, trace, transpose


def _stretch_ratio(mat: MaterialParams) -> float:
    return mat.lam / (mat.lam + 2 * mat.mu)


def thickness_coefficients(E, Kc, frame: GeometryFrame, mat: MaterialParams):
    """``rho_m = 1 - k tr E`` and ``rho_b = -k tr(C Kc + E B)`` with ``k = lam/(lam+2mu)``."""
    k = _stretch_ratio(mat)
    rho_m = 1.0 - k * trace(E)
    rho_b = -k * trace(frame.C @ Kc + E @ frame.B)
    return rho_m, rho_b


def thickness_coefficients_raw(grad_m, Q, grad_director, frame: GeometryFrame, mat: MaterialParams):
    """The same coefficients evaluated directly from the fields.

    ``grad_m`` and ``grad_director`` are ``(..., 3, 2)`` parameter gradients of
    ``m`` and of the director ``Q n0``.
    """
    k = _stretch_ratio(mat)
    zero = np.zeros(np.shape(Q)[:-1])
    Ginv = frame.grad_theta0_inv
    Qt = transpose(Q)
    P = Qt @ columns(grad_m[..., 0], grad_m[..., 1], zero) @ Ginv
    Dn = columns(frame.grad_n0[..., 0], frame.grad_n0[..., 1], zero) @ Ginv
    Dd = Qt @ columns(grad_director[..., 0], grad_director[..., 1], zero) @ Ginv
    rho_m = 1.0 - k * (trace(P) - 2.0)
    rho_b = -k * trace(Dd) + k * trace(P @ Dn)
    return rho_m, rho_b


@dataclass
class Slab3D:
    """Samples of the reconstructed deformation on ``omega x [-h/2, h/2]``."""

    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray
    phi: np.ndarray
    rho_m: np.ndarray
    rho_b: np.ndarray
    total_rotation: np.ndarray

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.phi.shape[:3]


def thickness_levels(h: float, nz: int) -> np.ndarray:
    if nz < 3 or nz % 2 == 0:
        raise ValueError("nz must be odd and at least 3 so the levels include 0 and +-h/2")
    z = np.linspace(-0.5 * h, 0.5 * h, nz)
    z[nz // 2] = 0.0
    return z


def nodal_frames(patch: SurfacePatch, config: ShellConfiguration) -> GeometryFrame:
    """Node frames from the grid differences of ``y0`` and analytic second derivatives."""
    g = config.grid
    X1, X2 = g.nodes()
    y0 = patch.evaluate(X1, X2)
    d1, d2 = grid_derivatives(y0, g.dx, g.dy)
    _, ddy = patch.derivatives(X1, X2)
    return GeometryFrame.from_derivatives(np.stack([d1, d2], axis=-1), ddy, point=np.stack([X1, X2], axis=-1))


def nodal_strains(patch: SurfacePatch, config: ShellConfiguration):
    g = config.grid
    frame = nodal_frames(patch, config)
    Q = config.Q()
    dm1, dm2 = grid_derivatives(config.m, g.dx, g.dy)
    dQ1, dQ2 = grid_derivatives(Q, g.dx, g.dy)
    E = strain_tensor(np.stack([dm1, dm2], axis=-1), Q, frame)
    Kc = bending_curvature_tensor(Q, dQ1, dQ2, frame)
    return E, Kc, frame


def reconstruct(config: ShellConfiguration, patch: SurfacePatch, mat: MaterialParams, nz: int = 5) -> Slab3D:
    z = thickness_levels(mat.h, nz)
    E, Kc, frame = nodal_strains(patch, config)
    rho_m, rho_b = thickness_coefficients(E, Kc, frame, mat)
    X1, X2 = config.grid.nodes()
    Q = config.Q()
    exact = patch.frame(X1, X2)
    director = (Q @ exact.n0[..., None])[..., 0]
    shift = z[None, None, :] * rho_m[..., None] + 0.5 * z[None, None, :] ** 2 * rho_b[..., None]
    phi = config.m[:, :, None, :] + shift[..., None] * director[:, :, None, :]
    phi[:, :, nz // 2, :] = config.m
    return Slab3D(X1, X2, z, phi, rho_m, rho_b, Q @ exact.Q0)
