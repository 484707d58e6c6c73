"""Finite-difference discretization on a collocated nodal grid.

Midsurface positions ``m`` and rotations ``Q`` live on the nodes.  Strain
measures are evaluated at cell centres from the four corner values:

* ``d1 F`` / ``d2 F`` average the two edge differences of the cell,
* ``avg F`` is the mean of the four corners.

The cell frame is built from the same stencil applied to the nodal ``y0``
(plus analytic second derivatives at the centre), so a rigid motion produces
zero strain up to round-off on any patch.  With ``X = (d1 m | d2 m | 0) G^-1``
and ``Qb = avg Q``

    E     = Qb^T X + n0 n0^T - 1
    Gamma = (axl skew(Qb^T d1 Q) | axl skew(Qb^T d2 Q) | 0)
    Kc    = Gamma G^-1

and the energy is the midpoint rule ``sum_cells density * det G * dx * dy``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .energy import EnergyBreakdown, LoadSpec, MaterialParams, density, density_matrix
from .errors import InconsistentGrid
from .geometry import GeometryFrame, SurfacePatch
from .kinematics import RotationField
from .tensors import anti, axl, columns, skew, transpose

EDGES = ("x1-", "x1+", "x2-", "x2+")


# ---------------------------------------------------------------------------
# grid and configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    domain: tuple[float, float, float, float]
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise InconsistentGrid("grid needs at least 2 nodes per direction")

    @classmethod
    def on(cls, patch: SurfacePatch, nx: int, ny: int | None = None) -> "Grid":
        return cls(tuple(patch.domain), int(nx), int(ny if ny is not None else nx))

    @property
    def dx(self) -> float:
        return (self.domain[1] - self.domain[0]) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.domain[3] - self.domain[2]) / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def area(self) -> float:
        return (self.domain[1] - self.domain[0]) * (self.domain[3] - self.domain[2])

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        x1 = np.linspace(self.domain[0], self.domain[1], self.nx)
        x2 = np.linspace(self.domain[2], self.domain[3], self.ny)
        return np.meshgrid(x1, x2, indexing="ij")

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        X1, X2 = self.nodes()
        return avg(X1), avg(X2)

    def edge_mask(self, edges) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for e in edges:
            if e not in EDGES:
                raise InconsistentGrid(f"unknown boundary edge {e!r}; expected one of {EDGES}")
            if e == "x1-":
                mask[0, :] = True
            elif e == "x1+":
                mask[-1, :] = True
            elif e == "x2-":
                mask[:, 0] = True
            else:
                mask[:, -1] = True
        return mask

    def edge_weights(self, edges) -> np.ndarray:
        """Trapezoid weights (parameter length) of the nodes on the given edges."""
        w = np.zeros(self.shape)
        tx = np.full(self.nx, self.dx)
        tx[[0, -1]] *= 0.5
        ty = np.full(self.ny, self.dy)
        ty[[0, -1]] *= 0.5
        for e in edges:
            if e == "x1-":
                w[0, :] += ty
            elif e == "x1+":
                w[-1, :] += ty
            elif e == "x2-":
                w[:, 0] += tx
            elif e == "x2+":
                w[:, -1] += tx
        return w


@dataclass(frozen=True)
class ShellConfiguration:
    """Nodal state ``(m, Q)`` plus Dirichlet data on the edges ``dirichlet_edges``.

    ``m_star`` gives the prescribed positions on the clamped nodes (full nodal
    array, only masked entries are read).  ``Q_star`` is optional; without it
    the rotations stay free on the whole boundary.
    """

    grid: Grid
    m: np.ndarray
    rotations: RotationField
    dirichlet_edges: tuple[str, ...] = ()
    m_star: np.ndarray | None = None
    Q_star: RotationField | None = None

    def __post_init__(self):
        if self.m.shape != self.grid.shape + (3,):
            raise InconsistentGrid(f"m has shape {self.m.shape}, expected {self.grid.shape + (3,)}")
        if self.rotations.shape != self.grid.shape:
            raise InconsistentGrid("rotation field does not match the grid")
        if self.m_star is not None and self.m_star.shape != self.m.shape:
            raise InconsistentGrid("m_star does not match the grid")
        if self.Q_star is not None and self.Q_star.shape != self.grid.shape:
            raise InconsistentGrid("Q_star does not match the grid")
        self.grid.edge_mask(self.dirichlet_edges)

    @classmethod
    def reference(
        cls,
        patch: SurfacePatch,
        grid: Grid,
        dirichlet_edges=(),
        clamp_rotations: bool = False,
    ) -> "ShellConfiguration":
        """``m = y0``, ``Q = 1``, Dirichlet targets equal to the reference."""
        y0 = patch.evaluate(*grid.nodes())
        ident = RotationField.identity(grid.shape)
        return cls(grid, y0, ident, tuple(dirichlet_edges), y0.copy(), ident if clamp_rotations else None)

    @property
    def mask(self) -> np.ndarray:
        return self.grid.edge_mask(self.dirichlet_edges)

    @property
    def rotation_mask(self) -> np.ndarray:
        if self.Q_star is None:
            return np.zeros(self.grid.shape, dtype=bool)
        return self.mask

    @property
    def traction_edges(self) -> tuple[str, ...]:
        return tuple(e for e in EDGES if e not in self.dirichlet_edges)

    def Q(self) -> np.ndarray:
        return self.rotations.matrix()

    def with_state(self, m=None, rotations=None) -> "ShellConfiguration":
        return replace(
            self,
            m=self.m if m is None else m,
            rotations=self.rotations if rotations is None else rotations,
        )

    def enforce_dirichlet(self) -> "ShellConfiguration":
        m, rot = self.m, self.rotations
        mask = self.mask
        if self.m_star is not None and mask.any():
            m = np.where(mask[..., None], self.m_star, m)
        if self.Q_star is not None and mask.any():
            rot = rot.with_values(mask, self.Q_star)
        return self.with_state(m, rot)

    def dirichlet_residual(self) -> float:
        mask = self.mask
        r = 0.0
        if self.m_star is not None and mask.any():
            r = float(np.max(np.abs(self.m[mask] - self.m_star[mask])))
        if self.Q_star is not None and mask.any():
            r = max(r, float(np.max(np.abs(self.Q()[mask] - self.Q_star.matrix()[mask]))))
        return r

    def retract(self, dm: np.ndarray, domega: np.ndarray) -> "ShellConfiguration":
        """``m + dm`` and ``Q exp(anti(domega))``."""
        return self.with_state(self.m + dm, self.rotations.right_multiply_exp(domega))

    def superpose_rigid(self, R: np.ndarray, c: np.ndarray) -> "ShellConfiguration":
        return self.with_state(self.m @ R.T + c, self.rotations.left_multiply(R))


# ---------------------------------------------------------------------------
# cell stencils and their adjoints
# ---------------------------------------------------------------------------


def d1(F, dx):
    return ((F[1:, :-1] - F[:-1, :-1]) + (F[1:, 1:] - F[:-1, 1:])) / (2 * dx)


def d2(F, dy):
    return ((F[:-1, 1:] - F[:-1, :-1]) + (F[1:, 1:] - F[1:, :-1])) / (2 * dy)


def avg(F):
    return 0.25 * (F[:-1, :-1] + F[1:, :-1] + F[:-1, 1:] + F[1:, 1:])


def d1_adjoint(g, dx):
    out = np.zeros((g.shape[0] + 1, g.shape[1] + 1) + g.shape[2:])
    g = g / (2 * dx)
    out[1:, :-1] += g
    out[:-1, :-1] -= g
    out[1:, 1:] += g
    out[:-1, 1:] -= g
    return out


def d2_adjoint(g, dy):
    out = np.zeros((g.shape[0] + 1, g.shape[1] + 1) + g.shape[2:])
    g = g / (2 * dy)
    out[:-1, 1:] += g
    out[:-1, :-1] -= g
    out[1:, 1:] += g
    out[1:, :-1] -= g
    return out


def avg_adjoint(g):
    out = np.zeros((g.shape[0] + 1, g.shape[1] + 1) + g.shape[2:])
    g = 0.25 * g
    out[:-1, :-1] += g
    out[1:, :-1] += g
    out[:-1, 1:] += g
    out[1:, 1:] += g
    return out


def cell_frames(patch: SurfacePatch, grid: Grid) -> GeometryFrame:
    """Cell-centre frames from the discrete tangent stencil of ``y0``."""
    y0 = patch.evaluate(*grid.nodes())
    C1, C2 = grid.centers()
    _, ddy = patch.derivatives(C1, C2)
    dy = np.stack([d1(y0, grid.dx), d2(y0, grid.dy)], axis=-1)
    return GeometryFrame.from_derivatives(dy, ddy, point=np.stack([C1, C2], axis=-1))


# ---------------------------------------------------------------------------
# loads
# ---------------------------------------------------------------------------


def load_potential_and_gradient(config: ShellConfiguration, loads: LoadSpec, patch: SurfacePatch, y0=None):
    """Potential ``Pi`` of the dead loads and its nodal gradients ``(gm, gQ)``.

    Forces and couples on the domain use the cell midpoint rule (parameter
    area); tractions and boundary couples use the trapezoid rule along the
    free edges.  ``gQ`` is the Euclidean gradient with respect to the nodal
    rotation matrices.
    """
    grid = config.grid
    if y0 is None:
        if patch is None:
            raise InconsistentGrid("load potential needs the patch to form u = m - y0")
        y0 = patch.evaluate(*grid.nodes())
    if y0.shape != config.m.shape:
        raise InconsistentGrid("reference positions do not match the configuration grid")
    shape = grid.shape
    gm = np.zeros(shape + (3,))
    gQ = np.zeros(shape + (3, 3))
    if loads is None or loads.is_zero:
        return 0.0, gm, gQ
    u = config.m - y0
    C1, C2 = grid.centers()
    X1, X2 = grid.nodes()
    cell = grid.dx * grid.dy
    bw = grid.edge_weights(config.traction_edges)
    Q = config.Q()
    pi = 0.0
    if loads.f is not None:
        f = loads.force(C1, C2) * cell
        pi += float(np.sum(f * avg(u)))
        gm += avg_adjoint(f)
    if loads.t is not None:
        t = loads.traction(X1, X2) * bw[..., None]
        pi += float(np.sum(t * u))
        gm += t
    if loads.c is not None:
        c = loads.couple(C1, C2) * cell
        pi += float(np.sum(c * axl(skew(avg(Q)), tol=None)))
        gQ += avg_adjoint(0.5 * anti(c))
    if loads.c_boundary is not None:
        c = loads.boundary_couple(X1, X2) * bw[..., None]
        pi += float(np.sum(c * axl(skew(Q), tol=None)))
        gQ += 0.5 * anti(c)
    return pi, gm, gQ


# ---------------------------------------------------------------------------
# energy and gradient
# ---------------------------------------------------------------------------


@dataclass
class CellStrains:
    E: np.ndarray
    Kc: np.ndarray
    X: np.ndarray
    Qbar: np.ndarray
    D: tuple[np.ndarray, np.ndarray]


@dataclass
class DiscreteProblem:
    """Discrete energy functional on a fixed patch, grid, material and load."""

    patch: SurfacePatch
    grid: Grid
    mat: MaterialParams
    loads: LoadSpec = field(default_factory=LoadSpec)
    order: str = "h5"

    def __post_init__(self):
        self.frame = cell_frames(self.patch, self.grid)
        self.weights = self.frame.area_element * self.grid.dx * self.grid.dy
        self.M = density_matrix(self.frame, self.mat, self.order)
        self.y0 = self.patch.evaluate(*self.grid.nodes())
        self._nnT = self.frame.n0[..., :, None] * self.frame.n0[..., None, :]

    def _check(self, config: ShellConfiguration):
        if config.grid != self.grid:
            raise InconsistentGrid("configuration grid differs from the problem grid")

    def strains(self, config: ShellConfiguration) -> CellStrains:
        self._check(config)
        g = self.grid
        Q = config.Q()
        Qbar = avg(Q)
        zero = np.zeros(Qbar.shape[:-1])
        Ginv = self.frame.grad_theta0_inv
        X = columns(d1(config.m, g.dx), d2(config.m, g.dy), zero) @ Ginv
        E = transpose(Qbar) @ X + self._nnT - np.eye(3)
        D = (d1(Q, g.dx), d2(Q, g.dy))
        gam = [axl(skew(transpose(Qbar) @ Da), tol=None) for Da in D]
        Kc = columns(gam[0], gam[1], zero) @ Ginv
        return CellStrains(E, Kc, X, Qbar, D)

    def _z(self, s: CellStrains) -> np.ndarray:
        n = s.E.shape[:-2]
        return np.concatenate([s.E.reshape(n + (9,)), s.Kc.reshape(n + (9,))], axis=-1)

    def internal_energy(self, config: ShellConfiguration) -> float:
        z = self._z(self.strains(config))
        w = np.einsum("...i,...ij,...j->...", z, self.M, z)
        return float(np.sum(self.weights * w))

    def energy(self, config: ShellConfiguration) -> float:
        pi, _, _ = load_potential_and_gradient(config, self.loads, self.patch, self.y0)
        return self.internal_energy(config) - pi

    def breakdown(self, config: ShellConfiguration) -> EnergyBreakdown:
        s = self.strains(config)
        _, parts = density(s.E, s.Kc, self.frame, self.mat, self.order)
        pi, _, _ = load_potential_and_gradient(config, self.loads, self.patch, self.y0)
        return EnergyBreakdown(
            memb=float(np.sum(self.weights * parts["memb"])),
            memb_bend=float(np.sum(self.weights * parts["memb_bend"])),
            bend_curv=float(np.sum(self.weights * parts["bend_curv"])),
            load_potential=pi,
        )

    def energy_and_gradient(self, config: ShellConfiguration) -> tuple[float, np.ndarray, np.ndarray]:
        """Total energy and its gradient.

        Returns ``(I, gm, gomega)``: ``gm`` with respect to nodal positions and
        ``gomega`` with respect to the right-trivialized rotation increment
        ``Q <- Q exp(anti(omega))``.  Dirichlet masks are not applied here.
        """
        g = self.grid
        s = self.strains(config)
        z = self._z(s)
        Mz = np.einsum("...ij,...j->...i", self.M, z)
        internal = float(np.sum(self.weights * np.einsum("...i,...i->...", z, Mz)))
        gz = 2.0 * self.weights[..., None] * Mz
        n = gz.shape[:-1]
        gE = gz[..., :9].reshape(n + (3, 3))
        gK = gz[..., 9:].reshape(n + (3, 3))
        GinvT = transpose(self.frame.grad_theta0_inv)

        # E = Qb^T X + const
        gQbar = s.X @ transpose(gE)
        gDm = s.Qbar @ gE @ GinvT
        # Kc = (Gamma_1 | Gamma_2 | 0) G^-1, Gamma_a = axl skew(Qb^T D_a)
        gGam = gK @ GinvT
        gD = []
        for a in range(2):
            Wa = anti(gGam[..., :, a])
            gQbar = gQbar + 0.5 * s.D[a] @ transpose(Wa)
            gD.append(0.5 * s.Qbar @ Wa)

        gQ = avg_adjoint(gQbar) + d1_adjoint(gD[0], g.dx) + d2_adjoint(gD[1], g.dy)
        gm = d1_adjoint(gDm[..., :, 0], g.dx) + d2_adjoint(gDm[..., :, 1], g.dy)

        pi, lm, lQ = load_potential_and_gradient(config, self.loads, self.patch, self.y0)
        gm = gm - lm
        gQ = gQ - lQ
        Q = config.Q()
        gomega = 2.0 * axl(skew(transpose(Q) @ gQ), tol=None)
        return internal - pi, gm, gomega

    def masked_gradient(self, config: ShellConfiguration):
        f, gm, gw = self.energy_and_gradient(config)
        gm = np.where(config.mask[..., None], 0.0, gm)
        gw = np.where(config.rotation_mask[..., None], 0.0, gw)
        return f, gm, gw

    def strain_norms(self, config: ShellConfiguration) -> float:
        """``sum_cells (|E|^2 + |Kc|^2) det G dx dy``."""
        s = self.strains(config)
        return float(np.sum(self.weights * (np.sum(s.E**2, axis=(-1, -2)) + np.sum(s.Kc**2, axis=(-1, -2)))))


def assemble_gradient(config, patch, mat, loads=None, order="h5"):
    """Masked gradients ``(gm, gomega)`` of the total discrete energy."""
    prob = DiscreteProblem(patch, config.grid, mat, loads or LoadSpec(), order)
    _, gm, gw = prob.masked_gradient(config)
    return gm, gw
