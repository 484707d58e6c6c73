from __future__ import annotations

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from cosserat_shell.discrete import (
    EDGES,
    DiscreteProblem,
    Grid,
    ShellConfiguration,
    assemble_gradient,
    avg,
    avg_adjoint,
    cell_frames,
    d1,
    d1_adjoint,
    d2,
    d2_adjoint,
    load_potential_and_gradient,
)
from cosserat_shell.energy import LoadSpec, MaterialParams, load_potential, total_energy
from cosserat_shell.errors import InconsistentGrid
from cosserat_shell.geometry import Cylinder, HyperbolicParaboloid, Plane, SphereCap
from cosserat_shell.kinematics import RotationField

from conftest import BUILTIN


def perturbed(patch, n, rng, amp=1e-2, edges=()):
    grid = Grid.on(patch, n)
    cfg = ShellConfiguration.reference(patch, grid, edges)
    dm = amp * rng.normal(size=cfg.m.shape)
    dw = amp * rng.normal(size=cfg.m.shape)
    return cfg.retract(dm, dw)


def smooth_state(patch, grid, amp=0.05):
    X1, X2 = grid.nodes()
    cfg = ShellConfiguration.reference(patch, grid)
    u = amp * np.stack([np.sin(X1 + 2 * X2), np.cos(X1 * X2), np.sin(3 * X1) * X2], axis=-1)
    w = amp * np.stack([X1 * X2, np.cos(X2), np.sin(X1)], axis=-1)
    return cfg.with_state(cfg.m + u, RotationField.from_rotvec(w))


class TestGrid:
    def test_spacing(self):
        g = Grid((0.0, 1.0, -1.0, 1.0), 5, 9)
        assert g.dx == 0.25 and g.dy == 0.25 and g.area == 2.0
        X1, X2 = g.nodes()
        assert X1.shape == (5, 9) and X2[0, -1] == 1.0

    def test_too_small(self):
        with pytest.raises(InconsistentGrid):
            Grid((0, 1, 0, 1), 1, 5)

    def test_edge_mask(self):
        g = Grid((0, 1, 0, 1), 4, 5)
        m = g.edge_mask(["x1-", "x2+"])
        assert m[0].all() and m[:, -1].all() and m.sum() == 5 + 4 - 1
        with pytest.raises(InconsistentGrid):
            g.edge_mask(["left"])

    def test_edge_weights_length(self):
        g = Grid((0, 2, 0, 3), 5, 7)
        assert g.edge_weights(["x1-"]).sum() == pytest.approx(3.0)
        assert g.edge_weights(EDGES).sum() == pytest.approx(10.0)


class TestStencils:
    @pytest.mark.parametrize("op, adj", [(lambda F: d1(F, 0.3), lambda g: d1_adjoint(g, 0.3)),
                                         (lambda F: d2(F, 0.7), lambda g: d2_adjoint(g, 0.7)),
                                         (avg, avg_adjoint)])
    def test_adjoint_dot_product(self, op, adj, rng):
        F = rng.normal(size=(6, 5, 3))
        G = rng.normal(size=(5, 4, 3))
        assert np.sum(op(F) * G) == pytest.approx(np.sum(F * adj(G)), rel=1e-13)

    def test_exact_on_bilinear(self):
        g = Grid((0, 1, 0, 2), 5, 6)
        X1, X2 = g.nodes()
        F = 2 * X1 - 3 * X2 + X1 * X2
        C1, C2 = g.centers()
        np.testing.assert_allclose(d1(F, g.dx), 2 + C2, atol=1e-13)
        np.testing.assert_allclose(d2(F, g.dy), -3 + C1, atol=1e-13)
        np.testing.assert_allclose(avg(F), 2 * C1 - 3 * C2 + C1 * C2, atol=1e-13)

    def test_cell_frames_converge(self):
        p = SphereCap(2.0)
        errs = []
        for n in (9, 17, 33):
            g = Grid.on(p, n)
            f = cell_frames(p, g)
            exact = p.frame(*g.centers())
            errs.append(np.abs(f.grad_theta0 - exact.grad_theta0).max())
        assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


class TestEnergy:
    def test_reference_zero(self, patch):
        cfg = ShellConfiguration.reference(patch, Grid.on(patch, 9))
        prob = DiscreteProblem(patch, cfg.grid, MaterialParams())
        f, gm, gw = prob.energy_and_gradient(cfg)
        assert abs(f) < 1e-28 and np.abs(gm).max() < 1e-13 and np.abs(gw).max() < 1e-13

    @pytest.mark.parametrize("order", ["h5", "h3"])
    def test_gradient_matches_fd(self, patch, order, rng, mat):
        cfg = perturbed(patch, 6, rng)
        loads = LoadSpec(f=(0.1, -0.2, 0.3), t=(0.0, 0.1, 0.0), c=(0.05, 0.0, -0.02), c_boundary=(0.0, 0.03, 0.0))
        prob = DiscreteProblem(patch, cfg.grid, mat, loads, order)
        f0, gm, gw = prob.energy_and_gradient(cfg)
        dm = rng.normal(size=cfg.m.shape)
        dw = rng.normal(size=cfg.m.shape)
        eps = 1e-6
        fd = (prob.energy(cfg.retract(eps * dm, eps * dw)) - prob.energy(cfg.retract(-eps * dm, -eps * dw))) / (2 * eps)
        an = np.sum(gm * dm) + np.sum(gw * dw)
        assert abs(fd - an) <= 1e-6 * max(abs(an), 1e-12)

    def test_frame_indifference(self, patch, rng, mat):
        cfg = perturbed(patch, 7, rng)
        prob = DiscreteProblem(patch, cfg.grid, mat)
        R = Rotation.random(random_state=4).as_matrix()
        f0 = prob.internal_energy(cfg)
        f1 = prob.internal_energy(cfg.superpose_rigid(R, np.array([1.0, -2.0, 0.5])))
        assert f1 == pytest.approx(f0, rel=1e-12)

    def test_rigid_motion(self, patch, mat):
        cfg = ShellConfiguration.reference(patch, Grid.on(patch, 9))
        prob = DiscreteProblem(patch, cfg.grid, mat)
        R = Rotation.from_rotvec([0.4, -1.1, 2.0]).as_matrix()
        f, gm, gw = prob.energy_and_gradient(cfg.superpose_rigid(R, np.array([3.0, 0.0, -1.0])))
        assert abs(f) <= 1e-10 * mat.mu * cfg.grid.area * mat.h
        assert max(np.abs(gm).max(), np.abs(gw).max()) <= 1e-8

    def test_breakdown_consistent(self, rng, mat):
        p = Cylinder(1.0)
        cfg = perturbed(p, 7, rng)
        prob = DiscreteProblem(p, cfg.grid, mat, LoadSpec(f=(0, 0, 1.0)))
        b = prob.breakdown(cfg)
        assert b.total == pytest.approx(prob.energy(cfg), rel=1e-12)
        assert b.internal == pytest.approx(prob.internal_energy(cfg), rel=1e-12)
        tb = total_energy(cfg, p, mat, LoadSpec(f=(0, 0, 1.0)))
        assert tb.total == pytest.approx(b.total, rel=1e-12)

    def test_plane_h3_equals_h5(self, rng, mat):
        p = Plane()
        cfg = perturbed(p, 8, rng)
        e5 = DiscreteProblem(p, cfg.grid, mat, order="h5").energy(cfg)
        e3 = DiscreteProblem(p, cfg.grid, mat, order="h3").energy(cfg)
        assert e3 == pytest.approx(e5, rel=1e-10)

    @pytest.mark.parametrize("kind", ["plane", "sphere-cap", "hyperbolic-paraboloid"])
    def test_second_order_quadrature(self, kind, mat):
        p = BUILTIN[kind]()
        vals = []
        for n in (9, 17, 33, 65):
            g = Grid.on(p, n)
            vals.append(DiscreteProblem(p, g, mat).internal_energy(smooth_state(p, g)))
        d = np.abs(np.diff(vals))
        rate = np.log2(d[1] / d[2])
        assert rate == pytest.approx(2.0, abs=0.3)

    def test_strain_norms_nonnegative(self, rng, mat):
        p = HyperbolicParaboloid(1.0, 1.0)
        cfg = perturbed(p, 6, rng)
        assert DiscreteProblem(p, cfg.grid, mat).strain_norms(cfg) > 0

    def test_grid_mismatch(self, mat):
        p = Plane()
        prob = DiscreteProblem(p, Grid.on(p, 5), mat)
        with pytest.raises(InconsistentGrid):
            prob.energy(ShellConfiguration.reference(p, Grid.on(p, 6)))


class TestDirichlet:
    def test_masks_and_enforce(self, rng):
        p = Plane()
        cfg = perturbed(p, 6, rng, edges=("x1-", "x2+"))
        assert cfg.dirichlet_residual() > 0
        fixed = cfg.enforce_dirichlet()
        assert fixed.dirichlet_residual() == 0.0
        assert fixed.mask.sum() == 6 + 6 - 1

    def test_clamped_rotations(self):
        p = Plane()
        cfg = ShellConfiguration.reference(p, Grid.on(p, 5), ("x1-",), clamp_rotations=True)
        assert np.array_equal(cfg.rotation_mask, cfg.mask)
        free = ShellConfiguration.reference(p, Grid.on(p, 5), ("x1-",))
        assert not free.rotation_mask.any()

    def test_assemble_gradient_masked(self, rng, mat):
        p = Cylinder(1.0)
        cfg = perturbed(p, 6, rng, edges=EDGES)
        gm, gw = assemble_gradient(cfg, p, mat)
        assert np.all(gm[cfg.mask] == 0.0)
        assert np.abs(gm[~cfg.mask]).max() > 0


class TestLoads:
    def test_zero(self, rng):
        p = Plane()
        cfg = perturbed(p, 5, rng)
        pi, gm, gQ = load_potential_and_gradient(cfg, LoadSpec(), p)
        assert pi == 0.0 and not gm.any() and not gQ.any()

    def test_uniform_force_translation(self):
        p = Plane()
        g = Grid.on(p, 7)
        cfg = ShellConfiguration.reference(p, g)
        moved = cfg.with_state(cfg.m + np.array([0.0, 0.0, 0.25]))
        pi = load_potential(moved, LoadSpec(f=(0.0, 0.0, 2.0)), p)
        assert pi == pytest.approx(2.0 * 0.25 * g.area, rel=1e-13)

    def test_traction_on_free_edges_only(self):
        p = Plane()
        g = Grid.on(p, 5)
        cfg = ShellConfiguration.reference(p, g, ("x1-", "x2-", "x2+"))
        moved = cfg.with_state(cfg.m + np.array([1.0, 0.0, 0.0])).enforce_dirichlet()
        pi = load_potential(moved, LoadSpec(t=(3.0, 0.0, 0.0)), p)
        # only x1+ is loaded; its two corner nodes are clamped and do not move
        assert pi == pytest.approx(3.0 * (p.domain[3] - p.domain[2]) * 1.0 - 3.0 * 0.5 * g.dy * 2, rel=1e-12)

    def test_force_quadrature_converges(self):
        p = SphereCap(2.0)
        X = lambda x1, x2: np.stack([np.cos(x1), x2 * 0 + 1.0, np.sin(x2)], axis=-1)  # noqa: E731
        vals = []
        for n in (9, 17, 33, 65):
            g = Grid.on(p, n)
            cfg = smooth_state(p, g)
            vals.append(load_potential(cfg, LoadSpec(f=X), p))
        d = np.abs(np.diff(vals))
        assert np.log2(d[1] / d[2]) == pytest.approx(2.0, abs=0.3)
