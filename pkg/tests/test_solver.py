from __future__ import annotations

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from cosserat_shell.discrete import EDGES, DiscreteProblem, Grid, ShellConfiguration
from cosserat_shell.energy import LoadSpec, MaterialParams
from cosserat_shell.errors import ConditionsViolated
from cosserat_shell.geometry import Cylinder, Plane, SphereCap
from cosserat_shell.solver import TRACE_COLUMNS, Problem, SolverOptions, minimize, refine_study


def start(patch, n, amp, seed, edges=EDGES, clamp=True):
    rng = np.random.default_rng(seed)
    cfg = ShellConfiguration.reference(patch, Grid.on(patch, n), edges, clamp)
    return cfg.retract(amp * rng.uniform(-1, 1, cfg.m.shape), amp * rng.uniform(-1, 1, cfg.m.shape)).enforce_dirichlet()


class TestMinimize:
    @pytest.mark.parametrize("method", ["lbfgs", "gd"])
    def test_clamped_plane_returns_to_reference(self, method, mat):
        p = Plane()
        cfg0 = start(p, 9, 1e-3, 0)
        opts = SolverOptions(method=method, max_iter=3000 if method == "gd" else 500)
        cfg, tr = minimize(cfg0, p, mat, options=opts)
        assert tr.converged
        assert tr.energies[-1] <= 1e-10 * tr.energies[0]
        ref = ShellConfiguration.reference(p, cfg.grid)
        assert np.abs(cfg.m - ref.m).max() < 1e-6

    def test_monotone_trace(self, mat):
        p = SphereCap(2.0)
        cfg, tr = minimize(start(p, 9, 1e-2, 1), p, mat)
        assert np.all(np.diff(tr.energies) <= 0)
        assert set(tr.rows[0]) == set(TRACE_COLUMNS)

    def test_masks_exact_and_rotations_orthonormal(self, mat):
        p = Cylinder(1.0)
        cfg0 = start(p, 8, 1e-2, 2, edges=("x1-", "x2+"))
        cfg, _ = minimize(cfg0, p, mat, options=SolverOptions(max_iter=50))
        assert np.array_equal(cfg.m[cfg.mask], cfg0.m[cfg0.mask])
        assert np.array_equal(cfg.rotations.quat[cfg.rotation_mask], cfg0.rotations.quat[cfg0.rotation_mask])
        Q = cfg.Q()
        np.testing.assert_allclose(np.swapaxes(Q, -1, -2) @ Q, np.broadcast_to(np.eye(3), Q.shape), atol=1e-14)

    def test_free_rigid_start_is_stationary(self, mat):
        p = SphereCap(2.0)
        R = Rotation.from_rotvec([0.3, 0.2, -0.5]).as_matrix()
        cfg0 = ShellConfiguration.reference(p, Grid.on(p, 7)).superpose_rigid(R, np.array([1.0, 2.0, 3.0]))
        cfg, tr = minimize(cfg0, p, mat, options=SolverOptions(gtol=1e-8))
        assert tr.converged and tr.iterations == 0
        assert np.array_equal(cfg.m, cfg0.m)

    def test_loaded_plate(self, mat):
        p = Plane()
        loads = LoadSpec(f=lambda x1, x2: np.stack([0 * x1, 0 * x1, -0.01 * np.sin(np.pi * x1) * np.sin(np.pi * x2)], -1))
        cfg0 = ShellConfiguration.reference(p, Grid.on(p, 9), EDGES, True)
        cfg, tr = minimize(cfg0, p, mat, loads, options=SolverOptions(gtol=1e-12))
        assert tr.converged and tr.energies[-1] < 0
        assert np.all(np.diff(tr.energies) <= 0)
        # deflection follows the load
        assert cfg.m[4, 4, 2] < 0
        last = tr.rows[-1]
        # at a minimizer of a quadratic-plus-linear energy, Pi = 2 * internal
        internal = last["memb"] + last["memb_bend"] + last["bend_curv"]
        assert last["load_potential"] == pytest.approx(2 * internal, rel=1e-3)

    def test_thickness_gate(self):
        p = SphereCap(2.0)
        thick = MaterialParams(h=1.1)
        cfg0 = ShellConfiguration.reference(p, Grid.on(p, 5), EDGES)
        with pytest.raises(ConditionsViolated):
            minimize(cfg0, p, thick)
        _, tr = minimize(cfg0, p, thick, options=SolverOptions(max_iter=5), override_thickness_check=True)
        assert tr.thickness_override

    def test_unknown_method(self, mat):
        p = Plane()
        with pytest.raises(ValueError):
            minimize(ShellConfiguration.reference(p, Grid.on(p, 4)), p, mat, options=SolverOptions(method="newton"))

    def test_reuses_problem(self, mat):
        p = Plane()
        cfg0 = start(p, 6, 1e-3, 3)
        prob = DiscreteProblem(p, cfg0.grid, mat)
        _, a = minimize(cfg0, p, mat, problem=prob)
        _, b = minimize(cfg0, p, mat)
        assert a.energies.tolist() == b.energies.tolist()


class TestRefinement:
    def test_refine_study(self, mat):
        loads = LoadSpec(f=(0.0, 0.0, -0.01))
        prob = Problem(Plane(), mat, loads, clamp_rotations=True, options=SolverOptions(gtol=1e-11))
        rows = refine_study(prob, [5, 9, 17])
        assert [r["resolution"] for r in rows] == [5, 9, 17]
        assert all(r["converged"] for r in rows)
        e = [r["energy"] for r in rows]
        # successive differences shrink under refinement
        assert abs(e[2] - e[1]) < abs(e[1] - e[0])
