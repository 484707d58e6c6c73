from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import sqrtm

from cosserat_shell.errors import DegenerateMetric, NotOrientationPreserving
from cosserat_shell.geometry import (
    Cylinder,
    GeometryFrame,
    HyperbolicParaboloid,
    Plane,
    SphereCap,
    TabulatedPatch,
    fundamental_forms,
    identity_suite,
    is_injective,
    make_patch,
    min_area_element,
    polar_decompose,
    random_points,
    surface_tensors,
)
from cosserat_shell.tensors import SKEW_PATTERN, rotation_exp

from conftest import BUILTIN


def fd_forms(patch, x1, x2, s=1e-4):
    """Oracle: fundamental forms from central differences of the point map only."""
    y = patch.evaluate
    d1 = (y(x1 + s, x2) - y(x1 - s, x2)) / (2 * s)
    d2 = (y(x1, x2 + s) - y(x1, x2 - s)) / (2 * s)
    d11 = (y(x1 + s, x2) - 2 * y(x1, x2) + y(x1 - s, x2)) / s**2
    d22 = (y(x1, x2 + s) - 2 * y(x1, x2) + y(x1, x2 - s)) / s**2
    d12 = (y(x1 + s, x2 + s) - y(x1 + s, x2 - s) - y(x1 - s, x2 + s) + y(x1 - s, x2 - s)) / (4 * s * s)
    n = np.cross(d1, d2)
    n /= np.linalg.norm(n)
    I = np.array([[d1 @ d1, d1 @ d2], [d2 @ d1, d2 @ d2]])
    # -grad y^T grad n = (d_ab y . n) by differentiating y_a . n = 0
    II = np.array([[d11 @ n, d12 @ n], [d12 @ n, d22 @ n]])
    L = np.linalg.solve(I, II)
    return I, II, 0.5 * np.trace(L), np.linalg.det(L)


class TestFundamentalForms:
    def test_plane(self):
        I, II, L, H, K = fundamental_forms(Plane(), 0.1, -0.3)
        np.testing.assert_array_equal(I, np.eye(2))
        np.testing.assert_array_equal(II, np.zeros((2, 2)))
        assert H == 0 and K == 0

    @pytest.mark.parametrize(
        "patch, K_expected, absH",
        [(SphereCap(2.0), 0.25, 0.5), (Cylinder(1.0), 0.0, 0.5)],
        ids=["sphere", "cylinder"],
    )
    def test_curvatures_against_fd_oracle(self, patch, K_expected, absH, rng):
        for x1, x2 in zip(*random_points(patch, 10, rng, margin=0.05)):
            I, II, L, H, K = fundamental_forms(patch, x1, x2)
            I_fd, II_fd, H_fd, K_fd = fd_forms(patch, x1, x2)
            np.testing.assert_allclose(I, I_fd, atol=1e-7)
            np.testing.assert_allclose(II, II_fd, atol=1e-6)
            assert H == pytest.approx(H_fd, abs=1e-6)
            assert K == pytest.approx(K_expected, abs=1e-12)
            assert abs(H) == pytest.approx(absH, abs=1e-12)

    def test_orientation_sign(self):
        # outward-pointing upper normal of the cap and the chosen cylinder parametrization
        # both give negative mean curvature
        assert SphereCap(2.0).frame(0.1, 0.2).H == pytest.approx(-0.5)
        assert Cylinder(1.0).frame(0.1, 0.2).H == pytest.approx(-0.5)

    def test_saddle_against_oracle(self, rng):
        p = HyperbolicParaboloid(1.0, 2.0)
        for x1, x2 in zip(*random_points(p, 5, rng)):
            _, _, _, H, K = fundamental_forms(p, x1, x2)
            _, _, H_fd, K_fd = fd_forms(p, x1, x2)
            assert H == pytest.approx(H_fd, abs=1e-6)
            assert K == pytest.approx(K_fd, abs=1e-6)
            assert K < 0

    def test_weingarten_relations(self, patch, rng):
        f = patch.frame(*random_points(patch, 50, rng))
        np.testing.assert_allclose(f.Iy0 @ f.Ly0, f.IIy0, atol=1e-12)
        np.testing.assert_allclose(f.H, 0.5 * np.trace(f.Ly0, axis1=-2, axis2=-1), atol=1e-14)
        np.testing.assert_allclose(f.K, np.linalg.det(f.Ly0), atol=1e-13)
        np.testing.assert_allclose(f.kappa.sum(-1), 2 * f.H, atol=1e-12)
        np.testing.assert_allclose(f.kappa.prod(-1), f.K, atol=1e-12)

    def test_degenerate_metric(self):
        dy = np.array([[1.0, 2.0], [0.0, 0.0], [0.0, 0.0]])
        with pytest.raises(DegenerateMetric):
            GeometryFrame.from_derivatives(dy, np.zeros((3, 2, 2)))


class TestPolar:
    @pytest.mark.parametrize(
        "F, Q, U",
        [
            (np.eye(3), np.eye(3), np.eye(3)),
            (np.diag([2.0, 3.0, 4.0]), np.eye(3), np.diag([2.0, 3.0, 4.0])),
            (
                np.array([[0.0, -2, 0], [2, 0, 0], [0, 0, 3]]),
                np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 1]]),
                np.diag([2.0, 2.0, 3.0]),
            ),
        ],
    )
    def test_examples(self, F, Q, U):
        Qc, Uc = polar_decompose(F)
        np.testing.assert_allclose(Qc, Q, atol=1e-14)
        np.testing.assert_allclose(Uc, U, atol=1e-14)

    def test_against_sqrtm_oracle(self, rng):
        for _ in range(20):
            F = rng.normal(size=(3, 3))
            if np.linalg.det(F) < 0:
                F[:, 0] *= -1
            U_or = np.real(sqrtm(F.T @ F))
            Q_or = F @ np.linalg.inv(U_or)
            Q, U = polar_decompose(F)
            scale = np.linalg.norm(F)
            assert np.linalg.norm(U - U_or) <= 1e-10 * scale
            assert np.linalg.norm(Q - Q_or) <= 1e-10
            assert np.linalg.norm(Q @ U - F) <= 1e-12 * scale
            assert np.linalg.norm(Q.T @ Q - np.eye(3)) <= 1e-12
            assert np.linalg.det(Q) == pytest.approx(1.0, abs=1e-12)
            np.testing.assert_allclose(U, U.T, atol=1e-13)
            assert np.all(np.linalg.eigvalsh(U) > 0)

    def test_rejects_reflection(self):
        with pytest.raises(NotOrientationPreserving):
            polar_decompose(np.diag([1.0, 1.0, -1.0]))


class TestSurfaceTensors:
    def test_plane(self):
        A, B, C = surface_tensors(Plane().frame(0.2, 0.3))
        np.testing.assert_array_equal(A, np.diag([1.0, 1.0, 0.0]))
        np.testing.assert_array_equal(B, np.zeros((3, 3)))
        np.testing.assert_allclose(C, SKEW_PATTERN, atol=1e-15)

    def test_cayley_hamilton_sphere(self, rng):
        f = SphereCap(2.0).frame(*random_points(SphereCap(2.0), 100, rng))
        res = f.B @ f.B - 2 * f.H[:, None, None] * f.B + f.K[:, None, None] * f.A
        assert np.abs(res).max() <= 1e-10

    def test_alternator(self, patch, rng):
        f = patch.frame(*random_points(patch, 100, rng))
        np.testing.assert_allclose(np.sum(f.C**2, axis=(-1, -2)), 2.0, atol=1e-10)
        np.testing.assert_allclose(f.C @ f.C, -f.A, atol=1e-10)
        np.testing.assert_allclose(f.C, f.alternator_from_polar(), atol=1e-10)

    def test_normal_projections(self, patch, rng):
        f = patch.frame(*random_points(patch, 20, rng))
        np.testing.assert_allclose(f.A, np.eye(3) - f.n0[..., :, None] * f.n0[..., None, :], atol=1e-13)
        np.testing.assert_allclose(f.Q0[..., :, 2], f.n0, atol=1e-13)


class TestIdentitySuite:
    @staticmethod
    def rot(x1, x2):
        return rotation_exp(np.stack([np.sin(x1), x1 * x2, 0.5 * np.cos(x2)], axis=-1))

    def test_plane_all_zero(self, rng):
        p = Plane()
        f = p.frame(*random_points(p, 20, rng))
        E = rng.uniform(-1, 1, (20, 3, 3)) @ f.A
        r = identity_suite(f, E, E)
        assert max(r.values()) == 0.0

    @pytest.mark.parametrize("name", ["cylinder", "hyperbolic-paraboloid", "sphere-cap"])
    def test_builtin_bounds(self, name, rng):
        p = BUILTIN[name]()
        f = p.frame(*random_points(p, 200, rng))
        E = rng.uniform(-1, 1, (200, 3, 3)) @ f.A
        K = rng.uniform(-1, 1, (200, 3, 3)) @ f.A
        r = identity_suite(f, E, K, rotation=self.rot, patch=p)
        fd = r.pop("director_derivative")
        assert fd <= 1e-8
        assert max(r.values()) <= 1e-12

    def test_director_identity_needs_patch(self):
        with pytest.raises(ValueError):
            identity_suite(Plane().frame(0.0, 0.0), rotation=self.rot)


class TestInvariants:
    def test_swap_flips_mean_curvature(self, patch, rng):
        x1, x2 = random_points(patch, 30, rng)
        f, g = patch.frame(x1, x2), patch.swapped().frame(x2, x1)
        np.testing.assert_allclose(g.H, -f.H, atol=1e-13)
        np.testing.assert_allclose(g.K, f.K, atol=1e-13)

    def test_lift_consistency(self, patch, rng):
        f = patch.frame(*random_points(patch, 30, rng))
        np.testing.assert_array_equal(f.grad_theta(np.zeros(30)), f.grad_theta0)
        np.testing.assert_allclose(np.linalg.det(f.grad_theta(np.zeros(30))), f.area_element, rtol=1e-14)

    def test_lambda0(self, patch, rng):
        f = patch.frame(*random_points(patch, 30, rng))
        big = np.linalg.eigvalsh(np.swapaxes(f.grad_theta0, -1, -2) @ f.grad_theta0)[:, -1]
        np.testing.assert_allclose(f.lambda0, 1.0 / big, rtol=1e-12)
        assert np.all(f.lambda0 > 0) and np.all(f.lambda0 <= 1 + 1e-14)

    def test_injective_and_area(self, patch):
        assert is_injective(patch, 21, 21)
        assert min_area_element(patch, 21, 21) > 0


class TestTabulated:
    def test_matches_analytic(self, rng):
        ref = SphereCap(2.0)
        tab = TabulatedPatch(ref.evaluate)
        x1, x2 = random_points(ref, 20, rng)
        a, b = ref.frame(x1, x2), tab.frame(x1, x2)
        np.testing.assert_allclose(b.grad_y0, a.grad_y0, atol=1e-9)
        np.testing.assert_allclose(b.K, a.K, atol=1e-5)
        np.testing.assert_allclose(b.H, a.H, atol=1e-5)

    def test_default_step(self):
        tab = TabulatedPatch(Plane().evaluate, domain=(0, 3, 0, 4))
        assert tab.step == pytest.approx(5e-5)


class TestFactory:
    @pytest.mark.parametrize("kind", sorted(BUILTIN))
    def test_make_patch(self, kind):
        assert make_patch(kind).kind == kind

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            make_patch("torus")

    def test_cap_leaving_sphere(self):
        with pytest.raises(ValueError):
            SphereCap(0.5, domain=(-0.5, 0.5, -0.5, 0.5))
