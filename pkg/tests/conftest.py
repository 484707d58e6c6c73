from __future__ import annotations

import numpy as np
import pytest

from cosserat_shell.energy import MaterialParams
from cosserat_shell.geometry import Cylinder, HyperbolicParaboloid, Plane, SphereCap

BUILTIN = {
    "plane": lambda: Plane(),
    "cylinder": lambda: Cylinder(1.0),
    "sphere-cap": lambda: SphereCap(2.0),
    "hyperbolic-paraboloid": lambda: HyperbolicParaboloid(1.0, 1.0),
}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def mat():
    return MaterialParams(mu=1.0, lam=1.0, mu_c=1.0, L_c=1.0, b1=0.5, b2=0.5, b3=0.5, h=0.05)


@pytest.fixture(params=sorted(BUILTIN))
def patch(request):
    return BUILTIN[request.param]()


def random_material(rng) -> MaterialParams:
    mu = rng.uniform(0.1, 5.0)
    return MaterialParams(
        mu=mu,
        lam=rng.uniform(-0.45 * mu, 5.0),
        mu_c=rng.uniform(0.05, 5.0),
        L_c=rng.uniform(0.1, 2.0),
        b1=rng.uniform(0.05, 0.95),
        b2=rng.uniform(0.05, 0.95),
        b3=rng.uniform(0.05, 0.95),
        h=rng.uniform(0.01, 0.2),
    )


def admissible_strains(frame, n, rng):
    """Random E, Kc with E A = E and Kc A = Kc at (broadcast) frame points."""
    E = rng.uniform(-1, 1, (n, 3, 3)) @ frame.A
    Kc = rng.uniform(-1, 1, (n, 3, 3)) @ frame.A
    return E, Kc


# ---------------------------------------------------------------------------
# independent oracle: forms as 9x9 matrices acting on row-major vec(S)
# ---------------------------------------------------------------------------

def _projectors():
    I9 = np.eye(9)
    T = np.zeros((9, 9))  # vec(S^T) = T vec(S)
    for i in range(3):
        for j in range(3):
            T[3 * j + i, 3 * i + j] = 1.0
    Psym = 0.5 * (I9 + T)
    Pskw = 0.5 * (I9 - T)
    t = np.eye(3).ravel()
    Ptr = np.outer(t, t)
    Pdev = Psym - Ptr / 3
    return Psym, Pskw, Ptr, Pdev


PSYM, PSKW, PTR, PDEV = _projectors()


def oracle_matrices(mat):
    ws = mat.mu * PSYM + mat.mu_c * PSKW + mat.lam * mat.mu / (mat.lam + 2 * mat.mu) * PTR
    wmp = mat.mu * PSYM + mat.mu_c * PSKW + 0.5 * mat.lam * PTR
    wc = mat.mu * mat.L_c**2 * (mat.b1 * PDEV + mat.b2 * PSKW + mat.b3 * PTR)
    return ws, wmp, wc


def q(M, S):
    v = S.ravel()
    return float(v @ M @ v)


def b(M, S, T):
    return float(S.ravel() @ M @ T.ravel())
