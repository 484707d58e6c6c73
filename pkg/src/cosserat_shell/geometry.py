"""Initial midsurface geometry.

A :class:`SurfacePatch` maps the planar parameter rectangle onto the curved
midsurface ``y0``.  :class:`GeometryFrame` caches everything the energy needs at
a (batch of) parameter point(s): the lift ``grad_theta0 = (grad y0 | n0)``, its
polar factors, the fundamental forms, curvatures and the surface tensors
A, B, C.

Frames are built from first and second derivatives of ``y0`` only.  The normal
derivative is taken from the Weingarten relation, so the algebraic identities
between A, B, C hold to round-off for any input derivatives, including the
finite-difference ones the discrete energy uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateMetric, NotOrientationPreserving
from .tensors import SKEW_PATTERN, columns, norm2, trace, transpose

Domain = tuple[float, float, float, float]


# ---------------------------------------------------------------------------
# patches
# ---------------------------------------------------------------------------


class SurfacePatch:
    """Parametrized midsurface over a rectangle ``(x1a, x1b, x2a, x2b)``.

    Subclasses implement :meth:`evaluate` and :meth:`derivatives`; both are
    vectorized over arrays of parameter coordinates.
    """

    kind: str = "abstract"

    def __init__(self, domain: Domain = (-0.5, 0.5, -0.5, 0.5)):
        x1a, x1b, x2a, x2b = (float(v) for v in domain)
        if not (x1b > x1a and x2b > x2a):
            raise ValueError(f"empty parameter domain {domain}")
        self.domain: Domain = (x1a, x1b, x2a, x2b)

    @property
    def params(self) -> dict:
        return {}

    @property
    def diameter(self) -> float:
        x1a, x1b, x2a, x2b = self.domain
        return float(np.hypot(x1b - x1a, x2b - x2a))

    def evaluate(self, x1, x2) -> np.ndarray:
        raise NotImplementedError

    def derivatives(self, x1, x2) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(dy, ddy)`` with shapes ``(..., 3, 2)`` and ``(..., 3, 2, 2)``."""
        raise NotImplementedError

    def normal(self, x1, x2) -> np.ndarray:
        dy, _ = self.derivatives(x1, x2)
        n = np.cross(dy[..., 0], dy[..., 1])
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def frame(self, x1, x2) -> "GeometryFrame":
        dy, ddy = self.derivatives(x1, x2)
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        return GeometryFrame.from_derivatives(dy, ddy, point=np.stack([x1, x2], axis=-1))

    def swapped(self) -> "SwappedPatch":
        return SwappedPatch(self)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(params={self.params}, domain={self.domain})"


def _pack(d1, d2, d11, d12, d22):
    dy = np.stack([d1, d2], axis=-1)
    ddy = np.stack([np.stack([d11, d12], axis=-1), np.stack([d12, d22], axis=-1)], axis=-1)
    return dy, ddy


class Plane(SurfacePatch):
    kind = "plane"

    def evaluate(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        return np.stack([x1, x2, np.zeros_like(x1)], axis=-1)

    def derivatives(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        one, zero = np.ones_like(x1), np.zeros_like(x1)
        z3 = np.stack([zero, zero, zero], axis=-1)
        return _pack(np.stack([one, zero, zero], -1), np.stack([zero, one, zero], -1), z3, z3, z3)


class Cylinder(SurfacePatch):
    """Circular cylinder of radius ``r`` around the x2 axis, arclength in x1."""

    kind = "cylinder"

    def __init__(self, radius: float = 1.0, domain: Domain = (-0.5, 0.5, -0.5, 0.5)):
        super().__init__(domain)
        if radius <= 0:
            raise ValueError("cylinder radius must be positive")
        self.radius = float(radius)

    @property
    def params(self):
        return {"radius": self.radius}

    def evaluate(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        r, t = self.radius, x1 / self.radius
        return np.stack([r * np.sin(t), x2, r * np.cos(t)], axis=-1)

    def derivatives(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        r, t = self.radius, x1 / self.radius
        zero, one = np.zeros_like(x1), np.ones_like(x1)
        z3 = np.stack([zero, zero, zero], axis=-1)
        d1 = np.stack([np.cos(t), zero, -np.sin(t)], axis=-1)
        d2 = np.stack([zero, one, zero], axis=-1)
        d11 = np.stack([-np.sin(t) / r, zero, -np.cos(t) / r], axis=-1)
        return _pack(d1, d2, d11, z3, z3)


class SphereCap(SurfacePatch):
    """Upper spherical cap as the graph ``x3 = sqrt(R^2 - x1^2 - x2^2)``."""

    kind = "sphere-cap"

    def __init__(self, radius: float = 2.0, domain: Domain = (-0.5, 0.5, -0.5, 0.5)):
        super().__init__(domain)
        if radius <= 0:
            raise ValueError("sphere radius must be positive")
        x1a, x1b, x2a, x2b = self.domain
        corner = max(abs(x1a), abs(x1b)) ** 2 + max(abs(x2a), abs(x2b)) ** 2
        if corner >= radius**2:
            raise ValueError("parameter domain leaves the sphere cap")
        self.radius = float(radius)

    @property
    def params(self):
        return {"radius": self.radius}

    def evaluate(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        z = np.sqrt(self.radius**2 - x1**2 - x2**2)
        return np.stack([x1, x2, z], axis=-1)

    def derivatives(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        R2 = self.radius**2
        z = np.sqrt(R2 - x1**2 - x2**2)
        zero, one = np.zeros_like(x1), np.ones_like(x1)
        d1 = np.stack([one, zero, -x1 / z], axis=-1)
        d2 = np.stack([zero, one, -x2 / z], axis=-1)
        z3 = z**3
        d11 = np.stack([zero, zero, -(R2 - x2**2) / z3], axis=-1)
        d12 = np.stack([zero, zero, -x1 * x2 / z3], axis=-1)
        d22 = np.stack([zero, zero, -(R2 - x1**2) / z3], axis=-1)
        return _pack(d1, d2, d11, d12, d22)


class HyperbolicParaboloid(SurfacePatch):
    """Saddle ``x3 = x1^2 / a^2 - x2^2 / b^2``."""

    kind = "hyperbolic-paraboloid"

    def __init__(self, a: float = 1.0, b: float = 1.0, domain: Domain = (-0.5, 0.5, -0.5, 0.5)):
        super().__init__(domain)
        if a <= 0 or b <= 0:
            raise ValueError("paraboloid parameters must be positive")
        self.a, self.b = float(a), float(b)

    @property
    def params(self):
        return {"a": self.a, "b": self.b}

    def evaluate(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        return np.stack([x1, x2, x1**2 / self.a**2 - x2**2 / self.b**2], axis=-1)

    def derivatives(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        zero, one = np.zeros_like(x1), np.ones_like(x1)
        z3 = np.stack([zero, zero, zero], axis=-1)
        d1 = np.stack([one, zero, 2 * x1 / self.a**2], axis=-1)
        d2 = np.stack([zero, one, -2 * x2 / self.b**2], axis=-1)
        d11 = np.stack([zero, zero, 2 / self.a**2 * one], axis=-1)
        d22 = np.stack([zero, zero, -2 / self.b**2 * one], axis=-1)
        return _pack(d1, d2, d11, z3, d22)


class TabulatedPatch(SurfacePatch):
    """User-supplied map ``(x1, x2) -> y0`` differentiated numerically.

    First derivatives are central differences; second derivatives are nested
    central differences.  The default step is ``1e-5`` times the domain
    diameter.
    """

    kind = "tabulated"

    def __init__(
        self,
        func: Callable[[np.ndarray, np.ndarray], np.ndarray],
        domain: Domain = (-0.5, 0.5, -0.5, 0.5),
        step: float | None = None,
        label: str = "",
    ):
        super().__init__(domain)
        self.func = func
        self.step = float(step) if step is not None else 1e-5 * self.diameter
        self.label = label

    @property
    def params(self):
        return {"step": self.step, "label": self.label}

    def evaluate(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        return np.asarray(self.func(x1, x2), dtype=float)

    def derivatives(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        s = self.step
        f = self.evaluate
        d1 = (f(x1 + s, x2) - f(x1 - s, x2)) / (2 * s)
        d2 = (f(x1, x2 + s) - f(x1, x2 - s)) / (2 * s)
        d11 = (f(x1 + 2 * s, x2) - 2 * f(x1, x2) + f(x1 - 2 * s, x2)) / (4 * s * s)
        d22 = (f(x1, x2 + 2 * s) - 2 * f(x1, x2) + f(x1, x2 - 2 * s)) / (4 * s * s)
        d12 = (
            f(x1 + s, x2 + s) - f(x1 + s, x2 - s) - f(x1 - s, x2 + s) + f(x1 - s, x2 - s)
        ) / (4 * s * s)
        return _pack(d1, d2, d11, d12, d22)


class SwappedPatch(SurfacePatch):
    """The same surface with parameters exchanged, ``y(x1, x2) = base(x2, x1)``.

    The exchange reverses the orientation, so the normal and H change sign.
    """

    def __init__(self, base: SurfacePatch):
        x1a, x1b, x2a, x2b = base.domain
        super().__init__((x2a, x2b, x1a, x1b))
        self.base = base
        self.kind = base.kind

    @property
    def params(self):
        return dict(self.base.params, swapped=True)

    def evaluate(self, x1, x2):
        return self.base.evaluate(x2, x1)

    def derivatives(self, x1, x2):
        dy, ddy = self.base.derivatives(x2, x1)
        return dy[..., ::-1], ddy[..., ::-1, ::-1]


def make_patch(kind: str, params: dict | None = None, domain: Domain | None = None, **kw) -> SurfacePatch:
    """Build a built-in patch from its kind string and parameter dict."""
    params = dict(params or {})
    dom = {} if domain is None else {"domain": tuple(domain)}
    if kind == "plane":
        return Plane(**dom)
    if kind == "cylinder":
        return Cylinder(params.get("radius", 1.0), **dom)
    if kind == "sphere-cap":
        return SphereCap(params.get("radius", 2.0), **dom)
    if kind == "hyperbolic-paraboloid":
        return HyperbolicParaboloid(params.get("a", 1.0), params.get("b", 1.0), **dom)
    if kind == "tabulated":
        if "func" not in kw:
            raise ValueError("tabulated patch needs a 'func' callable")
        return TabulatedPatch(kw["func"], step=params.get("step"), **dom)
    raise ValueError(f"unknown patch kind {kind!r}")


# ---------------------------------------------------------------------------
# polar decomposition
# ---------------------------------------------------------------------------


def polar_decompose(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right polar decomposition ``F = Q U`` of matrices with ``det F > 0``.

    Computed from the SVD ``F = W S V^T`` as ``Q = W V^T``, ``U = V S V^T``.
    """
    F = np.asarray(F, dtype=float)
    det = np.linalg.det(F)
    if np.any(det <= 0):
        raise NotOrientationPreserving(f"det F = {np.min(det):.3e} is not positive")
    W, S, Vt = np.linalg.svd(F)
    Q = W @ Vt
    U = transpose(Vt) @ (S[..., :, None] * Vt)
    return Q, sym_(U)


def sym_(a):
    return 0.5 * (a + transpose(a))


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeometryFrame:
    """Geometric data of the initial midsurface at one or many points.

    All array fields carry the same leading batch shape.  Curvatures are in
    1/length, ``area_element`` in length^2.
    """

    point: np.ndarray
    grad_y0: np.ndarray
    grad_n0: np.ndarray
    n0: np.ndarray
    grad_theta0: np.ndarray
    grad_theta0_inv: np.ndarray
    Q0: np.ndarray
    U0: np.ndarray
    Iy0: np.ndarray
    IIy0: np.ndarray
    Ly0: np.ndarray
    H: np.ndarray
    K: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    area_element: np.ndarray
    Ihat_inv: np.ndarray
    lambda0: np.ndarray
    kappa: np.ndarray = field(repr=False)

    @classmethod
    def from_derivatives(cls, dy: np.ndarray, ddy: np.ndarray, point=None, tol: float = 1e-12) -> "GeometryFrame":
        dy = np.asarray(dy, dtype=float)
        ddy = np.asarray(ddy, dtype=float)
        batch = dy.shape[:-2]
        d1, d2 = dy[..., 0], dy[..., 1]

        Iy0 = transpose(dy) @ dy
        detI = np.linalg.det(Iy0)
        if np.any(detI < tol * trace(Iy0) ** 2):
            raise DegenerateMetric("first fundamental form is singular (not an immersion)")

        N = np.cross(d1, d2)
        Nn = np.linalg.norm(N, axis=-1)
        n0 = N / Nn[..., None]
        proj = np.eye(3) - n0[..., :, None] * n0[..., None, :]
        dn = []
        for a in range(2):
            dN = np.cross(ddy[..., :, 0, a], d2) + np.cross(d1, ddy[..., :, 1, a])
            dn.append((proj @ dN[..., None])[..., 0] / Nn[..., None])
        grad_n0 = np.stack(dn, axis=-1)

        IIy0 = -transpose(dy) @ grad_n0
        IIy0 = 0.5 * (IIy0 + transpose(IIy0))
        Ly0 = np.linalg.solve(Iy0, IIy0)
        H = 0.5 * trace(Ly0)
        K = np.linalg.det(Ly0)
        disc = np.sqrt(np.maximum(H * H - K, 0.0))
        kappa = np.stack([H - disc, H + disc], axis=-1)

        zero = np.zeros(batch + (3,))
        G = columns(d1, d2, n0)
        Ginv = np.linalg.inv(G)
        A = columns(d1, d2, zero) @ Ginv
        B = -columns(grad_n0[..., 0], grad_n0[..., 1], zero) @ Ginv
        detG = np.linalg.det(G)
        C = detG[..., None, None] * transpose(Ginv) @ SKEW_PATTERN @ Ginv
        Q0, U0 = polar_decompose(G)
        Ihat_inv = np.linalg.inv(transpose(G) @ G)
        lambda0 = np.linalg.eigvalsh(Ihat_inv)[..., 0]
        if point is None:
            point = np.full(batch + (2,), np.nan)
        return cls(
            point=np.asarray(point, float),
            grad_y0=dy,
            grad_n0=grad_n0,
            n0=n0,
            grad_theta0=G,
            grad_theta0_inv=Ginv,
            Q0=Q0,
            U0=U0,
            Iy0=Iy0,
            IIy0=IIy0,
            Ly0=Ly0,
            H=H,
            K=K,
            A=A,
            B=B,
            C=C,
            area_element=detG,
            Ihat_inv=Ihat_inv,
            lambda0=lambda0,
            kappa=kappa,
        )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.H.shape

    def __getitem__(self, idx) -> "GeometryFrame":
        """Select a sub-batch (e.g. one point) of a batched frame."""
        kw = {}
        for name in self.__dataclass_fields__:
            kw[name] = getattr(self, name)[idx]
        return GeometryFrame(**kw)

    @property
    def principal_curvatures(self) -> np.ndarray:
        return self.kappa

    def grad_theta(self, x3) -> np.ndarray:
        """``grad Theta(x3) = (grad y0 | n0) + x3 (grad n0 | 0)``."""
        x3 = np.asarray(x3, float)
        zero = np.zeros(self.n0.shape)
        dn = columns(self.grad_n0[..., 0], self.grad_n0[..., 1], zero)
        return self.grad_theta0 + x3[..., None, None] * dn

    def alternator_from_polar(self) -> np.ndarray:
        """``C`` in the form ``Q0 * pattern * Q0^T``."""
        return self.Q0 @ SKEW_PATTERN @ transpose(self.Q0)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def fundamental_forms(patch: SurfacePatch, x1, x2):
    """Return ``(I, II, L, H, K)`` at the parameter point(s)."""
    f = patch.frame(x1, x2)
    return f.Iy0, f.IIy0, f.Ly0, f.H, f.K


def surface_tensors(frame: GeometryFrame) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return frame.A, frame.B, frame.C


def grid_points(patch: SurfacePatch, nx: int, ny: int) -> tuple[np.ndarray, np.ndarray]:
    x1a, x1b, x2a, x2b = patch.domain
    x1 = np.linspace(x1a, x1b, nx)
    x2 = np.linspace(x2a, x2b, ny)
    return np.meshgrid(x1, x2, indexing="ij")


def random_points(patch: SurfacePatch, n: int, rng: np.random.Generator, margin: float = 0.0):
    """Uniform interior parameter points (``margin`` is a fraction of each side)."""
    x1a, x1b, x2a, x2b = patch.domain
    m1, m2 = margin * (x1b - x1a), margin * (x2b - x2a)
    return rng.uniform(x1a + m1, x1b - m1, n), rng.uniform(x2a + m2, x2b - m2, n)


def is_injective(patch: SurfacePatch, nx: int, ny: int, tol: float = 1e-9) -> bool:
    """No two distinct grid nodes share an image (up to ``tol``)."""
    X1, X2 = grid_points(patch, nx, ny)
    pts = patch.evaluate(X1.ravel(), X2.ravel())
    return len(cKDTree(pts).query_pairs(tol)) == 0


def min_area_element(patch: SurfacePatch, nx: int, ny: int) -> float:
    """Smallest ``det grad_theta0`` over the grid (the constant a0 must not exceed it)."""
    X1, X2 = grid_points(patch, nx, ny)
    return float(np.min(patch.frame(X1, X2).area_element))


def identity_suite(
    frame: GeometryFrame,
    E: np.ndarray | None = None,
    Kc: np.ndarray | None = None,
    rotation: Callable | None = None,
    patch: SurfacePatch | None = None,
    fd_step: float = 1e-5,
) -> dict[str, float]:
    """Residuals of the algebraic identities between A, B, C and the strain measures.

    Each value is the maximum over the frame batch.  ``E``/``Kc`` enable the
    two strain identities; ``rotation`` (a vectorized callable
    ``(x1, x2) -> (..., 3, 3)``) together with ``patch`` enables the director
    derivative identity, evaluated with central differences of step
    ``fd_step``.
    """
    A, B, C, H, K = frame.A, frame.B, frame.C, frame.H, frame.K
    I3 = np.eye(3)

    def mx(x):
        return float(np.max(np.abs(x))) if np.size(x) else 0.0

    def nrm(x):
        return mx(np.sqrt(norm2(x)))

    out = {
        "trA_minus_2": mx(trace(A) - 2.0),
        "detA": mx(np.linalg.det(A)),
        "trB_minus_2H": mx(trace(B) - 2.0 * H),
        "detB": mx(np.linalg.det(B)),
        "cayley_hamilton_B": nrm(B @ B - 2.0 * H[..., None, None] * B + K[..., None, None] * A),
        "AB_minus_B": nrm(A @ B - B),
        "BA_minus_B": nrm(B @ A - B),
        "A2_minus_A": nrm(A @ A - A),
        "C_skew": nrm(C + transpose(C)),
        "C2_plus_A": nrm(C @ C + A),
        "C_polar_form": nrm(C - frame.alternator_from_polar()),
        "C_norm2_minus_2": mx(norm2(C) - 2.0),
        "Q0_orthogonal": nrm(transpose(frame.Q0) @ frame.Q0 - I3),
        "Q0U0_minus_G": nrm(frame.Q0 @ frame.U0 - frame.grad_theta0),
        "G_e3_minus_n0": mx(np.linalg.norm(frame.grad_theta0[..., :, 2] - frame.n0, axis=-1)),
        "GinvT_e3_minus_n0": mx(np.linalg.norm(frame.grad_theta0_inv[..., 2, :] - frame.n0, axis=-1)),
    }
    if Kc is not None:
        CK = C @ Kc
        out["CKA_minus_CK"] = nrm(CK @ A - CK)
    if E is not None:
        out["EA_minus_E"] = nrm(E @ A - E)
    if rotation is not None:
        if patch is None:
            raise ValueError("the director identity needs the patch to differentiate n0")
        out["director_derivative"] = _director_identity_residual(frame, rotation, patch, fd_step)
    return out


def _director_identity_residual(frame, rotation, patch, s) -> float:
    from .tensors import axl, skew

    x1, x2 = frame.point[..., 0], frame.point[..., 1]
    Q = rotation(x1, x2)
    dQ = [
        (rotation(x1 + s, x2) - rotation(x1 - s, x2)) / (2 * s),
        (rotation(x1, x2 + s) - rotation(x1, x2 - s)) / (2 * s),
    ]

    def director(a, b):
        return (rotation(a, b) @ patch.normal(a, b)[..., None])[..., 0]

    dd = [
        (director(x1 + s, x2) - director(x1 - s, x2)) / (2 * s),
        (director(x1, x2 + s) - director(x1, x2 - s)) / (2 * s),
    ]
    zero = np.zeros(Q.shape[:-1])
    Ginv = frame.grad_theta0_inv
    Qt = transpose(Q)
    gam = [axl(skew(Qt @ d), tol=None) for d in dQ]
    Kc = columns(gam[0], gam[1], zero) @ Ginv
    lhs = Qt @ columns(dd[0], dd[1], zero) @ Ginv
    res = lhs - (frame.C @ Kc - frame.B)
    return float(np.max(np.sqrt(norm2(res))))
