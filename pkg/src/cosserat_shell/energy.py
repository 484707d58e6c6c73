"""Quadratic forms, shell energy densities and load potential.

Densities are written as symmetric bilinear forms in the pair ``(E, Kc)``;
the quadratic density is the diagonal of the bilinear one.  The discrete
assembly polarizes the bilinear form into a per-cell 18x18 matrix.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import InvalidMaterial
from .tensors import dev, inner, norm2, skew, sym, trace

ORDERS = ("h3", "h5")


@dataclass(frozen=True)
class MaterialParams:
    """Isotropic constitutive constants and shell thickness.

    Attributes
    ----------
    mu, lam : Lame constants (pressure units).
    mu_c : Cosserat couple modulus (pressure units), strictly positive.
    L_c : internal length (length units).
    b1, b2, b3 : dimensionless curvature weights in (0, 1).
    h : thickness (length units).
    """

    mu: float = 1.0
    lam: float = 1.0
    mu_c: float = 1.0
    L_c: float = 1.0
    b1: float = 0.5
    b2: float = 0.5
    b3: float = 0.5
    h: float = 0.1

    def __post_init__(self):
        for name in ("mu", "lam", "mu_c", "L_c", "b1", "b2", "b3", "h"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise InvalidMaterial(f"{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.mu <= 0:
            raise InvalidMaterial(f"mu must be > 0, got {self.mu}")
        if 2 * self.lam + self.mu <= 0:
            raise InvalidMaterial(f"2*lam + mu must be > 0, got {2 * self.lam + self.mu}")
        if self.mu_c == 0:
            raise InvalidMaterial(
                "mu_c must be > 0: the drill-free limit mu_c = 0 is not covered, "
                "its coercivity would require a new generalized Korn inequality"
            )
        if self.mu_c < 0:
            raise InvalidMaterial(f"mu_c must be > 0, got {self.mu_c}")
        if self.L_c <= 0:
            raise InvalidMaterial(f"L_c must be > 0, got {self.L_c}")
        for name in ("b1", "b2", "b3"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise InvalidMaterial(f"{name} must lie in (0, 1), got {v}")
        if self.h <= 0:
            raise InvalidMaterial(f"h must be > 0, got {self.h}")

    @property
    def poisson_ratio(self) -> float:
        return self.lam / (2 * (self.lam + self.mu))

    @property
    def young_modulus(self) -> float:
        return self.mu * (3 * self.lam + 2 * self.mu) / (self.lam + self.mu)

    @property
    def shell_trace_modulus(self) -> float:
        """``lam mu / (lam + 2 mu)``, the trace coefficient of ``W_shell``."""
        return self.lam * self.mu / (self.lam + 2 * self.mu)

    def with_thickness(self, h: float) -> "MaterialParams":
        return MaterialParams(**{**asdict(self), "h": h})

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# quadratic forms
# ---------------------------------------------------------------------------


def w_shell_bilinear(S, T, mat: MaterialParams):
    return (
        mat.mu * inner(sym(S), sym(T))
        + mat.mu_c * inner(skew(S), skew(T))
        + mat.shell_trace_modulus * trace(S) * trace(T)
    )


def w_shell(S, mat: MaterialParams):
    """``mu |sym S|^2 + mu_c |skew S|^2 + lam mu/(lam+2mu) tr(S)^2``."""
    return w_shell_bilinear(S, S, mat)


def w_shell_cartan(S, mat: MaterialParams):
    """``W_shell`` written in the orthogonal dev/skew/trace split."""
    c = 2 * mat.mu * (2 * mat.lam + mat.mu) / (3 * (mat.lam + 2 * mat.mu))
    return mat.mu * norm2(dev(sym(S))) + mat.mu_c * norm2(skew(S)) + c * trace(S) ** 2


def w_mp_bilinear(S, T, mat: MaterialParams):
    return (
        mat.mu * inner(sym(S), sym(T))
        + mat.mu_c * inner(skew(S), skew(T))
        + 0.5 * mat.lam * trace(S) * trace(T)
    )


def w_mp(S, mat: MaterialParams):
    """``mu |sym S|^2 + mu_c |skew S|^2 + lam/2 tr(S)^2``."""
    return w_mp_bilinear(S, S, mat)


def w_curv_bilinear(S, T, mat: MaterialParams):
    return (
        mat.mu
        * mat.L_c**2
        * (
            mat.b1 * inner(dev(sym(S)), dev(sym(T)))
            + mat.b2 * inner(skew(S), skew(T))
            + mat.b3 * trace(S) * trace(T)
        )
    )


def w_curv(S, mat: MaterialParams):
    """``mu L_c^2 (b1 |dev sym S|^2 + b2 |skew S|^2 + b3 tr(S)^2)``."""
    return w_curv_bilinear(S, S, mat)


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------


def _h5_terms(E1, K1, E2, K2, frame, mat):
    h = mat.h
    H, K = frame.H, frame.K
    B, C = frame.B, frame.C
    X1 = E1 @ B + C @ K1
    X2 = E2 @ B + C @ K2
    h3, h5 = h**3, h**5
    ws = w_shell_bilinear
    memb = (h + K * h3 / 12) * ws(E1, E2, mat)
    memb_bend = (
        (h3 / 12 - K * h5 / 80) * ws(X1, X2, mat)
        - (h3 / 3) * H * 0.5 * (ws(E1, X2, mat) + ws(E2, X1, mat))
        + (h3 / 6) * 0.5 * (ws(E1, X2 @ B, mat) + ws(E2, X1 @ B, mat))
        + (h5 / 80) * w_mp_bilinear(X1 @ B, X2 @ B, mat)
    )
    bend_curv = (
        (h - K * h3 / 12) * w_curv_bilinear(K1, K2, mat)
        + (h3 / 12 - K * h5 / 80) * w_curv_bilinear(K1 @ B, K2 @ B, mat)
        + (h5 / 80) * w_curv_bilinear(K1 @ B @ B, K2 @ B @ B, mat)
    )
    return memb, memb_bend, bend_curv


def _h3_terms(E1, K1, E2, K2, frame, mat):
    h = mat.h
    H, K = frame.H, frame.K
    B, C = frame.B, frame.C
    X1 = E1 @ B + C @ K1
    X2 = E2 @ B + C @ K2
    h3 = h**3
    ws = w_shell_bilinear
    memb = (h + K * h3 / 12) * ws(E1, E2, mat)
    memb_bend = (
        (h3 / 12) * ws(X1, X2, mat)
        - (h3 / 3) * H * 0.5 * (ws(E1, X2, mat) + ws(E2, X1, mat))
        + (h3 / 6) * 0.5 * (ws(E1, X2 @ B, mat) + ws(E2, X1 @ B, mat))
    )
    bend_curv = (h - K * h3 / 12) * w_curv_bilinear(K1, K2, mat) + (h3 / 12) * w_curv_bilinear(
        K1 @ B, K2 @ B, mat
    )
    return memb, memb_bend, bend_curv


_TERMS = {"h5": _h5_terms, "h3": _h3_terms}


def _check_order(order: str):
    if order not in _TERMS:
        raise ValueError(f"order must be one of {ORDERS}, got {order!r}")


def density_bilinear(E1, K1, E2, K2, frame, mat: MaterialParams, order: str = "h5"):
    """Symmetric bilinear form whose diagonal is the shell density."""
    _check_order(order)
    return sum(_TERMS[order](E1, K1, E2, K2, frame, mat))


def density(E, Kc, frame, mat: MaterialParams, order: str = "h5"):
    """Shell energy density and its split ``{memb, memb_bend, bend_curv}``."""
    _check_order(order)
    memb, mb, bc = _TERMS[order](E, Kc, E, Kc, frame, mat)
    return memb + mb + bc, {"memb": memb, "memb_bend": mb, "bend_curv": bc}


def density_h5(E, Kc, frame, mat: MaterialParams):
    return density(E, Kc, frame, mat, "h5")


def density_h3(E, Kc, frame, mat: MaterialParams):
    return density(E, Kc, frame, mat, "h3")


def rewriting_identity_residual(E, Kc, frame, mat: MaterialParams):
    """Difference between the two equivalent forms of the E-dependent h^3 terms.

    Uses ``B^2 = 2HB - KA`` and ``EA = E``; vanishes for admissible ``E``.
    """
    h, H, K, B, C = mat.h, frame.H, frame.K, frame.B, frame.C
    ws = w_shell_bilinear
    X = E @ B + C @ Kc
    lhs = (h + K * h**3 / 12) * ws(E, E, mat) - (h**3 / 3) * H * ws(E, X, mat) + (h**3 / 6) * ws(E, X @ B, mat)
    CK = C @ Kc
    rhs = (h - K * h**3 / 12) * ws(E, E, mat) - (h**3 / 3) * H * ws(E, CK, mat) + (h**3 / 6) * ws(E, CK @ B, mat)
    return lhs - rhs


def density_matrix(frame, mat: MaterialParams, order: str = "h5") -> np.ndarray:
    """Per-point symmetric 18x18 matrix ``M`` with ``density = z^T M z``.

    ``z`` stacks ``E`` and ``Kc`` row-major.
    """
    batch = frame.H.shape
    basis = np.eye(18).reshape(18, 2, 3, 3)
    shape = (18,) + (1,) * len(batch) + (3, 3)
    Eb = basis[:, 0].reshape(shape)
    Kb = basis[:, 1].reshape(shape)
    M = np.empty(batch + (18, 18))
    for i in range(18):
        vals = density_bilinear(Eb[i], Kb[i], Eb, Kb, frame, mat, order)
        M[..., i, :] = np.moveaxis(np.broadcast_to(vals, (18,) + batch), 0, -1)
    return 0.5 * (M + np.swapaxes(M, -1, -2))


# ---------------------------------------------------------------------------
# loads and totals
# ---------------------------------------------------------------------------

VectorField = Union[np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray], None]


def _eval_vector(v: VectorField, x1, x2) -> np.ndarray:
    x1 = np.asarray(x1, float)
    if v is None:
        return np.zeros(x1.shape + (3,))
    if callable(v):
        return np.broadcast_to(np.asarray(v(x1, x2), dtype=float), x1.shape + (3,))
    return np.broadcast_to(np.asarray(v, dtype=float), x1.shape + (3,))


@dataclass
class LoadSpec:
    """Dead loads: body force ``f`` on the domain, traction ``t`` on the free
    boundary, and dead couples ``c`` (domain) / ``c_boundary`` (free boundary).

    Each entry is a constant 3-vector, a callable ``(x1, x2) -> (..., 3)``, or
    ``None`` for zero.
    """

    f: VectorField = None
    t: VectorField = None
    c: VectorField = None
    c_boundary: VectorField = None

    def force(self, x1, x2):
        return _eval_vector(self.f, x1, x2)

    def traction(self, x1, x2):
        return _eval_vector(self.t, x1, x2)

    def couple(self, x1, x2):
        return _eval_vector(self.c, x1, x2)

    def boundary_couple(self, x1, x2):
        return _eval_vector(self.c_boundary, x1, x2)

    @property
    def is_zero(self) -> bool:
        return all(v is None for v in (self.f, self.t, self.c, self.c_boundary))


@dataclass
class EnergyBreakdown:
    memb: float
    memb_bend: float
    bend_curv: float
    load_potential: float
    extra: dict = field(default_factory=dict)

    @property
    def internal(self) -> float:
        return self.memb + self.memb_bend + self.bend_curv

    @property
    def total(self) -> float:
        return self.internal - self.load_potential

    def to_dict(self) -> dict:
        return {
            "memb": self.memb,
            "memb_bend": self.memb_bend,
            "bend_curv": self.bend_curv,
            "internal": self.internal,
            "load_potential": self.load_potential,
            "total": self.total,
        }


def load_potential(config, loads: LoadSpec, patch=None) -> float:
    """Potential of the dead loads on ``config`` (a ``ShellConfiguration``)."""
    from .discrete import load_potential_and_gradient

    return load_potential_and_gradient(config, loads, patch)[0]


def total_energy(config, patch, mat: MaterialParams, loads: LoadSpec | None = None, order: str = "h5") -> EnergyBreakdown:
    """Assembled internal energy minus load potential on the grid."""
    from .discrete import DiscreteProblem

    return DiscreteProblem(patch, config.grid, mat, loads or LoadSpec(), order).breakdown(config)
