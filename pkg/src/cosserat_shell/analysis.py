"""Coercivity and convexity constants of the shell energy.

Closed-form extremal eigenvalues of the quadratic forms, thickness
admissibility for both truncation orders, the coercivity constant ``a1p`` and
sampled (Monte-Carlo) checks of the coercivity and Hessian inequalities.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .energy import MaterialParams, density, w_curv_bilinear, w_shell_bilinear
from .errors import ConditionsViolated
from .geometry import GeometryFrame, SurfacePatch, grid_points
from .tensors import norm2

H3_THICKNESS_CONSTANT = (47.0 / 4.0) ** 2 * (5.0 - 2.0 * math.sqrt(6.0))
"""Constant bounding ``h^2 C1p / c2p`` under h3 condition i) (about 13.94)."""

GAMMA_H3 = math.sqrt(2.0 / 3.0)


# ---------------------------------------------------------------------------
# eigenvalues of the quadratic forms
# ---------------------------------------------------------------------------


def form_matrix(bilinear, mat: MaterialParams) -> np.ndarray:
    """9x9 symmetric matrix of a bilinear form on 3x3 matrices (row-major basis)."""
    basis = np.eye(9).reshape(9, 3, 3)
    return bilinear(basis[:, None], basis[None, :], mat)


def quadratic_form_eigs(mat: MaterialParams) -> tuple[float, float, float, float]:
    """Numeric ``(c1p, C1p, c2p, C2p)`` from 9x9 eigendecompositions."""
    e1 = np.linalg.eigvalsh(form_matrix(w_shell_bilinear, mat))
    e2 = np.linalg.eigvalsh(form_matrix(w_curv_bilinear, mat))
    return float(e1[0]), float(e1[-1]), float(e2[0]), float(e2[-1])


def closed_form_eigs(mat: MaterialParams) -> tuple[float, float, float, float]:
    """Closed-form extremal eigenvalues from the dev/skew/trace split."""
    s1 = (mat.mu, mat.mu_c, 2 * mat.mu * (2 * mat.lam + mat.mu) / (mat.lam + 2 * mat.mu))
    k = mat.mu * mat.L_c**2
    s2 = (k * mat.b1, k * mat.b2, 3 * k * mat.b3)
    return min(s1), max(s1), min(s2), max(s2)


# ---------------------------------------------------------------------------
# admissibility and constants
# ---------------------------------------------------------------------------


def max_abs_curvature(frame: GeometryFrame) -> float:
    """Largest principal curvature modulus over a (batched) frame."""
    return float(np.max(np.abs(frame.kappa))) if frame.kappa.size else 0.0


def patch_curvature_extreme(patch: SurfacePatch, nx: int = 33, ny: int = 33) -> float:
    X1, X2 = grid_points(patch, nx, ny)
    return max_abs_curvature(patch.frame(X1, X2))


def h5_admissible(mat: MaterialParams, kappa_max: float) -> bool:
    """``h |kappa_i| < 1/2`` at every sampled point."""
    return bool(mat.h * kappa_max < 0.5)


def coercivity_constant_h5(mat: MaterialParams, kappa_max: float | None = None) -> float:
    """``a1p = min{7h/48 c1p, 47h/48 c2p}``.

    With ``kappa_max`` given, the thickness condition is checked first.
    """
    if kappa_max is not None and not h5_admissible(mat, kappa_max):
        raise ConditionsViolated(f"h*|kappa| = {mat.h * kappa_max:.6g} is not below 1/2")
    c1p, _, c2p, _ = closed_form_eigs(mat)
    return min(7 * mat.h / 48 * c1p, 47 * mat.h / 48 * c2p)


def a_min(mat: MaterialParams) -> float:
    """Lower bound on ``a`` in h3 condition ii)."""
    c1p, C1p, _, _ = closed_form_eigs(mat)
    return max(1 + math.sqrt(2) / 2, (1 + math.sqrt(1 + 3 * C1p / c1p)) / 2)


@dataclass
class H3Conditions:
    condition_i: bool
    condition_ii: bool
    a_min: float
    thickness_bound: float
    """Right-hand side ``13.94.. c2p / C1p`` of the h^2 bound in condition i)."""


def h3_conditions(mat: MaterialParams, kappa_max: float) -> H3Conditions:
    _, C1p, c2p, _ = closed_form_eigs(mat)
    bound = H3_THICKNESS_CONSTANT * c2p / C1p
    cond_i = bool(mat.h * kappa_max < 0.5 and mat.h**2 < bound)
    am = a_min(mat)
    # h |kappa| < 1/a for some a > a_min  <=>  h |kappa| < 1/a_min
    cond_ii = bool(mat.h * kappa_max * am < 1.0)
    return H3Conditions(cond_i, cond_ii, am, bound)


def _h3_branch_i(mat: MaterialParams) -> tuple[float, dict]:
    c1p, C1p, c2p, _ = closed_form_eigs(mat)
    h, g = mat.h, GAMMA_H3
    lo = (2 + 3 * g) / g * (4 / 47) * h**2 * C1p / c2p
    hi = 47 / (4 * (1 + g))
    eps = 0.5 * (lo + hi)
    delta = g * eps
    coef_E = h / 12 * (47 / 4 - delta - eps) * c1p
    coef_K = h / 12 * (47 / 4) * c2p - h**3 / 12 * C1p * (2 / delta + 3 / eps)
    return min(coef_E, coef_K), {"epsilon": eps, "delta": delta, "coef_E": coef_E, "coef_K": coef_K}


def _h3_branch_ii(mat: MaterialParams, kappa_max: float) -> tuple[float, dict]:
    c1p, _, c2p, _ = closed_form_eigs(mat)
    h = mat.h
    am = a_min(mat)
    if h * kappa_max > 0:
        a = 0.5 * (am + 1.0 / (h * kappa_max))
    else:
        a = 2.0 * am
    coef_E = h * (4 * a * a - 4 * a - 1) / (12 * a * a) * c1p
    coef_K = h * (12 * a * a - 1) / (12 * a * a) * c2p
    return min(coef_E, coef_K), {"a": a, "coef_E": coef_E, "coef_K": coef_K}


def coercivity_constant_h3(mat: MaterialParams, kappa_max: float, branch: str | None = None) -> tuple[float, str, dict]:
    """Coercivity constant of the h^3 density from the applicable proof bound.

    Branch ``"i"`` takes ``delta = sqrt(2/3) eps`` with ``eps`` at the midpoint
    of its admissible interval; branch ``"ii"`` takes ``a`` at the midpoint of
    ``(a_min, 1/(h kappa_max))``.  Without an explicit ``branch`` the first
    satisfied condition is used.
    """
    cond = h3_conditions(mat, kappa_max)
    if branch is None:
        branch = "i" if cond.condition_i else "ii" if cond.condition_ii else None
    if branch == "i" and cond.condition_i:
        a1p, info = _h3_branch_i(mat)
    elif branch == "ii" and cond.condition_ii:
        a1p, info = _h3_branch_ii(mat, kappa_max)
    else:
        raise ConditionsViolated(
            f"h3 thickness condition {branch or 'i/ii'} fails "
            f"(h|kappa| = {mat.h * kappa_max:.6g}, h^2 = {mat.h**2:.6g}, bound = {cond.thickness_bound:.6g})"
        )
    return a1p, branch, info


def coercivity_constant(mat: MaterialParams, kappa_max: float, order: str, branch: str | None = None) -> tuple[float, str]:
    if order == "h5":
        return coercivity_constant_h5(mat, kappa_max), "h5"
    a1p, br, _ = coercivity_constant_h3(mat, kappa_max, branch)
    return a1p, br


def check_thickness(mat: MaterialParams, kappa_max: float, order: str) -> bool:
    if order == "h5":
        return h5_admissible(mat, kappa_max)
    c = h3_conditions(mat, kappa_max)
    return c.condition_i or c.condition_ii


# ---------------------------------------------------------------------------
# sampled checks
# ---------------------------------------------------------------------------


def sample_strains(frame: GeometryFrame, n: int, rng: np.random.Generator):
    """Random admissible ``(E, Kc)`` at random points of a batched frame.

    Entries are uniform on [-1, 1], then right-multiplied by ``A`` so that
    ``E A = E`` and ``Kc`` has a zero third pre-image column.  Returns the
    strains and the sub-frame they belong to.
    """
    flat = frame[...] if frame.H.ndim == 1 else _flatten(frame)
    idx = rng.integers(0, flat.H.shape[0], n) if flat.H.ndim else None
    sub = flat[idx] if idx is not None else flat
    X = rng.uniform(-1.0, 1.0, (n, 3, 3))
    Y = rng.uniform(-1.0, 1.0, (n, 3, 3))
    return X @ sub.A, Y @ sub.A, sub


def _flatten(frame: GeometryFrame) -> GeometryFrame:
    kw = {}
    nb = frame.H.ndim
    for name in frame.__dataclass_fields__:
        v = getattr(frame, name)
        kw[name] = v.reshape((-1,) + v.shape[nb:]) if nb else v[None]
    return GeometryFrame(**kw)


@dataclass
class SampleCheck:
    order: str
    branch: str
    a1p: float
    samples: int
    worst_margin: float
    worst_relative_margin: float
    violations: int


def coercivity_sample_check(
    mat: MaterialParams,
    frame: GeometryFrame,
    order: str = "h5",
    n_samples: int = 100_000,
    seed: int = 0,
    branch: str | None = None,
    chunk: int = 50_000,
) -> SampleCheck:
    """Minimum of ``density - a1p (|E|^2 + |Kc|^2)`` over random admissible strains."""
    kappa = max_abs_curvature(frame)
    a1p, br = coercivity_constant(mat, kappa, order, branch)
    rng = np.random.default_rng(seed)
    worst, worst_rel, bad = math.inf, math.inf, 0
    done = 0
    while done < n_samples:
        k = min(chunk, n_samples - done)
        E, Kc, sub = sample_strains(frame, k, rng)
        w, _ = density(E, Kc, sub, mat, order)
        lower = a1p * (norm2(E) + norm2(Kc))
        margin = w - lower
        worst = min(worst, float(margin.min()))
        worst_rel = min(worst_rel, float((margin / lower).min()))
        bad += int(np.count_nonzero(margin < 0))
        done += k
    return SampleCheck(order, br, a1p, n_samples, worst, worst_rel, bad)


def second_directional_derivative(f, z0, dz, step: float = 1e-4) -> float:
    """Five-point central difference of ``t -> f(z0 + t dz)`` at 0."""
    vals = [f(z0 + k * step * dz) for k in (-2, -1, 0, 1, 2)]
    return (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3] - vals[4]) / (12 * step * step)


@dataclass
class HessianCheck:
    order: str
    a1p: float
    max_rel_error: float
    min_ratio: float
    """Smallest ``D^2 W[H, H] / (|H1|^2 + |H2|^2)`` seen; should be >= a1p."""
    base_spread: float
    """Largest relative difference between FD values at a random base and at 0."""
    evaluations: int = field(default=0)


def hessian_convexity_check(
    mat: MaterialParams,
    frame: GeometryFrame,
    order: str = "h5",
    n_base: int = 10,
    n_dir: int = 10,
    seed: int = 0,
    step: float = 1e-4,
    branch: str | None = None,
) -> HessianCheck:
    """Compare the FD second derivative with ``2 W(H1, H2)`` at a single point frame."""
    if frame.H.ndim:
        raise ValueError("hessian check expects a single-point frame")
    kappa = max_abs_curvature(frame)
    a1p, _ = coercivity_constant(mat, kappa, order, branch)
    rng = np.random.default_rng(seed)
    A = frame.A

    def f(z):
        return float(density(z[0], z[1], frame, mat, order)[0])

    def draw():
        z = rng.uniform(-1.0, 1.0, (2, 3, 3)) @ A
        return z / math.sqrt(float(np.sum(z * z)))

    bases = [draw() for _ in range(n_base)]
    dirs = [draw() for _ in range(n_dir)]
    zero = np.zeros((2, 3, 3))
    worst_rel, min_ratio, spread = 0.0, math.inf, 0.0
    count = 0
    for d in dirs:
        exact = 2.0 * f(d)
        at_zero = second_directional_derivative(f, zero, d, step)
        min_ratio = min(min_ratio, exact / float(np.sum(d * d)))
        for b in bases:
            fd = second_directional_derivative(f, b, d, step)
            worst_rel = max(worst_rel, abs(fd - exact) / abs(exact))
            spread = max(spread, abs(fd - at_zero) / abs(exact))
            count += 1
    return HessianCheck(order, a1p, worst_rel, min_ratio, spread, count)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass
class CoercivityReport:
    c1p: float
    C1p: float
    c2p: float
    C2p: float
    a1p_h5: float | None
    a1p_h3: float | None
    h3_branch: str | None
    conditions: dict
    h3_thickness_constant: float
    kappa_max: float
    samples_checked: int
    worst_margin: dict
    violations: dict

    def to_dict(self) -> dict:
        return asdict(self)


def analyze(
    mat: MaterialParams,
    frame: GeometryFrame,
    n_samples: int = 10_000,
    seed: int = 0,
) -> CoercivityReport:
    """Constants, condition flags and sampled margins for both orders."""
    c1p, C1p, c2p, C2p = closed_form_eigs(mat)
    kappa = max_abs_curvature(frame)
    h3c = h3_conditions(mat, kappa)
    h5_ok = h5_admissible(mat, kappa)
    worst, viol = {}, {}
    a5 = a3 = br = None
    if h5_ok:
        a5 = coercivity_constant_h5(mat, kappa)
        s = coercivity_sample_check(mat, frame, "h5", n_samples, seed)
        worst["h5"], viol["h5"] = s.worst_margin, s.violations
    if h3c.condition_i or h3c.condition_ii:
        a3, br, _ = coercivity_constant_h3(mat, kappa)
        s = coercivity_sample_check(mat, frame, "h3", n_samples, seed)
        worst["h3"], viol["h3"] = s.worst_margin, s.violations
    conditions = {
        "h5_thickness_ok": h5_ok,
        "h3_condition_i": h3c.condition_i,
        "h3_condition_ii": h3c.condition_ii,
        "a_min": h3c.a_min,
        "h3_thickness_bound": h3c.thickness_bound,
    }
    return CoercivityReport(
        c1p, C1p, c2p, C2p, a5, a3, br, conditions, H3_THICKNESS_CONSTANT, kappa,
        n_samples, worst, viol,
    )
