"""Direct minimization of the discrete shell energy over ``(m, Q)``.

Rotations are updated by the exponential map ``Q <- Q exp(anti(t p))`` and
positions additively; the search direction lives in the product of the nodal
position space and the right-trivialized tangent spaces of SO(3).  The default
direction is limited-memory BFGS with Barzilai-Borwein initial scaling; plain
gradient descent with a Barzilai-Borwein step is available as a baseline.  In
both cases the step is accepted by Armijo backtracking, so the energy along
accepted iterates never increases.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .analysis import check_thickness, max_abs_curvature
from .discrete import DiscreteProblem, Grid, ShellConfiguration
from .energy import LoadSpec, MaterialParams
from .errors import ConditionsViolated, LineSearchFailure
from .geometry import SurfacePatch

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("iteration", "energy", "grad_norm", "step", "memb", "memb_bend", "bend_curv", "load_potential")


@dataclass
class SolverOptions:
    max_iter: int = 500
    gtol: float = 1e-10
    method: str = "lbfgs"
    memory: int = 10
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    record_breakdown: bool = True


@dataclass
class SolveTrace:
    rows: list = field(default_factory=list)
    converged: bool = False
    status: str = ""
    thickness_override: bool = False

    def append(self, **row):
        self.rows.append(row)

    @property
    def energies(self) -> np.ndarray:
        return np.array([r["energy"] for r in self.rows])

    @property
    def grad_norms(self) -> np.ndarray:
        return np.array([r["grad_norm"] for r in self.rows])

    @property
    def iterations(self) -> int:
        return len(self.rows) - 1


def _dot(a, b):
    return float(np.sum(a[0] * b[0]) + np.sum(a[1] * b[1]))


def _norm(a):
    return float(np.sqrt(_dot(a, a)))


def _two_loop(g, mem):
    q = (g[0].copy(), g[1].copy())
    alphas = []
    for s, y, rho in reversed(mem):
        a = rho * _dot(s, q)
        alphas.append(a)
        q = (q[0] - a * y[0], q[1] - a * y[1])
    if mem:
        s, y, _ = mem[-1]
        gamma = _dot(s, y) / _dot(y, y)
    else:
        gamma = 1.0
    r = (gamma * q[0], gamma * q[1])
    for (s, y, rho), a in zip(mem, reversed(alphas)):
        b = rho * _dot(y, r)
        r = (r[0] + (a - b) * s[0], r[1] + (a - b) * s[1])
    return (-r[0], -r[1])


def minimize(
    config0: ShellConfiguration,
    patch: SurfacePatch,
    mat: MaterialParams,
    loads: LoadSpec | None = None,
    order: str = "h5",
    options: SolverOptions | None = None,
    override_thickness_check: bool = False,
    problem: DiscreteProblem | None = None,
) -> tuple[ShellConfiguration, SolveTrace]:
    """Minimize the total energy starting from ``config0``.

    Raises ``ConditionsViolated`` when the thickness conditions of ``order``
    fail (unless overridden; the override is recorded in the trace) and
    ``LineSearchFailure`` when no acceptable step is found away from
    round-off level.
    """
    opts = options or SolverOptions()
    if opts.method not in ("lbfgs", "gd"):
        raise ValueError(f"unknown method {opts.method!r}")
    prob = problem or DiscreteProblem(patch, config0.grid, mat, loads or LoadSpec(), order)
    kappa = max_abs_curvature(prob.frame)
    ok = check_thickness(mat, kappa, order)
    if not ok and not override_thickness_check:
        raise ConditionsViolated(
            f"thickness h = {mat.h} violates the {order} conditions (max |kappa| = {kappa:.6g})"
        )
    trace = SolveTrace(thickness_override=not ok)

    cfg = config0.enforce_dirichlet()
    fmask = config0.mask[..., None]
    rmask = config0.rotation_mask[..., None]

    def evaluate(c):
        f, gm, gw = prob.energy_and_gradient(c)
        return f, (np.where(fmask, 0.0, gm), np.where(rmask, 0.0, gw))

    def record(it, c, f, g, step):
        row = {"iteration": it, "energy": f, "grad_norm": _norm(g), "step": step}
        if opts.record_breakdown:
            b = prob.breakdown(c)
            row.update(memb=b.memb, memb_bend=b.memb_bend, bend_curv=b.bend_curv, load_potential=b.load_potential)
        else:
            row.update(memb=np.nan, memb_bend=np.nan, bend_curv=np.nan, load_potential=np.nan)
        trace.append(**row)

    f, g = evaluate(cfg)
    f_scale = abs(f)
    record(0, cfg, f, g, 0.0)
    mem: deque = deque(maxlen=opts.memory)
    prev_step = None
    for it in range(1, opts.max_iter + 1):
        gn = _norm(g)
        if gn <= opts.gtol:
            trace.converged, trace.status = True, "gtol"
            break
        if opts.method == "lbfgs":
            p = _two_loop(g, mem)
            slope = _dot(g, p)
            if slope >= 0:
                mem.clear()
                p = (-g[0], -g[1])
                slope = -gn * gn
            t = 1.0 if mem else min(1.0, 1.0 / gn)
        else:
            p = (-g[0], -g[1])
            slope = -gn * gn
            if prev_step is not None and _dot(*prev_step) > 0:
                s, y = prev_step
                t = _dot(s, s) / _dot(s, y)
            else:
                t = min(1.0, 1.0 / gn)

        for _ in range(opts.max_backtracks):
            trial = cfg.retract(t * p[0], t * p[1])
            f_new, g_new = evaluate(trial)
            if f_new <= f + opts.armijo_c * t * slope:
                break
            t *= opts.backtrack
        else:
            # no acceptable step: stationary up to round-off, or a genuine failure
            if abs(slope) * t <= 1e-14 * max(f_scale, abs(f), 1e-300) or abs(f) <= 1e-15 * f_scale:
                trace.converged, trace.status = True, "roundoff"
                break
            raise LineSearchFailure(
                f"Armijo backtracking failed at iteration {it} (energy {f:.6e}, |g| {gn:.3e})",
                config=cfg,
                trace=trace,
            )

        s = (t * p[0], t * p[1])
        y = (g_new[0] - g[0], g_new[1] - g[1])
        sy = _dot(s, y)
        if sy > 1e-300:
            mem.append((s, y, 1.0 / sy))
        prev_step = (s, y)
        cfg, f, g = trial, f_new, g_new
        record(it, cfg, f, g, t)
    else:
        trace.converged = _norm(g) <= opts.gtol
        trace.status = "gtol" if trace.converged else "max_iter"

    log.info("minimize: %s after %d iterations, energy %.6e", trace.status, trace.iterations, f)
    return cfg, trace


# ---------------------------------------------------------------------------
# resolution study
# ---------------------------------------------------------------------------


@dataclass
class Problem:
    """Everything but the grid resolution of a minimization run."""

    patch: SurfacePatch
    mat: MaterialParams
    loads: LoadSpec = field(default_factory=LoadSpec)
    order: str = "h5"
    dirichlet_edges: tuple[str, ...] = ("x1-", "x1+", "x2-", "x2+")
    clamp_rotations: bool = False
    options: SolverOptions = field(default_factory=SolverOptions)

    def initial(self, n: int) -> ShellConfiguration:
        return ShellConfiguration.reference(self.patch, Grid.on(self.patch, n), self.dirichlet_edges, self.clamp_rotations)


def refine_study(problem: Problem, resolutions) -> list[dict]:
    """Converged energies of ``problem`` on ``n x n`` grids for each ``n``."""
    out = []
    for n in resolutions:
        cfg, tr = minimize(problem.initial(n), problem.patch, problem.mat, problem.loads, problem.order, problem.options)
        out.append(
            {
                "resolution": int(n),
                "energy": float(tr.energies[-1]),
                "iterations": tr.iterations,
                "converged": tr.converged,
                "status": tr.status,
            }
        )
    return out
