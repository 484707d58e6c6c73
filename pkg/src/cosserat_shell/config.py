"""Run configuration: JSON loading, schema validation and load expressions.

Load and boundary components may be numbers or strings in a small arithmetic
grammar over the parameter coordinates::

    expr  := expr ('+' | '-') term | term
    term  := term ('*' | '/') unary | unary
    unary := ('+' | '-') unary | atom
    atom  := number | 'x1' | 'x2' | 'pi' | ('sin' | 'cos') '(' expr ')' | '(' expr ')'

Expressions are parsed with :mod:`ast` and evaluated with numpy, so they
vectorize over node arrays.
"""

from __future__ import annotations

import ast
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .discrete import EDGES, Grid, ShellConfiguration
from .energy import LoadSpec, MaterialParams
from .errors import ConfigError
from .geometry import SurfacePatch, TabulatedPatch, make_patch
from .kinematics import RotationField

_FUNCS = {"sin": np.sin, "cos": np.cos}
_NAMES = {"pi": math.pi}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
}


def load_schema(name: str) -> dict:
    text = resources.files("cosserat_shell").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate_document(doc: Any, name: str) -> None:
    """Validate ``doc`` against a shipped schema; raise ``ConfigError`` with the field path."""
    try:
        jsonschema.validate(doc, load_schema(name))
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{name}: {path}: {exc.message}") from None


class Expression:
    """Compiled scalar expression in ``x1``, ``x2``."""

    def __init__(self, source: str | float | int):
        self.source = source
        if isinstance(source, (int, float)) and not isinstance(source, bool):
            self._tree = None
            self.value = float(source)
            return
        if not isinstance(source, str):
            raise ConfigError(f"expression must be a number or string, got {source!r}")
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {source!r}: {exc.msg}") from None
        self._check(tree.body)
        self._tree = tree.body
        self.value = None

    def _check(self, node):
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            self._check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            pass
        elif isinstance(node, ast.Name) and node.id in ("x1", "x2", *_NAMES):
            pass
        elif (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            self._check(node.args[0])
        else:
            raise ConfigError(f"unsupported construct in expression {self.source!r}: {ast.dump(node)[:60]}")

    def _eval(self, node, x1, x2):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, x1, x2), self._eval(node.right, x1, x2))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, x1, x2)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return {"x1": x1, "x2": x2}.get(node.id, _NAMES.get(node.id))
        return _FUNCS[node.func.id](self._eval(node.args[0], x1, x2))

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if self._tree is None:
            return np.full(np.broadcast_shapes(x1.shape, x2.shape), self.value)
        out = self._eval(self._tree, x1, x2)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast_shapes(x1.shape, x2.shape)).copy()

    @property
    def is_constant(self) -> bool:
        return self._tree is None


def vector_field(items) -> Any:
    """Three expressions -> constant vector (if all numeric) or vectorized callable."""
    exprs = [Expression(v) for v in items]
    if all(e.is_constant for e in exprs):
        return np.array([e.value for e in exprs])

    def f(x1, x2):
        return np.stack([e(x1, x2) for e in exprs], axis=-1)

    return f


@dataclass
class RunConfig:
    patch: SurfacePatch
    grid: Grid
    mat: MaterialParams
    loads: LoadSpec
    dirichlet: tuple[str, ...]
    displacement: Any
    clamp_rotations: bool
    order: str
    method: str
    max_iter: int
    gtol: float
    seed: int
    perturbation: float
    samples: int
    analysis_grid: tuple[int, int]
    a0: float | None
    output_dir: Path
    outputs: dict = field(default_factory=dict)
    nz: int = 5
    raw: dict = field(default_factory=dict)

    @property
    def traction_edges(self) -> tuple[str, ...]:
        return tuple(e for e in EDGES if e not in self.dirichlet)

    def output_path(self, key: str) -> Path:
        return self.output_dir / self.outputs[key]

    def initial_configuration(self) -> ShellConfiguration:
        """Reference state with Dirichlet targets and the seeded start perturbation."""
        cfg = ShellConfiguration.reference(self.patch, self.grid, self.dirichlet, self.clamp_rotations)
        if self.displacement is not None:
            X1, X2 = self.grid.nodes()
            u = self.displacement(X1, X2) if callable(self.displacement) else np.broadcast_to(self.displacement, cfg.m.shape)
            cfg = ShellConfiguration(cfg.grid, cfg.m, cfg.rotations, cfg.dirichlet_edges, cfg.m + u, cfg.Q_star)
        if self.perturbation > 0:
            rng = np.random.default_rng(self.seed)
            dm = self.perturbation * rng.uniform(-1.0, 1.0, cfg.m.shape)
            dw = self.perturbation * rng.uniform(-1.0, 1.0, cfg.m.shape)
            cfg = cfg.with_state(cfg.m + dm, cfg.rotations.right_multiply_exp(dw))
        return cfg.enforce_dirichlet()


DEFAULT_OUTPUTS = {
    "report": "report.json",
    "trace": "trace.csv",
    "mesh": "midsurface.obj",
    "summary": "summary.json",
    "solution": "solution.json",
    "slab": "slab.vtk",
}


def _build_patch(block: dict) -> SurfacePatch:
    kind = block["kind"]
    domain = block.get("domain")
    if domain is not None:
        if not (domain[1] > domain[0] and domain[3] > domain[2]):
            raise ConfigError(f"patch/domain: empty rectangle {domain}")
    try:
        if kind == "tabulated":
            if "y0" not in block:
                raise ConfigError("patch/y0: a tabulated patch needs three expressions for y0")
            f = vector_field(block["y0"])
            if not callable(f):
                raise ConfigError("patch/y0: tabulated surface cannot be constant")
            params = block.get("params", {})
            kw = {} if domain is None else {"domain": tuple(domain)}
            return TabulatedPatch(f, step=params.get("step"), label="expression", **kw)
        return make_patch(kind, block.get("params", {}), domain)
    except ValueError as exc:
        raise ConfigError(f"patch: {exc}") from None


def parse_config(doc: dict, base_dir: Path | str = ".", seed: int | None = None) -> RunConfig:
    validate_document(doc, "config")
    patch = _build_patch(doc["patch"])
    nx, ny = doc["patch"].get("grid", [17, 17])
    grid = Grid.on(patch, nx, ny)
    m = doc["material"]
    mat = MaterialParams(
        mu=m["mu"], lam=m["lambda"], mu_c=m["mu_c"], L_c=m["L_c"], b1=m["b1"], b2=m["b2"], b3=m["b3"], h=m["h"]
    )
    lb = doc.get("loads", {})
    loads = LoadSpec(**{k: vector_field(v) for k, v in lb.items()})
    bb = doc.get("boundary", {})
    dirichlet = tuple(e for e in EDGES if e in bb.get("dirichlet", []))
    disp = vector_field(bb["displacement"]) if "displacement" in bb else None
    sb = doc.get("solver", {})
    ab = doc.get("analysis", {})
    ob = doc.get("output", {})
    outputs = {k: ob.get(k, v) for k, v in DEFAULT_OUTPUTS.items()}
    return RunConfig(
        patch=patch,
        grid=grid,
        mat=mat,
        loads=loads,
        dirichlet=dirichlet,
        displacement=disp,
        clamp_rotations=bool(bb.get("clamp_rotations", False)),
        order=sb.get("order", "h5"),
        method=sb.get("method", "lbfgs"),
        max_iter=int(sb.get("max_iter", 500)),
        gtol=float(sb.get("gtol", 1e-10)),
        seed=int(seed if seed is not None else sb.get("seed", 0)),
        perturbation=float(sb.get("perturbation", 0.0)),
        samples=int(ab.get("samples", 10_000)),
        analysis_grid=tuple(ab.get("grid", [nx, ny])),
        a0=doc["patch"].get("a0"),
        output_dir=(Path(base_dir) / ob.get("dir", ".")).resolve(),
        outputs=outputs,
        nz=int(ob.get("nz", 5)),
        raw=doc,
    )


def load_config(path: str | Path, seed: int | None = None) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(doc, path.parent, seed)


def rotations_from_quaternions(q) -> RotationField:
    return RotationField(np.asarray(q, dtype=float))
