"""Graph-level assembly: context graphs, Laplacians and self-consistency.

Contexts sit on the vertices of an undirected weighted graph; each carries a
charge vector and a local quadratic (or smooth) cost.  The global action adds
the local costs and a pairwise coupling (w/2)|q_C - q_C'|^2 per edge, where
the stored edge weight already combines any physical and informational
couplings into a single coefficient.  The Euler-Lagrange residual of that
action is

    r(C) = K_C (q_C - preferred_C) + sum_{C' ~ C} w_{CC'} (q_C - q_{C'})

and self-consistent charge fields are its zeros.  For quadratic specs the
solver is one direct block solve; for general smooth costs it is a damped
Newton iteration with backtracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    ConstructionError,
    DegenerateSpecError,
    DimensionError,
    DomainError,
    EvaluationError,
    FieldError,
    NonConvergenceError,
)
from .slayer import QuadraticFunctional, _charge_values

__all__ = [
    "ChainContinuumReport",
    "ContextGraph",
    "GlobalActionSpec",
    "SmoothFunctional",
    "SolveResult",
    "chain_continuum_report",
    "chain_graph",
    "el_residual",
    "global_action",
    "laplacian_apply",
    "solve_self_consistent",
]

RESIDUAL_TOL = 1e-10
DEFAULT_MAX_ITER = 200


class ContextGraph:
    """Undirected weighted graph of contexts with per-vertex charge sizes.

    Edge weights must be >= 0; self-loops and duplicate edges (in either
    orientation) are rejected.  Coupled vertices must carry charge vectors of
    equal size.
    """

    __slots__ = ("vertices", "charge_sizes", "edges", "_adjacency")

    def __init__(
        self,
        vertices: Sequence[tuple[str, int]],
        edges: Sequence[tuple[str, str, float]] = (),
    ):
        names: list[str] = []
        sizes: dict[str, int] = {}
        for name, r in vertices:
            name = str(name)
            if name in sizes:
                raise ConstructionError(f"duplicate vertex id {name!r}")
            r = int(r)
            if r < 1:
                raise DimensionError(f"charge size of {name!r} must be >= 1, got {r}")
            names.append(name)
            sizes[name] = r
        seen: set[frozenset] = set()
        cleaned: list[tuple[str, str, float]] = []
        adjacency: dict[str, list[tuple[str, float]]] = {n: [] for n in names}
        for a, b, w in edges:
            a, b, w = str(a), str(b), float(w)
            if a not in sizes or b not in sizes:
                raise ConstructionError(f"edge ({a!r}, {b!r}) references unknown vertex")
            if a == b:
                raise ConstructionError(f"self-loop on {a!r} is not allowed")
            if not (w >= 0.0) or not math.isfinite(w):
                raise ConstructionError(
                    f"edge ({a!r}, {b!r}) weight must be finite and >= 0, got {w}"
                )
            key = frozenset((a, b))
            if key in seen:
                raise ConstructionError(f"duplicate edge between {a!r} and {b!r}")
            seen.add(key)
            if sizes[a] != sizes[b]:
                raise ConstructionError(
                    f"edge ({a!r}, {b!r}) couples charge sizes "
                    f"{sizes[a]} and {sizes[b]}"
                )
            cleaned.append((a, b, w))
            adjacency[a].append((b, w))
            adjacency[b].append((a, w))
        object.__setattr__(self, "vertices", tuple(names))
        object.__setattr__(self, "charge_sizes", sizes)
        object.__setattr__(self, "edges", tuple(cleaned))
        object.__setattr__(self, "_adjacency", adjacency)

    def __setattr__(self, name, value):
        raise AttributeError("ContextGraph is immutable")

    def neighbors(self, vertex: str) -> list[tuple[str, float]]:
        if vertex not in self.charge_sizes:
            raise FieldError(f"unknown vertex {vertex!r}")
        return list(self._adjacency[vertex])

    def degree(self, vertex: str) -> int:
        return len(self.neighbors(vertex))

    def __repr__(self) -> str:
        return f"ContextGraph(|V|={len(self.vertices)}, |E|={len(self.edges)})"


def _check_field(graph: ContextGraph, field: Mapping) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    for name in graph.vertices:
        if name not in field:
            raise FieldError(f"field is missing vertex {name!r}")
        v = _charge_values(field[name])
        if v.size != graph.charge_sizes[name]:
            raise FieldError(
                f"field at {name!r} has size {v.size}, expected "
                f"{graph.charge_sizes[name]}"
            )
        if not np.all(np.isfinite(v)):
            raise FieldError(f"field at {name!r} has non-finite entries")
        out[name] = v
    return out


def laplacian_apply(graph: ContextGraph, field: Mapping) -> dict[str, np.ndarray]:
    """Graph Laplacian of a charge field: (Lf)(C) = sum_{C'~C} w (f(C) - f(C'))."""
    f = _check_field(graph, field)
    out: dict[str, np.ndarray] = {}
    for name in graph.vertices:
        acc = np.zeros(graph.charge_sizes[name])
        for other, w in graph.neighbors(name):
            acc += w * (f[name] - f[other])
        out[name] = acc
    return out


class SmoothFunctional:
    """A smooth per-vertex cost given as callables, for the iterative solver.

    Gradient and Hessian default to central finite differences of ``cost``.
    """

    __slots__ = ("_cost", "_gradient", "_hessian", "dim", "fd_step")

    def __init__(
        self,
        cost: Callable[[np.ndarray], float],
        dim: int,
        gradient: Callable[[np.ndarray], np.ndarray] | None = None,
        hessian: Callable[[np.ndarray], np.ndarray] | None = None,
        fd_step: float = 1e-6,
    ):
        if dim < 1:
            raise DimensionError(f"functional dimension must be >= 1, got {dim}")
        object.__setattr__(self, "_cost", cost)
        object.__setattr__(self, "_gradient", gradient)
        object.__setattr__(self, "_hessian", hessian)
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "fd_step", float(fd_step))

    def __setattr__(self, name, value):
        raise AttributeError("SmoothFunctional is immutable")

    def cost(self, q) -> float:
        val = float(self._cost(_charge_values(q)))
        if not math.isfinite(val):
            raise EvaluationError("vertex cost returned a non-finite value")
        return val

    def gradient(self, q) -> np.ndarray:
        x = _charge_values(q)
        if self._gradient is not None:
            return np.asarray(self._gradient(x), dtype=float).reshape(-1)
        h = self.fd_step
        out = np.empty(x.size)
        for i in range(x.size):
            e = np.zeros(x.size)
            e[i] = h
            out[i] = (self.cost(x + e) - self.cost(x - e)) / (2.0 * h)
        return out

    def hessian(self, q) -> np.ndarray:
        x = _charge_values(q)
        if self._hessian is not None:
            return np.asarray(self._hessian(x), dtype=float)
        h = math.sqrt(self.fd_step)
        out = np.empty((x.size, x.size))
        f0 = self.cost(x)
        for i in range(x.size):
            ei = np.zeros(x.size)
            ei[i] = h
            out[i, i] = (self.cost(x + ei) - 2.0 * f0 + self.cost(x - ei)) / (h * h)
            for j in range(i + 1, x.size):
                ej = np.zeros(x.size)
                ej[j] = h
                out[i, j] = out[j, i] = (
                    self.cost(x + ei + ej)
                    - self.cost(x + ei - ej)
                    - self.cost(x - ei + ej)
                    + self.cost(x - ei - ej)
                ) / (4.0 * h * h)
        return (out + out.T) / 2.0


@dataclass(frozen=True)
class GlobalActionSpec:
    """A context graph plus one cost functional per vertex."""

    graph: ContextGraph
    functionals: Mapping[str, QuadraticFunctional | SmoothFunctional]

    def __post_init__(self):
        funcs = dict(self.functionals)
        for name in self.graph.vertices:
            if name not in funcs:
                raise FieldError(f"no functional for vertex {name!r}")
            if funcs[name].dim != self.graph.charge_sizes[name]:
                raise DimensionError(
                    f"functional at {name!r} has dim {funcs[name].dim}, expected "
                    f"{self.graph.charge_sizes[name]}"
                )
        object.__setattr__(self, "functionals", funcs)

    @property
    def quadratic(self) -> bool:
        return all(
            isinstance(f, QuadraticFunctional) for f in self.functionals.values()
        )


def global_action(spec: GlobalActionSpec, field: Mapping) -> float:
    """Sum of vertex costs plus (w/2)|q_C - q_C'|^2 per edge, each edge once."""
    f = _check_field(spec.graph, field)
    total = 0.0
    for name in spec.graph.vertices:
        total += spec.functionals[name].cost(f[name])
    for a, b, w in spec.graph.edges:
        diff = f[a] - f[b]
        total += 0.5 * w * float(diff @ diff)
    return float(total)


def el_residual(spec: GlobalActionSpec, field: Mapping) -> dict[str, np.ndarray]:
    """Gradient of the global action, per vertex."""
    f = _check_field(spec.graph, field)
    coupling = laplacian_apply(spec.graph, f)
    out: dict[str, np.ndarray] = {}
    for name in spec.graph.vertices:
        out[name] = spec.functionals[name].gradient(f[name]) + coupling[name]
    return out


def _residual_norm(residual: Mapping[str, np.ndarray]) -> float:
    return max(float(np.linalg.norm(v)) for v in residual.values())


@dataclass(frozen=True)
class SolveResult:
    charges: dict[str, np.ndarray]
    residual_norm: float
    iterations: int


def _layout(graph: ContextGraph) -> tuple[dict[str, slice], int]:
    offsets: dict[str, slice] = {}
    pos = 0
    for name in graph.vertices:
        r = graph.charge_sizes[name]
        offsets[name] = slice(pos, pos + r)
        pos += r
    return offsets, pos


def _assemble_system(spec: GlobalActionSpec, hessians: Mapping[str, np.ndarray]):
    offsets, n = _layout(spec.graph)
    a = np.zeros((n, n))
    for name in spec.graph.vertices:
        a[offsets[name], offsets[name]] += hessians[name]
    for u, v, w in spec.graph.edges:
        su, sv = offsets[u], offsets[v]
        r = spec.graph.charge_sizes[u]
        eye = w * np.eye(r)
        a[su, su] += eye
        a[sv, sv] += eye
        a[su.start : su.stop, sv.start : sv.stop] -= eye
        a[sv.start : sv.stop, su.start : su.stop] -= eye
    return a, offsets, n


def solve_self_consistent(
    spec: GlobalActionSpec,
    initial: Mapping | None = None,
    tol: float = RESIDUAL_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SolveResult:
    """Charge field with vanishing Euler-Lagrange residual.

    Quadratic specs are solved in one direct block solve; smooth specs run a
    damped Newton iteration with backtracking on the residual norm, starting
    from ``initial`` (default: the preferred charges, or zeros for smooth
    functionals).  ``residual_norm`` is the max per-vertex gradient norm.

    :raises DegenerateSpecError: if the assembled linear system is singular.
    :raises NonConvergenceError: if the iteration budget is exhausted.
    """
    if not (tol > 0.0):
        raise DomainError(f"tolerance must be positive, got {tol}")
    graph = spec.graph
    offsets, n = _layout(graph)

    if spec.quadratic:
        hessians = {name: spec.functionals[name].stiffness for name in graph.vertices}
        a, offsets, n = _assemble_system(spec, hessians)
        rhs = np.zeros(n)
        for name in graph.vertices:
            func = spec.functionals[name]
            rhs[offsets[name]] = func.stiffness @ func.preferred
        try:
            x = np.linalg.solve(a, rhs)
        except np.linalg.LinAlgError as exc:
            raise DegenerateSpecError(f"assembled system is singular: {exc}") from exc
        if not np.all(np.isfinite(x)):
            raise DegenerateSpecError("assembled system is numerically singular")
        field = {name: x[offsets[name]].copy() for name in graph.vertices}
        res = _residual_norm(el_residual(spec, field))
        if res > tol:
            raise DegenerateSpecError(
                f"direct solve residual {res:.3e} exceeds {tol:.1e}"
            )
        return SolveResult(field, res, 1)

    if initial is None:
        field = {}
        for name in graph.vertices:
            func = spec.functionals[name]
            if isinstance(func, QuadraticFunctional):
                field[name] = np.array(func.preferred)
            else:
                field[name] = np.zeros(graph.charge_sizes[name])
    else:
        field = _check_field(graph, initial)
        field = {k: v.copy() for k, v in field.items()}

    residual = el_residual(spec, field)
    res = _residual_norm(residual)
    for iteration in range(1, max_iter + 1):
        if res <= tol:
            return SolveResult(field, res, iteration - 1)
        hessians = {
            name: spec.functionals[name].hessian(field[name])
            for name in graph.vertices
        }
        a, offsets, n = _assemble_system(spec, hessians)
        r = np.zeros(n)
        for name in graph.vertices:
            r[offsets[name]] = residual[name]
        try:
            step = np.linalg.solve(a, -r)
        except np.linalg.LinAlgError as exc:
            raise DegenerateSpecError(f"Newton system is singular: {exc}") from exc
        if not np.all(np.isfinite(step)):
            raise DegenerateSpecError("Newton system is numerically singular")
        damping = 1.0
        while damping > 1e-10:
            trial = {
                name: field[name] + damping * step[offsets[name]]
                for name in graph.vertices
            }
            try:
                trial_residual = el_residual(spec, trial)
            except EvaluationError:
                damping /= 2.0
                continue
            trial_res = _residual_norm(trial_residual)
            if trial_res <= (1.0 - 0.25 * damping) * res or trial_res <= tol:
                break
            damping /= 2.0
        else:
            raise NonConvergenceError(
                f"line search stalled at residual {res:.3e}", residual=res
            )
        field, residual, res = trial, trial_residual, trial_res
    if res <= tol:
        return SolveResult(field, res, max_iter)
    raise NonConvergenceError(
        f"no convergence after {max_iter} iterations (residual {res:.3e})",
        residual=res,
    )


def chain_graph(n: int, weight: float) -> ContextGraph:
    """Path graph on n scalar-charge vertices "0" .. "n-1" with uniform weight."""
    if n < 2:
        raise DomainError(f"a chain needs at least 2 vertices, got {n}")
    vertices = [(str(i), 1) for i in range(n)]
    edges = [(str(i), str(i + 1), float(weight)) for i in range(n - 1)]
    return ContextGraph(vertices, edges)


@dataclass(frozen=True)
class ChainContinuumReport:
    """Agreement of the chain Laplacian with the 1D continuum limit."""

    n: int
    weight: float
    laplacian_error: float
    observed_order: float | None


def _chain_error(
    n: int,
    weight: float,
    sample: Callable[[float], float],
    second_derivative: Callable[[float], float],
) -> float:
    graph = chain_graph(n, weight)
    h = 1.0 / (n - 1)
    xs = np.linspace(0.0, 1.0, n)
    field = {str(i): np.array([float(sample(xs[i]))]) for i in range(n)}
    lap = laplacian_apply(graph, field)
    worst = 0.0
    for i in range(1, n - 1):
        approx = float(lap[str(i)][0]) / (weight * h * h)
        worst = max(worst, abs(approx + float(second_derivative(xs[i]))))
    return worst


def chain_continuum_report(
    n: int,
    weight: float,
    sample: Callable[[float], float],
    second_derivative: Callable[[float], float] | None = None,
) -> ChainContinuumReport:
    """Compare (Lf)(i) / (w h^2) with -f'' on the interior of a uniform chain.

    Reports the max interior deviation at n vertices and the convergence
    order between n and 2n (None when both errors are at rounding level).
    If ``second_derivative`` is omitted it is computed by central differences
    of ``sample`` with step 1e-5.

    :raises DomainError: if n < 8 or the weight is not positive.
    """
    if n < 8:
        raise DomainError(f"need at least 8 vertices for an interior, got {n}")
    if not (weight > 0.0) or not math.isfinite(weight):
        raise DomainError(f"weight must be positive and finite, got {weight}")

    if second_derivative is None:
        fd = 1e-5

        def second_derivative(x: float) -> float:
            return (sample(x + fd) - 2.0 * sample(x) + sample(x - fd)) / (fd * fd)

    err_n = _chain_error(n, weight, sample, second_derivative)
    err_2n = _chain_error(2 * n, weight, sample, second_derivative)
    if err_n < 1e-13 or err_2n < 1e-13:
        order = None
    else:
        h_ratio = (2 * n - 1) / (n - 1)  # h_n / h_2n
        order = float(math.log(err_n / err_2n) / math.log(h_ratio))
    return ChainContinuumReport(
        n=n, weight=float(weight), laplacian_error=err_n, observed_order=order
    )
