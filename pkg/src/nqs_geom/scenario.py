"""Scenario files: parsing, schema validation and typed construction.

A scenario is a JSON document (conventionally ``*.nqs``) with a version tag,
options, a list of contexts, an undirected coupling graph and an ordered task
list.  Complex matrices are nested arrays of ``[re, im]`` pairs.  Everything
checkable before running -- shapes, ranges, reference resolution, operator
physicality, task parameter preconditions -- is validated at load time with
field-path error messages; failures raise :class:`ScenarioParseError` or
:class:`ScenarioValidationError`.

Hard schema limits (dimensions at most 16, bounded list lengths) keep
malformed or hostile inputs from exhausting memory or time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .curvature import partial_swap_channel, unitary_conjugation_channel
from .errors import (
    NqsGeomError,
    ScenarioParseError,
    ScenarioValidationError,
    UnsupportedTaskError,
)
from .nlayer import ContextGraph
from .operator_core import DensityOperator, HermitianOperator, Superoperator
from .qlayer import (
    ChannelMinusId,
    HamiltonianLindblad,
    Reset,
    build_superoperator,
    dissipator_part,
    hamiltonian_part,
)
from .slayer import CartanSet, QuadraticFunctional

__all__ = [
    "SCENARIO_VERSION",
    "ContextSpec",
    "Scenario",
    "ScenarioOptions",
    "TaskSpec",
    "load_scenario",
]

SCENARIO_VERSION = "nqs-geom/1"

MAX_DIM = 16
MAX_CONTEXTS = 64
MAX_TASKS = 256
MAX_EDGES = 2048
MAX_JUMPS = 32
MAX_THETAS = 64
MAX_LOOP_EDGES = 64
MAX_CHAIN_N = 100_000
MAX_SOLVER_ITER = 100_000

TASK_KINDS = (
    "analyze-context",
    "sensitivity",
    "metric",
    "solve-graph",
    "holonomy",
    "transport",
    "chain-demo",
    "qutrit-demo",
    "response-chain",
)

CHAIN_FUNCTIONS = ("sin-pi", "quadratic", "linear")


def _fail(message: str, path: str):
    raise ScenarioValidationError(message, path=path)


def _expect_object(node, path: str) -> dict:
    if not isinstance(node, dict):
        _fail(f"expected an object, got {type(node).__name__}", path)
    return node


def _expect_array(node, path: str, min_len: int = 0, max_len: int | None = None) -> list:
    if not isinstance(node, list):
        _fail(f"expected an array, got {type(node).__name__}", path)
    if len(node) < min_len:
        _fail(f"expected at least {min_len} entries, got {len(node)}", path)
    if max_len is not None and len(node) > max_len:
        _fail(f"too many entries ({len(node)} > {max_len})", path)
    return node


def _get(obj: dict, key: str, path: str, required: bool = True, default=None):
    if key not in obj:
        if required:
            _fail(f"missing required field {key!r}", path)
        return default
    return obj[key]


def _reject_unknown(obj: dict, allowed: set[str], path: str):
    unknown = sorted(set(obj) - allowed)
    if unknown:
        _fail(f"unknown field(s) {unknown}", path)


def _number(node, path: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        _fail(f"expected a number, got {type(node).__name__}", path)
    x = float(node)
    if not math.isfinite(x):
        _fail(f"number must be finite, got {x}", path)
    return x


def _integer(node, path: str, lo: int, hi: int) -> int:
    if isinstance(node, bool) or not isinstance(node, int):
        _fail(f"expected an integer, got {type(node).__name__}", path)
    if not (lo <= node <= hi):
        _fail(f"integer {node} outside [{lo}, {hi}]", path)
    return int(node)


def _string(node, path: str) -> str:
    if not isinstance(node, str):
        _fail(f"expected a string, got {type(node).__name__}", path)
    return node


def _positive(node, path: str) -> float:
    x = _number(node, path)
    if not (x > 0.0):
        _fail(f"expected a positive number, got {x}", path)
    return x


def _complex_entry(node, path: str) -> complex:
    if not (isinstance(node, list) and len(node) == 2):
        _fail("complex entries must be [re, im] pairs", path)
    return complex(_number(node[0], path + "[0]"), _number(node[1], path + "[1]"))


def _complex_matrix(node, path: str, dim: int | None = None) -> np.ndarray:
    rows = _expect_array(node, path, min_len=1, max_len=MAX_DIM * MAX_DIM)
    n = len(rows)
    if dim is not None and n != dim:
        _fail(f"matrix has {n} rows, expected {dim}", path)
    out = np.empty((n, n), dtype=complex)
    for i, row in enumerate(rows):
        r = _expect_array(row, f"{path}[{i}]")
        if len(r) != n:
            _fail(f"row has {len(r)} entries, expected {n} (matrix must be square)",
                  f"{path}[{i}]")
        for j, entry in enumerate(r):
            out[i, j] = _complex_entry(entry, f"{path}[{i}][{j}]")
    return out


def _real_vector(node, path: str, size: int | None = None) -> np.ndarray:
    arr = _expect_array(node, path, min_len=1, max_len=4096)
    if size is not None and len(arr) != size:
        _fail(f"vector has {len(arr)} entries, expected {size}", path)
    return np.array([_number(x, f"{path}[{i}]") for i, x in enumerate(arr)])


def _real_matrix(node, path: str, size: int | None = None) -> np.ndarray:
    rows = _expect_array(node, path, min_len=1, max_len=4096)
    n = len(rows)
    if size is not None and n != size:
        _fail(f"matrix has {n} rows, expected {size}", path)
    out = np.empty((n, n))
    for i, row in enumerate(rows):
        r = _expect_array(row, f"{path}[{i}]")
        if len(r) != n:
            _fail(f"row has {len(r)} entries, expected {n}", f"{path}[{i}]")
        for j, x in enumerate(r):
            out[i, j] = _number(x, f"{path}[{i}][{j}]")
    return out


@dataclass(frozen=True)
class ScenarioOptions:
    """Run-wide defaults: Doeblin time, finite-difference step, seed, tolerances."""

    doeblin_t0: float | None = None
    fd_step: float | None = None
    seed: int | None = None
    construction_tol: float = 1e-12
    equality_tol: float = 1e-10
    faithfulness_tol: float = 1e-10


@dataclass(frozen=True)
class ContextSpec:
    """One context: its dimension, dynamics, charge observables and cost."""

    id: str
    dim: int
    generator: object | None
    superoperator: Superoperator | None
    cartan: CartanSet | None
    functional: QuadraticFunctional | None

    @property
    def charge_size(self) -> int | None:
        if self.functional is not None:
            return self.functional.dim
        if self.cartan is not None:
            return len(self.cartan)
        return None


@dataclass(frozen=True)
class TaskSpec:
    """A validated task: raw echo plus parsed parameters."""

    id: str
    kind: str
    raw: dict
    params: dict


@dataclass(frozen=True)
class Scenario:
    """A fully validated scenario document."""

    version: str
    description: str
    options: ScenarioOptions
    contexts: dict[str, ContextSpec]
    graph: ContextGraph
    tasks: tuple[TaskSpec, ...]


def _parse_options(node, path: str) -> ScenarioOptions:
    if node is None:
        return ScenarioOptions()
    obj = _expect_object(node, path)
    _reject_unknown(obj, {"doeblin_t0", "fd_step", "seed", "tolerances"}, path)
    t0 = obj.get("doeblin_t0")
    if t0 is not None:
        t0 = _positive(t0, path + ".doeblin_t0")
    step = obj.get("fd_step")
    if step is not None:
        step = _positive(step, path + ".fd_step")
        if step > 0.1:
            _fail(f"fd_step {step} is too large to be a difference step", path + ".fd_step")
    seed = obj.get("seed")
    if seed is not None:
        seed = _integer(seed, path + ".seed", 0, 2**63 - 1)
    tols = {"construction": 1e-12, "equality": 1e-10, "faithfulness": 1e-10}
    if "tolerances" in obj:
        tnode = _expect_object(obj["tolerances"], path + ".tolerances")
        _reject_unknown(tnode, set(tols), path + ".tolerances")
        for key in tols:
            if key in tnode:
                tols[key] = _positive(tnode[key], f"{path}.tolerances.{key}")
    return ScenarioOptions(
        doeblin_t0=t0,
        fd_step=step,
        seed=seed,
        construction_tol=tols["construction"],
        equality_tol=tols["equality"],
        faithfulness_tol=tols["faithfulness"],
    )


def _wrap_construction(fn, path: str):
    try:
        return fn()
    except NqsGeomError as exc:
        if isinstance(exc, ScenarioValidationError):
            raise
        _fail(str(exc), path)


def _parse_generator(node, path: str, dim: int, options: ScenarioOptions):
    obj = _expect_object(node, path)
    form = _string(_get(obj, "form", path), path + ".form")
    if form == "hamiltonian_lindblad":
        _reject_unknown(obj, {"form", "hamiltonian", "jumps"}, path)
        h = _complex_matrix(_get(obj, "hamiltonian", path), path + ".hamiltonian", dim)
        ham = _wrap_construction(
            lambda: HermitianOperator(h, tol=options.construction_tol),
            path + ".hamiltonian",
        )
        jumps = []
        for i, jnode in enumerate(
            _expect_array(obj.get("jumps", []), path + ".jumps", max_len=MAX_JUMPS)
        ):
            jumps.append(_complex_matrix(jnode, f"{path}.jumps[{i}]", dim))
        return _wrap_construction(
            lambda: HamiltonianLindblad(ham, tuple(jumps)), path
        )
    if form == "reset":
        _reject_unknown(obj, {"form", "rate", "target"}, path)
        rate = _positive(_get(obj, "rate", path), path + ".rate")
        tgt = _complex_matrix(_get(obj, "target", path), path + ".target", dim)
        target = _wrap_construction(
            lambda: DensityOperator(tgt, tol=options.construction_tol),
            path + ".target",
        )
        return _wrap_construction(lambda: Reset(rate, target), path)
    if form == "channel_minus_id":
        _reject_unknown(obj, {"form", "rate", "channel"}, path)
        rate = _positive(_get(obj, "rate", path), path + ".rate")
        ch = _complex_matrix(_get(obj, "channel", path), path + ".channel", dim * dim)
        channel = _wrap_construction(
            lambda: Superoperator(ch, kind="channel", tol=options.equality_tol),
            path + ".channel",
        )
        return _wrap_construction(lambda: ChannelMinusId(rate, channel), path)
    _fail(f"unknown generator form {form!r}", path + ".form")


def _parse_context(node, path: str, options: ScenarioOptions) -> ContextSpec:
    obj = _expect_object(node, path)
    _reject_unknown(obj, {"id", "dim", "generator", "cartan", "functional"}, path)
    cid = _string(_get(obj, "id", path), path + ".id")
    if not cid:
        _fail("context id must be non-empty", path + ".id")
    dim = _integer(_get(obj, "dim", path), path + ".dim", 1, MAX_DIM)

    generator = None
    superop = None
    if obj.get("generator") is not None:
        generator = _parse_generator(obj["generator"], path + ".generator", dim, options)
        superop = _wrap_construction(
            lambda: build_superoperator(generator), path + ".generator"
        )

    cartan = None
    if obj.get("cartan") is not None:
        cnode = _expect_object(obj["cartan"], path + ".cartan")
        _reject_unknown(cnode, {"labels", "matrices"}, path + ".cartan")
        mats = [
            _complex_matrix(m, f"{path}.cartan.matrices[{i}]", dim)
            for i, m in enumerate(
                _expect_array(
                    _get(cnode, "matrices", path + ".cartan"),
                    path + ".cartan.matrices",
                    min_len=1,
                    max_len=MAX_DIM * MAX_DIM,
                )
            )
        ]
        labels = None
        if cnode.get("labels") is not None:
            labels = [
                _string(s, f"{path}.cartan.labels[{i}]")
                for i, s in enumerate(
                    _expect_array(cnode["labels"], path + ".cartan.labels")
                )
            ]
            if len(labels) != len(mats):
                _fail("one label per Cartan matrix required", path + ".cartan.labels")
        cartan = _wrap_construction(
            lambda: CartanSet(mats, labels=labels), path + ".cartan"
        )

    functional = None
    if obj.get("functional") is not None:
        fnode = _expect_object(obj["functional"], path + ".functional")
        kind = _string(_get(fnode, "kind", path + ".functional"), path + ".functional.kind")
        if kind != "quadratic":
            _fail(f"unknown functional kind {kind!r}", path + ".functional.kind")
        _reject_unknown(fnode, {"kind", "stiffness", "preferred"}, path + ".functional")
        pref = _real_vector(
            _get(fnode, "preferred", path + ".functional"),
            path + ".functional.preferred",
        )
        stiff = _real_matrix(
            _get(fnode, "stiffness", path + ".functional"),
            path + ".functional.stiffness",
            pref.size,
        )
        functional = _wrap_construction(
            lambda: QuadraticFunctional(stiff, pref), path + ".functional"
        )

    if functional is not None and cartan is not None and functional.dim != len(cartan):
        _fail(
            f"functional dimension {functional.dim} does not match "
            f"Cartan size {len(cartan)}",
            path,
        )
    return ContextSpec(
        id=cid,
        dim=dim,
        generator=generator,
        superoperator=superop,
        cartan=cartan,
        functional=functional,
    )


def _parse_graph(node, path: str, contexts: dict[str, ContextSpec]) -> ContextGraph:
    edges = []
    if node is not None:
        obj = _expect_object(node, path)
        _reject_unknown(obj, {"edges"}, path)
        for i, enode in enumerate(
            _expect_array(obj.get("edges", []), path + ".edges", max_len=MAX_EDGES)
        ):
            epath = f"{path}.edges[{i}]"
            eobj = _expect_object(enode, epath)
            _reject_unknown(eobj, {"a", "b", "weight"}, epath)
            a = _string(_get(eobj, "a", epath), epath + ".a")
            b = _string(_get(eobj, "b", epath), epath + ".b")
            w = _number(_get(eobj, "weight", epath), epath + ".weight")
            if w < 0.0:
                _fail(f"edge weight must be >= 0, got {w}", epath + ".weight")
            for end in (a, b):
                if end not in contexts:
                    _fail(f"edge endpoint {end!r} is not a context id", epath)
            edges.append((a, b, w))
    vertices = [(cid, spec.charge_size or 1) for cid, spec in contexts.items()]
    return _wrap_construction(lambda: ContextGraph(vertices, edges), path)


def _context_ref(obj: dict, key: str, path: str, contexts) -> ContextSpec:
    cid = _string(_get(obj, key, path), f"{path}.{key}")
    if cid not in contexts:
        _fail(f"unknown context {cid!r}", f"{path}.{key}")
    return contexts[cid]


def _require(condition: bool, message: str, path: str):
    if not condition:
        _fail(message, path)


def _parse_perturbation(node, path: str, dim: int, options: ScenarioOptions) -> Superoperator:
    obj = _expect_object(node, path)
    kind = _string(_get(obj, "kind", path), path + ".kind")
    _reject_unknown(obj, {"kind", "matrix"}, path)
    mat_node = _get(obj, "matrix", path)
    if kind == "hamiltonian":
        h = _complex_matrix(mat_node, path + ".matrix", dim)
        op = _wrap_construction(
            lambda: HermitianOperator(h, tol=options.construction_tol), path + ".matrix"
        )
        return Superoperator(hamiltonian_part(op), kind="generator")
    if kind == "jump":
        j = _complex_matrix(mat_node, path + ".matrix", dim)
        return Superoperator(dissipator_part(j), kind="generator")
    if kind == "superoperator":
        m = _complex_matrix(mat_node, path + ".matrix", dim * dim)
        return _wrap_construction(
            lambda: Superoperator(m, kind="generator", tol=options.equality_tol), path
        )
    _fail(f"unknown perturbation kind {kind!r}", path + ".kind")


def _parse_channel(node, path: str, dim: int, theta_key: str, options: ScenarioOptions) -> dict:
    """Channel factory descriptor for transport / holonomy edges."""
    obj = _expect_object(node, path)
    kind = _string(_get(obj, "kind", path), path + ".kind")
    if kind == "unitary":
        allowed = {"kind", "generator", theta_key, "source", "target"}
        _reject_unknown(obj, allowed, path)
        g = _complex_matrix(_get(obj, "generator", path), path + ".generator", dim)
        gen = _wrap_construction(
            lambda: HermitianOperator(g, tol=options.construction_tol),
            path + ".generator",
        )
        theta = _number(_get(obj, theta_key, path), f"{path}.{theta_key}")
        return {"kind": "unitary", "generator": gen, theta_key: theta}
    if kind == "partial_swap":
        allowed = {"kind", "unitary", theta_key, "source", "target"}
        _reject_unknown(obj, allowed, path)
        u = _complex_matrix(_get(obj, "unitary", path), path + ".unitary", dim)
        dev = float(np.abs(u @ u.conj().T - np.eye(dim)).max())
        if dev > options.equality_tol:
            _fail(f"matrix is not unitary (deviation {dev:.3e})", path + ".unitary")
        theta = _number(_get(obj, theta_key, path), f"{path}.{theta_key}")
        if theta_key == "theta" and not (-1.0 <= theta <= 1.0):
            _fail(f"partial swap theta must lie in [-1, 1], got {theta}", f"{path}.{theta_key}")
        return {"kind": "partial_swap", "unitary": u, theta_key: theta}
    _fail(f"unknown channel kind {kind!r}", path + ".kind")


def build_edge_channel(desc: dict, theta: float) -> Superoperator:
    """Instantiate a holonomy loop edge at sweep parameter theta."""
    scaled = desc["theta_scale"] * theta
    if desc["kind"] == "unitary":
        return unitary_conjugation_channel(desc["generator"], scaled)
    return partial_swap_channel(desc["unitary"], scaled)


def build_fixed_channel(desc: dict) -> Superoperator:
    """Instantiate a transport channel at its fixed parameter."""
    if desc["kind"] == "unitary":
        return unitary_conjugation_channel(desc["generator"], desc["theta"])
    return partial_swap_channel(desc["unitary"], desc["theta"])


def _parse_task(node, path: str, contexts, options: ScenarioOptions) -> TaskSpec:
    obj = _expect_object(node, path)
    tid = _string(_get(obj, "id", path), path + ".id")
    if not tid:
        _fail("task id must be non-empty", path + ".id")
    kind = _string(_get(obj, "kind", path), path + ".kind")
    if kind not in TASK_KINDS:
        raise UnsupportedTaskError(
            f"unknown task kind {kind!r}; supported: {', '.join(TASK_KINDS)}",
            path=path + ".kind",
        )
    params: dict = {}

    if kind in ("analyze-context", "sensitivity", "response-chain"):
        ctx = _context_ref(obj, "context", path, contexts)
        _require(
            ctx.superoperator is not None,
            f"context {ctx.id!r} has no generator",
            path + ".context",
        )
        params["context"] = ctx
        t0 = obj.get("t0", None)
        if t0 is not None:
            t0 = _positive(t0, path + ".t0")
        elif options.doeblin_t0 is not None:
            t0 = options.doeblin_t0
        params["t0"] = t0
        if kind == "analyze-context":
            _reject_unknown(obj, {"id", "kind", "context", "t0"}, path)
        else:
            _reject_unknown(obj, {"id", "kind", "context", "t0", "perturbation"}, path)
            params["perturbation"] = _parse_perturbation(
                _get(obj, "perturbation", path), path + ".perturbation", ctx.dim, options
            )
            if kind == "response-chain":
                _require(
                    ctx.cartan is not None,
                    f"context {ctx.id!r} has no Cartan set",
                    path + ".context",
                )
                _require(
                    ctx.functional is not None,
                    f"context {ctx.id!r} has no functional",
                    path + ".context",
                )

    elif kind == "metric":
        ctx = _context_ref(obj, "context", path, contexts)
        params["context"] = ctx
        method = _string(_get(obj, "method", path), path + ".method")
        params["method"] = method
        step = obj.get("step")
        if step is not None:
            step = _positive(step, path + ".step")
            if step > 0.1:
                _fail("step is too large to be a difference step", path + ".step")
        elif options.fd_step is not None:
            step = options.fd_step
        params["step"] = step
        if method == "hessian":
            _reject_unknown(obj, {"id", "kind", "context", "method", "step", "at", "neighbors"}, path)
            _require(
                ctx.functional is not None,
                f"context {ctx.id!r} has no functional",
                path + ".context",
            )
            r = ctx.functional.dim
            at = obj.get("at")
            params["at"] = (
                _real_vector(at, path + ".at", r) if at is not None
                else np.array(ctx.functional.preferred)
            )
            neighbors = []
            for i, nnode in enumerate(
                _expect_array(obj.get("neighbors", []), path + ".neighbors", max_len=64)
            ):
                npath = f"{path}.neighbors[{i}]"
                nobj = _expect_object(nnode, npath)
                _reject_unknown(nobj, {"charges", "weight"}, npath)
                qn = _real_vector(_get(nobj, "charges", npath), npath + ".charges", r)
                w = _number(_get(nobj, "weight", npath), npath + ".weight")
                if w < 0.0:
                    _fail(f"neighbor weight must be >= 0, got {w}", npath + ".weight")
                neighbors.append((qn, w))
            params["neighbors"] = tuple(neighbors)
        elif method == "covariance":
            _reject_unknown(obj, {"id", "kind", "context", "method", "step", "state"}, path)
            _require(
                ctx.cartan is not None,
                f"context {ctx.id!r} has no Cartan set",
                path + ".context",
            )
            state = obj.get("state", "stationary")
            if state == "stationary":
                _require(
                    ctx.superoperator is not None,
                    f"context {ctx.id!r} has no generator for a stationary state",
                    path + ".state",
                )
                params["state"] = "stationary"
            else:
                m = _complex_matrix(state, path + ".state", ctx.dim)
                params["state"] = _wrap_construction(
                    lambda: DensityOperator(m, tol=options.construction_tol),
                    path + ".state",
                )
        elif method == "fisher":
            _reject_unknown(obj, {"id", "kind", "context", "method", "step", "anchor"}, path)
            _require(
                ctx.cartan is not None,
                f"context {ctx.id!r} has no Cartan set",
                path + ".context",
            )
            anchor = obj.get("anchor")
            params["anchor"] = (
                _real_vector(anchor, path + ".anchor", len(ctx.cartan))
                if anchor is not None
                else np.zeros(len(ctx.cartan))
            )
        else:
            _fail(f"unknown metric method {method!r}", path + ".method")

    elif kind == "solve-graph":
        _reject_unknown(obj, {"id", "kind", "initial", "tol", "max_iter"}, path)
        missing = [cid for cid, c in contexts.items() if c.functional is None]
        _require(
            not missing,
            f"solve-graph needs a functional on every context; missing on {missing}",
            path,
        )
        initial = obj.get("initial", "preferred")
        if initial == "preferred":
            params["initial"] = None
        elif initial == "random":
            _require(
                options.seed is not None,
                "random initialization requires options.seed",
                path + ".initial",
            )
            params["initial"] = "random"
        else:
            inode = _expect_object(initial, path + ".initial")
            field = {}
            for cid, vec in inode.items():
                if cid not in contexts:
                    _fail(f"unknown context {cid!r}", path + ".initial")
                field[cid] = _real_vector(
                    vec, f"{path}.initial.{cid}", contexts[cid].functional.dim
                )
            missing = [cid for cid in contexts if cid not in field]
            _require(not missing, f"initial field misses {missing}", path + ".initial")
            params["initial"] = field
        tol = obj.get("tol")
        params["tol"] = _positive(tol, path + ".tol") if tol is not None else 1e-10
        max_iter = obj.get("max_iter")
        params["max_iter"] = (
            _integer(max_iter, path + ".max_iter", 1, MAX_SOLVER_ITER)
            if max_iter is not None
            else 200
        )

    elif kind == "holonomy":
        _reject_unknown(obj, {"id", "kind", "cartan_context", "thetas", "loop"}, path)
        ctx = _context_ref(obj, "cartan_context", path, contexts)
        _require(
            ctx.cartan is not None,
            f"context {ctx.id!r} has no Cartan set",
            path + ".cartan_context",
        )
        params["context"] = ctx
        thetas = [
            _number(t, f"{path}.thetas[{i}]")
            for i, t in enumerate(
                _expect_array(
                    _get(obj, "thetas", path), path + ".thetas", min_len=3, max_len=MAX_THETAS
                )
            )
        ]
        nonzero = [t for t in thetas if t != 0.0]
        _require(len(nonzero) >= 3, "need at least three nonzero loop sizes", path + ".thetas")
        for t in nonzero:
            _require(0.0 < t < 0.5, f"loop sizes must lie in (0, 0.5), got {t}", path + ".thetas")
        _require(
            all(b < a for a, b in zip(nonzero[:-1], nonzero[1:])),
            "loop sizes must be strictly decreasing",
            path + ".thetas",
        )
        params["thetas"] = tuple(thetas)
        loop = []
        lnode = _expect_array(
            _get(obj, "loop", path), path + ".loop", min_len=1, max_len=MAX_LOOP_EDGES
        )
        for i, enode in enumerate(lnode):
            epath = f"{path}.loop[{i}]"
            eobj = _expect_object(enode, epath)
            src = _context_ref(eobj, "source", epath, contexts)
            dst = _context_ref(eobj, "target", epath, contexts)
            _require(src.dim == dst.dim, "loop edge changes dimension", epath)
            _require(src.dim == ctx.dim, "loop edge dimension differs from Cartan context", epath)
            desc = _parse_channel(eobj, epath, ctx.dim, "theta_scale", options)
            desc["source"], desc["target"] = src.id, dst.id
            loop.append(desc)
        for prev, nxt in zip(loop[:-1], loop[1:]):
            _require(
                prev["target"] == nxt["source"],
                f"loop chain breaks between {prev['target']!r} and {nxt['source']!r}",
                path + ".loop",
            )
        _require(
            loop[0]["source"] == loop[-1]["target"],
            "loop does not close",
            path + ".loop",
        )
        params["loop"] = tuple(loop)

    elif kind == "transport":
        _reject_unknown(obj, {"id", "kind", "cartan_context", "channel", "source", "target"}, path)
        ctx = _context_ref(obj, "cartan_context", path, contexts)
        _require(
            ctx.cartan is not None,
            f"context {ctx.id!r} has no Cartan set",
            path + ".cartan_context",
        )
        params["context"] = ctx
        params["channel"] = _parse_channel(
            _get(obj, "channel", path), path + ".channel", ctx.dim, "theta", options
        )
        for key in ("source", "target"):
            val = obj.get(key)
            if val is not None:
                _require(val in contexts, f"unknown context {val!r}", f"{path}.{key}")
            params[key] = val

    elif kind == "chain-demo":
        _reject_unknown(obj, {"id", "kind", "n", "weight", "function"}, path)
        params["n"] = _integer(_get(obj, "n", path), path + ".n", 8, MAX_CHAIN_N)
        w = obj.get("weight", 1.0)
        params["weight"] = _positive(w, path + ".weight")
        fn = obj.get("function", "sin-pi")
        _require(
            fn in CHAIN_FUNCTIONS,
            f"unknown chain function {fn!r}; supported: {', '.join(CHAIN_FUNCTIONS)}",
            path + ".function",
        )
        params["function"] = fn

    elif kind == "qutrit-demo":
        _reject_unknown(obj, {"id", "kind"}, path)

    return TaskSpec(id=tid, kind=kind, raw=obj, params=params)


def _load_json(text: str) -> object:
    def reject(token: str):
        raise ScenarioParseError(f"non-finite number {token!r} is not allowed")

    try:
        return json.loads(text, parse_constant=reject)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def load_scenario(source: str | Path) -> Scenario:
    """Load and validate a scenario from a file path or JSON text.

    ``Path`` arguments and strings that do not start with ``{`` are treated
    as file paths; strings starting with ``{`` are parsed directly.
    """
    if isinstance(source, Path):
        text = _read_file(source)
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        text = source
    else:
        text = _read_file(Path(str(source)))

    root = _load_json(text)
    obj = _expect_object(root, "$")
    _reject_unknown(
        obj, {"version", "description", "options", "contexts", "graph", "tasks"}, "$"
    )
    version = _string(_get(obj, "version", "$"), "$.version")
    if version != SCENARIO_VERSION:
        _fail(f"unsupported version {version!r} (expected {SCENARIO_VERSION!r})", "$.version")
    description = ""
    if obj.get("description") is not None:
        description = _string(obj["description"], "$.description")

    options = _parse_options(obj.get("options"), "$.options")

    contexts: dict[str, ContextSpec] = {}
    for i, cnode in enumerate(
        _expect_array(_get(obj, "contexts", "$"), "$.contexts", max_len=MAX_CONTEXTS)
    ):
        spec = _parse_context(cnode, f"$.contexts[{i}]", options)
        if spec.id in contexts:
            _fail(f"duplicate context id {spec.id!r}", f"$.contexts[{i}].id")
        contexts[spec.id] = spec

    graph = _parse_graph(obj.get("graph"), "$.graph", contexts)

    tasks: list[TaskSpec] = []
    seen_ids: set[str] = set()
    for i, tnode in enumerate(
        _expect_array(_get(obj, "tasks", "$"), "$.tasks", max_len=MAX_TASKS)
    ):
        spec = _parse_task(tnode, f"$.tasks[{i}]", contexts, options)
        if spec.id in seen_ids:
            _fail(f"duplicate task id {spec.id!r}", f"$.tasks[{i}].id")
        seen_ids.add(spec.id)
        tasks.append(spec)

    return Scenario(
        version=version,
        description=description,
        options=options,
        contexts=contexts,
        graph=graph,
        tasks=tuple(tasks),
    )


def _read_file(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario file {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ScenarioParseError(f"scenario file {path} is not UTF-8: {exc}") from exc
