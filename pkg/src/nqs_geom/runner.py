"""Task dispatch: execute a validated scenario and collect a report.

Tasks run independently (optionally across a thread pool) but results are
always emitted in declared order.  A failing task is recorded as a structured
error in its slot and never aborts the rest of the run.  All handlers are
pure given the scenario, so the report's machine serialization is
byte-identical regardless of the parallelism level.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import NqsGeomError
from .nlayer import (
    GlobalActionSpec,
    chain_continuum_report,
    el_residual,
    global_action,
    solve_self_consistent,
)
from .operator_core import (
    DensityOperator,
    devectorize,
    gell_mann_matrices,
    trace_norm,
    vectorize,
)
from .curvature import charge_transport, holonomy_fit, loop_holonomy
from .qlayer import analyze_context, sensitivity_report, stationary_state
from .report import (
    REPORT_VERSION,
    Report,
    TaskResult,
    encode_complex_matrix,
    encode_real_matrix,
    encode_real_vector,
    safe_float,
)
from .scenario import Scenario, TaskSpec, build_edge_channel, build_fixed_channel
from .slayer import (
    CartanSet,
    charges,
    covariance_metric,
    fisher_from_divergence,
    gibbs_family,
    hessian_metric,
    quadratic_cost,
)

__all__ = ["run_tasks"]


def _metric_payload(metric) -> dict:
    return {
        "labels": list(metric.labels) if metric.labels is not None else None,
        "entries": encode_real_matrix(metric.entries),
    }


def _run_analyze(task: TaskSpec, scenario: Scenario) -> dict:
    ctx = task.params["context"]
    rep = analyze_context(ctx.superoperator, t0=task.params["t0"])
    return {
        "context": ctx.id,
        "primitive": rep.primitive,
        "stationary": encode_complex_matrix(rep.stationary.entries),
        "spectral_gap": rep.gap,
        "doeblin_time": rep.doeblin_time,
        "doeblin_epsilon": rep.doeblin_epsilon,
        "doeblin_gap": (
            safe_float(-math.log1p(-rep.doeblin_epsilon) / rep.doeblin_time)
            if 0.0 < rep.doeblin_epsilon < 1.0
            else None
        ),
        "certified_sensitivity_factor": safe_float(rep.certified_sensitivity_factor),
        "stationary_kernel_dim": rep.stationary_kernel_dim,
        "min_eig_of_stationary": rep.min_eig_of_stationary,
        "eigenvalues": [
            [safe_float(z.real), safe_float(z.imag)] for z in rep.eigenvalues
        ],
    }


def _run_sensitivity(task: TaskSpec, scenario: Scenario) -> dict:
    ctx = task.params["context"]
    rep = sensitivity_report(
        ctx.superoperator, task.params["perturbation"], t0=task.params["t0"]
    )
    return {
        "context": ctx.id,
        "t0": rep.t0,
        "spectral_gap": rep.gap,
        "doeblin_epsilon": rep.epsilon,
        "response_norm": rep.lhs,
        "rhs_nominal": safe_float(rep.rhs_nominal),
        "rhs_certified": safe_float(rep.rhs_certified),
        "nominal_satisfied": rep.nominal_satisfied,
        "certified_satisfied": rep.certified_satisfied,
        "delta_stationary": encode_complex_matrix(rep.delta_stationary),
    }


def _run_metric(task: TaskSpec, scenario: Scenario) -> dict:
    ctx = task.params["context"]
    method = task.params["method"]
    step = task.params["step"]
    if method == "hessian":
        functional = ctx.functional
        neighbors = task.params["neighbors"]
        labels = ctx.cartan.labels if ctx.cartan is not None else None
        kwargs = {"labels": labels}
        if step is not None:
            kwargs["step"] = step
        metric = hessian_metric(
            lambda q: quadratic_cost(q, functional, neighbors),
            task.params["at"],
            **kwargs,
        )
    elif method == "covariance":
        state = task.params["state"]
        if state == "stationary":
            state = stationary_state(ctx.superoperator)
        metric = covariance_metric(state, ctx.cartan)
    else:
        kwargs = {"labels": ctx.cartan.labels}
        if step is not None:
            kwargs["step"] = step
        metric = fisher_from_divergence(
            gibbs_family(ctx.cartan), task.params["anchor"], **kwargs
        )
    out = {"context": ctx.id, "method": method}
    out.update(_metric_payload(metric))
    return out


def _run_solve_graph(task: TaskSpec, scenario: Scenario) -> dict:
    spec = GlobalActionSpec(
        scenario.graph,
        {cid: c.functional for cid, c in scenario.contexts.items()},
    )
    initial = task.params["initial"]
    if initial == "random":
        rng = np.random.default_rng(scenario.options.seed)
        initial = {
            cid: rng.standard_normal(c.functional.dim)
            for cid, c in scenario.contexts.items()
        }
    result = solve_self_consistent(
        spec, initial=initial, tol=task.params["tol"], max_iter=task.params["max_iter"]
    )
    residuals = el_residual(spec, result.charges)
    return {
        "charges": {cid: encode_real_vector(v) for cid, v in result.charges.items()},
        "residual_norm": result.residual_norm,
        "iterations": result.iterations,
        "action": global_action(spec, result.charges),
        "el_residuals": {cid: encode_real_vector(v) for cid, v in residuals.items()},
    }


def _run_holonomy(task: TaskSpec, scenario: Scenario) -> dict:
    ctx = task.params["context"]
    loop = task.params["loop"]

    def build(theta: float):
        return [
            charge_transport(
                build_edge_channel(desc, theta),
                ctx.cartan,
                source=desc["source"],
                target=desc["target"],
            )
            for desc in loop
        ]

    rep = holonomy_fit(build, task.params["thetas"])
    return {
        "context": ctx.id,
        "labels": list(ctx.cartan.labels),
        "theta_sweep": [
            {"theta": t, "deviation_norm": dev} for t, dev in rep.theta_sweep
        ],
        "deviation_matrix": encode_real_matrix(rep.deviation_matrix),
        "fitted_exponent": safe_float(rep.fitted_exponent),
        "fitted_curvature": (
            encode_real_matrix(rep.fitted_curvature)
            if rep.fitted_curvature is not None
            else None
        ),
    }


def _run_transport(task: TaskSpec, scenario: Scenario) -> dict:
    ctx = task.params["context"]
    transport = charge_transport(
        build_fixed_channel(task.params["channel"]),
        ctx.cartan,
        source=task.params["source"],
        target=task.params["target"],
    )
    return {
        "context": ctx.id,
        "labels": list(ctx.cartan.labels),
        "source": transport.source,
        "target": transport.target,
        "matrix": encode_real_matrix(transport.matrix),
    }


_CHAIN_FUNCTIONS = {
    "sin-pi": (
        lambda x: math.sin(math.pi * x),
        lambda x: -math.pi * math.pi * math.sin(math.pi * x),
    ),
    "quadratic": (lambda x: x * x, lambda x: 2.0),
    "linear": (lambda x: x, lambda x: 0.0),
}


def _run_chain_demo(task: TaskSpec, scenario: Scenario) -> dict:
    sample, second = _CHAIN_FUNCTIONS[task.params["function"]]
    rep = chain_continuum_report(
        task.params["n"], task.params["weight"], sample, second_derivative=second
    )
    return {
        "n": rep.n,
        "weight": rep.weight,
        "function": task.params["function"],
        "laplacian_error": rep.laplacian_error,
        "observed_order": safe_float(rep.observed_order),
    }


def _run_qutrit_demo(task: TaskSpec, scenario: Scenario) -> dict:
    """Fixed three-level worked example: charge coordinates and both metrics."""
    gm = gell_mann_matrices()
    cartan = CartanSet([gm[2], gm[7]], labels=("t3", "t8"))
    fisher = fisher_from_divergence(
        gibbs_family(cartan), np.zeros(2), labels=cartan.labels
    )
    uniform = DensityOperator(np.eye(3) / 3.0)
    cov = covariance_metric(uniform, cartan)
    ground = DensityOperator(np.diag([1.0, 0.0, 0.0]))
    q = charges(ground, cartan)
    return {
        "labels": list(cartan.labels),
        "fisher_at_zero": encode_real_matrix(fisher.entries),
        "covariance_at_uniform": encode_real_matrix(cov.entries),
        "fisher_covariance_max_diff": float(
            np.abs(fisher.entries - cov.entries).max()
        ),
        "ground_state_charges": encode_real_vector(q.values),
    }


def _run_response_chain(task: TaskSpec, scenario: Scenario) -> dict:
    """Diagnostic linking gap, Doeblin response bound and metric cost.

    Reports the second-order cost increase (1/2) dq^T K dq induced by a
    generator perturbation, alongside the schematic upper estimate
    (L^2 / 2 g^2) |dL(rho)|_1^2 with L = max_a |H_a|_inf.  The comparison is
    informational: the estimate carries an unquantified constant.
    """
    ctx = task.params["context"]
    rep = sensitivity_report(
        ctx.superoperator, task.params["perturbation"], t0=task.params["t0"]
    )
    dq = charges(rep.delta_stationary, ctx.cartan).values
    stiffness = ctx.functional.hessian(np.zeros(ctx.functional.dim))
    delta_cost = 0.5 * float(dq @ stiffness @ dq)
    lipschitz = max(
        float(np.linalg.norm(h.entries, 2)) for h in ctx.cartan.generators
    )
    rho = stationary_state(ctx.superoperator)
    pert = task.params["perturbation"].matrix
    drive = trace_norm(devectorize(pert @ vectorize(rho), ctx.dim))
    schematic = lipschitz**2 / (2.0 * rep.gap**2) * drive**2
    return {
        "context": ctx.id,
        "delta_charges": encode_real_vector(dq),
        "delta_cost": delta_cost,
        "lipschitz_constant": lipschitz,
        "spectral_gap": rep.gap,
        "doeblin_epsilon": rep.epsilon,
        "drive_norm": drive,
        "schematic_bound": schematic,
        "ratio": safe_float(delta_cost / schematic) if schematic > 0.0 else None,
        "within_schematic": bool(delta_cost <= schematic),
        "response_norm": rep.lhs,
        "certified_satisfied": rep.certified_satisfied,
    }


_HANDLERS = {
    "analyze-context": _run_analyze,
    "sensitivity": _run_sensitivity,
    "metric": _run_metric,
    "solve-graph": _run_solve_graph,
    "holonomy": _run_holonomy,
    "transport": _run_transport,
    "chain-demo": _run_chain_demo,
    "qutrit-demo": _run_qutrit_demo,
    "response-chain": _run_response_chain,
}


def _echo_inputs(task: TaskSpec) -> dict:
    return {k: v for k, v in task.raw.items() if k not in ("id", "kind")}


def _run_one(task: TaskSpec, scenario: Scenario) -> TaskResult:
    start = time.perf_counter()
    try:
        outputs = _HANDLERS[task.kind](task, scenario)
    except NqsGeomError as exc:
        return TaskResult(
            task=task.id,
            kind=task.kind,
            status="error",
            inputs=_echo_inputs(task),
            error={"type": type(exc).__name__, "message": str(exc)},
            wall_time=time.perf_counter() - start,
        )
    except Exception as exc:  # isolation: a buggy handler must not kill the run
        return TaskResult(
            task=task.id,
            kind=task.kind,
            status="error",
            inputs=_echo_inputs(task),
            error={"type": "InternalError", "message": f"{type(exc).__name__}: {exc}"},
            wall_time=time.perf_counter() - start,
        )
    return TaskResult(
        task=task.id,
        kind=task.kind,
        status="ok",
        inputs=_echo_inputs(task),
        outputs=outputs,
        wall_time=time.perf_counter() - start,
    )


def run_tasks(scenario: Scenario, jobs: int = 1) -> Report:
    """Execute all tasks and return the report, results in declared order.

    ``jobs`` bounds thread-level parallelism; results never depend on it.
    """
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    tasks = scenario.tasks
    if jobs == 1 or len(tasks) <= 1:
        results = [_run_one(t, scenario) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda t: _run_one(t, scenario), tasks))
    return Report(version=REPORT_VERSION, results=tuple(results))
