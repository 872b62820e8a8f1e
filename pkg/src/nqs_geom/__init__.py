"""Stationary-state geometry for networks of open quantum systems.

The package is organized in layers:

* :mod:`nqs_geom.operator_core` -- validated operators, vectorization,
  trace norm, matrix exponential, relative entropy.
* :mod:`nqs_geom.qlayer` -- GKLS generators, stationary states, spectral
  gaps, Doeblin minorization certificates, stationary sensitivity.
* :mod:`nqs_geom.slayer` -- charge coordinates and metrics on them
  (Hessian, covariance, divergence-based, classical Fisher).
* :mod:`nqs_geom.nlayer` -- context graphs, Laplacians, global action and
  self-consistent charge fields.
* :mod:`nqs_geom.curvature` -- charge transport along edge channels and
  loop holonomy.
* :mod:`nqs_geom.cli` -- the ``nqs-geom`` command: scenario files, task
  running, deterministic reports.
"""

from .errors import (
    ConstructionError,
    DegenerateCartanError,
    DegenerateSpecError,
    DimensionError,
    DomainError,
    EvaluationError,
    FaithfulnessError,
    FieldError,
    InvalidGeneratorError,
    InvalidPerturbationError,
    LoopError,
    NonConvergenceError,
    NonPrimitiveError,
    NqsGeomError,
    ScenarioError,
    ScenarioParseError,
    ScenarioValidationError,
    SupportError,
    UnsupportedDivergenceError,
    UnsupportedTaskError,
    UsageError,
)
from .operator_core import (
    DensityOperator,
    HermitianOperator,
    Superoperator,
    choi_matrix,
    devectorize,
    gell_mann_matrices,
    matrix_exponential,
    pauli_matrices,
    random_density,
    relative_entropy,
    trace_norm,
    vectorize,
)
from .qlayer import (
    ChannelMinusId,
    HamiltonianLindblad,
    QContextReport,
    Reset,
    analyze_context,
    build_superoperator,
    doeblin_epsilon,
    doeblin_gap,
    evolve_state,
    primitivity_report,
    sensitivity_report,
    solve_poisson,
    spectral_gap,
    stationary_state,
)
from .slayer import (
    CartanSet,
    ChargeVector,
    DivergenceFunctional,
    MetricMatrix,
    QuadraticFunctional,
    charges,
    classical_fisher,
    covariance_metric,
    fisher_from_divergence,
    gibbs_family,
    hessian_metric,
    path_cost,
    quadratic_cost,
)
from .nlayer import (
    ContextGraph,
    GlobalActionSpec,
    SmoothFunctional,
    chain_continuum_report,
    el_residual,
    global_action,
    laplacian_apply,
    solve_self_consistent,
)
from .curvature import (
    HolonomyReport,
    ResponseMap,
    SensitivityTriple,
    TransportMap,
    charge_transport,
    holonomy_fit,
    loop_holonomy,
    make_sensitivity_triple,
    partial_swap_channel,
    unitary_conjugation_channel,
)
from .report import (
    Report,
    TaskResult,
    emit_human,
    emit_machine,
    emit_report,
    parse_machine,
)
from .runner import run_tasks
from .scenario import Scenario, ScenarioOptions, load_scenario

__version__ = "0.1.0"
