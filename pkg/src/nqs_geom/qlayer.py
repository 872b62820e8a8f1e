"""Generator-level analysis of open-system dynamics.

Builds GKLS (Lindblad) generators in superoperator form, extracts stationary
states, certifies mixing through a Doeblin minorization constant computed from
the Choi matrix of the finite-time channel, and solves the stationary
sensitivity (Poisson) equation on the traceless subspace.

A generator L is *primitive* when its kernel is one-dimensional and the
stationary state is faithful (full rank).  Primitive generators have a
spectral gap g > 0, defined as -max Re(lambda) over the spectrum of L
restricted to the traceless subspace.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
import scipy.linalg

from .errors import (
    ConstructionError,
    DimensionError,
    DomainError,
    InvalidGeneratorError,
    InvalidPerturbationError,
    NonPrimitiveError,
)
from .operator_core import (
    EQUALITY_TOL,
    FAITHFULNESS_TOL,
    DensityOperator,
    HermitianOperator,
    Superoperator,
    as_matrix,
    choi_matrix,
    devectorize,
    matrix_exponential,
    trace_norm,
    vectorize,
)

__all__ = [
    "ChannelMinusId",
    "GklsGenerator",
    "HamiltonianLindblad",
    "PrimitivityReport",
    "QContextReport",
    "Reset",
    "SensitivityReport",
    "analyze_context",
    "build_superoperator",
    "doeblin_epsilon",
    "doeblin_gap",
    "evolve_state",
    "hamiltonian_part",
    "dissipator_part",
    "primitivity_report",
    "sensitivity_report",
    "solve_poisson",
    "spectral_gap",
    "stationary_state",
]

KERNEL_TOL = 1e-9
STATIONARY_RESIDUAL_TOL = 1e-10
POISSON_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class HamiltonianLindblad:
    """GKLS data: a Hamiltonian plus a collection of jump operators.

    L(rho) = -i[H, rho] + sum_k ( J_k rho J_k^dag - (1/2){J_k^dag J_k, rho} )
    """

    hamiltonian: HermitianOperator
    jumps: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        d = self.hamiltonian.dim
        jumps = tuple(np.asarray(j, dtype=complex) for j in self.jumps)
        for j in jumps:
            if j.shape != (d, d):
                raise DimensionError(
                    f"jump operator shape {j.shape} does not match dimension {d}"
                )
        object.__setattr__(self, "jumps", jumps)


@dataclass(frozen=True)
class Reset:
    """Reset-to-target dynamics L(rho) = rate * (target - rho)."""

    rate: float
    target: DensityOperator

    def __post_init__(self):
        if not (self.rate > 0.0) or not math.isfinite(self.rate):
            raise DomainError(f"reset rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class ChannelMinusId:
    """Jump-to-channel dynamics L = rate * (Phi - id) for a channel Phi."""

    rate: float
    channel: Superoperator

    def __post_init__(self):
        if not (self.rate > 0.0) or not math.isfinite(self.rate):
            raise DomainError(f"rate must be positive, got {self.rate}")
        if self.channel.kind != "channel":
            raise ConstructionError("ChannelMinusId requires a channel-flagged map")


GklsGenerator = Union[HamiltonianLindblad, Reset, ChannelMinusId]


def hamiltonian_part(h) -> np.ndarray:
    """Superoperator matrix of rho -> -i[H, rho]."""
    m = as_matrix(h)
    d = m.shape[0]
    eye = np.eye(d, dtype=complex)
    return -1j * (np.kron(eye, m) - np.kron(m.T, eye))


def dissipator_part(jump) -> np.ndarray:
    """Superoperator matrix of rho -> J rho J^dag - (1/2){J^dag J, rho}."""
    j = as_matrix(jump)
    d = j.shape[0]
    eye = np.eye(d, dtype=complex)
    jj = j.conj().T @ j
    return (
        np.kron(j.conj(), j)
        - 0.5 * np.kron(eye, jj)
        - 0.5 * np.kron(jj.T, eye)
    )


def build_superoperator(generator: GklsGenerator) -> Superoperator:
    """Assemble the d^2 x d^2 matrix of a GKLS generator.

    Supports the Hamiltonian-plus-jumps form, the reset form
    rate * (target Tr(.) - id) and the channel form rate * (Phi - id).
    The result is flagged ``kind="generator"`` (hermiticity preserving and
    trace annihilating), which is validated at construction.
    """
    if isinstance(generator, HamiltonianLindblad):
        m = hamiltonian_part(generator.hamiltonian)
        for j in generator.jumps:
            m = m + dissipator_part(j)
        return Superoperator(m, kind="generator")
    if isinstance(generator, Reset):
        d = generator.target.dim
        vec_id = np.eye(d, dtype=complex).reshape(-1, order="F")
        m = generator.rate * (
            np.outer(vectorize(generator.target), vec_id) - np.eye(d * d)
        )
        return Superoperator(m, kind="generator")
    if isinstance(generator, ChannelMinusId):
        n = generator.channel.dim ** 2
        m = generator.rate * (generator.channel.matrix - np.eye(n))
        return Superoperator(m, kind="generator")
    raise ConstructionError(f"unknown generator form {type(generator).__name__}")


@functools.lru_cache(maxsize=32)
def _traceless_basis(dim: int) -> np.ndarray:
    """Orthonormal basis (columns) of the traceless subspace in vec coordinates.

    The traceless matrices are exactly the vectors orthogonal to vec(I).
    """
    vec_id = np.eye(dim, dtype=complex).reshape(1, -1, order="F")
    basis = scipy.linalg.null_space(vec_id)
    basis.setflags(write=False)
    return basis


def _kernel_eigs(m: np.ndarray, kernel_tol: float):
    """Eigen-decompose the generator matrix and locate its numerical kernel."""
    evals, evecs = np.linalg.eig(m)
    scale = max(1.0, float(np.linalg.norm(m, 2)))
    in_kernel = np.abs(evals) < kernel_tol * scale
    return evals, evecs, in_kernel


def _coerce_generator(generator) -> np.ndarray:
    if isinstance(generator, Superoperator):
        return generator.matrix
    if isinstance(generator, (HamiltonianLindblad, Reset, ChannelMinusId)):
        return build_superoperator(generator).matrix
    m = np.asarray(generator, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"generator must be square, got shape {m.shape}")
    if math.isqrt(m.shape[0]) ** 2 != m.shape[0]:
        raise DimensionError(f"generator side {m.shape[0]} is not a perfect square")
    return m


def stationary_state(
    generator,
    kernel_tol: float = KERNEL_TOL,
    residual_tol: float = STATIONARY_RESIDUAL_TOL,
) -> DensityOperator:
    """The unique stationary density matrix of a generator.

    Takes the eigenvector for the eigenvalue of smallest magnitude, fixes its
    phase so the trace is real positive, hermitizes and normalizes.  Kernel
    dimension is decided by counting eigenvalues with ``|lambda| <
    kernel_tol * max(1, |L|_2)``.

    :raises NonPrimitiveError: if the numerical kernel is not one-dimensional.
    :raises InvalidGeneratorError: if the kernel element cannot be normalized
        to a positive state or the stationary residual exceeds ``residual_tol``.
    """
    m = _coerce_generator(generator)
    d = math.isqrt(m.shape[0])
    evals, evecs, in_kernel = _kernel_eigs(m, kernel_tol)
    n_kernel = int(in_kernel.sum())
    if n_kernel != 1:
        raise NonPrimitiveError(
            f"stationary state is not unique: kernel dimension {n_kernel}"
        )
    idx = int(np.argmin(np.abs(evals)))
    x = devectorize(evecs[:, idx], d)
    tr = x.trace()
    if abs(tr) < 1e-12 * np.abs(x).max():
        raise InvalidGeneratorError(
            "kernel element has vanishing trace and cannot be a state"
        )
    x = x / tr
    x = (x + x.conj().T) / 2.0
    try:
        rho = DensityOperator(x)
    except ConstructionError as exc:
        raise InvalidGeneratorError(
            f"kernel element is not positive semidefinite: {exc}"
        ) from exc
    residual = trace_norm(devectorize(m @ vectorize(rho), d))
    if residual > residual_tol:
        raise InvalidGeneratorError(
            f"stationary residual {residual:.3e} exceeds {residual_tol:.1e}"
        )
    return rho


class PrimitivityReport(NamedTuple):
    primitive: bool
    stationary_kernel_dim: int
    min_eig_of_stationary: float | None


def primitivity_report(
    generator,
    faithfulness_tol: float = FAITHFULNESS_TOL,
    kernel_tol: float = KERNEL_TOL,
) -> PrimitivityReport:
    """Describe the kernel of a generator without raising on degeneracy.

    ``primitive`` requires a one-dimensional kernel and a faithful stationary
    state.  The minimum stationary eigenvalue is reported only when the kernel
    is one-dimensional and normalizable.
    """
    m = _coerce_generator(generator)
    evals, _, in_kernel = _kernel_eigs(m, kernel_tol)
    n_kernel = int(in_kernel.sum())
    if n_kernel != 1:
        return PrimitivityReport(False, n_kernel, None)
    try:
        rho = stationary_state(generator, kernel_tol=kernel_tol)
    except InvalidGeneratorError:
        return PrimitivityReport(False, 1, None)
    lo = rho.min_eigenvalue()
    return PrimitivityReport(lo > faithfulness_tol, 1, lo)


def spectral_gap(generator, kernel_tol: float = KERNEL_TOL) -> float:
    """-max Re(lambda) over the generator spectrum on the traceless subspace.

    :raises NonPrimitiveError: if the generator is not primitive.
    """
    m = _coerce_generator(generator)
    d = math.isqrt(m.shape[0])
    report = primitivity_report(generator, kernel_tol=kernel_tol)
    if not report.primitive:
        raise NonPrimitiveError(
            f"spectral gap requires a primitive generator "
            f"(kernel dim {report.stationary_kernel_dim}, "
            f"min stationary eigenvalue {report.min_eig_of_stationary})"
        )
    basis = _traceless_basis(d)
    restricted = basis.conj().T @ m @ basis
    return float(-np.linalg.eigvals(restricted).real.max())


def doeblin_epsilon(
    generator,
    t0: float,
    faithfulness_tol: float = FAITHFULNESS_TOL,
) -> float:
    """Doeblin minorization constant of the time-t0 channel.

    Returns the largest eps in [0, 1] such that exp(t0 L)(rho) - eps * rho_st
    is completely positive for every state rho, computed as the smallest
    eigenvalue of the pencil (J, I kron rho_st) where J is the Choi matrix of
    exp(t0 L), clamped to [0, 1].

    :raises DomainError: if t0 <= 0.
    :raises NonPrimitiveError: if the generator is not primitive.
    """
    if not (t0 > 0.0) or not math.isfinite(t0):
        raise DomainError(f"t0 must be positive and finite, got {t0}")
    m = _coerce_generator(generator)
    d = math.isqrt(m.shape[0])
    rho = stationary_state(generator)
    if rho.min_eigenvalue() <= faithfulness_tol:
        raise NonPrimitiveError(
            "Doeblin certificate requires a faithful stationary state"
        )
    channel = matrix_exponential(m, t0)
    choi = choi_matrix(channel)
    choi = (choi + choi.conj().T) / 2.0
    anchor = np.kron(np.eye(d, dtype=complex), rho.entries)
    anchor = (anchor + anchor.conj().T) / 2.0
    eps = float(scipy.linalg.eigh(choi, anchor, eigvals_only=True)[0])
    return min(max(eps, 0.0), 1.0)


def doeblin_gap(epsilon: float, t0: float) -> float:
    """Mixing rate -log(1 - eps)/t0 implied by a Doeblin constant."""
    if not (t0 > 0.0) or not math.isfinite(t0):
        raise DomainError(f"t0 must be positive and finite, got {t0}")
    if not (0.0 < epsilon < 1.0):
        raise DomainError(f"epsilon must lie strictly in (0, 1), got {epsilon}")
    return float(-math.log1p(-epsilon) / t0)


def evolve_state(generator, rho, t: float, tol: float = 1e-9) -> DensityOperator:
    """Propagate a state for time t >= 0 under the generator semigroup."""
    if not (t >= 0.0) or not math.isfinite(t):
        raise DomainError(f"evolution time must be >= 0 and finite, got {t}")
    m = _coerce_generator(generator)
    d = math.isqrt(m.shape[0])
    r = as_matrix(rho)
    if r.shape != (d, d):
        raise DimensionError(f"state shape {r.shape} does not match dimension {d}")
    out = devectorize(matrix_exponential(m, t) @ vectorize(r), d)
    try:
        return DensityOperator(out, tol=tol)
    except ConstructionError as exc:
        raise InvalidGeneratorError(
            f"evolution did not preserve the state manifold: {exc}"
        ) from exc


def _check_trace_annihilating(dm: np.ndarray, what: str) -> None:
    d = math.isqrt(dm.shape[0])
    vec_id = np.eye(d, dtype=complex).reshape(-1, order="F")
    dev = float(np.linalg.norm(dm.conj().T @ vec_id))
    scale = max(1.0, float(np.abs(dm).max()))
    if dev > EQUALITY_TOL * scale:
        raise InvalidPerturbationError(
            f"{what} is not trace annihilating: |dL^dag(I)| = {dev:.3e}"
        )


def solve_poisson(generator, perturbation) -> np.ndarray:
    """Stationary response to a generator perturbation.

    Solves L(delta) = -dL(rho_st) for the unique traceless Hermitian delta,
    where rho_st is the stationary state of L.  The system is restricted to
    the traceless subspace, where a primitive L is invertible.

    :returns: traceless Hermitian d x d ndarray.
    :raises NonPrimitiveError: if L is not primitive.
    :raises InvalidPerturbationError: if dL is not trace annihilating.
    """
    m = _coerce_generator(generator)
    dm = _coerce_generator(perturbation)
    if dm.shape != m.shape:
        raise DimensionError(
            f"perturbation shape {dm.shape} does not match generator {m.shape}"
        )
    d = math.isqrt(m.shape[0])
    _check_trace_annihilating(dm, "perturbation")
    report = primitivity_report(generator)
    if not report.primitive:
        raise NonPrimitiveError(
            "sensitivity requires a primitive generator "
            f"(kernel dim {report.stationary_kernel_dim})"
        )
    rho = stationary_state(generator)
    rhs = -(dm @ vectorize(rho))
    basis = _traceless_basis(d)
    reduced = basis.conj().T @ m @ basis
    y = np.linalg.solve(reduced, basis.conj().T @ rhs)
    delta = devectorize(basis @ y, d)
    delta = (delta + delta.conj().T) / 2.0
    residual = trace_norm(devectorize(m @ vectorize(delta) + dm @ vectorize(rho), d))
    if residual > POISSON_RESIDUAL_TOL:
        raise InvalidGeneratorError(
            f"sensitivity solve residual {residual:.3e} exceeds "
            f"{POISSON_RESIDUAL_TOL:.1e}"
        )
    return delta


@dataclass(frozen=True)
class SensitivityReport:
    """Stationary response magnitude against the two mixing bounds.

    ``rhs_nominal`` is |dL(rho_st)|_1 / gap; it can fail for strongly
    non-normal generators and is only flagged.  ``rhs_certified`` is
    (t0 / eps) |dL(rho_st)|_1 with the Doeblin constant eps of the time-t0
    channel; it always holds.
    """

    delta_stationary: np.ndarray
    lhs: float
    rhs_nominal: float
    rhs_certified: float
    nominal_satisfied: bool
    certified_satisfied: bool
    gap: float
    epsilon: float
    t0: float


def sensitivity_report(generator, perturbation, t0: float | None = None) -> SensitivityReport:
    """Solve the sensitivity equation and compare against mixing bounds.

    ``t0`` defaults to 1 / spectral_gap.  A small relative slack (1e-9) is
    applied when evaluating the satisfaction flags so that exact equality
    cases are not reported as violations.
    """
    m = _coerce_generator(generator)
    dm = _coerce_generator(perturbation)
    d = math.isqrt(m.shape[0])
    gap = spectral_gap(generator)
    if t0 is None:
        t0 = 1.0 / gap
    delta = solve_poisson(generator, perturbation)
    rho = stationary_state(generator)
    drive = trace_norm(devectorize(dm @ vectorize(rho), d))
    lhs = trace_norm(delta)
    eps = doeblin_epsilon(generator, t0)
    rhs_nominal = drive / gap
    rhs_certified = (t0 / eps) * drive if eps > 0.0 else math.inf
    slack = 1e-9
    return SensitivityReport(
        delta_stationary=delta,
        lhs=lhs,
        rhs_nominal=rhs_nominal,
        rhs_certified=rhs_certified,
        nominal_satisfied=bool(lhs <= rhs_nominal * (1.0 + slack) + 1e-12),
        certified_satisfied=bool(lhs <= rhs_certified * (1.0 + slack) + 1e-12),
        gap=gap,
        epsilon=eps,
        t0=float(t0),
    )


@dataclass(frozen=True)
class QContextReport:
    """Summary of one context's dynamics.

    ``certified_sensitivity_factor`` is t0/eps (None when eps underflows),
    the prefactor of the always-valid sensitivity bound.  ``eigenvalues`` is
    the full generator spectrum, for audit.
    """

    stationary: DensityOperator
    gap: float
    doeblin_epsilon: float
    doeblin_time: float
    primitive: bool
    certified_sensitivity_factor: float | None
    stationary_kernel_dim: int
    min_eig_of_stationary: float
    eigenvalues: np.ndarray


def analyze_context(generator, t0: float | None = None) -> QContextReport:
    """Full single-context report: stationary state, gap, Doeblin certificate.

    ``t0`` defaults to 1 / spectral_gap.

    :raises NonPrimitiveError: if the generator is not primitive.
    """
    m = _coerce_generator(generator)
    report = primitivity_report(generator)
    if not report.primitive:
        raise NonPrimitiveError(
            "context analysis requires a primitive generator "
            f"(kernel dim {report.stationary_kernel_dim}, min stationary "
            f"eigenvalue {report.min_eig_of_stationary})"
        )
    gap = spectral_gap(generator)
    if t0 is None:
        t0 = 1.0 / gap
    rho = stationary_state(generator)
    eps = doeblin_epsilon(generator, t0)
    factor = (t0 / eps) if eps > 0.0 else None
    evals = np.sort_complex(np.linalg.eigvals(m))
    return QContextReport(
        stationary=rho,
        gap=gap,
        doeblin_epsilon=eps,
        doeblin_time=float(t0),
        primitive=True,
        certified_sensitivity_factor=factor,
        stationary_kernel_dim=report.stationary_kernel_dim,
        min_eig_of_stationary=float(report.min_eig_of_stationary),
        eigenvalues=evals,
    )
