"""Transport of charges along edge channels and its loop holonomy.

An edge channel Psi maps states at one context to states at another.  Its
action on charge vectors is the compression of the Heisenberg-picture action
onto the span of the Cartan observables:

    M = G^{-1} T,  G_ab = <H_a, H_b>_HS,  T_ab = <H_a, Psi^dag(H_b)>_HS

with the Hilbert-Schmidt pairing <A, B> = Tr(A^dag B).  Around a loop the
composed transports need not return to the identity; the deviation from the
identity at third order defines a curvature-like form, extracted here by a
power-law fit of the deviation norm in the loop size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateCartanError,
    DimensionError,
    DomainError,
    LoopError,
)
from .operator_core import (
    EQUALITY_TOL,
    Superoperator,
    as_matrix,
    matrix_exponential,
    vectorize,
)
from .qlayer import solve_poisson, _coerce_generator, _check_trace_annihilating
from .slayer import CartanSet

__all__ = [
    "HolonomyReport",
    "ResponseMap",
    "SensitivityTriple",
    "TransportMap",
    "charge_transport",
    "holonomy_fit",
    "loop_holonomy",
    "make_sensitivity_triple",
    "partial_swap_channel",
    "unitary_conjugation_channel",
]

FLAT_DEVIATION_TOL = 1e-14
MAX_LOOP_THETA = 0.5


@dataclass(frozen=True)
class ResponseMap:
    """Labeled trace-annihilating perturbation directions at one context."""

    context: str | None
    directions: tuple[tuple[str, Superoperator], ...]

    def __post_init__(self):
        dirs = []
        dim = None
        for label, op in self.directions:
            m = _coerce_generator(op)
            _check_trace_annihilating(m, f"direction {label!r}")
            sup = op if isinstance(op, Superoperator) else Superoperator(m)
            if dim is None:
                dim = sup.dim
            elif sup.dim != dim:
                raise DimensionError("all directions must share one dimension")
            dirs.append((str(label), sup))
        object.__setattr__(self, "directions", tuple(dirs))

    def __len__(self) -> int:
        return len(self.directions)


@dataclass(frozen=True)
class SensitivityTriple:
    """A graph-direction coefficient vector with its generator and state response.

    ``stationary_response`` solves the sensitivity equation for the combined
    perturbation; it is traceless Hermitian.
    """

    coefficients: np.ndarray
    generator_perturbation: Superoperator
    stationary_response: np.ndarray


def make_sensitivity_triple(generator, response: ResponseMap, coefficients) -> SensitivityTriple:
    """Combine response directions and solve for the stationary response.

    The generator perturbation is sum_i c_i dL_i; the state response solves
    L(delta) = -dL(rho_st) on the traceless subspace.
    """
    c = np.asarray(coefficients, dtype=float).reshape(-1)
    if c.size != len(response):
        raise DimensionError(
            f"{c.size} coefficients for {len(response)} response directions"
        )
    if not np.all(np.isfinite(c)):
        raise DomainError("coefficients must be finite")
    if len(response) == 0:
        raise DimensionError("response map has no directions")
    n = response.directions[0][1].matrix.shape[0]
    combined = np.zeros((n, n), dtype=complex)
    for coeff, (_, op) in zip(c, response.directions):
        combined += coeff * op.matrix
    perturbation = Superoperator(combined, kind="generator")
    delta = solve_poisson(generator, perturbation)
    c.setflags(write=False)
    delta.setflags(write=False)
    return SensitivityTriple(
        coefficients=c,
        generator_perturbation=perturbation,
        stationary_response=delta,
    )


@dataclass(frozen=True)
class TransportMap:
    """A real matrix carrying charge vectors along one oriented edge."""

    matrix: np.ndarray
    source: str | None = None
    target: str | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"transport matrix must be square, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def charge_transport(
    channel: Superoperator,
    cartan: CartanSet,
    source: str | None = None,
    target: str | None = None,
) -> TransportMap:
    """Gram-normalized compression of a channel's Heisenberg action.

    Returns M = G^{-1} T with G the Gram matrix of the Cartan observables and
    T_ab = <H_a, Psi^dag(H_b)>_HS.  The identity channel maps to the identity
    matrix exactly.

    :raises DegenerateCartanError: if the Gram matrix is singular.
    """
    m = channel.matrix if isinstance(channel, Superoperator) else as_matrix(channel)
    d = cartan.dim
    if m.shape != (d * d, d * d):
        raise DimensionError(
            f"channel acts on dimension {int(math.isqrt(m.shape[0]))}, "
            f"Cartan set lives on {d}"
        )
    r = len(cartan)
    vecs = np.column_stack([vectorize(h) for h in cartan.generators])
    gram = (vecs.conj().T @ vecs).real
    scale = float(np.abs(gram).max())
    eigs = np.linalg.eigvalsh(gram)
    if eigs.min() <= 1e-12 * max(scale, 1.0):
        raise DegenerateCartanError(
            f"Gram matrix is singular (min eigenvalue {eigs.min():.3e})"
        )
    if np.array_equal(m, np.eye(d * d)):
        return TransportMap(np.eye(r), source=source, target=target)
    heisenberg = m.conj().T
    pairing = vecs.conj().T @ heisenberg @ vecs
    imag = float(np.abs(pairing.imag).max())
    if imag > EQUALITY_TOL * max(1.0, float(np.abs(pairing).max())):
        raise DomainError(
            f"channel pairing has imaginary residue {imag:.3e}; "
            "the map is not hermiticity preserving"
        )
    matrix = np.linalg.solve(gram, pairing.real)
    return TransportMap(matrix, source=source, target=target)


def loop_holonomy(transports: Sequence[TransportMap], dim: int | None = None) -> np.ndarray:
    """Deviation from identity of a composed transport loop.

    Transports are applied in sequence order (first edge first); consecutive
    context ids must chain and the loop must close (``None`` ids match
    anything).  An empty loop gives an exactly zero matrix.

    :raises LoopError: on a broken chain or an open loop.
    """
    chain = list(transports)
    if not chain:
        r = int(dim) if dim is not None else 0
        return np.zeros((r, r))
    r = chain[0].dim
    for t in chain:
        if t.dim != r:
            raise DimensionError("all transports in a loop must share one size")
    for prev, nxt in zip(chain[:-1], chain[1:]):
        if (
            prev.target is not None
            and nxt.source is not None
            and prev.target != nxt.source
        ):
            raise LoopError(
                f"transport chain breaks: {prev.target!r} then {nxt.source!r}"
            )
    first, last = chain[0], chain[-1]
    if (
        first.source is not None
        and last.target is not None
        and first.source != last.target
    ):
        raise LoopError(
            f"loop does not close: starts at {first.source!r}, ends at {last.target!r}"
        )
    product = np.eye(r)
    for t in chain:
        product = t.matrix @ product
    return product - np.eye(r)


@dataclass(frozen=True)
class HolonomyReport:
    """Power-law summary of loop deviations over a sweep of loop sizes.

    ``fitted_exponent`` is the log-log slope of deviation norm against theta
    (None when every deviation is at rounding level and the loop is flat).
    ``fitted_curvature`` is deviation/theta^2 at the smallest nonzero theta.
    """

    theta_sweep: tuple[tuple[float, float], ...]
    deviation_matrix: np.ndarray
    fitted_exponent: float | None
    fitted_curvature: np.ndarray | None


def holonomy_fit(
    loop_builder: Callable[[float], Sequence[TransportMap]],
    thetas: Sequence[float],
) -> HolonomyReport:
    """Sweep loop sizes and fit the deviation norm power law.

    ``thetas`` must contain at least three strictly decreasing values in
    (0, 0.5); zeros may be appended as sanity points, where the deviation is
    required to vanish identically.  Deviation norms are Frobenius.
    """
    values = [float(t) for t in thetas]
    nonzero = [t for t in values if t != 0.0]
    if len(nonzero) < 3:
        raise DomainError("need at least three nonzero loop sizes to fit")
    for t in nonzero:
        if not (0.0 < t < MAX_LOOP_THETA):
            raise DomainError(
                f"loop sizes must lie in (0, {MAX_LOOP_THETA}), got {t}"
            )
    if any(b >= a for a, b in zip(nonzero[:-1], nonzero[1:])):
        raise DomainError("loop sizes must be strictly decreasing")

    sweep: list[tuple[float, float]] = []
    smallest = None
    for t in values:
        deviation = loop_holonomy(loop_builder(t))
        norm = float(np.linalg.norm(deviation))
        if t == 0.0 and norm != 0.0:
            raise LoopError(
                f"zero-size loop deviates by {norm:.3e}; transports are inconsistent"
            )
        sweep.append((t, norm))
        if t != 0.0 and (smallest is None or t < smallest[0]):
            smallest = (t, deviation)

    norms = np.array([n for t, n in sweep if t != 0.0])
    ts = np.array([t for t, _ in sweep if t != 0.0])
    if np.all(norms < FLAT_DEVIATION_TOL):
        return HolonomyReport(
            theta_sweep=tuple(sweep),
            deviation_matrix=smallest[1],
            fitted_exponent=None,
            fitted_curvature=None,
        )
    exponent = float(np.polyfit(np.log(ts), np.log(norms), 1)[0])
    t_min, dev_min = smallest
    curvature = dev_min / (t_min * t_min)
    return HolonomyReport(
        theta_sweep=tuple(sweep),
        deviation_matrix=dev_min,
        fitted_exponent=exponent,
        fitted_curvature=curvature,
    )


def unitary_conjugation_channel(generator_h, theta: float) -> Superoperator:
    """Channel rho -> U rho U^dag with U = exp(i theta H) for Hermitian H."""
    h = as_matrix(generator_h)
    if theta == 0.0:
        return Superoperator(np.eye(h.shape[0] ** 2), kind="channel")
    u = matrix_exponential(h, 1j * theta)
    return Superoperator(np.kron(u.conj(), u), kind="channel")


def partial_swap_channel(unitary, theta: float) -> Superoperator:
    """Convex mixture (1 - theta) id + theta U . U^dag.

    For theta in [0, 1] this is a channel.  Other values give the formal
    linear extension, which is hermiticity preserving and trace preserving
    but not completely positive; it is returned unflagged.
    """
    u = as_matrix(unitary)
    d = u.shape[0]
    dev = float(np.abs(u @ u.conj().T - np.eye(d)).max())
    if dev > EQUALITY_TOL:
        raise DomainError(f"matrix is not unitary (deviation {dev:.3e})")
    if not math.isfinite(theta):
        raise DomainError("theta must be finite")
    if theta == 0.0:
        return Superoperator(np.eye(d * d), kind="channel")
    m = (1.0 - theta) * np.eye(d * d) + theta * np.kron(u.conj(), u)
    kind = "channel" if 0.0 <= theta <= 1.0 else None
    return Superoperator(m, kind=kind)
