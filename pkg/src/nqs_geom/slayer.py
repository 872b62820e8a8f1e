"""Charge coordinates and metrics on them.

A *Cartan set* is a commuting family of Hermitian observables; the charge
vector of a state is the tuple of their expectation values.  This module
builds metrics on charge space three ways: as Hessians of scalar cost
functions (central differences with one Richardson refinement), as
symmetrized covariance matrices, and as Hessians of the relative-entropy
divergence of a parametrized state family around its anchor.  A classical
Fisher-information routine is included for cross-checking commuting families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ConstructionError,
    DimensionError,
    DomainError,
    EvaluationError,
    FaithfulnessError,
    SupportError,
    UnsupportedDivergenceError,
)
from .operator_core import (
    EQUALITY_TOL,
    FAITHFULNESS_TOL,
    DensityOperator,
    HermitianOperator,
    as_matrix,
    relative_entropy,
    trace_norm,
)

__all__ = [
    "CartanSet",
    "ChargeVector",
    "DivergenceFunctional",
    "MetricMatrix",
    "QuadraticFunctional",
    "charges",
    "classical_fisher",
    "covariance_metric",
    "fisher_from_divergence",
    "gibbs_family",
    "hessian_metric",
    "path_cost",
    "quadratic_cost",
]

METRIC_SYMMETRY_TOL = 1e-10
METRIC_PSD_TOL = 1e-8
DEFAULT_HESSIAN_STEP = 1e-4
DEFAULT_DIVERGENCE_STEP = 1e-3
GRADIENT_AT_ANCHOR_TOL = 1e-6


class CartanSet:
    """A commuting family of Hermitian charge observables on one system.

    Pairwise commutators must vanish within 1e-10 in trace norm.
    """

    __slots__ = ("generators", "labels", "dim")

    def __init__(self, generators: Sequence, labels: Sequence[str] | None = None):
        ops = tuple(
            g if isinstance(g, HermitianOperator) else HermitianOperator(g)
            for g in generators
        )
        if not ops:
            raise ConstructionError("a Cartan set needs at least one generator")
        dim = ops[0].dim
        for g in ops:
            if g.dim != dim:
                raise DimensionError("Cartan generators must share one dimension")
        for a in range(len(ops)):
            for b in range(a + 1, len(ops)):
                comm = ops[a].entries @ ops[b].entries - ops[b].entries @ ops[a].entries
                if trace_norm(comm) > EQUALITY_TOL:
                    raise ConstructionError(
                        f"generators {a} and {b} do not commute "
                        f"(|[A,B]|_1 = {trace_norm(comm):.3e})"
                    )
        if labels is None:
            labels = tuple(f"q{i}" for i in range(len(ops)))
        else:
            labels = tuple(str(s) for s in labels)
            if len(labels) != len(ops):
                raise DimensionError("one label per generator required")
        object.__setattr__(self, "generators", ops)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dim", dim)

    def __setattr__(self, name, value):
        raise AttributeError("CartanSet is immutable")

    def __len__(self) -> int:
        return len(self.generators)

    def __repr__(self) -> str:
        return f"CartanSet(dim={self.dim}, labels={list(self.labels)})"


@dataclass(frozen=True)
class ChargeVector:
    """Charge coordinates of a state, optionally tagged with a context id."""

    values: np.ndarray
    context: str | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


def _charge_values(q) -> np.ndarray:
    return np.asarray(getattr(q, "values", q), dtype=float).reshape(-1)


def charges(rho, cartan: CartanSet, context: str | None = None) -> ChargeVector:
    """Expectation values q_a = Tr(rho H_a) of the Cartan observables.

    The imaginary residue of each trace must be below 1e-12.
    """
    r = as_matrix(rho)
    if r.shape != (cartan.dim, cartan.dim):
        raise DimensionError(
            f"state shape {r.shape} does not match Cartan dimension {cartan.dim}"
        )
    vals = np.empty(len(cartan))
    for i, h in enumerate(cartan.generators):
        tr = np.trace(r @ h.entries)
        if abs(tr.imag) > 1e-12:
            raise EvaluationError(
                f"charge {i} has imaginary residue {tr.imag:.3e}"
            )
        vals[i] = tr.real
    return ChargeVector(vals, context=context)


@dataclass(frozen=True)
class QuadraticFunctional:
    """Cost (1/2)(q - preferred)^T stiffness (q - preferred).

    The stiffness matrix must be symmetric positive definite.
    """

    stiffness: np.ndarray
    preferred: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.stiffness, dtype=float)
        p = np.asarray(self.preferred, dtype=float).reshape(-1)
        if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] != p.size:
            raise DimensionError(
                f"stiffness shape {k.shape} incompatible with preferred size {p.size}"
            )
        if np.abs(k - k.T).max() > METRIC_SYMMETRY_TOL:
            raise ConstructionError("stiffness matrix must be symmetric")
        k = (k + k.T) / 2.0
        if not np.all(np.isfinite(k)) or not np.all(np.isfinite(p)):
            raise ConstructionError("stiffness and preferred must be finite")
        if np.linalg.eigvalsh(k).min() <= 0.0:
            raise ConstructionError("stiffness matrix must be positive definite")
        k.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "stiffness", k)
        object.__setattr__(self, "preferred", p)

    @property
    def dim(self) -> int:
        return self.preferred.size

    def cost(self, q) -> float:
        dq = _charge_values(q) - self.preferred
        return float(0.5 * dq @ self.stiffness @ dq)

    def gradient(self, q) -> np.ndarray:
        return self.stiffness @ (_charge_values(q) - self.preferred)

    def hessian(self, q) -> np.ndarray:
        return np.array(self.stiffness)


@dataclass(frozen=True)
class DivergenceFunctional:
    """Cost D(rho(theta) || rho(anchor)) for a parametrized state family."""

    family: Callable[[np.ndarray], DensityOperator]
    anchor: np.ndarray
    divergence: str = "relative-entropy"

    def __post_init__(self):
        if self.divergence != "relative-entropy":
            raise UnsupportedDivergenceError(
                f"divergence {self.divergence!r} is not implemented"
            )
        a = np.asarray(self.anchor, dtype=float).reshape(-1)
        a.setflags(write=False)
        object.__setattr__(self, "anchor", a)

    def cost(self, theta) -> float:
        ref = self.family(self.anchor)
        return relative_entropy(self.family(np.asarray(theta, float)), ref)

    def metric(self, step: float = DEFAULT_DIVERGENCE_STEP) -> "MetricMatrix":
        return fisher_from_divergence(self.family, self.anchor, step=step)


class MetricMatrix:
    """A symmetric positive-semidefinite matrix on charge space.

    Symmetry is required within 1e-10 and eigenvalues must be >= -1e-8;
    the stored entries are symmetrized and read-only.
    """

    __slots__ = ("entries", "labels")

    def __init__(self, entries, labels: Sequence[str] | None = None):
        m = np.asarray(entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"metric must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ConstructionError("metric entries must be finite")
        asym = np.abs(m - m.T).max() if m.size else 0.0
        if asym > METRIC_SYMMETRY_TOL:
            raise ConstructionError(
                f"metric asymmetry {asym:.3e} exceeds {METRIC_SYMMETRY_TOL:.1e}"
            )
        m = (m + m.T) / 2.0
        lo = float(np.linalg.eigvalsh(m).min()) if m.size else 0.0
        if lo < -METRIC_PSD_TOL:
            raise ConstructionError(
                f"metric eigenvalue {lo:.3e} below -{METRIC_PSD_TOL:.1e}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(
            self, "labels", tuple(labels) if labels is not None else None
        )

    def __setattr__(self, name, value):
        raise AttributeError("MetricMatrix is immutable")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __repr__(self) -> str:
        return f"MetricMatrix(dim={self.dim})"


def quadratic_cost(
    q,
    functional: QuadraticFunctional,
    neighbors: Sequence[tuple] = (),
) -> float:
    """Internal quadratic cost plus pairwise coupling to fixed neighbor charges.

    cost = (1/2)(q - preferred)^T K (q - preferred)
         + (1/2) sum_j w_j |q - q_j|^2

    :param neighbors: pairs ``(neighbor_charges, weight)`` with weight >= 0.
    """
    qv = _charge_values(q)
    if qv.size != functional.dim:
        raise DimensionError(
            f"charge size {qv.size} does not match functional dim {functional.dim}"
        )
    total = functional.cost(qv)
    for entry in neighbors:
        other, weight = entry
        w = float(weight)
        if w < 0.0 or not math.isfinite(w):
            raise DomainError(f"coupling weight must be >= 0 and finite, got {w}")
        ov = _charge_values(other)
        if ov.size != qv.size:
            raise DimensionError("neighbor charge size mismatch")
        diff = qv - ov
        total += 0.5 * w * float(diff @ diff)
    return float(total)


def _hessian_central(f: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    """Plain second-order central-difference Hessian."""
    r = x.size
    out = np.empty((r, r))
    f0 = f(x)
    if not np.isfinite(f0):
        raise EvaluationError("cost function returned a non-finite value")
    for i in range(r):
        ei = np.zeros(r)
        ei[i] = h
        fp = f(x + ei)
        fm = f(x - ei)
        out[i, i] = (fp - 2.0 * f0 + fm) / (h * h)
        for j in range(i + 1, r):
            ej = np.zeros(r)
            ej[j] = h
            fpp = f(x + ei + ej)
            fpm = f(x + ei - ej)
            fmp = f(x - ei + ej)
            fmm = f(x - ei - ej)
            out[i, j] = out[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h * h)
    if not np.all(np.isfinite(out)):
        raise EvaluationError("finite-difference Hessian has non-finite entries")
    return out


def _hessian_refined(f: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    """Central differences at steps h and h/2 with one Richardson refinement."""
    coarse = _hessian_central(f, x, h)
    fine = _hessian_central(f, x, h / 2.0)
    return (4.0 * fine - coarse) / 3.0


def hessian_metric(
    cost: Callable[[np.ndarray], float],
    q_star,
    step: float = DEFAULT_HESSIAN_STEP,
    labels: Sequence[str] | None = None,
) -> MetricMatrix:
    """Metric as the Hessian of a scalar cost at a point, by central differences.

    Uses steps ``step`` and ``step/2`` with one Richardson refinement, then
    symmetrizes.  The evaluation point should be a local minimum for the
    result to satisfy the positive-semidefiniteness requirement.
    """
    if not (step > 0.0) or not math.isfinite(step):
        raise DomainError(f"step must be positive and finite, got {step}")
    x = _charge_values(q_star)
    hess = _hessian_refined(lambda v: float(cost(v)), x, step)
    return MetricMatrix((hess + hess.T) / 2.0, labels=labels)


def covariance_metric(rho, cartan: CartanSet) -> MetricMatrix:
    """Symmetrized covariance metric g_ij = Tr(rho {H_i, H_j})/2 - q_i q_j."""
    r = as_matrix(rho)
    if r.shape != (cartan.dim, cartan.dim):
        raise DimensionError(
            f"state shape {r.shape} does not match Cartan dimension {cartan.dim}"
        )
    q = charges(rho, cartan).values
    n = len(cartan)
    g = np.empty((n, n))
    for i in range(n):
        hi = cartan.generators[i].entries
        for j in range(i, n):
            hj = cartan.generators[j].entries
            anti = hi @ hj + hj @ hi
            g[i, j] = g[j, i] = 0.5 * np.trace(r @ anti).real - q[i] * q[j]
    return MetricMatrix(g, labels=cartan.labels)


def fisher_from_divergence(
    family: Callable[[np.ndarray], DensityOperator],
    theta_star,
    step: float = DEFAULT_DIVERGENCE_STEP,
    faithfulness_tol: float = FAITHFULNESS_TOL,
    labels: Sequence[str] | None = None,
) -> MetricMatrix:
    """Metric as the Hessian of theta -> D(rho(theta) || rho(theta_star)).

    Every state evaluated on the finite-difference stencil must be faithful.
    The anchor must be a critical point of the divergence (it is its global
    minimum); the central-difference gradient is checked against 1e-6.
    """
    if not (step > 0.0) or not math.isfinite(step):
        raise DomainError(f"step must be positive and finite, got {step}")
    anchor = _charge_values(theta_star)
    ref = family(anchor)
    ref_min = np.linalg.eigvalsh(as_matrix(ref)).min()
    if ref_min <= faithfulness_tol:
        raise FaithfulnessError(
            f"anchor state eigenvalue {ref_min:.3e} at or below threshold"
        )

    def div(theta: np.ndarray) -> float:
        state = family(theta)
        lo = np.linalg.eigvalsh(as_matrix(state)).min()
        if lo <= faithfulness_tol:
            raise FaithfulnessError(
                f"stencil state at {theta.tolist()} has eigenvalue {lo:.3e}"
            )
        return relative_entropy(state, ref, faithfulness_tol=faithfulness_tol)

    grad = np.empty(anchor.size)
    for i in range(anchor.size):
        ei = np.zeros(anchor.size)
        ei[i] = step
        grad[i] = (div(anchor + ei) - div(anchor - ei)) / (2.0 * step)
    gnorm = float(np.linalg.norm(grad))
    if gnorm > GRADIENT_AT_ANCHOR_TOL:
        raise DomainError(
            f"anchor is not a critical point of the divergence "
            f"(|grad| = {gnorm:.3e} > {GRADIENT_AT_ANCHOR_TOL:.1e})"
        )
    hess = _hessian_refined(div, anchor, step)
    return MetricMatrix((hess + hess.T) / 2.0, labels=labels)


def classical_fisher(
    p_family: Callable[[np.ndarray], np.ndarray],
    theta_star,
    step: float = DEFAULT_HESSIAN_STEP,
    labels: Sequence[str] | None = None,
) -> MetricMatrix:
    """Classical Fisher information sum_x p(x) d_i log p(x) d_j log p(x).

    Log-derivatives are central differences at ``step``.  Probability vectors
    on the stencil must be strictly positive and sum to 1 within 1e-10.
    """
    if not (step > 0.0) or not math.isfinite(step):
        raise DomainError(f"step must be positive and finite, got {step}")
    anchor = _charge_values(theta_star)

    def probe(theta: np.ndarray) -> np.ndarray:
        p = np.asarray(p_family(theta), dtype=float).reshape(-1)
        if not np.all(np.isfinite(p)):
            raise EvaluationError("probability family returned non-finite values")
        if p.min() <= 0.0:
            raise SupportError(
                f"zero or negative probability {p.min():.3e} in the stencil"
            )
        if abs(p.sum() - 1.0) > 1e-10:
            raise DomainError(
                f"probabilities sum to {p.sum():.12f}, not 1 within 1e-10"
            )
        return p

    p0 = probe(anchor)
    r = anchor.size
    dlog = np.empty((r, p0.size))
    for i in range(r):
        ei = np.zeros(r)
        ei[i] = step
        dlog[i] = (np.log(probe(anchor + ei)) - np.log(probe(anchor - ei))) / (
            2.0 * step
        )
    g = (dlog * p0) @ dlog.T
    return MetricMatrix((g + g.T) / 2.0, labels=labels)


def path_cost(path: Sequence, metric) -> float:
    """Kinetic cost of a discrete charge path under a constant metric.

    For nodes q_0 .. q_{M-1} on the uniform grid tau_k = k/(M-1):

        cost = (1/2) sum_k (dq_k/dtau)^T g (dq_k/dtau) dtau

    A straight line from a to b has cost |b - a|^2_g / 2 exactly.
    """
    pts = [_charge_values(p) for p in path]
    if len(pts) < 2:
        raise DomainError(f"a path needs at least 2 nodes, got {len(pts)}")
    r = pts[0].size
    if any(p.size != r for p in pts):
        raise DimensionError("all path nodes must have the same charge size")
    g = metric.entries if isinstance(metric, MetricMatrix) else MetricMatrix(metric).entries
    if g.shape != (r, r):
        raise DimensionError(f"metric shape {g.shape} does not match charge size {r}")
    dtau = 1.0 / (len(pts) - 1)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        step = b - a
        total += float(step @ g @ step)
    return total / (2.0 * dtau)


def gibbs_family(cartan: CartanSet) -> Callable[[np.ndarray], DensityOperator]:
    """Family theta -> exp(-sum_a theta_a H_a) / Z over a Cartan set.

    Computed through the eigendecomposition of the (Hermitian) exponent with
    max-shift for overflow safety.  All returned states are faithful.
    """

    mats = np.stack([h.entries for h in cartan.generators])

    def family(theta) -> DensityOperator:
        t = _charge_values(theta)
        if t.size != len(cartan):
            raise DimensionError(
                f"parameter size {t.size} does not match Cartan size {len(cartan)}"
            )
        exponent = -np.tensordot(t, mats, axes=1)
        w, u = np.linalg.eigh(exponent)
        w = w - w.max()
        boltz = np.exp(w)
        rho = (u * boltz) @ u.conj().T / boltz.sum()
        return DensityOperator(rho)

    return family
