"""Dense operator algebra for finite-dimensional quantum systems.

Conventions used throughout the package
=======================================

Vectorization is **column stacking**: for a d x d matrix A,

    vec(A) = [A[:, 0]; A[:, 1]; ...; A[:, d-1]]

so that the linear map rho -> A rho B has the d^2 x d^2 matrix

    B^T (kron) A

acting on vec(rho).  The Choi matrix of a superoperator with matrix M is
obtained by the index reshuffle ``M.reshape([d]*4).swapaxes(0, 3)``; in this
convention the Choi matrix of rho -> U rho U^dag is vec(U) vec(U)^dag and the
Choi matrix of the reset map rho -> sigma Tr(rho) is I (kron) sigma.

All entropies and divergences are in nats (natural logarithm).  Tolerances
default to 1e-12 for construction, 1e-10 for equality / physicality flags and
1e-10 for faithfulness (minimum eigenvalue of a full-rank state).
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from .errors import (
    ConstructionError,
    DimensionError,
    DomainError,
    FaithfulnessError,
)

__all__ = [
    "CONSTRUCTION_TOL",
    "EQUALITY_TOL",
    "FAITHFULNESS_TOL",
    "DensityOperator",
    "HermitianOperator",
    "Superoperator",
    "as_matrix",
    "choi_matrix",
    "devectorize",
    "gell_mann_matrices",
    "matrix_exponential",
    "pauli_matrices",
    "random_density",
    "relative_entropy",
    "trace_norm",
    "vectorize",
]

CONSTRUCTION_TOL = 1e-12
EQUALITY_TOL = 1e-10
FAITHFULNESS_TOL = 1e-10


def as_matrix(op) -> np.ndarray:
    """Return the ndarray behind ``op``.

    Accepts plain array_likes, :class:`HermitianOperator` / :class:`DensityOperator`
    (``.entries``) and :class:`Superoperator` (``.matrix``).
    """
    if isinstance(op, Superoperator):
        return op.matrix
    entries = getattr(op, "entries", op)
    return np.asarray(entries, dtype=complex)


def _require_square(m: np.ndarray, what: str = "operator") -> int:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{what} must be a square matrix, got shape {m.shape}")
    return m.shape[0]


def vectorize(op) -> np.ndarray:
    """Column-stack a square matrix into a length d^2 vector."""
    m = as_matrix(op)
    _require_square(m)
    return m.reshape(-1, order="F")


def devectorize(v, dim: int | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize`.

    :param v: length d^2 vector.
    :param dim: d, inferred as the integer square root of len(v) when omitted.
    """
    vec = np.asarray(v, dtype=complex).reshape(-1)
    if dim is None:
        dim = math.isqrt(vec.size)
    if dim * dim != vec.size:
        raise DimensionError(f"cannot reshape length {vec.size} into a square matrix")
    return vec.reshape((dim, dim), order="F")


def trace_norm(op) -> float:
    """Sum of singular values (Schatten 1-norm) of a square matrix."""
    m = as_matrix(op)
    _require_square(m)
    return float(np.linalg.svd(m, compute_uv=False).sum())


def matrix_exponential(op, t: float = 1.0) -> np.ndarray:
    """exp(t * A) for a square complex matrix A, via scaling and squaring."""
    m = as_matrix(op)
    _require_square(m)
    if not np.isfinite(t):
        raise DomainError("time parameter must be finite")
    return scipy.linalg.expm(t * m)


def _hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2.0


class HermitianOperator:
    """A validated Hermitian matrix.

    Entries are checked against the conjugate transpose within ``tol``,
    hermitized, and frozen (the stored array is read-only).
    """

    __slots__ = ("entries",)

    def __init__(self, entries, tol: float = CONSTRUCTION_TOL):
        m = np.asarray(entries, dtype=complex)
        _require_square(m, "Hermitian operator")
        dev = np.abs(m - m.conj().T).max() if m.size else 0.0
        if dev > tol:
            raise ConstructionError(
                f"matrix is not Hermitian: max deviation {dev:.3e} exceeds {tol:.1e}"
            )
        m = _hermitize(m)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def __setattr__(self, name, value):
        raise AttributeError("HermitianOperator is immutable")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim})"


class DensityOperator:
    """A validated density matrix: Hermitian, unit trace, positive semidefinite.

    The minimum eigenvalue must be >= -tol; the trace must equal 1 within tol.
    The stored entries are hermitized and trace-normalized, and read-only.
    """

    __slots__ = ("entries",)

    def __init__(self, entries, tol: float = CONSTRUCTION_TOL):
        m = np.asarray(entries, dtype=complex)
        _require_square(m, "density operator")
        dev = np.abs(m - m.conj().T).max()
        if dev > tol:
            raise ConstructionError(
                f"density matrix is not Hermitian: deviation {dev:.3e} > {tol:.1e}"
            )
        m = _hermitize(m)
        tr = m.trace().real
        if abs(m.trace() - 1.0) > tol:
            raise ConstructionError(
                f"density matrix trace {m.trace():.15g} is not 1 within {tol:.1e}"
            )
        lo = float(np.linalg.eigvalsh(m).min())
        if lo < -tol:
            raise ConstructionError(
                f"density matrix has eigenvalue {lo:.3e} below -{tol:.1e}"
            )
        m = m / tr
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def __setattr__(self, name, value):
        raise AttributeError("DensityOperator is immutable")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries).min())

    def __repr__(self) -> str:
        return f"DensityOperator(dim={self.dim})"


def choi_matrix(superop) -> np.ndarray:
    """Choi matrix of a superoperator matrix in the column-stacking convention.

    The first tensor factor indexes the input, the second the output, so a
    completely positive map has a positive semidefinite Choi matrix and the
    reset map rho -> sigma Tr(rho) has Choi matrix I (kron) sigma.
    """
    m = as_matrix(superop)
    n = _require_square(m, "superoperator")
    d = math.isqrt(n)
    if d * d != n:
        raise DimensionError(f"superoperator side {n} is not a perfect square")
    return m.reshape([d] * 4).swapaxes(0, 3).reshape((n, n))


class Superoperator:
    """A d^2 x d^2 matrix acting on vectorized d x d operators.

    ``kind`` may flag physical structure, which is validated at construction:

    * ``"generator"`` -- hermiticity preserving and trace annihilating,
    * ``"channel"`` -- hermiticity preserving and trace preserving,
    * ``None`` -- no physicality constraint (an arbitrary linear map).

    Hermiticity preservation is checked through hermiticity of the Choi
    matrix, which is equivalent and does not require sampling inputs.
    """

    __slots__ = ("matrix", "dim", "kind")

    def __init__(self, matrix, kind: str | None = None, tol: float = EQUALITY_TOL):
        m = np.asarray(matrix, dtype=complex)
        n = _require_square(m, "superoperator")
        d = math.isqrt(n)
        if d * d != n:
            raise DimensionError(f"superoperator side {n} is not a perfect square")
        if kind not in (None, "generator", "channel"):
            raise ConstructionError(f"unknown superoperator kind {kind!r}")
        if kind is not None:
            scale = max(1.0, float(np.abs(m).max()))
            choi = m.reshape([d] * 4).swapaxes(0, 3).reshape((n, n))
            herm_dev = float(np.abs(choi - choi.conj().T).max())
            if herm_dev > tol * scale:
                raise ConstructionError(
                    f"{kind} is not hermiticity preserving: Choi deviation "
                    f"{herm_dev:.3e} exceeds tolerance"
                )
            vec_id = np.eye(d, dtype=complex).reshape(-1, order="F")
            out_trace = m.conj().T @ vec_id
            if kind == "generator":
                dev = float(np.linalg.norm(out_trace))
                if dev > tol * scale:
                    raise ConstructionError(
                        f"generator is not trace annihilating: |L^dag(I)| = {dev:.3e}"
                    )
            else:
                dev = float(np.linalg.norm(out_trace - vec_id))
                if dev > tol * scale:
                    raise ConstructionError(
                        f"channel is not trace preserving: deviation {dev:.3e}"
                    )
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "kind", kind)

    def __setattr__(self, name, value):
        raise AttributeError("Superoperator is immutable")

    def apply(self, op) -> np.ndarray:
        """Apply the map to a d x d matrix and return the d x d result."""
        m = as_matrix(op)
        if m.shape != (self.dim, self.dim):
            raise DimensionError(
                f"operand shape {m.shape} does not match superoperator dim {self.dim}"
            )
        return devectorize(self.matrix @ vectorize(m), self.dim)

    def choi(self) -> np.ndarray:
        return choi_matrix(self.matrix)

    def __repr__(self) -> str:
        return f"Superoperator(dim={self.dim}, kind={self.kind!r})"


def relative_entropy(rho, sigma, faithfulness_tol: float = FAITHFULNESS_TOL) -> float:
    """Quantum relative entropy D(rho || sigma) = Tr rho (log rho - log sigma), in nats.

    ``sigma`` must be faithful (minimum eigenvalue above ``faithfulness_tol``);
    zero eigenvalues of ``rho`` contribute nothing (0 log 0 = 0).

    :raises FaithfulnessError: if sigma is not full rank at the threshold.
    :raises DimensionError: if the operands have different dimensions.
    """
    r = _hermitize(as_matrix(rho))
    s = _hermitize(as_matrix(sigma))
    _require_square(r, "rho")
    _require_square(s, "sigma")
    if r.shape != s.shape:
        raise DimensionError(f"dimension mismatch: {r.shape} vs {s.shape}")
    p, u = np.linalg.eigh(r)
    q, v = np.linalg.eigh(s)
    if q.min() <= faithfulness_tol:
        raise FaithfulnessError(
            f"second argument has eigenvalue {q.min():.3e} at or below "
            f"faithfulness threshold {faithfulness_tol:.1e}"
        )
    p = np.clip(p, 0.0, None)
    pos = p > 0.0
    ent = float(np.dot(p[pos], np.log(p[pos])))
    overlap = np.abs(u.conj().T @ v) ** 2  # overlap[i, j] = |<u_i|v_j>|^2
    cross = float(p @ overlap @ np.log(q))
    return ent - cross


def random_density(dim: int, seed: int) -> DensityOperator:
    """A reproducible faithful random density matrix.

    Draws G with independent standard complex Gaussian entries from
    ``numpy.random.default_rng(seed)`` and returns the normalization of
    G G^dag + 1e-6 I, which is full rank by construction.  Bit-identical
    for identical ``(dim, seed)``.
    """
    if dim < 1:
        raise DimensionError(f"dimension must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T + 1e-6 * np.eye(dim)
    return DensityOperator(m / m.trace().real)


def pauli_matrices() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The Pauli matrices (sigma_x, sigma_y, sigma_z), read-only."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    for s in (sx, sy, sz):
        s.setflags(write=False)
    return sx, sy, sz


def gell_mann_matrices() -> list[np.ndarray]:
    """The eight Gell-Mann matrices, normalized so Tr(g_a g_b) = 2 delta_ab."""
    s3 = 1.0 / np.sqrt(3.0)
    mats = [
        np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex),
        np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]], dtype=complex),
        np.array([[1, 0, 0], [0, -1, 0], [0, 0, 0]], dtype=complex),
        np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex),
        np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]], dtype=complex),
        np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex),
        np.array([[0, 0, 0], [0, 0, -1j], [0, 1j, 0]], dtype=complex),
        np.array([[s3, 0, 0], [0, s3, 0], [0, 0, -2 * s3]], dtype=complex),
    ]
    for m in mats:
        m.setflags(write=False)
    return mats
