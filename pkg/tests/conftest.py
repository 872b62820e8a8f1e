"""Shared samplers for randomized tests.

Everything is seeded; tests derive their generators from explicit integers so
failures reproduce exactly.
"""

from __future__ import annotations

import numpy as np
import pytest

from nqs_geom import (
    DensityOperator,
    HamiltonianLindblad,
    HermitianOperator,
    build_superoperator,
)


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2.0


def random_state(rng: np.random.Generator, dim: int) -> DensityOperator:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T + 1e-6 * np.eye(dim)
    return DensityOperator(rho / np.trace(rho).real)


def random_primitive_gkls(rng: np.random.Generator, dim: int) -> HamiltonianLindblad:
    """A Hamiltonian plus one generic full jump operator.

    A single jump with a dense random matrix almost surely leaves no invariant
    subspace, which makes the semigroup primitive; the caller's tests assert
    the resulting kernel structure anyway.
    """
    h = HermitianOperator(random_hermitian(rng, dim))
    jump = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return HamiltonianLindblad(h, (jump,))


def random_trace_annihilating(rng: np.random.Generator, dim: int) -> np.ndarray:
    """A generator-free perturbation direction: a difference of dissipators."""
    from nqs_geom.qlayer import dissipator_part

    j1 = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    j2 = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return dissipator_part(j1) - 0.5 * dissipator_part(j2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)


def superop_matrix(generator) -> np.ndarray:
    return build_superoperator(generator).matrix
