"""Tests for charge coordinates and the metric constructions."""

import math

import numpy as np
import pytest

from nqs_geom import (
    CartanSet,
    ConstructionError,
    DensityOperator,
    DimensionError,
    DomainError,
    FaithfulnessError,
    MetricMatrix,
    QuadraticFunctional,
    SupportError,
    charges,
    classical_fisher,
    covariance_metric,
    fisher_from_divergence,
    gell_mann_matrices,
    gibbs_family,
    hessian_metric,
    path_cost,
    pauli_matrices,
    quadratic_cost,
)
from conftest import random_state

SX, SY, SZ = pauli_matrices()
GM = gell_mann_matrices()


def qutrit_cartan() -> CartanSet:
    return CartanSet([GM[2], GM[7]], labels=("t3", "t8"))


def test_cartan_set_rejects_non_commuting():
    with pytest.raises(ConstructionError):
        CartanSet([SX, SZ])


def test_cartan_set_default_labels():
    c = CartanSet([SZ])
    assert c.labels == ("q0",)
    assert len(c) == 1 and c.dim == 2


def test_charges_of_basis_state():
    """diag(1,0,0) has charges (1, 1/sqrt(3)) for the diagonal su(3) pair."""
    q = charges(np.diag([1.0, 0.0, 0.0]), qutrit_cartan())
    np.testing.assert_allclose(q.values, [1.0, 1.0 / math.sqrt(3.0)], atol=1e-12)


def test_charges_two_level_population():
    for p in (0.0, 0.3, 1.0):
        q = charges(np.diag([p, 1 - p]), CartanSet([SZ]))
        assert q.values[0] == pytest.approx(2 * p - 1, abs=1e-12)


def test_charges_dimension_mismatch():
    with pytest.raises(DimensionError):
        charges(np.eye(2) / 2, qutrit_cartan())


def test_quadratic_functional_values():
    k = np.array([[2.0, 0.5], [0.5, 1.0]])
    f = QuadraticFunctional(k, [1.0, -1.0])
    q = np.array([2.0, 0.0])
    dq = q - np.array([1.0, -1.0])
    assert f.cost(q) == pytest.approx(0.5 * dq @ k @ dq)
    np.testing.assert_allclose(f.gradient(q), k @ dq)
    np.testing.assert_allclose(f.hessian(q), k)
    assert f.cost(f.preferred) == 0.0


def test_quadratic_functional_rejects_bad_stiffness():
    with pytest.raises(ConstructionError):
        QuadraticFunctional([[1.0, 0.2], [0.0, 1.0]], [0.0, 0.0])  # asymmetric
    with pytest.raises(ConstructionError):
        QuadraticFunctional([[1.0, 0.0], [0.0, -0.5]], [0.0, 0.0])  # indefinite
    with pytest.raises(DimensionError):
        QuadraticFunctional(np.eye(2), [0.0, 0.0, 0.0])


def test_quadratic_cost_with_neighbors():
    f = QuadraticFunctional([[1.0]], [0.0])
    total = quadratic_cost([2.0], f, neighbors=[([1.0], 0.5), ([4.0], 2.0)])
    expected = 0.5 * 4.0 + 0.5 * 0.5 * 1.0 + 0.5 * 2.0 * 4.0
    assert total == pytest.approx(expected)
    with pytest.raises(DomainError):
        quadratic_cost([2.0], f, neighbors=[([1.0], -0.1)])


def test_hessian_metric_recovers_quadratic_exactly():
    """On an exactly quadratic cost the refined stencil has only roundoff."""
    k = np.array([[2.0, 0.3], [0.3, 1.5]])
    f = QuadraticFunctional(k, [0.2, -0.4])
    neighbors = [(np.array([1.0, 1.0]), 0.7)]
    metric = hessian_metric(
        lambda q: quadratic_cost(q, f, neighbors), [0.0, 0.0]
    )
    np.testing.assert_allclose(metric.entries, k + 0.7 * np.eye(2), atol=1e-8)


def test_hessian_metric_on_quartic_against_analytic():
    def cost(q):
        return q[0] ** 4 + 3.0 * q[0] ** 2 * q[1] ** 2 + 0.5 * q[1] ** 2

    x = np.array([0.3, -0.2])
    analytic = np.array(
        [
            [12.0 * x[0] ** 2 + 6.0 * x[1] ** 2, 12.0 * x[0] * x[1]],
            [12.0 * x[0] * x[1], 6.0 * x[0] ** 2 + 1.0],
        ]
    )
    metric = hessian_metric(cost, x, step=1e-3)
    np.testing.assert_allclose(metric.entries, analytic, atol=1e-7)


def test_hessian_metric_reparametrization_covariance(rng):
    """theta = A xi pulls the metric back to A^T g A."""
    k = np.array([[2.0, 0.3], [0.3, 1.5]])
    f = QuadraticFunctional(k, [0.0, 0.0])
    a = np.array([[1.0, 2.0], [-0.5, 1.0]])
    base = hessian_metric(lambda q: quadratic_cost(q, f), [0.0, 0.0])
    pulled = hessian_metric(
        lambda xi: quadratic_cost(a @ xi, f), [0.0, 0.0]
    )
    np.testing.assert_allclose(pulled.entries, a.T @ base.entries @ a, atol=1e-5)


def test_covariance_metric_qutrit_uniform():
    g = covariance_metric(np.eye(3) / 3.0, qutrit_cartan())
    np.testing.assert_allclose(g.entries, np.diag([2.0 / 3.0, 2.0 / 3.0]), atol=1e-12)
    assert g.labels == ("t3", "t8")


def test_covariance_metric_two_level():
    """Var(sigma_z) = 4p(1-p) on diag(p, 1-p)."""
    for p in (0.1, 0.5, 0.9):
        g = covariance_metric(np.diag([p, 1 - p]), CartanSet([SZ]))
        assert g.entries[0, 0] == pytest.approx(4 * p * (1 - p), abs=1e-12)


def test_covariance_metric_vanishes_on_joint_eigenstate():
    g = covariance_metric(np.diag([1.0, 0.0, 0.0]), qutrit_cartan())
    np.testing.assert_allclose(g.entries, np.zeros((2, 2)), atol=1e-12)


def test_gibbs_family_closed_form_two_level():
    family = gibbs_family(CartanSet([SZ]))
    theta = 0.37
    z = 2.0 * math.cosh(theta)
    expected = np.diag([math.exp(-theta), math.exp(theta)]) / z
    np.testing.assert_allclose(family([theta]).entries, expected, atol=1e-12)
    uniform = family([0.0])
    np.testing.assert_allclose(uniform.entries, np.eye(2) / 2.0, atol=1e-15)


def test_gibbs_family_rejects_wrong_parameter_size():
    family = gibbs_family(qutrit_cartan())
    with pytest.raises(DimensionError):
        family([0.1])


def test_fisher_equals_covariance_at_anchor(rng):
    """Divergence Hessian against the symmetrized covariance at the same state."""
    cases = [
        (CartanSet([SZ]), np.array([0.15])),
        (qutrit_cartan(), np.array([0.1, -0.2])),
        (qutrit_cartan(), np.array([0.0, 0.0])),
    ]
    for cartan, anchor in cases:
        family = gibbs_family(cartan)
        fisher = fisher_from_divergence(family, anchor)
        cov = covariance_metric(family(anchor), cartan)
        np.testing.assert_allclose(fisher.entries, cov.entries, atol=1e-4)


def test_fisher_qutrit_at_zero_field():
    fisher = fisher_from_divergence(gibbs_family(qutrit_cartan()), [0.0, 0.0])
    np.testing.assert_allclose(
        fisher.entries, np.diag([2.0 / 3.0, 2.0 / 3.0]), atol=1e-4
    )


def test_fisher_matches_classical_for_diagonal_family(rng):
    """Commuting (diagonal) families reduce to the classical Fisher matrix."""
    for trial in range(3):
        d1 = np.diag(rng.uniform(-1.0, 1.0, size=3))
        d2 = np.diag(rng.uniform(-1.0, 1.0, size=3))
        cartan = CartanSet([d1, d2])
        family = gibbs_family(cartan)
        anchor = rng.uniform(-0.2, 0.2, size=2)

        def p_family(theta):
            return np.diag(family(theta).entries).real

        quantum = fisher_from_divergence(family, anchor)
        classical = classical_fisher(p_family, anchor)
        np.testing.assert_allclose(quantum.entries, classical.entries, atol=1e-6)


def test_classical_fisher_bernoulli():
    """F(p) = 1/p + 1/(1-p); at p = 1/2 this is 4."""

    def bernoulli(theta):
        p = theta[0]
        return np.array([p, 1.0 - p])

    g = classical_fisher(bernoulli, [0.5])
    assert g.entries[0, 0] == pytest.approx(4.0, abs=1e-6)
    g = classical_fisher(bernoulli, [0.2])
    assert g.entries[0, 0] == pytest.approx(1.0 / 0.2 + 1.0 / 0.8, rel=1e-6)


def test_classical_fisher_rejects_bad_families():
    with pytest.raises(SupportError):
        classical_fisher(lambda th: np.array([1.0, 0.0]), [0.0])
    with pytest.raises(DomainError):
        classical_fisher(lambda th: np.array([0.6, 0.6]), [0.0])


def test_fisher_rejects_unfaithful_anchor():
    def family(theta):
        t = float(theta[0])
        return DensityOperator(np.diag([1.0 - abs(t), abs(t)]) if abs(t) > 0
                               else np.diag([1.0, 0.0]))

    with pytest.raises(FaithfulnessError):
        fisher_from_divergence(family, [0.0])


def test_metric_matrix_validation():
    with pytest.raises(ConstructionError):
        MetricMatrix([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ConstructionError):
        MetricMatrix([[-1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(DimensionError):
        MetricMatrix(np.zeros((2, 3)))
    g = MetricMatrix(np.eye(2), labels=("a", "b"))
    assert g.labels == ("a", "b")
    with pytest.raises((ValueError, AttributeError)):
        g.entries[0, 0] = 3.0


def test_path_cost_straight_line_closed_form():
    """Straight line from a to b costs |b - a|^2_g / 2 for any node count."""
    g = MetricMatrix([[2.0, 0.0], [0.0, 1.0]])
    a, b = np.array([0.0, 0.0]), np.array([1.0, 2.0])
    expected = 0.5 * (b - a) @ g.entries @ (b - a)
    for m in (2, 5, 17):
        taus = np.linspace(0.0, 1.0, m)
        path = [a + t * (b - a) for t in taus]
        assert path_cost(path, g) == pytest.approx(expected, abs=1e-12)


def test_path_cost_unit_metric_is_half_length_squared():
    a, b = np.array([1.0]), np.array([3.0])
    path = [a, (a + b) / 2.0, b]
    assert path_cost(path, MetricMatrix([[1.0]])) == pytest.approx(2.0)


def test_path_cost_straight_line_is_minimal(rng):
    g = MetricMatrix([[1.5, 0.2], [0.2, 0.8]])
    a, b = np.array([0.0, 1.0]), np.array([2.0, -1.0])
    taus = np.linspace(0.0, 1.0, 9)
    straight = [a + t * (b - a) for t in taus]
    base = path_cost(straight, g)
    for _ in range(25):
        bump = rng.standard_normal((9, 2)) * 0.1
        bump[0] = bump[-1] = 0.0  # endpoints fixed
        perturbed = [p + db for p, db in zip(straight, bump)]
        assert path_cost(perturbed, g) > base


def test_path_cost_input_validation():
    g = MetricMatrix([[1.0]])
    with pytest.raises(DomainError):
        path_cost([[1.0]], g)
    with pytest.raises(DimensionError):
        path_cost([[1.0], [1.0, 2.0]], g)
    with pytest.raises(DimensionError):
        path_cost([[1.0, 2.0], [0.0, 0.0]], g)
