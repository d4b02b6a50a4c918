import numpy as np
import pytest

from recmarkov.bandit import BanditParams, bandit_map
from recmarkov.errors import CapacityError, ContractError, NonConvergenceError
from recmarkov.markov_core import SolverConfig, stationary
from recmarkov.recursive import (
    RecursiveSpec,
    build_truncation,
    check_irreducibility,
    fixed_point,
    fixed_point_residual,
    truncation_convergence,
    truncations,
)
from recmarkov.shift import ShiftChain, shift_matrix_recursive
from recmarkov.simplex import ConditionalFamily, uniform

from conftest import random_stochastic


def test_constant_truncation(rng):
    R = random_stochastic(rng, 3)
    fam = build_truncation(RecursiveSpec.constant(R), 3, base=ConditionalFamily.random(3, 1, rng))
    assert fam.order == 3 and len(fam) == 27
    for s in range(27):
        np.testing.assert_array_equal(fam.members[s], R[:, s % 3])


def test_mixture_with_full_weight_is_constant(rng):
    R = random_stochastic(rng, 2)
    for k in range(1, 5):
        a = build_truncation(RecursiveSpec.mixture(1.0, R), k)
        b = build_truncation(RecursiveSpec.constant(R), k)
        np.testing.assert_allclose(a.members, b.members, atol=1e-15)


def bandit_conditional(p0, p1, delta, q0, q1, outcome):
    """Next-outcome distribution after one confidence update, written out by hand."""
    a, b = {1: (q0 * delta, q1), 2: (q0 / delta, q1), 3: (q0, q1 * delta), 4: (q0, q1 / delta)}[outcome]
    return np.array([p0 * a, (1 - p0) * a, p1 * b, (1 - p1) * b]) / (a + b)


def test_bandit_truncation_by_hand():
    p0, p1, d = 0.4, 0.2, 2.0
    fam = build_truncation(bandit_map(BanditParams(p0, p1, d)), 2)
    assert len(fam) == 16
    for i in range(4):
        first = bandit_conditional(p0, p1, d, 0.5, 0.5, i + 1)
        q0, q1 = first[0] + first[1], first[2] + first[3]
        for c in range(4):
            np.testing.assert_allclose(fam.members[4 * i + c],
                                       bandit_conditional(p0, p1, d, q0, q1, c + 1), atol=1e-15)


def test_truncation_levels_are_images_of_previous(rng):
    R = random_stochastic(rng, 3)
    spec = RecursiveSpec.mixture(0.3, R)
    fams = list(truncations(spec, 3))
    for lower, upper in zip(fams, fams[1:]):
        for i, q in enumerate(lower.members):
            np.testing.assert_allclose(upper.members[3 * i:3 * i + 3], spec(q).T, atol=1e-15)


def test_truncation_capacity():
    spec = RecursiveSpec.constant(np.eye(2)[:, ::-1])
    with pytest.raises(CapacityError):
        build_truncation(spec, 40)
    with pytest.raises(ContractError):
        build_truncation(spec, 0)


def test_spec_rejects_non_stochastic_map():
    with pytest.raises(ContractError):
        RecursiveSpec(2, lambda w: np.ones((2, 2)))


def test_fixed_point_constant(rng):
    R = random_stochastic(rng, 3)
    res = fixed_point(RecursiveSpec.constant(R))
    assert res.residual <= 1e-12
    np.testing.assert_allclose(res.omega, stationary(R), atol=1e-10)


@pytest.mark.parametrize("eps", [0.1, 0.5, 0.9, 1.0])
def test_fixed_point_mixture(eps, rng):
    R = random_stochastic(rng, 3)
    res = fixed_point(RecursiveSpec.mixture(eps, R))
    assert abs(res.omega - stationary(R)).sum() < 1e-10
    assert fixed_point_residual(RecursiveSpec.mixture(eps, R), res.omega) == pytest.approx(res.residual)


def test_fixed_point_bandit_ratio():
    res = fixed_point(bandit_map(BanditParams(0.4, 0.2, 2.0)))
    w = res.omega
    assert (w[0] + w[1]) / (w[2] + w[3]) == pytest.approx(1.75, abs=1e-8)


def test_fixed_point_budget(rng):
    with pytest.raises(NonConvergenceError) as info:
        fixed_point(bandit_map(BanditParams(0.4, 0.2, 2.0)), SolverConfig(max_iterations=2))
    assert info.value.iterate.shape == (4,)


def test_convergence_constant_is_zero(rng):
    R = random_stochastic(rng, 2)
    for step in truncation_convergence(RecursiveSpec.constant(R), 4):
        assert step.distance < 1e-10


def test_convergence_mixture_matches_closed_form(rng):
    # Under stationarity the order-k marginal solves w = a u + (1 - a) R w with a = (1 - eps)^k.
    N, eps = 2, 0.5
    R = random_stochastic(rng, N)
    target = stationary(R)
    steps = truncation_convergence(RecursiveSpec.mixture(eps, R), 6)
    distances = [s.distance for s in steps]
    for s in steps:
        a = (1 - eps) ** s.k
        w = a * np.linalg.solve(np.eye(N) - (1 - a) * R, uniform(N))
        np.testing.assert_allclose(s.marginal, w, atol=1e-10)
        assert s.distance == pytest.approx(np.abs(w - target).sum(), abs=1e-10)
    assert all(b <= a + 1e-12 for a, b in zip(distances, distances[1:]))


def test_convergence_bandit_reports_finite_values():
    steps = truncation_convergence(bandit_map(BanditParams(0.4, 0.2, 2.0)), 5)
    assert [s.k for s in steps] == [1, 2, 3, 4, 5]
    assert all(np.isfinite(s.distance) and np.isfinite(s.hypothesis_residual) for s in steps)


def test_limit_shift_columns_approach_fixed_point(rng):
    for trial in range(10):
        N = 2 + trial % 2
        R = random_stochastic(rng, N)
        target = stationary(R)
        fams = tuple(truncations(RecursiveSpec.mixture(0.5, R), 9))
        dist = [np.abs(shift_matrix_recursive(ShiftChain(fams[:k])) - target[:, None]).sum(axis=0).max()
                for k in range(1, 10)]
        assert all(b < a for a, b in zip(dist, dist[1:]))
        assert dist[-1] < 1e-2


def test_irreducibility_examples():
    assert not check_irreducibility(np.eye(3))
    assert check_irreducibility(np.full((3, 3), 1 / 3))
    assert check_irreducibility(np.roll(np.eye(4), 1, axis=0))
    assert not check_irreducibility(np.array([[1.0, 0.5], [0.0, 0.5]]))
    with pytest.raises(ContractError):
        check_irreducibility(np.ones((2, 3)))
