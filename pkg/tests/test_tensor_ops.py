import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recmarkov.errors import CapacityError, ContractError
from recmarkov.simplex import ConditionalFamily
from recmarkov.tensor_ops import (
    Branching,
    Commutation,
    Cycling,
    Marginalization,
    apply_operator,
    check_identities,
    commutation_matrix,
    compose,
    materialize,
)

from conftest import index0, states


def test_commutation_size_one_is_identity():
    np.testing.assert_array_equal(commutation_matrix(3, 1), np.eye(3))


def test_commutation_2_2_swaps_middle_entries():
    C = commutation_matrix(2, 2)
    a, b, c, d = 1.0, 2.0, 3.0, 4.0
    np.testing.assert_array_equal(C @ [a, b, c, d], [a, c, b, d])


def test_commutation_inverse():
    prod = commutation_matrix(3, 2) @ commutation_matrix(2, 3)
    np.testing.assert_array_equal(prod, np.eye(6))


def test_commutation_swaps_kronecker_factors(rng):
    u, v = rng.random(4), rng.random(3)
    C = commutation_matrix(3, 4)
    np.testing.assert_allclose(C @ np.kron(u, v), np.kron(v, u), atol=1e-15)


def test_commutation_cap():
    with pytest.raises(CapacityError):
        commutation_matrix(64, 64, cap=1000)


def test_marginalization_example():
    out = apply_operator(Marginalization(2, 1, 1), [0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(out, [0.3, 0.7], atol=1e-15)
    np.testing.assert_array_equal(
        materialize(Marginalization(2, 1, 1)), [[1, 1, 0, 0], [0, 0, 1, 1]]
    )


def test_cycling_example():
    out = apply_operator(Cycling(2, 2, 1), [1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(out, [1.0, 3.0, 2.0, 4.0])


@pytest.mark.parametrize("N,k", [(2, 1), (2, 3), (3, 2)])
def test_zero_rotation_is_identity(N, k):
    np.testing.assert_array_equal(materialize(Cycling(N, k, 0)), np.eye(N ** k))


def test_cycling_index_reduced():
    assert Cycling(2, 3, -1).m == 2
    assert Cycling(2, 3, 7).m == 1


def test_branching_from_empty_state_emits_conditional():
    q = ConditionalFamily(3, 0, [[0.2, 0.5, 0.3]])
    np.testing.assert_allclose(apply_operator(Branching(0, 0, q), [1.0]), [0.2, 0.5, 0.3])


def test_dimension_mismatch():
    with pytest.raises(ContractError):
        apply_operator(Marginalization(2, 2, 1), np.ones(4) / 4)
    with pytest.raises(ContractError):
        compose(Marginalization(2, 1, 0), Marginalization(2, 1, 0))


def test_index_ranges():
    with pytest.raises(ContractError):
        Marginalization(2, 2, 3)
    with pytest.raises(ContractError):
        Branching(2, 1, ConditionalFamily.uniform(2, 1))


# Tuple-level oracles, written independently of the reshape implementation.

def marginalize_by_tuples(N, k, m, x):
    out = np.zeros(N ** k)
    for s in states(N, k + 1):
        out[index0(N, k, s[:m] + s[m + 1:])] += x[index0(N, k + 1, s)]
    return out


def branch_by_tuples(N, k, m, family, x):
    out = np.zeros(N ** (k + 1))
    for s in states(N, k):
        i = index0(N, k, s)
        for y in range(1, N + 1):
            out[index0(N, k + 1, s[:m] + (y,) + s[m:])] += family[i][y - 1] * x[i]
    return out


def cycle_by_tuples(N, k, m, x):
    out = np.zeros(N ** k)
    m = m % k
    for s in states(N, k):
        out[index0(N, k, s[k - m:] + s[:k - m])] = x[index0(N, k, s)]
    return out


@pytest.mark.parametrize("N,k", [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)])
def test_operators_against_tuple_semantics(N, k, rng):
    fam = ConditionalFamily.random(N, k, rng)
    for m in range(k + 1):
        x = rng.random(N ** (k + 1))
        np.testing.assert_allclose(
            apply_operator(Marginalization(N, k, m), x), marginalize_by_tuples(N, k, m, x), atol=1e-14
        )
        x = rng.random(N ** k)
        np.testing.assert_allclose(
            apply_operator(Branching(k, m, fam), x), branch_by_tuples(N, k, m, fam, x), atol=1e-14
        )
        np.testing.assert_array_equal(apply_operator(Cycling(N, k, m), x), cycle_by_tuples(N, k, m, x))


def _random_op(data, N, k):
    kind = data.draw(st.sampled_from(["M", "B", "C", "comm"]))
    m = data.draw(st.integers(0, k))
    if kind == "M":
        return Marginalization(N, k, m)
    if kind == "B":
        seed = data.draw(st.integers(0, 2 ** 32 - 1))
        return Branching(k, m, ConditionalFamily.random(N, k, seed))
    if kind == "C":
        return Cycling(N, k, data.draw(st.integers(-2 * k, 2 * k)))
    return Commutation(N ** m, N ** (k - m))


@settings(max_examples=150, deadline=None)
@given(data=st.data(), N=st.sampled_from([2, 3]), k=st.integers(1, 3))
def test_matrix_free_matches_dense(data, N, k):
    op = _random_op(data, N, k)
    seed = data.draw(st.integers(0, 2 ** 32 - 1))
    x = np.random.default_rng(seed).dirichlet(np.ones(op.in_dim))
    dense = materialize(op)
    y = apply_operator(op, x)
    assert np.abs(y - dense @ x).max() < 1e-12
    # simplex in, simplex out
    assert y.min() >= -1e-15
    assert abs(y.sum() - 1.0) < 1e-12
    np.testing.assert_allclose(dense.sum(axis=0), 1.0, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(N=st.sampled_from([2, 3]), k=st.integers(1, 3), m=st.integers(-6, 6))
def test_permutation_property(N, k, m):
    for P in (materialize(Cycling(N, k, m)), commutation_matrix(N ** (abs(m) % k or 1), N)):
        assert set(np.unique(P)) <= {0.0, 1.0}
        np.testing.assert_array_equal(P.sum(axis=0), 1)
        np.testing.assert_array_equal(P.sum(axis=1), 1)


@settings(max_examples=40, deadline=None)
@given(data=st.data(), N=st.sampled_from([2, 3]), k=st.integers(1, 2))
def test_composition_materializes_as_product(data, N, k):
    fam = ConditionalFamily.random(N, k, data.draw(st.integers(0, 1000)))
    A = Marginalization(N, k, data.draw(st.integers(0, k)))
    B = Branching(k, data.draw(st.integers(0, k)), fam)
    np.testing.assert_allclose(
        materialize(compose(A, B)), materialize(A) @ materialize(B), atol=1e-15
    )


@pytest.mark.parametrize("N,k,seed", [(2, 2, 0), (3, 1, 7), (2, 3, 11), (3, 3, 2)])
def test_identities(N, k, seed):
    errors = check_identities(N, k, seed)
    assert set(errors) == {
        "marginal_cycling", "marginal_exchange_ge", "marginal_exchange_lt",
        "branching_cycling", "cycling_power",
    }
    assert max(errors.values()) < 1e-12


def test_marginal_cycling_equal_indices_is_exact():
    for k in (1, 2, 3):
        for m in range(k + 1):
            lhs = materialize(Marginalization(2, k, m))
            rhs = materialize(compose(Cycling(2, k, 0), Marginalization(2, k, m), Cycling(2, k + 1, 0)))
            assert np.abs(lhs - rhs).max() == 0.0


def test_branching_identity_needs_reindexed_family(rng):
    # With the same family on both sides, the rotated input picks up the
    # wrong conditionals; only a rotation-invariant family satisfies it.
    N, k, m, n = 2, 2, 0, 1
    fam = ConditionalFamily.random(N, k, rng)
    lhs = materialize(Branching(k, m, fam))
    literal = materialize(compose(Cycling(N, k + 1, m - n), Branching(k, n, fam), Cycling(N, k, n - m)))
    assert np.abs(lhs - literal).max() > 1e-3

    shared = ConditionalFamily(N, k, np.tile(fam.members[0], (N ** k, 1)))
    lhs = materialize(Branching(k, m, shared))
    literal = materialize(compose(Cycling(N, k + 1, m - n), Branching(k, n, shared), Cycling(N, k, n - m)))
    assert np.abs(lhs - literal).max() < 1e-15


def test_identity_report_is_deterministic():
    assert check_identities(3, 2, 5) == check_identities(3, 2, 5)
