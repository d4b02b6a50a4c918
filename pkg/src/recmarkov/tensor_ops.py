"""Marginalization, branching, cycling and commutation operators.

Every operator acts on a vector indexed by a state tuple ``(X1, ..., Xk)``
with ``X1`` the most significant digit.  Each one can be applied
matrix-free (reshape / transpose / reduce, linear in the state count) or
materialized densely from its defining Kronecker sum.  The dense forms
exist only as oracles for the matrix-free path and are capped in size.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import product

import numpy as np

from .errors import CapacityError, ContractError
from .simplex import ConditionalFamily

#: Default limit on ``rows * cols`` of any dense matrix built here.
DENSE_CAP = 2 ** 20


def _check_cap(rows: int, cols: int, cap: int | None):
    cap = DENSE_CAP if cap is None else cap
    if rows * cols > cap:
        raise CapacityError(f"dense {rows}x{cols} matrix exceeds the cap of {cap} entries")


def _unit(n: int, i: int) -> np.ndarray:
    e = np.zeros((n, 1))
    e[i, 0] = 1.0
    return e


def _check_level(k, m):
    if int(k) != k or k < 0:
        raise ContractError(f"order must be a non-negative integer, got {k}")
    if int(m) != m or not 0 <= m <= k:
        raise ContractError(f"index m={m} outside 0..{k}")


class StructuredOperator:
    """Base class; subclasses define ``in_dim``, ``out_dim``, ``_apply`` and ``_dense``."""

    in_dim: int
    out_dim: int

    def apply(self, x) -> np.ndarray:
        return apply_operator(self, x)

    def __matmul__(self, other):
        if isinstance(other, StructuredOperator):
            return Composition((self, other))
        return apply_operator(self, other)


@dataclass(frozen=True)
class Marginalization(StructuredOperator):
    """Sums out the digit at position ``m + 1`` (from the top) of a ``k + 1`` digit state."""

    N: int
    k: int
    m: int

    def __post_init__(self):
        _check_level(self.k, self.m)

    @property
    def in_dim(self):
        return self.N ** (self.k + 1)

    @property
    def out_dim(self):
        return self.N ** self.k

    def _apply(self, x):
        N, k, m = self.N, self.k, self.m
        return x.reshape(N ** m, N, N ** (k - m)).sum(axis=1).ravel()

    def _dense(self):
        N, k, m = self.N, self.k, self.m
        return np.kron(np.kron(np.eye(N ** m), np.ones((1, N))), np.eye(N ** (k - m)))


@dataclass(frozen=True, eq=False)
class Branching(StructuredOperator):
    """Inserts a new digit below the top ``m`` digits of a ``k`` digit state.

    The new digit is drawn from the family member indexed by the input state.
    """

    k: int
    m: int
    family: ConditionalFamily

    def __post_init__(self):
        _check_level(self.k, self.m)
        if self.family.order != self.k:
            raise ContractError(
                f"branching at order {self.k} needs an order-{self.k} family, "
                f"got order {self.family.order}"
            )

    @property
    def N(self):
        return self.family.N

    @property
    def in_dim(self):
        return self.N ** self.k

    @property
    def out_dim(self):
        return self.N ** (self.k + 1)

    def _apply(self, x):
        N, k, m = self.N, self.k, self.m
        q = self.family.members.reshape(N ** m, N ** (k - m), N)
        return (q * x.reshape(N ** m, N ** (k - m), 1)).transpose(0, 2, 1).ravel()

    def _dense(self):
        N, k, m = self.N, self.k, self.m
        hi, lo = N ** m, N ** (k - m)
        out = np.zeros((self.out_dim, self.in_dim))
        for i, j in product(range(hi), range(lo)):
            q = self.family.members[lo * i + j].reshape(N, 1)
            E_i = _unit(hi, i) @ _unit(hi, i).T
            E_j = _unit(lo, j) @ _unit(lo, j).T
            out += np.kron(np.kron(E_i, q), E_j)
        return out


@dataclass(frozen=True)
class Commutation(StructuredOperator):
    """``C_{n,m}``: maps ``u (x) v`` to ``v (x) u`` for ``u`` of size ``m``, ``v`` of size ``n``."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ContractError(f"commutation sizes must be positive, got ({self.n}, {self.m})")

    @property
    def in_dim(self):
        return self.n * self.m

    out_dim = in_dim

    def _apply(self, x):
        return x.reshape(self.m, self.n).T.ravel()

    def _dense(self):
        n, m = self.n, self.m
        return sum(
            np.kron(np.kron(_unit(m, i).T, np.eye(n)), _unit(m, i)) for i in range(m)
        )


@dataclass(frozen=True)
class Cycling(StructuredOperator):
    """Moves the lowest ``m`` digits of a ``k`` digit state to the top.

    ``m`` is reduced modulo ``k`` so negative or oversized shifts are accepted.
    """

    N: int
    k: int
    m: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ContractError(f"order must be a non-negative integer, got {self.k}")
        object.__setattr__(self, "m", self.m % self.k if self.k else 0)

    @property
    def in_dim(self):
        return self.N ** self.k

    out_dim = in_dim

    def as_commutation(self) -> Commutation:
        return Commutation(self.N ** self.m, self.N ** (self.k - self.m))

    def _apply(self, x):
        return self.as_commutation()._apply(x)

    def _dense(self):
        return self.as_commutation()._dense()


@dataclass(frozen=True, eq=False)
class Composition(StructuredOperator):
    """Product ``ops[0] @ ops[1] @ ...``; the last operator is applied first."""

    ops: tuple

    def __post_init__(self):
        ops = tuple(self.ops)
        if not ops:
            raise ContractError("empty composition")
        flat = []
        for op in ops:
            flat.extend(op.ops if isinstance(op, Composition) else (op,))
        for left, right in zip(flat, flat[1:]):
            if left.in_dim != right.out_dim:
                raise ContractError(
                    f"cannot compose {type(left).__name__} (input {left.in_dim}) "
                    f"after {type(right).__name__} (output {right.out_dim})"
                )
        object.__setattr__(self, "ops", tuple(flat))

    @property
    def in_dim(self):
        return self.ops[-1].in_dim

    @property
    def out_dim(self):
        return self.ops[0].out_dim

    def _apply(self, x):
        for op in reversed(self.ops):
            x = op._apply(x)
        return x

    def _dense(self):
        return reduce(np.matmul, (op._dense() for op in self.ops))


def compose(*ops) -> Composition:
    return Composition(ops)


def apply_operator(op: StructuredOperator, x) -> np.ndarray:
    """Apply ``op`` to ``x`` without forming its matrix.

    Cost is proportional to ``max(in_dim, out_dim) * N``.  Any real vector
    of the right size is accepted; probability vectors map to probability
    vectors.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != op.in_dim:
        raise ContractError(
            f"{type(op).__name__} expects a vector of length {op.in_dim}, got shape {x.shape}"
        )
    return op._apply(x)


def materialize(op: StructuredOperator, cap: int | None = None) -> np.ndarray:
    """Dense matrix of ``op`` built from its defining Kronecker sums."""
    if isinstance(op, Composition):
        for part in op.ops:
            _check_cap(part.out_dim, part.in_dim, cap)
    _check_cap(op.out_dim, op.in_dim, cap)
    return op._dense()


def commutation_matrix(n: int, m: int, cap: int | None = None) -> np.ndarray:
    """The ``(n*m) x (m*n)`` commutation matrix ``C_{n,m}``."""
    return materialize(Commutation(n, m), cap)


def _random_family(N, k, rng):
    return ConditionalFamily.random(N, k, rng)


def check_identities(N: int, k: int, seed: int = 0, cap: int | None = None) -> dict:
    """Maximum elementwise error of each operator identity over all index pairs.

    The branching/cycling identity is evaluated with the family re-indexed
    by the same cycling as the input, i.e.
    ``B_m(Q) = C_{m-n} B_n(C_{n-m} Q) C_{n-m}``: the member attached to a
    state follows that state through the rotation.
    """
    if k < 1:
        raise ContractError("identities need order k >= 1")
    _check_cap(N ** (k + 1), N ** (k + 2), cap)
    family = _random_family(N, k, seed)

    cache = {}

    def dense(op):
        if op not in cache:
            cache[op] = materialize(op, cap)
        return cache[op]

    M = lambda kk, m: dense(Marginalization(N, kk, m))  # noqa: E731
    C = lambda kk, m: dense(Cycling(N, kk, m))  # noqa: E731

    err = {
        "marginal_cycling": 0.0,
        "marginal_exchange_ge": 0.0,
        "marginal_exchange_lt": 0.0,
        "branching_cycling": 0.0,
        "cycling_power": 0.0,
    }

    for m, n in product(range(k + 1), repeat=2):
        lhs = M(k, m)
        rhs = C(k, m - n) @ M(k, n) @ C(k + 1, n - m)
        err["marginal_cycling"] = max(err["marginal_cycling"], np.abs(lhs - rhs).max())

        rot = Cycling(N, k, n - m)
        moved = ConditionalFamily(N, k, np.column_stack(
            [rot.apply(col) for col in family.members.T]
        ))
        lhs = materialize(Branching(k, m, family), cap)
        rhs = C(k + 1, m - n) @ materialize(Branching(k, n, moved), cap) @ C(k, n - m)
        err["branching_cycling"] = max(err["branching_cycling"], np.abs(lhs - rhs).max())

    for n, m in product(range(k + 1), range(k + 2)):
        lhs = M(k, n) @ M(k + 1, m)
        if n >= m:
            rhs = M(k, m) @ M(k + 1, n + 1)
            key = "marginal_exchange_ge"
        else:
            rhs = M(k, m - 1) @ M(k + 1, n)
            key = "marginal_exchange_lt"
        err[key] = max(err[key], np.abs(lhs - rhs).max())

    for n, m in product(range(-k, k + 1), range(2 * k + 1)):
        lhs = C(k, n * m)
        rhs = np.linalg.matrix_power(C(k, n), m)
        err["cycling_power"] = max(err["cycling_power"], np.abs(lhs - rhs).max())

    return {name: float(v) for name, v in err.items()}
