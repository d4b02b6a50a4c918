"""State encoding, higher-order transition matrices and stationary vectors.

A state of an order-``k`` chain is the tuple ``(X1, ..., Xk)`` of the last
``k`` symbols, most recent first.  Symbols are 1-based and ``X1`` is the
most significant base-``N`` digit, so states are numbered ``1 .. N**k``.
Transition matrices are column-stochastic: column ``j`` is the distribution
of the successor of state ``j`` and stationarity reads ``theta = Q theta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError, NonConvergenceError
from .simplex import ConditionalFamily, as_simplex, uniform
from .tensor_ops import (
    Branching,
    Commutation,
    Marginalization,
    _check_cap,
    apply_operator,
    materialize,
)

#: Chains up to this many states are cross-checked against a direct solve.
DIRECT_SOLVE_MAX_DIM = 64


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-12
    max_iterations: int = 10 ** 6
    damping: float = 0.5

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ContractError(f"tolerance must be positive, got {self.tolerance}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ContractError(f"max_iterations must be a positive integer, got {self.max_iterations}")
        if not 0 < self.damping <= 1:
            raise ContractError(f"damping must lie in (0, 1], got {self.damping}")


def _check_alphabet(N, k):
    if int(N) != N or N < 1:
        raise ContractError(f"alphabet size must be a positive integer, got {N}")
    if int(k) != k or k < 0:
        raise ContractError(f"order must be a non-negative integer, got {k}")


def encode_state(N: int, k: int, state: Sequence[int]) -> int:
    """1-based index of ``state``: ``1 + sum_j (X_j - 1) * N**(k - j)``."""
    _check_alphabet(N, k)
    state = tuple(state)
    if len(state) != k:
        raise ContractError(f"state {state} has length {len(state)}, expected {k}")
    index = 0
    for x in state:
        if int(x) != x or not 1 <= x <= N:
            raise ContractError(f"symbol {x} outside 1..{N}")
        index = index * N + (int(x) - 1)
    return index + 1


def decode_state(N: int, k: int, index: int) -> tuple:
    _check_alphabet(N, k)
    if int(index) != index or not 1 <= index <= N ** k:
        raise ContractError(f"state index {index} outside 1..{N ** k}")
    rest = int(index) - 1
    digits = []
    for _ in range(k):
        rest, d = divmod(rest, N)
        digits.append(d + 1)
    return tuple(reversed(digits))


def reachable_set(N: int, k: int, j: int) -> list:
    """Indices of the ``N`` possible successors of state ``j``, ascending.

    The successor prepends the new symbol as most significant digit and
    drops the oldest (least significant) one.
    """
    decode_state(N, k, j)
    if k == 0:
        return [1]
    tail = (j - 1) // N
    return [y * N ** (k - 1) + tail + 1 for y in range(N)]


def build_transition(family: ConditionalFamily, cap: int | None = None) -> np.ndarray:
    """Dense ``N**k x N**k`` transition matrix of an order-``k`` family."""
    N, k = family.N, family.order
    if k < 1:
        raise ContractError("a transition matrix needs order >= 1")
    n = N ** k
    _check_cap(n, n, cap)
    Q = np.zeros((n, n))
    cols = np.arange(n)
    tail = cols // N
    for y in range(N):
        Q[y * N ** (k - 1) + tail, cols] = family.members[:, y]
    return Q


def transition_by_blocks(family: ConditionalFamily, cap: int | None = None) -> np.ndarray:
    """Transition matrix as ``C_{N,N^(k-1)} sum_i E_i (x) Q_i`` with block-diagonal ``Q_i``."""
    N, k = family.N, family.order
    if k < 1:
        raise ContractError("block decomposition needs order >= 1")
    n = N ** k
    _check_cap(n, n, cap)
    blocks = family.members.reshape(N ** (k - 1), N, N)
    diag = np.zeros((n, n))
    for i in range(N ** (k - 1)):
        E = np.zeros((N ** (k - 1), N ** (k - 1)))
        E[i, i] = 1.0
        diag += np.kron(E, blocks[i].T)  # block i has members as columns
    return materialize(Commutation(N, N ** (k - 1)), cap) @ diag


class HigherOrderChain:
    """An order-``k`` chain applied matrix-free.

    ``apply`` runs in ``O(N**(k+1))`` time and never forms the transition
    matrix, so it scales to chains far beyond the dense cap.
    """

    def __init__(self, family: ConditionalFamily):
        if family.order < 1:
            raise ContractError("a chain needs order >= 1")
        self.family = family
        N, k = family.N, family.order
        self.N = N
        self.order = k
        self.dim = N ** k
        # [prefix, oldest digit, next symbol]
        self._blocks = family.members.reshape(N ** (k - 1), N, N)

    def apply(self, theta) -> np.ndarray:
        return transition_apply(self, theta)

    __call__ = apply

    def dense(self, cap: int | None = None) -> np.ndarray:
        return build_transition(self.family, cap)


def transition_apply(chain: HigherOrderChain, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size != chain.dim:
        raise ContractError(f"vector has shape {theta.shape}, chain has {chain.dim} states")
    q = chain._blocks
    x = theta.reshape(q.shape[0], q.shape[1])
    return np.einsum("icy,ic->yi", q, x).ravel()


def _as_apply(Q):
    if isinstance(Q, HigherOrderChain):
        return Q.apply, Q.dim
    if callable(Q):
        return Q, None
    M = np.asarray(Q, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractError(f"transition matrix must be square, got shape {M.shape}")
    return M.__matmul__, M.shape[0]


def l1(x) -> float:
    return float(np.abs(x).sum())


def stationary_direct(Q) -> np.ndarray:
    """Solve ``(Q - I) theta = 0`` with the normalization row replacing the last equation."""
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    A = Q - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    theta = np.linalg.solve(A, b)
    return np.clip(theta, 0.0, None) / np.clip(theta, 0.0, None).sum()


def power_iteration(Q, dim: int | None = None, config: SolverConfig | None = None,
                    start=None):
    """Damped power iteration ``theta <- (1 - g) theta + g Q theta``.

    Returns ``(theta, iterations, residual)`` where ``residual`` is the L1
    norm of ``theta - Q theta`` for the returned ``theta``.
    """
    config = config or SolverConfig()
    apply, known = _as_apply(Q)
    dim = dim if dim is not None else known
    if dim is None:
        raise ContractError("dimension required for a callable transition")
    theta = uniform(dim) if start is None else as_simplex(start, dim, "start")
    g = config.damping
    residual = np.inf
    for it in range(config.max_iterations + 1):
        image = apply(theta)
        residual = l1(image - theta)
        if residual <= config.tolerance:
            return theta, it, residual
        if it == config.max_iterations:
            break
        theta = (1.0 - g) * theta + g * image
        theta /= theta.sum()
    raise NonConvergenceError(
        f"power iteration did not reach residual {config.tolerance:g} in "
        f"{config.max_iterations} iterations (last residual {residual:.3e})",
        iterate=theta, residual=residual, iterations=config.max_iterations,
    )


def stationary(Q, dim: int | None = None, config: SolverConfig | None = None) -> np.ndarray:
    """Stationary vector of a column-stochastic transition, ``theta = Q theta``.

    ``Q`` may be a dense matrix, a :class:`HigherOrderChain` or any callable
    mapping a probability vector to its image (``dim`` is then required).
    Small irreducible chains are cross-checked against a direct linear solve.
    """
    theta, _, _ = power_iteration(Q, dim, config)
    n = theta.size
    if n <= DIRECT_SOLVE_MAX_DIM:
        from .recursive import check_irreducibility

        apply, _ = _as_apply(Q)
        dense = np.column_stack([apply(e) for e in np.eye(n)])
        if check_irreducibility(dense):
            direct = stationary_direct(dense)
            gap = l1(direct - theta)
            if gap > 1e-9:
                raise NonConvergenceError(
                    f"power iteration and direct solve disagree by {gap:.3e}",
                    iterate=theta, residual=gap,
                )
    return theta


@dataclass(frozen=True)
class ChainDecomposition:
    """Conditionals of a joint distribution, one level per prefix length.

    ``levels[m]`` is an order-``m`` family: member ``i`` is the distribution
    of digit ``m + 1`` given the top ``m`` digits equal state ``i``.
    """

    N: int
    order: int
    levels: tuple

    def __post_init__(self):
        if len(self.levels) != self.order:
            raise ContractError(f"expected {self.order} levels, got {len(self.levels)}")
        for m, level in enumerate(self.levels):
            if level.N != self.N or level.order != m:
                raise ContractError(f"level {m} must be an order-{m} family over {self.N} symbols")


def chain_decompose(theta, N: int, k: int) -> ChainDecomposition:
    """Chain-rule factorization of a distribution over ``N**k`` states.

    Prefixes with zero mass get the uniform conditional.
    """
    _check_alphabet(N, k)
    theta = as_simplex(theta, N ** k, "theta")
    levels = []
    joint = theta
    for m in range(k - 1, -1, -1):
        block = joint.reshape(N ** m, N)
        mass = block.sum(axis=1)
        cond = np.full_like(block, 1.0 / N)
        live = mass > 0
        cond[live] = block[live] / mass[live, None]
        cond /= cond.sum(axis=1, keepdims=True)
        levels.append(ConditionalFamily(N, m, cond))
        joint = mass
    return ChainDecomposition(N, k, tuple(reversed(levels)))


def chain_compose(d: ChainDecomposition) -> np.ndarray:
    """Rebuild the joint distribution by branching from the empty state."""
    x = np.ones(1)
    for m, level in enumerate(d.levels):
        x = apply_operator(Branching(m, m, level), x)
    return x


def marginal_top(theta, N: int, m: int) -> np.ndarray:
    """Distribution of the top ``m`` digits, by summing out the lowest digit repeatedly."""
    theta = np.asarray(theta, dtype=float)
    k = 0
    while N ** k < theta.size:
        k += 1
    if N ** k != theta.size or not 0 <= m <= k:
        raise ContractError(f"cannot take an order-{m} marginal of a vector of length {theta.size}")
    for j in range(k - 1, m - 1, -1):
        theta = apply_operator(Marginalization(N, j, j), theta)
    return theta
