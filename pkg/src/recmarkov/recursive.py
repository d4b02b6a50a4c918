"""Recursive Markov processes and the fixed point ``w = f(w) w``.

A recursive process is fixed by a map ``f`` from a probability vector of
size ``N`` to an ``N x N`` column-stochastic matrix.  Going one order up,
the conditional ``q`` of state ``i`` spawns the ``N`` conditionals of
states ``N*i .. N*i + N - 1`` as the columns of ``f(q)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import CapacityError, ContractError, NonConvergenceError
from .markov_core import (
    HigherOrderChain,
    SolverConfig,
    l1,
    marginal_top,
    stationary,
)
from .simplex import ConditionalFamily, as_simplex, is_column_stochastic, uniform
from .tensor_ops import Marginalization, apply_operator

#: Largest number of family members ``build_truncation`` will produce.
MAX_TRUNCATION_MEMBERS = 2 ** 22

#: Fixed-point solves stop here unless told otherwise.
FIXED_POINT_CONFIG = SolverConfig(max_iterations=10 ** 5)


@dataclass(frozen=True, eq=False)
class RecursiveSpec:
    """A map ``f`` from the ``N``-simplex to ``N x N`` column-stochastic matrices.

    ``f`` must be pure.  On construction it is evaluated at the uniform
    vector, the vertices and a few fixed random points, and every output is
    checked to be column-stochastic.
    """

    N: int
    f: Callable = field(repr=False)
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ContractError(f"alphabet size must be an integer >= 2, got {self.N}")
        probes = [uniform(self.N), *np.eye(self.N)]
        probes.extend(np.random.default_rng(0).dirichlet(np.ones(self.N), size=4))
        for w in probes:
            out = np.asarray(self.f(w), dtype=float)
            if out.shape != (self.N, self.N) or not is_column_stochastic(out):
                raise ContractError(
                    f"{self.kind} map is not column-stochastic at {np.round(w, 4).tolist()}"
                )

    def __call__(self, w) -> np.ndarray:
        return np.asarray(self.f(as_simplex(w, self.N, "argument")), dtype=float)

    @classmethod
    def constant(cls, R) -> "RecursiveSpec":
        R = np.array(R, dtype=float)
        R.setflags(write=False)
        return cls(R.shape[0], lambda w: R, "constant", {"R": R})

    @classmethod
    def mixture(cls, epsilon: float, R) -> "RecursiveSpec":
        """``f(w) = (1 - epsilon) * [w, ..., w] + epsilon * R``."""
        if not 0 <= epsilon <= 1:
            raise ContractError(f"epsilon must lie in [0, 1], got {epsilon}")
        R = np.array(R, dtype=float)
        R.setflags(write=False)
        N = R.shape[0]

        def f(w):
            return (1.0 - epsilon) * np.tile(np.reshape(w, (N, 1)), (1, N)) + epsilon * R

        return cls(N, f, "mixture", {"epsilon": epsilon, "R": R})


@dataclass(frozen=True)
class FixedPointResult:
    omega: np.ndarray
    iterations: int
    residual: float


def _grow(spec: RecursiveSpec, members: np.ndarray) -> np.ndarray:
    N = spec.N
    out = np.empty((members.shape[0] * N, N))
    for i, q in enumerate(members):
        out[i * N:(i + 1) * N] = spec.f(q).T
    return out


def build_truncation(spec: RecursiveSpec, k: int,
                     base: ConditionalFamily | None = None) -> ConditionalFamily:
    """The order-``k`` family obtained by applying the recursion ``k - 1`` times to ``base``.

    The default base holds the columns of ``f(uniform)``.
    """
    N = spec.N
    if int(k) != k or k < 1:
        raise ContractError(f"target order must be a positive integer, got {k}")
    if N ** k > MAX_TRUNCATION_MEMBERS:
        raise CapacityError(f"an order-{k} truncation would have {N ** k} members")
    for family in truncations(spec, k, base):
        pass
    return family


def truncations(spec: RecursiveSpec, k_max: int, base: ConditionalFamily | None = None):
    """Yield the truncations of orders ``1 .. k_max`` in turn."""
    N = spec.N
    if base is None:
        base = ConditionalFamily(N, 1, spec(uniform(N)).T)
    if base.order != 1 or base.N != N:
        raise ContractError(f"base must be an order-1 family over {N} symbols")
    family = base
    yield family
    for m in range(1, k_max):
        family = ConditionalFamily(N, m + 1, _grow(spec, family.members))
        yield family


def fixed_point_residual(spec: RecursiveSpec, w) -> float:
    w = np.asarray(w, dtype=float)
    return l1(w - spec(w) @ w)


def fixed_point(spec: RecursiveSpec, config: SolverConfig | None = None,
                start=None) -> FixedPointResult:
    """A solution of ``w = f(w) w`` by damped iteration from ``start`` (default uniform)."""
    config = config or FIXED_POINT_CONFIG
    N = spec.N
    w = uniform(N) if start is None else as_simplex(start, N, "start")
    g = config.damping
    residual = np.inf
    for it in range(config.max_iterations + 1):
        image = spec(w) @ w
        residual = l1(image - w)
        if residual <= config.tolerance:
            return FixedPointResult(w, it, residual)
        if it == config.max_iterations:
            break
        w = (1.0 - g) * w + g * image
        w = np.clip(w, 0.0, None)
        w /= w.sum()
    raise NonConvergenceError(
        f"fixed-point iteration stalled at residual {residual:.3e} "
        f"after {config.max_iterations} iterations",
        iterate=w, residual=residual, iterations=config.max_iterations,
    )


@dataclass(frozen=True)
class TruncationStep:
    k: int
    distance: float
    hypothesis_residual: float
    marginal: np.ndarray = field(repr=False)


def truncation_convergence(spec: RecursiveSpec, k_max: int,
                           base: ConditionalFamily | None = None,
                           config: SolverConfig | None = None) -> list:
    """Compare truncation marginals with the fixed point, order by order.

    For each ``k`` reports the L1 distance from the one-symbol stationary
    marginal of the order-``k`` truncation to the fixed point, and
    ``|theta_k - M(k)_k theta_(k+1)|_1``.  Nothing is asserted here.
    """
    if int(k_max) != k_max or k_max < 1:
        raise ContractError(f"k_max must be a positive integer, got {k_max}")
    N = spec.N
    if N ** (k_max + 1) > MAX_TRUNCATION_MEMBERS:
        raise CapacityError(f"order {k_max + 1} exceeds the truncation budget")
    target = fixed_point(spec, config).omega
    thetas = []
    for family in truncations(spec, k_max + 1, base):
        chain = HigherOrderChain(family)
        thetas.append(stationary(chain, chain.dim, config))
    steps = []
    for k in range(1, k_max + 1):
        theta, nxt = thetas[k - 1], thetas[k]
        w = marginal_top(theta, N, 1)
        folded = apply_operator(Marginalization(N, k, k), nxt)
        steps.append(TruncationStep(k, l1(w - target), l1(theta - folded), w))
    return steps


def check_irreducibility(Q, threshold: float = 1e-12) -> bool:
    """True iff the directed graph of entries above ``threshold`` is strongly connected."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {Q.shape}")
    n, _ = connected_components(Q > threshold, directed=True, connection="strong")
    return n == 1
