"""k-shift matrices and marginal stationary distributions.

A shift chain holds conditional families of orders ``1 .. k``.  Its shift
matrix maps the distribution of a first symbol to the distribution of the
symbol ``k`` steps later, where step ``m`` draws from the order-``m``
family given everything generated so far.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .markov_core import (
    HigherOrderChain,
    SolverConfig,
    chain_decompose,
    l1,
    marginal_top,
    stationary,
)
from .simplex import ConditionalFamily, as_simplex
from .tensor_ops import (
    Branching,
    Composition,
    Cycling,
    Marginalization,
    _check_cap,
    apply_operator,
    materialize,
)

#: Input vectors to the marginal checks must be stationary to this L1 residual.
STATIONARY_INPUT_TOL = 1e-6


@dataclass(frozen=True)
class ShiftChain:
    families: tuple

    def __post_init__(self):
        fams = tuple(self.families)
        if not fams:
            raise ContractError("a shift chain needs at least one family")
        N = fams[0].N
        for m, fam in enumerate(fams, start=1):
            if fam.order != m:
                raise ContractError(
                    f"shift chain position {m} holds an order-{fam.order} family; "
                    f"orders must run 1..{len(fams)}"
                )
            if fam.N != N:
                raise ContractError(f"family {m} has alphabet {fam.N}, expected {N}")
        object.__setattr__(self, "families", fams)

    @property
    def N(self) -> int:
        return self.families[0].N

    @property
    def k(self) -> int:
        return len(self.families)


def shift_operator(c: ShiftChain) -> Composition:
    """``M1_1 ... Mk_k C(k+1)_1 Bk_k(Qk) ... B1_1(Q1)`` as a structured product."""
    N, k = c.N, c.k
    ops = [Marginalization(N, m, m) for m in range(1, k + 1)]
    ops.append(Cycling(N, k + 1, 1))
    ops.extend(Branching(m, m, c.families[m - 1]) for m in range(k, 0, -1))
    return Composition(tuple(ops))


def shift_apply(c: ShiftChain, x) -> np.ndarray:
    return apply_operator(shift_operator(c), x)


def shift_matrix(c: ShiftChain, cap: int | None = None) -> np.ndarray:
    """Dense ``N x N`` shift matrix from the definitional operator product."""
    return materialize(shift_operator(c), cap)


def shift_matrix_recursive(c: ShiftChain, cap: int | None = None) -> np.ndarray:
    """Shift matrix by the backward block recursion.

    Starting from identity blocks at level ``k + 1``, column ``j`` of block
    ``i`` at level ``m`` is the level ``m + 1`` block of state ``N*i + j``
    applied to that state's order-``m`` conditional.
    """
    N, k = c.N, c.k
    _check_cap(N ** k, N * N, cap)
    bar = np.broadcast_to(np.eye(N), (N ** k, N, N))
    for m in range(k, 0, -1):
        q = c.families[m - 1].members
        cols = np.einsum("sab,sb->sa", bar, q)
        bar = cols.reshape(N ** (m - 1), N, N).transpose(0, 2, 1)
    # level 1 has a single block and C(1)_1 is the identity
    return np.array(bar[0])


def verify_marginal_conditions(theta, family: ConditionalFamily,
                               require_stationary: bool = True) -> list:
    """Residuals of the necessary conditions on a stationary vector's one-symbol marginal.

    ``theta`` is factored into conditionals ``T0, ..., T(k-1)``; with ``w``
    the marginal of the most recent symbol, the residuals are
    ``|w - S(T1..Tm) w|_1`` for ``m = 1 .. k-1`` followed by
    ``|w - S(T1..T(k-1), Q) w|_1``.  With ``require_stationary=False`` the
    residuals are also reported for non-stationary input.
    """
    N, k = family.N, family.order
    theta = as_simplex(theta, N ** k, "theta")
    chain = HigherOrderChain(family)
    input_residual = l1(chain.apply(theta) - theta)
    if require_stationary and input_residual > STATIONARY_INPUT_TOL:
        raise ContractError(
            f"theta is not stationary for this family (residual {input_residual:.3e})"
        )
    levels = chain_decompose(theta, N, k).levels
    w = levels[0].members[0]
    residuals = []
    for m in range(1, k):
        c = ShiftChain(levels[1:m + 1])
        residuals.append(l1(w - shift_apply(c, w)))
    c = ShiftChain(levels[1:k] + (family,))
    residuals.append(l1(w - shift_apply(c, w)))
    return residuals


def marginal_stationary(family: ConditionalFamily, m: int,
                        config: SolverConfig | None = None) -> np.ndarray:
    """Stationary distribution of the ``m`` most recent symbols."""
    k = family.order
    if int(m) != m or not 1 <= m <= k:
        raise ContractError(f"target order m={m} outside 1..{k}")
    chain = HigherOrderChain(family)
    theta = stationary(chain, chain.dim, config)
    return marginal_top(theta, family.N, m)
