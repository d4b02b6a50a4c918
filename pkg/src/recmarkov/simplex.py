"""Probability vectors and conditional families.

A conditional family of order ``k`` over an alphabet of ``N`` symbols is
stored as an ``(N**k, N)`` array: row ``i`` is the next-symbol distribution
given the history state with (0-based) index ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError

#: Entries down to this value are treated as round-off and clamped to zero.
NEG_TOL = 1e-12
#: Allowed deviation of a probability vector's sum from one.
SUM_TOL = 1e-9


def as_simplex(x, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Validate ``x`` as a probability vector and return a clamped float copy."""
    v = np.array(x, dtype=float).ravel()
    if dim is not None and v.size != dim:
        raise ContractError(f"{name} has dimension {v.size}, expected {dim}")
    if v.size == 0:
        raise ContractError(f"{name} is empty")
    if not np.all(np.isfinite(v)):
        raise ContractError(f"{name} has non-finite entries")
    if v.min() < -NEG_TOL:
        raise ContractError(f"{name} has negative entry {v.min():.3g}")
    total = v.sum()
    if abs(total - 1.0) > SUM_TOL:
        raise ContractError(f"{name} sums to {total!r}, not 1")
    np.clip(v, 0.0, None, out=v)
    return v


def uniform(dim: int) -> np.ndarray:
    return np.full(dim, 1.0 / dim)


def is_column_stochastic(Q, tol: float = SUM_TOL) -> bool:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2:
        return False
    return bool(Q.min() >= -NEG_TOL and np.all(np.abs(Q.sum(axis=0) - 1.0) <= tol))


@dataclass(frozen=True, eq=False)
class ConditionalFamily:
    """The ``N**order`` next-symbol distributions of an order-``order`` chain.

    ``members[i]`` is the distribution of the next symbol given the history
    state with 0-based index ``i`` (most recent symbol most significant).
    """

    N: int
    order: int
    members: np.ndarray = field(repr=False)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ContractError(f"alphabet size must be an integer >= 2, got {self.N}")
        if int(self.order) != self.order or self.order < 0:
            raise ContractError(f"order must be a non-negative integer, got {self.order}")
        m = np.array(self.members, dtype=float)
        expected = (self.N ** self.order, self.N)
        if m.shape != expected:
            raise ContractError(f"family members have shape {m.shape}, expected {expected}")
        if not np.all(np.isfinite(m)) or m.min() < -NEG_TOL:
            raise ContractError("family members must be finite and non-negative")
        sums = m.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > SUM_TOL)
        if bad.size:
            raise ContractError(f"family member {bad[0]} sums to {sums[bad[0]]!r}, not 1")
        np.clip(m, 0.0, None, out=m)
        m.setflags(write=False)
        object.__setattr__(self, "members", m)

    @property
    def size(self) -> int:
        return self.N ** self.order

    def __len__(self):
        return self.size

    def __getitem__(self, i):
        return self.members[i]

    @classmethod
    def uniform(cls, N: int, order: int) -> "ConditionalFamily":
        return cls(N, order, np.full((N ** order, N), 1.0 / N))

    @classmethod
    def random(cls, N: int, order: int, rng, floor: float = 0.05) -> "ConditionalFamily":
        """Strictly positive random family: entries drawn from ``[floor, 1)``, rows normalized."""
        rng = np.random.default_rng(rng)
        m = rng.uniform(floor, 1.0, size=(N ** order, N))
        return cls(N, order, m / m.sum(axis=1, keepdims=True))

    def same_as(self, other: "ConditionalFamily") -> bool:
        return (
            self.N == other.N
            and self.order == other.order
            and np.array_equal(self.members, other.members)
        )
