"""Two-armed bandit played with multiplicative confidences.

Outcomes are coded 1..4 = (arm 0 win, arm 0 loss, arm 1 win, arm 1 loss).
A player with confidences ``(c0, c1)`` pulls arm 0 with probability
``c0 / (c0 + c1)``; a win multiplies the pulled arm's confidence by
``delta`` and a loss divides it by ``delta``.

Note that the closed-form confidence ratio tends to ``(1 - p1) / (1 - p0)``
as ``delta`` grows, a finite value, so large ``delta`` does not by itself
make the player commit to the better arm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError
from .recursive import RecursiveSpec, fixed_point_residual

#: Allowed deviation of q0 + q1 from one in the confidence update.
MASS_TOL = 1e-9


@dataclass(frozen=True)
class BanditParams:
    p0: float
    p1: float
    delta: float

    def __post_init__(self):
        for name in ("p0", "p1"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ContractError(f"{name} must lie in [0, 1], got {p}")
        if not self.delta > 1.0:
            raise ContractError(f"delta must exceed 1, got {self.delta}")


def _column(p0, p1, a, b):
    return np.array([p0 * a, (1 - p0) * a, p1 * b, (1 - p1) * b]) / (a + b)


def update_matrix(params: BanditParams, w) -> np.ndarray:
    """``f(w)``: column ``j`` is the outcome distribution after outcome ``j`` updates the confidences."""
    w = np.asarray(w, dtype=float)
    q0, q1 = w[0] + w[1], w[2] + w[3]
    if abs(q0 + q1 - 1.0) > MASS_TOL:
        raise ContractError(f"confidences sum to {q0 + q1!r}, not 1")
    p0, p1, d = params.p0, params.p1, params.delta
    updates = ((q0 * d, q1), (q0 / d, q1), (q0, q1 * d), (q0, q1 / d))
    return np.column_stack([_column(p0, p1, a, b) for a, b in updates])


def bandit_map(params: BanditParams) -> RecursiveSpec:
    return RecursiveSpec(
        4,
        lambda w: update_matrix(params, w),
        "bandit",
        {"p0": params.p0, "p1": params.p1, "delta": params.delta},
    )


def closed_form_ratio(params: BanditParams) -> float:
    """Stationary confidence ratio ``q0 / q1 = (d(1-p1) - p1) / (d(1-p0) - p0)``."""
    p0, p1, d = params.p0, params.p1, params.delta
    num = d * (1 - p1) - p1
    den = d * (1 - p0) - p0
    if num <= 0 or den <= 0:
        raise DomainError(
            "closed form requires delta*(1-p) - p > 0 for both arms "
            f"(got {num:.6g} for arm 1 and {den:.6g} for arm 0)"
        )
    return num / den


def closed_form_stationary(params: BanditParams) -> np.ndarray:
    r = closed_form_ratio(params)
    q0, q1 = r / (1 + r), 1 / (1 + r)
    p0, p1 = params.p0, params.p1
    return np.array([p0 * q0, (1 - p0) * q0, p1 * q1, (1 - p1) * q1])


def residual_reduced(params: BanditParams, r: float) -> tuple:
    """Absolute residuals of the two reduced quadratic equations at ``q0 = r, q1 = 1``."""
    if not r > 0:
        raise ContractError(f"ratio must be positive, got {r}")
    p0, p1, d = params.p0, params.p1, params.delta
    q0, q1 = r, 1.0
    d1 = q0 * d + q1
    d2 = q0 + q1 * d
    a = p0 * q0 + (1 - p1) * q1
    b = (1 - p0) * q0 + p1 * q1
    first = d1 * d2 - d * a * d2 - b * d1
    second = d1 * d2 - a * d2 - d * b * d1
    return abs(first), abs(second)


def zero_drift_frequency(params: BanditParams) -> float:
    """Arm-0 pull rate at which the log-confidence ratio has zero expected drift."""
    up, down = 1 - 2 * params.p1, 1 - 2 * params.p0
    if up + down == 0:
        raise DomainError("zero-drift balance undefined when p0 + p1 = 1")
    return up / (up + down)


@dataclass(frozen=True)
class SimulationResult:
    freq: tuple
    arm0_choice_freq: float
    model_q0: float | None
    steps: int
    burn_in: int
    seed: int


def simulate(params: BanditParams, steps: int, burn_in: int = 0, seed: int = 0) -> SimulationResult:
    """Play the infinite-memory strategy and tally outcomes after ``burn_in`` rounds.

    Randomness comes from numpy's PCG64 generator seeded with ``seed``, so
    identical seeds give bit-identical results on every platform.  The
    confidence walk need not be ergodic for every parameter choice.
    """
    if int(steps) != steps or steps < 1:
        raise ContractError(f"steps must be a positive integer, got {steps}")
    if int(burn_in) != burn_in or burn_in < 0:
        raise ContractError(f"burn_in must be a non-negative integer, got {burn_in}")
    if int(seed) != seed or not 0 <= seed < 2 ** 64:
        raise ContractError(f"seed must be an unsigned 64-bit integer, got {seed}")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    total = int(burn_in) + int(steps)
    pick = rng.random(total).tolist()
    win = rng.random(total).tolist()

    p0, p1, d = params.p0, params.p1, params.delta
    inv = 1.0 / d
    c0 = c1 = 0.5
    counts = [0, 0, 0, 0]
    for t in range(total):
        if pick[t] < c0:
            if win[t] < p0:
                outcome, c0 = 0, c0 * d
            else:
                outcome, c0 = 1, c0 * inv
        else:
            if win[t] < p1:
                outcome, c1 = 2, c1 * d
            else:
                outcome, c1 = 3, c1 * inv
        s = c0 + c1
        c0, c1 = c0 / s, c1 / s
        if t >= burn_in:
            counts[outcome] += 1

    freq = tuple(c / steps for c in counts)
    try:
        r = closed_form_ratio(params)
        model_q0 = r / (1 + r)
    except DomainError:
        model_q0 = None
    return SimulationResult(freq, freq[0] + freq[1], model_q0, int(steps), int(burn_in), int(seed))


def closed_form_residual(params: BanditParams) -> float:
    return fixed_point_residual(bandit_map(params), closed_form_stationary(params))
