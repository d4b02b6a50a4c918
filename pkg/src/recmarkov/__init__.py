"""Higher-order and recursive Markov chains with structured stochastic operators."""

from .errors import CapacityError, ContractError, DomainError, NonConvergenceError, RecMarkovError
from .simplex import ConditionalFamily, as_simplex
from .tensor_ops import (
    Branching,
    Commutation,
    Composition,
    Cycling,
    Marginalization,
    apply_operator,
    check_identities,
    commutation_matrix,
    compose,
    materialize,
)
from .markov_core import (
    ChainDecomposition,
    HigherOrderChain,
    SolverConfig,
    build_transition,
    chain_compose,
    chain_decompose,
    decode_state,
    encode_state,
    reachable_set,
    stationary,
    transition_apply,
)
from .shift import (
    ShiftChain,
    marginal_stationary,
    shift_matrix,
    shift_matrix_recursive,
    verify_marginal_conditions,
)
from .recursive import (
    FixedPointResult,
    RecursiveSpec,
    build_truncation,
    check_irreducibility,
    fixed_point,
    truncation_convergence,
)
from .bandit import (
    BanditParams,
    bandit_map,
    closed_form_ratio,
    closed_form_stationary,
    residual_reduced,
    simulate,
)

__version__ = "0.1.0"
