"""Command-line entry point.

Every successful command writes exactly one JSON object on a single line
to stdout; diagnostics go to stderr.  Exit status is 0 on success, 1 on a
numeric failure (non-convergence, closed form undefined) and 2 on bad
input or usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bandit, markov_core, recursive, shift, tensor_ops
from .errors import CapacityError, ContractError, DomainError, NonConvergenceError, RecMarkovError
from .markov_core import SolverConfig
from .simplex import ConditionalFamily

#: Row sums may be off by this much in model files; rows are then renormalized.
FILE_SUM_TOL = 1e-6


class InputError(RecMarkovError):
    """A model file or flag value is unusable."""


class UsageError(RecMarkovError):
    pass


# -- model files ------------------------------------------------------------

def _field(obj, key, path):
    if not isinstance(obj, dict):
        raise InputError(f"{path or '<root>'}: expected an object")
    if key not in obj:
        raise InputError(f"{path + '.' if path else ''}{key}: missing field")
    return obj[key]


def _int_field(obj, key, path, minimum):
    v = _field(obj, key, path)
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise InputError(f"{path + '.' if path else ''}{key}: expected an integer >= {minimum}, got {v!r}")
    return v


def _prob_rows(rows, n_rows, width, path):
    if not isinstance(rows, list) or len(rows) != n_rows:
        got = len(rows) if isinstance(rows, list) else type(rows).__name__
        raise InputError(f"{path}: expected {n_rows} rows, got {got}")
    out = np.empty((n_rows, width))
    for i, row in enumerate(rows):
        where = f"{path}[{i}]"
        if not isinstance(row, list) or len(row) != width:
            raise InputError(f"{where}: expected {width} numbers")
        try:
            vals = np.array(row, dtype=float)
        except (TypeError, ValueError):
            raise InputError(f"{where}: entries must be numbers") from None
        if any(isinstance(v, bool) for v in row) or not np.all(np.isfinite(vals)):
            raise InputError(f"{where}: entries must be finite numbers")
        if vals.min() < 0:
            raise InputError(f"{where}: negative probability {vals.min()!r}")
        total = vals.sum()
        if abs(total - 1.0) > FILE_SUM_TOL:
            raise InputError(f"{where}: row sums to {total!r}, not 1")
        out[i] = vals / total
    return out


def parse_family(obj, path="") -> ConditionalFamily:
    N = _int_field(obj, "N", path, 2)
    order = _int_field(obj, "order", path, 0)
    if N ** order > 2 ** 24:
        raise InputError(f"{path + '.' if path else ''}order: {N}**{order} members is too many")
    rows = _field(obj, "family", path)
    members = _prob_rows(rows, N ** order, N, f"{path + '.' if path else ''}family")
    return ConditionalFamily(N, order, members)


def parse_shift_chain(obj) -> shift.ShiftChain:
    N = _int_field(obj, "N", "", 2)
    fams = _field(obj, "families", "")
    if not isinstance(fams, list) or not fams:
        raise InputError("families: expected a non-empty array")
    parsed = []
    for m, item in enumerate(fams, start=1):
        path = f"families[{m - 1}]"
        if isinstance(item, dict):
            fam = parse_family(item, path)
            if fam.N != N or fam.order != m:
                raise InputError(f"{path}: expected an order-{m} family over {N} symbols")
        else:
            fam = ConditionalFamily(N, m, _prob_rows(item, N ** m, N, path))
        parsed.append(fam)
    return shift.ShiftChain(tuple(parsed))


def parse_recursive(obj) -> recursive.RecursiveSpec:
    kind = _field(obj, "kind", "")
    params = _field(obj, "params", "")
    if not isinstance(params, dict):
        raise InputError("params: expected an object")
    N = _int_field(obj, "N", "", 2)
    if kind in ("constant", "mixture"):
        columns = _prob_rows(_field(params, "R", "params"), N, N, "params.R")
        R = columns.T
        if kind == "constant":
            return recursive.RecursiveSpec.constant(R)
        eps = _number(params, "epsilon", "params")
        if not 0 <= eps <= 1:
            raise InputError(f"params.epsilon: must lie in [0, 1], got {eps}")
        return recursive.RecursiveSpec.mixture(eps, R)
    if kind == "bandit":
        if N != 4:
            raise InputError(f"N: the bandit map has 4 outcomes, got {N}")
        values = {k: _number(params, k, "params") for k in ("p0", "p1", "delta")}
        try:
            return bandit.bandit_map(bandit.BanditParams(**values))
        except ContractError as exc:
            raise InputError(f"params: {exc}") from None
    raise InputError(f"kind: expected 'constant', 'mixture' or 'bandit', got {kind!r}")


def _number(obj, key, path):
    v = _field(obj, key, path)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise InputError(f"{path}.{key}: expected a finite number, got {v!r}")
    return float(v)


def load_model(path):
    """Read a family, shift-chain or recursive-spec file; the shape of the object decides which."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read model file ({exc.strerror or exc})") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise InputError(f"{path}: top level must be an object")
    try:
        if "kind" in obj:
            return parse_recursive(obj)
        if "families" in obj:
            return parse_shift_chain(obj)
        if "family" in obj:
            return parse_family(obj)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None
    except ContractError as exc:
        raise InputError(f"{path}: {exc}") from None
    raise InputError(f"{path}: expected a 'family', 'families' or 'kind' field")


def _expect(model, cls, path):
    if not isinstance(model, cls):
        raise InputError(f"{path}: this command needs a {cls.__name__} model, got {type(model).__name__}")
    return model


# -- commands ---------------------------------------------------------------

def _vec(x):
    return [float(v) for v in np.ravel(x)]


def _mat(Q):
    return [_vec(row) for row in np.asarray(Q)]


def _config(args):
    try:
        return SolverConfig(args.tol, args.max_iter, args.damping)
    except ContractError as exc:
        raise UsageError(str(exc)) from None


def _describe(model):
    if isinstance(model, ConditionalFamily):
        return {"type": "family", "N": model.N, "order": model.order}
    if isinstance(model, shift.ShiftChain):
        return {"type": "shift_chain", "N": model.N, "k": model.k}
    return {"type": "recursive", "N": model.N, "kind": model.kind}


def cmd_validate(args):
    model = load_model(args.model)
    return {**_describe(model), "valid": True}


def cmd_identities(args):
    if args.N < 2 or args.k < 1:
        raise UsageError("identities needs --N >= 2 and --k >= 1")
    errors = tensor_ops.check_identities(args.N, args.k, args.seed)
    return {"errors": errors, "max_error": max(errors.values())}


def cmd_build(args):
    fam = _expect(load_model(args.model), ConditionalFamily, args.model)
    return {"N": fam.N, "order": fam.order, "matrix": _mat(markov_core.build_transition(fam))}


def cmd_stationary(args):
    fam = _expect(load_model(args.model), ConditionalFamily, args.model)
    chain = markov_core.HigherOrderChain(fam)
    theta = markov_core.stationary(chain, chain.dim, _config(args))
    return {"N": fam.N, "order": fam.order, "theta": _vec(theta),
            "residual": markov_core.l1(chain.apply(theta) - theta)}


def cmd_marginal(args):
    fam = _expect(load_model(args.model), ConditionalFamily, args.model)
    if not 1 <= args.m <= fam.order:
        raise UsageError(f"--m must lie in 1..{fam.order}")
    omega = shift.marginal_stationary(fam, args.m, _config(args))
    return {"N": fam.N, "order": fam.order, "omega": _vec(omega)}


def cmd_shift(args):
    c = _expect(load_model(args.model), shift.ShiftChain, args.model)
    S = shift.shift_matrix(c)
    Sr = shift.shift_matrix_recursive(c)
    return {"N": c.N, "k": c.k, "matrix": _mat(S),
            "recursive_max_error": float(np.abs(S - Sr).max())}


def cmd_decompose(args):
    fam = _expect(load_model(args.model), ConditionalFamily, args.model)
    chain = markov_core.HigherOrderChain(fam)
    theta = markov_core.stationary(chain, chain.dim, _config(args))
    d = markov_core.chain_decompose(theta, fam.N, fam.order)
    return {
        "N": fam.N, "order": fam.order, "theta": _vec(theta),
        "levels": [_mat(level.members) for level in d.levels],
        "marginal_residuals": shift.verify_marginal_conditions(theta, fam),
    }


def cmd_fixedpoint(args):
    spec = _expect(load_model(args.model), recursive.RecursiveSpec, args.model)
    res = recursive.fixed_point(spec, _config(args))
    return {"N": spec.N, "kind": spec.kind, "omega": _vec(res.omega),
            "iterations": res.iterations, "residual": res.residual}


def cmd_truncate(args):
    spec = _expect(load_model(args.model), recursive.RecursiveSpec, args.model)
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    fam = recursive.build_truncation(spec, args.k)
    return {"N": fam.N, "order": fam.order, "family": _mat(fam.members)}


def cmd_converge(args):
    spec = _expect(load_model(args.model), recursive.RecursiveSpec, args.model)
    if args.kmax < 1:
        raise UsageError("--kmax must be >= 1")
    config = _config(args)
    target = recursive.fixed_point(spec, config).omega
    steps = recursive.truncation_convergence(spec, args.kmax, config=config)
    return {
        "N": spec.N, "kind": spec.kind, "fixed_point": _vec(target),
        "steps": [{"k": s.k, "distance": s.distance,
                   "hypothesis_residual": s.hypothesis_residual,
                   "marginal": _vec(s.marginal)} for s in steps],
    }


def _bandit_params(args):
    try:
        return bandit.BanditParams(args.p0, args.p1, args.delta)
    except ContractError as exc:
        raise UsageError(str(exc)) from None


def cmd_bandit_solve(args):
    params = _bandit_params(args)
    r = bandit.closed_form_ratio(params)
    omega = bandit.closed_form_stationary(params)
    return {"r": r, "q0": r / (1 + r), "q1": 1 / (1 + r), "omega": _vec(omega),
            "residual": bandit.closed_form_residual(params)}


def cmd_bandit_simulate(args):
    params = _bandit_params(args)
    if args.steps < 1 or args.burn_in < 0 or not 0 <= args.seed < 2 ** 64:
        raise UsageError("need --steps >= 1, --burn-in >= 0 and 0 <= --seed < 2**64")
    res = bandit.simulate(params, args.steps, args.burn_in, args.seed)
    return {"freq": list(res.freq), "arm0_choice_freq": res.arm0_choice_freq,
            "model_q0": res.model_q0, "zero_drift_freq": _maybe(bandit.zero_drift_frequency, params),
            "steps": res.steps, "burn_in": res.burn_in, "seed": res.seed}


def _maybe(fn, *a):
    try:
        return fn(*a)
    except DomainError:
        return None


# -- parser -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _solver_flags(p):
    d = SolverConfig()
    p.add_argument("--tol", type=float, default=d.tolerance, help="L1 residual target")
    p.add_argument("--max-iter", type=int, default=d.max_iterations)
    p.add_argument("--damping", type=float, default=d.damping)


def build_parser():
    parser = _Parser(prog="recmarkov", description="Higher-order and recursive Markov chain tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_, model=True, solver=False):
        p = sub.add_parser(name, help=help_)
        if model:
            p.add_argument("--model", required=True, metavar="PATH")
        if solver:
            _solver_flags(p)
        p.set_defaults(func=fn)
        return p

    add("validate", cmd_validate, "load and validate a model file")
    p = add("identities", cmd_identities, "check the operator identities", model=False)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    add("build", cmd_build, "dense transition matrix of a family")
    add("stationary", cmd_stationary, "stationary vector of a family", solver=True)
    p = add("marginal", cmd_marginal, "marginal stationary vector of order m", solver=True)
    p.add_argument("--m", type=int, required=True)
    add("shift", cmd_shift, "k-shift matrix of a shift chain")
    add("decompose", cmd_decompose, "chain-rule factors of the stationary vector", solver=True)
    add("fixedpoint", cmd_fixedpoint, "solve w = f(w) w", solver=True)
    p = add("truncate", cmd_truncate, "order-k truncation of a recursive spec")
    p.add_argument("--k", type=int, required=True)
    p = add("converge", cmd_converge, "truncation marginals versus the fixed point", solver=True)
    p.add_argument("--kmax", type=int, required=True)
    p = add("bandit-solve", cmd_bandit_solve, "closed-form bandit stationary vector", model=False)
    for flag in ("--p0", "--p1", "--delta"):
        p.add_argument(flag, type=float, required=True)
    p = add("bandit-simulate", cmd_bandit_simulate, "Monte Carlo bandit run", model=False)
    for flag in ("--p0", "--p1", "--delta"):
        p.add_argument(flag, type=float, required=True)
    p.add_argument("--steps", type=int, default=10 ** 6)
    p.add_argument("--burn-in", type=int, default=10 ** 4)
    p.add_argument("--seed", type=int, default=0)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        record = args.func(args)
    except (UsageError, InputError, ContractError, CapacityError) as exc:
        print(f"recmarkov {args.command}: {exc}", file=stderr)
        return 2
    except (NonConvergenceError, DomainError) as exc:
        print(f"recmarkov {args.command}: {exc}", file=stderr)
        return 1
    echo = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    out = {"command": args.command, "args": echo, **record}
    stdout.write(json.dumps(out, allow_nan=False) + "\n")
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
