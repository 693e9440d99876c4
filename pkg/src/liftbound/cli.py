"""Batch command-line front end.

Every report embeds the resolved configuration and a ``schema_version``;
identical inputs and seed give byte-identical output.  Exit status is 0
when every requested check passed, 1 when a check failed, 2 for unusable
input and 3 when a bound's hypothesis does not hold.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import InapplicableBoundError, compare_bounds
from .chain import ChainError, NotMixedError, mixing_time, validate
from .conductance import ConductanceError, conductance_exact, conductance_sweep
from .continuous import (
    build_grid_chain,
    convergence_study,
    diffusive_lower_check,
    fourier_mixing_bound,
    minimal_T,
    torus_example_kernel,
)
from .continuous.kernel import KernelError
from .decomposition import (
    CertificationError,
    DecompositionError,
    canonical_decomposition,
    certify_beta_gamma,
    pi_star,
)
from .evolving_set import (
    evolve_trajectory,
    transition_identity_residuals,
    verify_martingale,
    verify_ratio_decay,
)
from .io import (
    SCHEMA_VERSION,
    FormatError,
    chain_to_dict,
    dumps_report,
    lift_to_dict,
    load_chain,
    load_kernel,
    load_lift,
)
from .lifting import dhn_lifted_cycle, verify_conductance_contraction, verify_lift

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_ASSUMPTION = 0, 1, 2, 3
DEFAULT_SEED = 0


class AssumptionError(RuntimeError):
    """A named hypothesis of the requested analysis does not hold."""


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", "-i", help="input file (chain, lift or kernel JSON)")
    parser.add_argument("--output", "-o", help="write the report here instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--tol", type=float, default=1e-12)
    parser.add_argument("--max-exact-subsets", type=int, default=20,
                        help="largest state count for exact subset enumeration")
    parser.add_argument("--cap-iterations", type=int, default=10**6)
    parser.add_argument("--trials", type=int, default=10**4)
    parser.add_argument("--waive-assumptions", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liftbound", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a chain file")
    _common(p)

    p = sub.add_parser("analyze", help="mixing time, conductance, pi_* and the (beta, gamma) certificate")
    _common(p)
    p.add_argument("--beta", type=float)

    p = sub.add_parser("evolve", help="evolving-set trajectory plus exact identity checks")
    _common(p)
    p.add_argument("--start", required=True, help="comma-separated state labels of S0")
    p.add_argument("--steps", type=int, default=8)

    p = sub.add_parser("bounds", help="side-by-side bound report")
    _common(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--lift-tau", type=int, help="measured mixing time of a lift")

    p = sub.add_parser("lift-verify", help="check a lift file")
    _common(p)

    p = sub.add_parser("lift-dhn", help="write the direction-carrying lift of the lazy cycle")
    _common(p)
    p.add_argument("n", type=int)

    p = sub.add_parser("discretize", help="grid chain of a continuous kernel")
    _common(p)
    p.add_argument("kernel", help="kernel JSON path, or torus:<c> for the uniform-ball torus walk")
    p.add_argument("N", type=int)

    p = sub.add_parser("study", help="convergence table over a resolution ladder")
    _common(p)
    p.add_argument("kernel")
    p.add_argument("N_list", help="comma-separated ascending resolutions")
    p.add_argument("--beta", type=float)
    p.add_argument("--tau-max-states", type=int, default=200)

    p = sub.add_parser("torus-fourier", help="character-sum bound and diffusive check")
    _common(p)
    p.add_argument("c", type=float)
    p.add_argument("--A", type=float, help="also run the diffusive check at T = A / c^2")
    p.add_argument("--truncation", type=int, default=10**5)
    return parser


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "output"}
    for k in ("input",):
        if cfg.get(k):
            cfg[k] = str(Path(cfg[k]).as_posix())
    return cfg


def _need_input(args) -> str:
    if not args.input:
        raise FormatError(f"{args.command} needs --input")
    return args.input


def _load_kernel(source: str):
    if source.startswith("torus:"):
        return torus_example_kernel(float(source.split(":", 1)[1]))
    return load_kernel(source)


def _conductance(chain, args):
    if chain.n <= args.max_exact_subsets:
        return conductance_exact(chain, args.max_exact_subsets)
    return conductance_sweep(chain)


# ---------------------------------------------------------------------------
# commands; each returns (result dict, passed, csv rows or None)


def cmd_validate(args):
    chain, decomp = load_chain(_need_input(args))
    rep = validate(chain, args.tol)
    result = rep.to_dict()
    passed = rep.valid
    if decomp is not None:
        problems = decomp.check(chain.pi, args.tol)
        result["decomposition_problems"] = problems
        passed = passed and not problems
    return result, passed, None


def cmd_analyze(args):
    chain, decomp = load_chain(_need_input(args))
    rep = validate(chain, args.tol)
    if not rep.valid:
        raise AssumptionError("stochastic matrix with a valid stationary law: " + "; ".join(rep.violations))
    cut = _conductance(chain, args)
    result = {
        "n": chain.n,
        "laziness": chain.laziness,
        "phi": cut.to_dict(chain),
        "tau": mixing_time(chain, args.cap_iterations),
        "min_pi": float(chain.pi.min()),
    }
    if decomp is None:
        try:
            decomp = canonical_decomposition(chain)
        except DecompositionError as exc:
            result["pi_star_note"] = str(exc)
    if decomp is not None:
        result["pi_star"] = pi_star(decomp, chain.pi)
    if args.beta is not None:
        result["certificate"] = certify_beta_gamma(chain, args.beta, decomposition=decomp).to_dict()
    return result, True, None


def cmd_evolve(args):
    chain, _ = load_chain(_need_input(args))
    start = [s.strip() for s in args.start.split(",") if s.strip()]
    S0 = chain.mask(start)
    traj = evolve_trajectory(chain, S0, args.steps, seed=args.seed)
    residuals = transition_identity_residuals(chain, S0, args.steps)
    result = {
        "trajectory": [
            {"t": t, "set": chain.labels(chain.mask(int(m))), "pi_of_S": float(chain.pi[chain.mask(int(m))].sum()),
             "uniform_drawn": (None if t == 0 else float(traj.uniforms[t - 1]))}
            for t, m in enumerate(traj.sets)
        ],
        "generator": traj.generator,
        "transition_identity_max_residual": float(np.max(residuals)),
        "martingale_residual_S0": verify_martingale(chain, S0),
    }
    passed = result["transition_identity_max_residual"] <= 1e-10 and result["martingale_residual_S0"] <= 1e-12
    if chain.n <= args.max_exact_subsets:
        phi = conductance_exact(chain, args.max_exact_subsets).value
        check = verify_ratio_decay(chain, S0, phi)
        result["ratio_decay_slack"] = check.slack
        passed = passed and check.slack >= -1e-12
    rows = [["t", "bitmask", "pi_of_S", "uniform_drawn"]]
    for t, m in enumerate(traj.sets):
        u = "" if t == 0 else f"{traj.uniforms[t - 1]:.17g}"
        rows.append([t, int(m), f"{chain.pi[chain.mask(int(m))].sum():.17g}", u])
    return result, passed, rows


def cmd_bounds(args):
    chain, decomp = load_chain(_need_input(args))
    if decomp is None:
        decomp = canonical_decomposition(chain)
    try:
        report = compare_bounds(chain, decomp, args.beta, lift_tau_measured=args.lift_tau,
                                waive=args.waive_assumptions, max_states=args.max_exact_subsets)
    except InapplicableBoundError as exc:
        raise AssumptionError(str(exc)) from None
    rows = [list(report.CSV_COLUMNS), report.csv_row()]
    return report.to_dict(), report.ok, rows


def cmd_lift_verify(args):
    lift = load_lift(_need_input(args))
    check = verify_lift(lift, args.tol)
    result = {
        "lift_residual": check.lift_residual,
        "marginal_residual": check.marginal_residual,
        "lift_passed": check.passed,
        "worst_pair": [lift.base.states[check.worst_pair[0]], lift.base.states[check.worst_pair[1]]],
    }
    passed = check.passed
    if lift.base.n <= args.max_exact_subsets:
        cc = verify_conductance_contraction(lift, args.max_exact_subsets)
        result["conductance_contraction"] = cc.to_dict()
        passed = passed and cc.verdict != "fail"
    return result, passed, None


def cmd_lift_dhn(args):
    lift = dhn_lifted_cycle(args.n)
    return lift_to_dict(lift), True, None


def cmd_discretize(args):
    kernel = _load_kernel(args.kernel)
    gc = build_grid_chain(kernel, args.N)
    result = {
        "kernel": kernel.name,
        "N": args.N,
        "n_points": gc.grid.n,
        "chain": chain_to_dict(gc.chain, gc.decomposition),
        "max_one_minus_lambda": gc.max_one_minus_lambda,
        "reversibility_residual": gc.reversibility_residual(),
        "asymmetric_pairs": gc.asymmetric_pairs,
        "pi_star_N": pi_star(gc.decomposition, gc.pi_N),
    }
    passed = result["reversibility_residual"] <= 1e-10
    return result, passed, None


def cmd_study(args):
    kernel = _load_kernel(args.kernel)
    N_list = [int(v) for v in args.N_list.split(",") if v.strip()]
    table = convergence_study(kernel, N_list, beta=args.beta, tau_max_states=args.tau_max_states)
    result = {"kernel": table.kernel, "rows": [r.to_dict() for r in table.rows]}
    passed = not any(r.errors for r in table.rows)
    return result, passed, table


def cmd_torus_fourier(args):
    c = args.c
    T = minimal_T(c, args.truncation)
    fb = fourier_mixing_bound(c, T, args.truncation)
    result = {
        "c": c,
        "minimal_T": T,
        "bound_at_minimal_T": fb.value,
        "tail": fb.tail,
        "truncation": fb.truncation,
        "converged": fb.converged,
    }
    passed = True
    if args.A is not None:
        check = diffusive_lower_check(c, args.A, args.trials, args.seed)
        result["diffusive"] = check.to_dict()
        passed = check.passed
    return result, passed, None


COMMANDS = {
    "validate": cmd_validate,
    "analyze": cmd_analyze,
    "evolve": cmd_evolve,
    "bounds": cmd_bounds,
    "lift-verify": cmd_lift_verify,
    "lift-dhn": cmd_lift_dhn,
    "discretize": cmd_discretize,
    "study": cmd_study,
    "torus-fourier": cmd_torus_fourier,
}


def _flatten(prefix: str, value, rows: list) -> None:
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], rows)
    elif isinstance(value, (list, tuple)) and any(isinstance(v, (dict, list)) for v in value):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append([prefix, value if not isinstance(value, (list, tuple)) else " ".join(map(str, value))])


def render(command: str, config: dict, result: dict, passed: bool, rows, fmt: str) -> str:
    if fmt == "json":
        doc = dict(result) if command == "lift-dhn" else {"result": result}
        doc.update({"schema_version": SCHEMA_VERSION, "command": command, "config": config, "passed": passed})
        return dumps_report(doc)
    if hasattr(rows, "to_csv"):
        return rows.to_csv()
    buf = io.StringIO()
    buf.write(f"# liftbound {command} schema {SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    if rows is None:
        rows = [["key", "value"]]
        _flatten("", {"result": result, "config": config, "passed": passed}, rows)
    w.writerows(rows)
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = _config(args)
    try:
        result, passed, rows = COMMANDS[args.command](args)
    except AssumptionError as exc:
        print(f"assumption failed: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (CertificationError, NotMixedError) as exc:
        print(f"assumption failed: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (FormatError, ChainError, KernelError, ConductanceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = render(args.command, config, result, passed, rows, args.format)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
