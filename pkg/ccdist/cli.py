"""
命令行入口

    ccdist solve-trapezoid --family-b 1.2
    ccdist solve-trapezoid --height 2.134 \
        --masses 1,0.44785596522965754,1,6.6238727964765465,6.6238727964765465
    ccdist solve-collinear --masses 1,2,3 --ordering 2,1,3
    ccdist enumerate-moulton --masses 1,2,3,4
    ccdist verify-identities --trials 1000 --seed 7
    ccdist cross-validate --input fixtures/trapezoid_family_b1.2.json
    ccdist uniqueness-probe --family-b 1.2 --starts 100
    ccdist make-fixture --family-b 1.2

Exit codes: 0 success, 1 solver failure, 2 classification or invariant failure, 3 usage error.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from ccdist import __version__
from ccdist.config import get_default_seed, get_probe_box, settings
from ccdist.errors import CCDistError, UsageError
from ccdist.models import MassVector, Ordering, RunConfig
from ccdist.services.collinear import l_basis_check, moulton_enumerate, solve_ordering
from ccdist.services.log_service import LogLevel, LogType, log_service
from ccdist.services.oracle import identity_fuzzer, oracle_solver
from ccdist.services.report_service import (
    build_report,
    collinear_payload,
    distances_from_dict,
    emit_report,
    fixture_path,
    load_report,
    trapezoid_payload,
)
from ccdist.services.trapezoid5 import (
    initial_guess_symmetric,
    symmetric_family_member,
    trapezoid_solver,
)

# (report body, exit code)
CommandResult = Tuple[Dict[str, Any], int]


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so main() owns the exit code."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def parse_masses(text: str) -> MassVector:
    """'1,2,3' -> MassVector; every entry must be a positive number."""
    values = []
    for item in text.split(","):
        item = item.strip()
        try:
            value = float(item)
        except ValueError:
            raise UsageError(f"malformed mass list {text!r}: {item!r} is not a number")
        if not value > 0:
            raise UsageError("mass must be positive")
        values.append(value)
    try:
        return MassVector(masses=values)
    except ValidationError:
        raise UsageError(f"masses must be finite: {text!r}")


def _masses_from_file(path: str) -> MassVector:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read masses from {path}: {e}")
    values = data.get("masses") if isinstance(data, dict) else data
    if not isinstance(values, list) or not values:
        raise UsageError(f"{path} holds no mass list")
    return parse_masses(",".join(str(v) for v in values))


def _parse_ordering(text: str) -> Ordering:
    try:
        return Ordering(perm=tuple(int(v) for v in text.split(",")))
    except (ValueError, ValidationError) as e:
        raise UsageError(f"invalid ordering {text!r}: {e}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--masses", help="comma-separated positive masses, e.g. 1,1,1,1,1")
    common.add_argument("--input", dest="input_path", help="JSON file with masses or a report")
    common.add_argument("--seed", type=int, default=None, help="random seed (env CCDIST_SEED)")
    common.add_argument("--tol", type=float, default=None, help="relative residual tolerance")
    common.add_argument("--max-iter", type=int, default=None, help="Newton iteration cap")
    common.add_argument("--output", dest="output_path", help="write the JSON report here")
    common.add_argument("--verbose", action="store_true", help="echo log events to stderr")

    parser = _Parser(prog="ccdist", description="Central configurations in mutual distances")
    parser.add_argument("--version", action="version", version=f"ccdist {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    trapezoid = sub.add_parser("solve-trapezoid", parents=[common], help="five-body trapezoid")
    trapezoid.add_argument("--rho", type=float, default=1.2, help="initial r45 / r13")
    trapezoid.add_argument("--height", type=float, default=2.0, help="initial height in r13 / 2")
    trapezoid.add_argument("--offset", type=float, default=0.0, help="initial P2 offset")
    trapezoid.add_argument("--family-b", type=float, help="solve the symmetric family member b")

    collinear = sub.add_parser("solve-collinear", parents=[common], help="one collinear ordering")
    collinear.add_argument("--ordering", help="body labels left to right, e.g. 2,1,3")

    sub.add_parser("enumerate-moulton", parents=[common], help="all n!/2 collinear solutions")

    identities = sub.add_parser("verify-identities", parents=[common], help="identity fuzzer")
    identities.add_argument("--trials", type=int, default=1000)

    sub.add_parser("cross-validate", parents=[common], help="re-solve a report in positions")

    probe = sub.add_parser("uniqueness-probe", parents=[common], help="multi-start Newton")
    probe.add_argument("--starts", type=int, default=100)
    probe.add_argument("--family-b", type=float, help="use the masses of family member b")

    fixture = sub.add_parser("make-fixture", parents=[common], help="write a golden fixture")
    fixture.add_argument("--family-b", type=float, help="family base ratio")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """
    Validate the command line into a RunConfig.

    Masses come from ``--masses`` or, failing that, from the ``masses`` field
    of the JSON file given with ``--input``.
    """
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise UsageError("missing command")

    masses = None
    if args.masses is not None:
        masses = parse_masses(args.masses)
    elif args.input_path is not None:
        masses = _masses_from_file(args.input_path)

    fields: Dict[str, Any] = {
        "command": args.command,
        "masses": masses,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "seed": get_default_seed() if args.seed is None else args.seed,
        "output_path": args.output_path,
        "input_path": args.input_path,
        "verbose": args.verbose,
    }
    if getattr(args, "ordering", None):
        fields["ordering"] = _parse_ordering(args.ordering)
    for name in ("rho", "height", "offset", "family_b", "starts", "trials"):
        if getattr(args, name, None) is not None:
            fields[name] = getattr(args, name)

    try:
        return RunConfig(**fields)
    except ValidationError as e:
        raise UsageError(f"invalid arguments: {e.errors()[0]['loc']} {e.errors()[0]['msg']}")


def _require_masses(config: RunConfig, count: Optional[int] = None) -> MassVector:
    if config.masses is None:
        raise UsageError(f"{config.command} needs --masses")
    if count is not None and config.masses.n != count:
        raise UsageError(f"{config.command} needs {count} masses, got {config.masses.n}")
    return config.masses


def _tolerances(config: RunConfig) -> Dict[str, Any]:
    return {
        "tol": config.tol if config.tol is not None else settings.newton_tol,
        "max_iter": config.max_iter if config.max_iter is not None else settings.newton_max_iter,
        "classification_tol": settings.classification_tol,
        "symmetry_tol": settings.symmetry_tol,
        "cross_validate_tol": settings.cross_validate_tol,
    }


def _solve_family(config: RunConfig, b: float):
    member = symmetric_family_member(b)
    guess = initial_guess_symmetric(member.masses, b, member.height)
    solution = trapezoid_solver.newton_solve(
        member.masses, guess, tol=config.tol, max_iter=config.max_iter
    )
    return member, solution


def _run_solve_trapezoid(config: RunConfig) -> CommandResult:
    if config.family_b is not None:
        member, solution = _solve_family(config, config.family_b)
        config.masses = member.masses
        extra = {"family": {"base_ratio": member.base_ratio, "height": member.height}}
    else:
        masses = _require_masses(config, 5)
        guess = initial_guess_symmetric(masses, config.rho, config.height, config.offset)
        solution = trapezoid_solver.newton_solve(
            masses, guess, tol=config.tol, max_iter=config.max_iter
        )
        extra = {}
    body = {"solution": trapezoid_payload(solution), **extra}
    body["provenance"] = {"iterations": solution.iterations}
    return body, 2 if solution.flags.violations else 0


def _run_solve_collinear(config: RunConfig) -> CommandResult:
    masses = _require_masses(config)
    ordering = config.ordering or Ordering(perm=tuple(range(1, masses.n + 1)))
    if ordering.n != masses.n:
        raise UsageError(f"ordering has {ordering.n} bodies, masses {masses.n}")
    solution = solve_ordering(masses, ordering, tol=config.tol, max_iter=config.max_iter)
    body = {"solution": collinear_payload(solution)}
    body["provenance"] = {"iterations": solution.iterations}
    return body, 0


def _run_enumerate_moulton(config: RunConfig) -> CommandResult:
    masses = _require_masses(config)
    results = moulton_enumerate(masses, tol=config.tol)
    body = {
        "count": len(results),
        "solutions": [collinear_payload(solution) for _, solution in results],
        "provenance": {"iterations": [solution.iterations for _, solution in results]},
    }
    return body, 0


def _run_verify_identities(config: RunConfig) -> CommandResult:
    report = identity_fuzzer(config.seed, config.trials)
    n = config.masses.n if config.masses is not None else 5
    basis = l_basis_check(n) if n >= 3 else None
    body = {
        "fuzz": report.model_dump(),
        "l_basis": basis.model_dump() if basis else None,
    }
    ok = report.passed and (basis is None or basis.passed)
    return body, 0 if ok else 2


def _run_cross_validate(config: RunConfig) -> CommandResult:
    if config.input_path is None:
        raise UsageError("cross-validate needs --input pointing at a solution report")
    try:
        document = load_report(config.input_path)
    except (OSError, ValueError) as e:
        raise UsageError(f"cannot load {config.input_path}: {e}")
    masses = _require_masses(config)
    solution = document.get("solution") or {}
    if "distances" not in solution:
        raise UsageError(f"{config.input_path} holds no solution distances")
    r = distances_from_dict(solution["distances"])
    report = oracle_solver.cross_validate(r, masses, tol=config.tol)
    body = {
        "source": config.input_path,
        "cross_validation": report.model_dump(by_alias=True),
        "provenance": {"iterations": report.oracle.iterations},
    }
    return body, 0 if report.passed else 2


def _run_uniqueness_probe(config: RunConfig) -> CommandResult:
    if config.family_b is not None:
        config.masses = symmetric_family_member(config.family_b).masses
    masses = _require_masses(config, 5)
    rho_range, height_range, offset = get_probe_box()
    report = trapezoid_solver.uniqueness_probe(
        masses,
        config.starts,
        seed=config.seed,
        rho_range=rho_range,
        height_range=height_range,
        offset=offset,
        tol=config.tol,
    )
    body = {
        "probe": report.model_dump(),
        "cluster_count": report.cluster_count,
        "provenance": {"box": {"rho": rho_range, "height": height_range, "offset": offset}},
    }
    return body, 2 if report.cluster_count > 1 else 0


def _run_make_fixture(config: RunConfig) -> CommandResult:
    b = config.family_b if config.family_b is not None else settings.family_base_ratio
    member, solution = _solve_family(config, b)
    config.masses = member.masses
    check = oracle_solver.cross_validate(solution.r, member.masses)
    if config.output_path is None:
        config.output_path = str(fixture_path(b))
    body = {
        "solution": trapezoid_payload(solution),
        "family": {
            "base_ratio": member.base_ratio,
            "height": member.height,
            "positions": member.positions.points,
        },
        "provenance": {
            "iterations": solution.iterations,
            "oracle": {
                "solver": "position-space Gauss-Newton",
                "iterations": check.oracle.iterations,
                "max_relative_error": check.max_relative_error,
                "passed": check.passed,
            },
        },
    }
    log_service.log(
        LogLevel.INFO,
        LogType.FIXTURE,
        f"fixture for b={b}",
        details={"cross_validation": check.max_relative_error},
    )
    return body, 0 if check.passed and not solution.flags.violations else 2


COMMANDS: Dict[str, Callable[[RunConfig], CommandResult]] = {
    "solve-trapezoid": _run_solve_trapezoid,
    "solve-collinear": _run_solve_collinear,
    "enumerate-moulton": _run_enumerate_moulton,
    "verify-identities": _run_verify_identities,
    "cross-validate": _run_cross_validate,
    "uniqueness-probe": _run_uniqueness_probe,
    "make-fixture": _run_make_fixture,
}


def run(config: RunConfig) -> int:
    """Execute one command and emit its report; returns the exit code."""
    mark = log_service.mark()
    body, code = COMMANDS[config.command](config)
    provenance = {"seed": config.seed, "tolerances": _tolerances(config)}
    provenance.update(body.pop("provenance", {}))
    provenance["log"] = log_service.summary(mark)
    report = build_report(config.command, config.masses, body, provenance)
    emit_report(report, config.output_path)
    return code


def main(argv: Optional[List[str]] = None) -> int:
    try:
        config = parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    if config.verbose:
        log_service.echo = True
    log_service.log(
        LogLevel.INFO, LogType.CLI, f"command {config.command}", details={"seed": config.seed}
    )

    try:
        return run(config)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return UsageError.exit_code
    except CCDistError as e:
        log_service.log(LogLevel.ERROR, LogType.ERROR, str(e), details={"type": type(e).__name__})
        print(f"error: {e}", file=sys.stderr)
        if getattr(e, "violations", None):
            for violation in e.violations:
                print(f"  violated: {violation}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
