"""Command-line front end: solve, certify and convergence studies over scenario files."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path as FsPath

import numpy as np

from .calculus import power_rule_convergence
from .scenario import Scenario, ScenarioError, load_scenarios
from .solver import DivergenceError, QuasiSolutionError, residual, solve_fixed_point, t0_jump
from .stability import certify_uh, certify_uhr
from .types import psi_from_key

log = logging.getLogger("psihilfer")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_json(path: FsPath, data: dict) -> None:
    text = json.dumps(_clean(data), sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")


def write_table(path: FsPath, header, columns) -> None:
    """Comma-separated table, header row, 17 significant digits, LF endings."""
    rows = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def _scenario_header(s: Scenario) -> dict:
    return {"scenario": s.to_dict(), "warnings": list(s.warnings)}


def run_solve(s: Scenario, out: FsPath, tol: float = 1e-10) -> dict:
    problem = s.problem()
    report = solve_fixed_point(problem, s.mode, tol=tol)
    if not report.converged:
        raise DivergenceError(f"fixed-point iteration did not converge in {report.iterations} iterations")
    y = report.solution
    r = residual(y, problem)
    data = {
        **_scenario_header(s),
        "iterations": report.iterations,
        "contraction_observed": report.contraction_observed,
        "converged": report.converged,
        "final_distance": report.final_residual_sup,
        "leading_exponent": y.leading_exponent,
        "t0_jump": t0_jump(problem, s.mode),
        "residual_sup": float(np.max(np.abs(r.segment[2:]))) if len(r.segment) > 2 else 0.0,
    }
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "solve.json", data)
    write_table(out / "solution.csv", ["t", "y", "residual"], [y.grid.nodes, y.values, r.values])
    return data


def run_certify(s: Scenario, kind: str, out: FsPath, tol: float = 1e-10) -> dict:
    """Write certificate_<kind>.json and, when experiments ran, certificate_<kind>.csv."""
    kind = kind.lower()
    problem = s.problem()
    if kind == "uhr":
        cert = certify_uhr(problem, s.phi_fn(), experiments=s.experiments, seed=s.seed, mode=s.mode, tol=tol)
    elif kind == "uh":
        cert = certify_uh(
            problem, s.epsilon, experiments=s.experiments, seed=s.seed, uh_mode=s.uh_mode, mode=s.mode, tol=tol
        )
    else:
        raise ValueError(f"unknown certificate kind {kind!r}")
    data = {**_scenario_header(s), **cert.summary()}
    if kind == "uh":
        data["bound_constant"] = None if cert.bound is None else float(cert.bound.values[0])
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / f"certificate_{kind}.json", data)
    if cert.condition_ok:
        grid = problem.grid
        write_table(
            out / f"certificate_{kind}.csv",
            ["t", "y0", "B", "max_abs_deviation"],
            [grid.nodes, cert.y0.values, cert.bound.values, cert.max_deviation],
        )
    return data


def run_convergence_study(s: Scenario, refinements: int, out: FsPath, delta: float = 1.0) -> list:
    """Power-rule error at T for the scenario's psi and alpha, doubling the grid each row."""
    if refinements < 2:
        raise ValueError("refinements must be at least 2")
    if not delta > 0:
        raise ValueError("delta must be positive")
    n0 = s.grid().n_steps
    ns = [n0 * 2**k for k in range(refinements + 1)]
    rows = power_rule_convergence(psi_from_key(s.psi), s.alpha, delta, s.t0, s.grid().T, ns)
    out.mkdir(parents=True, exist_ok=True)
    write_table(out / "convergence.csv", ["n", "error", "ratio", "order"], list(zip(*rows)))
    return rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psihilfer", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, help="scenario file (one mapping or a list) or catalog name")
        p.add_argument("--out", default="out", help="output directory; one subdirectory per scenario")
        p.add_argument("--seed", type=int)
        p.add_argument("--experiments", type=int)
        p.add_argument("--mode", choices=["paper-literal", "weighted-hilfer"])
        p.add_argument("--uh-mode", choices=["paper-literal", "tight"])
        p.add_argument("--steps-per-delay", type=int)
        return p

    common(sub.add_parser("solve", help="solve the delay problem by Picard iteration"))
    common(sub.add_parser("certify-uhr", help="Ulam-Hyers-Rassias certificate"))
    common(sub.add_parser("certify-uh", help="Ulam-Hyers certificate"))
    conv = common(sub.add_parser("converge", help="power-rule convergence study"))
    conv.add_argument("--refinements", type=int, default=4)
    conv.add_argument("--delta", type=float, default=1.0, help="integrand (psi - psi(t0))**(delta - 1)")
    return parser


def _run_one(args, s: Scenario) -> None:
    out = FsPath(args.out) / s.name
    for w in s.warnings:
        log.warning("%s: %s", s.name, w)
    if args.verb == "solve":
        data = run_solve(s, out)
        print(f"{s.name}: solved in {data['iterations']} iterations")
    elif args.verb in ("certify-uhr", "certify-uh"):
        kind = args.verb.split("-")[1]
        data = run_certify(s, kind, out)
        status = "pass" if data["pass"] else f"fail ({data['reason']})"
        print(f"{s.name}: {data['kind']} contraction={data['contraction']:.6g} {status}")
    else:
        rows = run_convergence_study(s, args.refinements, out, args.delta)
        n, err, _, order = rows[-1]
        print(f"{s.name}: n={n} error={err:.3e} order={order:.3f}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        scenarios = load_scenarios(args.scenario)
        overrides = dict(
            seed=args.seed,
            experiments=args.experiments,
            initial_term_mode=args.mode,
            uh_mode=args.uh_mode,
            steps_per_delay=args.steps_per_delay,
        )
        scenarios = [s.with_options(**overrides) for s in scenarios]
    except (ScenarioError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        for s in scenarios:
            _run_one(args, s)
    except (DivergenceError, QuasiSolutionError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
