"""Command-line entry point: ``aocsi <subcommand> --config FILE --out DIR``.

Exit codes: 0 success, 1 config/validation error, 2 solver did not
converge, 3 I/O error.  Output files are staged in memory and written only
once a subcommand has fully succeeded; if writing fails part way, files
already written by that invocation are removed.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from aocsi import reporting
from aocsi.belief import age_curves
from aocsi.channel import steady_state
from aocsi.config import ExperimentConfig, load_config
from aocsi.errors import AocsiError, ConfigError, NotConverged
from aocsi.mdp import (
    build_mdp,
    evaluate_policy_exact,
    greedy_policy,
    randomized_policy,
    solve_rvi,
    threshold_summary,
)
from aocsi.simulator import compare_policies, policy_label, report_row, run_simulation

log = logging.getLogger("aocsi")

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_IO = 0, 1, 2, 3


def _optimal(cfg: ExperimentConfig, mdp):
    report = solve_rvi(mdp, cfg.solver)
    report.policy.metadata["config_hash"] = cfg.config_hash
    return report


def _policy(kind: str, cfg: ExperimentConfig, mdp):
    if kind == "optimal":
        return _optimal(cfg, mdp).policy
    if kind == "greedy":
        return greedy_policy(mdp)
    return randomized_policy(mdp)


def cmd_validate(cfg: ExperimentConfig, args) -> dict:
    m = cfg.model
    with np.printoptions(precision=6, suppress=True):
        print(f"channel states: {m.num_states}")
        print(f"transition matrix (row-stochastic):\n{m.transition}")
        print(f"reliabilities: {m.reliability}")
        print(f"steady state: {steady_state(m)}")
    p = cfg.params
    print(f"reward: r_suc={p.r_suc} r_fail={p.r_fail} eps_t={p.eps_t} eps_c={p.eps_c} beta={p.beta}")
    print(f"solver: delta_max={cfg.delta_max} theta={cfg.solver.theta} ref_state={cfg.solver.ref_state}")
    print(f"config hash: {cfg.config_hash}")
    return {}


def cmd_curves(cfg: ExperimentConfig, args) -> dict:
    bound = args.bound if args.bound is not None else cfg.delta_max
    if bound < 1:
        raise ConfigError("--bound", f"must be >= 1, got {bound}")
    return {"curves.csv": reporting.curves_csv(age_curves(cfg.model, bound))}


def cmd_solve(cfg: ExperimentConfig, args) -> dict:
    mdp = build_mdp(cfg.model, cfg.params, cfg.delta_max)
    report = _optimal(cfg, mdp)
    summary = threshold_summary(report.policy, mdp)
    return {
        "policy_optimal.csv": reporting.policy_csv(report.policy),
        "solve_report.csv": reporting.solve_report_csv(report, summary),
    }


def cmd_policy_map(cfg: ExperimentConfig, args) -> dict:
    mdp = build_mdp(cfg.model, cfg.params, cfg.delta_max)
    optimal = _optimal(cfg, mdp).policy
    greedy = greedy_policy(mdp)
    return {
        "policy_optimal.csv": reporting.policy_csv(optimal),
        "policy_greedy.csv": reporting.policy_csv(greedy),
        "thresholds.csv": reporting.thresholds_csv(
            [("optimal", threshold_summary(optimal, mdp)), ("greedy", threshold_summary(greedy, mdp))]
        ),
    }


def cmd_compare(cfg: ExperimentConfig, args) -> dict:
    mdp = build_mdp(cfg.model, cfg.params, cfg.delta_max)
    policies = [_optimal(cfg, mdp).policy, greedy_policy(mdp), randomized_policy(mdp)]
    rows = compare_policies(cfg.model, cfg.params, policies, cfg.sim, mdp)
    return {"comparison.csv": reporting.comparison_csv(rows)}


def cmd_simulate(cfg: ExperimentConfig, args) -> dict:
    mdp = build_mdp(cfg.model, cfg.params, cfg.delta_max)
    policy = _policy(args.policy, cfg, mdp)
    report = run_simulation(cfg.model, cfg.params, policy, cfg.sim, mdp)
    row = report_row(policy_label(policy), report, evaluate_policy_exact(mdp, policy))
    return {"sim_report.csv": reporting.comparison_csv([row])}


COMMANDS = {
    "validate": (cmd_validate, "check a config and print the model summary"),
    "curves": (cmd_curves, "expected reliability and MSE per age and last state"),
    "solve": (cmd_solve, "solve the truncated MDP with relative value iteration"),
    "policy-map": (cmd_policy_map, "optimal and greedy lookup tables plus probe thresholds"),
    "compare": (cmd_compare, "simulate and exactly evaluate optimal, greedy and randomized policies"),
    "simulate": (cmd_simulate, "simulate one policy"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="experiment config file")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    common.add_argument("--horizon", type=int, help="override sim.horizon")
    common.add_argument("--seed", type=int, help="override sim.seed")
    common.add_argument("--replications", type=int, help="override sim.replications")
    common.add_argument("--delta-max", type=int, help="override solver.delta_max")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="aocsi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "curves":
            p.add_argument("--bound", type=int, help="largest age to tabulate (default: delta_max)")
        if name == "simulate":
            p.add_argument("--policy", choices=("optimal", "greedy", "randomized"), default="optimal")
    return parser


def write_outputs(out_dir: Path, files: dict) -> None:
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            target = out_dir / name
            tmp = target.with_name(target.name + ".tmp")
            with open(tmp, "w", newline="") as fh:
                fh.write(text)
            written.append(tmp)
            os.replace(tmp, target)
            written[-1] = target
    except OSError:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler, _ = COMMANDS[args.command]
    try:
        cfg = load_config(args.config).with_overrides(
            horizon=args.horizon, seed=args.seed, delta_max=args.delta_max, replications=args.replications
        )
        files = handler(cfg, args)
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (AocsiError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        write_outputs(args.out, files)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    for name in files:
        log.info("wrote %s", args.out / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
