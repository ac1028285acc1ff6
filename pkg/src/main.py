import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd

from src.analysisTool.mdp import (
    average_cost_solve,
    build_model_from_scenario,
    discounted_policy_iterate,
    greedy_mismatches,
    optimal_policy_for,
    policy_table_frame,
    structure_checks,
    value_iterate,
    METHODS,
    VANISHING_ALPHAS,
)
from src.analysisTool.sweep import SWEEP_COLUMNS, aggregate_rows, report_rows, sensing_sweep, sweep
from src.analysisTool.thresholds import ThresholdReport, thresholds
from src.misc.errors import CheckViolation, ConfigError, EnergyHarvestingError
from src.misc.parser import ExperimentConfig, Parser
from src.misc.results import RunManifest, scenario_dict, write_csv
from src.simulatorTool.hitting_time import HittingTimeReport, hitting_time_stats
from src.simulatorTool.optimal_table import MdpTablePolicy
from src.simulatorTool.simulator import MetricsReport, ScenarioConfig, run

logger = logging.getLogger(__name__)
parser = Parser()


#touch: run panel
DEFAULT_OUTPUT_DIR = "results"
DEFAULT_LOG_LEVEL = "WARNING"
MENU_PRESET = "fig5"

#dont touch
TOOL_VERSION = "1.0.0"
COMMANDS = ("simulate", "sweep", "thresholds", "mdp-solve", "mdp-check", "hitting-time")
# Above this discount factor value iteration is too slow; the exact solver is used instead
VI_ALPHA_LIMIT = 0.995


def display_metrics(report: MetricsReport) -> None:
    print("\n" + "=" * 60)
    print(f" {report.policy}  E[X] = {report.ex_mean:.4g}  E[Y] = {report.ey_mean:.4g}")
    print("=" * 60)
    print(f"Verdict: {report.stability_verdict}  (slope {report.slope:.3g} bits/slot)")
    print(f"Mean queue: {report.mean_queue:.4f} +/- {report.ci_half_width:.4f}")
    print(f"Mean waste: {report.mean_waste:.4f}")
    print(f"Drop fraction: {report.drop_fraction:.4g}")
    print(f"Sensing outage fraction: {report.sensing_outage_fraction:.4g}")


def display_sweep(frame: pd.DataFrame) -> None:
    print("\n" + "=" * 60)
    print(" SWEEP")
    print("=" * 60)
    view = aggregate_rows(frame) if "replication" in frame.columns else frame
    columns = [c for c in ("policy", "ex_mean", "c", "mean_queue", "ci_half_width", "verdict",
                           "sensing_outage_fraction") if c in view.columns]
    print(view[columns].round(4).to_string(index=False))


def display_thresholds(report: ThresholdReport) -> None:
    print("\n" + "=" * 60)
    print(" STABILITY THRESHOLDS (bits/slot)")
    print("=" * 60)
    print(report.as_frame().to_string(index=False))
    print(f"\nJensen ordering holds: {report.jensen_holds()}")


def display_hitting_time(report: HittingTimeReport) -> None:
    print("\n" + "=" * 60)
    print(" RETURN TIMES TO (0, energy cap)")
    print("=" * 60)
    status = "INCONCLUSIVE" if report.inconclusive else "OK"
    print(f"Returns: {report.returns} over {report.horizon} slots ({status})")
    print(f"E[tau]   = {report.mean_tau:.4f} +/- {report.se_tau:.4f}")
    print(f"E[tau^2] = {report.mean_tau_sq:.4f} +/- {report.se_tau_sq:.4f}")


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="run.py", description="Energy-harvesting sensor node toolkit")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON scenario file")
    ap.add_argument("--preset", help="built-in scenario (fig2 ... fig10, linear-small, sensing)")
    ap.add_argument("--out", help="output CSV (default: results/<scenario>_<command>.csv)")
    ap.add_argument("--seed", type=int, help="master seed")
    ap.add_argument("--policies", help="comma-separated policy names")
    ap.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")
    ap.add_argument("--alpha", type=float, help="discount factor for mdp-solve (average cost if omitted)")
    ap.add_argument("--method", choices=METHODS, default="policy-iteration")
    ap.add_argument("--load", type=float, help="arrival mean for single-load commands")
    ap.add_argument("--log-level", default=DEFAULT_LOG_LEVEL,
                    choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return ap


def load_experiment(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.policies:
        overrides["policies"] = [p.strip() for p in args.policies.split(",") if p.strip()]
    if args.config:
        if args.preset:
            overrides["preset"] = args.preset
        return parser.load_config(args.config, overrides)
    if args.preset:
        return parser.load_preset(args.preset, overrides)
    raise ConfigError("give --config or --preset", key="config")


def dispatch(args: argparse.Namespace) -> int:
    experiment = load_experiment(args)
    scenarios = list(experiment.scenarios)
    if args.load is not None:
        scenarios = [s.with_arrival_mean(args.load) for s in scenarios]
    template = scenarios[0]
    out = args.out or str(Path(DEFAULT_OUTPUT_DIR) / f"{template.scenario_id}_{args.command}.csv")

    manifest = RunManifest(
        command=args.command,
        config_path=args.config,
        preset=experiment.preset,
        scenarios=[scenario_dict(s) for s in scenarios],
        seed=template.seed,
        output_path=out,
        tool_version=TOOL_VERSION,
    )
    exit_code = 4
    try:
        handler = HANDLERS[args.command]
        handler(args, experiment, scenarios, out)
        exit_code = 0
    except EnergyHarvestingError as exc:
        exit_code = exc.exit_code
        raise
    finally:
        manifest.finish(exit_code)
        manifest.write()
    return exit_code


def command_simulate(args, experiment: ExperimentConfig, scenarios: List[ScenarioConfig], out: str) -> None:
    rows = []
    for cfg in scenarios:
        cfg = _resolve_optimal(cfg)
        report = run(cfg)
        rows.extend(report_rows(cfg, report))
        display_metrics(report)
    write_csv(pd.DataFrame(rows, columns=SWEEP_COLUMNS), out)


def command_sweep(args, experiment: ExperimentConfig, scenarios: List[ScenarioConfig], out: str) -> None:
    template = scenarios[0]
    if experiment.loads:
        frame = sweep(template, [s.policy for s in scenarios], experiment.loads, jobs=args.jobs)
    elif experiment.c_values:
        frame = sensing_sweep(template, experiment.c_values, jobs=args.jobs)
    else:
        raise ConfigError("nothing to sweep: give sweep.loads or sweep.c_values", key="sweep")
    write_csv(frame, out)
    display_sweep(frame)


def command_thresholds(args, experiment: ExperimentConfig, scenarios: List[ScenarioConfig], out: str) -> None:
    report = thresholds(scenarios[0])
    write_csv(report.as_frame(), out)
    display_thresholds(report)


def command_mdp_solve(args, experiment: ExperimentConfig, scenarios: List[ScenarioConfig], out: str) -> None:
    model = build_model_from_scenario(scenarios[0])
    if args.alpha is None:
        table = average_cost_solve(model, args.method)
        print(f"Average cost (gain): {table.gain:.6f}")
    elif args.alpha < VI_ALPHA_LIMIT:
        table = value_iterate(model, args.alpha)
    else:
        table = discounted_policy_iterate(model, args.alpha)
    write_csv(policy_table_frame(table), out)
    print(f"{table.method}: {table.iterations} iterations, policy table written to {out}")


def command_mdp_check(args, experiment: ExperimentConfig, scenarios: List[ScenarioConfig], out: str) -> None:
    cfg = scenarios[0]
    model = build_model_from_scenario(cfg)
    average = average_cost_solve(model, args.method)
    discounted = [
        value_iterate(model, alpha) if alpha < VI_ALPHA_LIMIT else discounted_policy_iterate(model, alpha)
        for alpha in VANISHING_ALPHAS
    ]
    structure = structure_checks(discounted, average.gain)

    rows = [(v.alpha, v.kind, v.q_level, v.e_level, v.amount) for v in structure.violations]
    if cfg.rf.is_linear:
        for table in (*discounted[:2], average):
            for i, j in greedy_mismatches(model, table):
                rows.append((table.alpha, "not_greedy", float(table.q_levels[i]),
                             float(table.e_levels[j]), float(table.action_energy[i, j])))
    frame = pd.DataFrame(rows, columns=["alpha", "kind", "q_level", "e_level", "amount"])
    write_csv(frame, out)

    print("\n" + "=" * 60)
    print(" MDP CHECKS")
    print("=" * 60)
    print(f"Average cost: {average.gain:.6f}")
    for alpha, gap in structure.vanishing_gaps.items():
        print(f"alpha = {alpha}: |(1 - alpha) min v - gain| / gain = {gap:.4f}")
    if rows:
        print(f"❌ {len(rows)} violations")
        print(frame.head(20).to_string(index=False))
        raise CheckViolation(f"{len(rows)} check violations, listed in {out}")
    print("✅ all checks passed")


def command_hitting_time(args, experiment: ExperimentConfig, scenarios: List[ScenarioConfig], out: str) -> None:
    report = hitting_time_stats(scenarios[0])
    write_csv(pd.DataFrame(list(report.as_dict().items()), columns=["key", "value"]), out)
    display_hitting_time(report)


HANDLERS = {
    "simulate": command_simulate,
    "sweep": command_sweep,
    "thresholds": command_thresholds,
    "mdp-solve": command_mdp_solve,
    "mdp-check": command_mdp_check,
    "hitting-time": command_hitting_time,
}


def report_error(exc: BaseException) -> int:
    exit_code = exc.exit_code if isinstance(exc, EnergyHarvestingError) else 4
    record = {
        "error": type(exc).__name__,
        "message": str(exc),
        "key": getattr(exc, "key", None),
        "exit_code": exit_code,
    }
    print(json.dumps(record), file=sys.stderr)
    return exit_code


def interactive_menu() -> int:
    while True:
        print(f"Press 1 to compute stability thresholds ({MENU_PRESET})")
        print(f"Press 2 to simulate one load of {MENU_PRESET}")
        print("Press 3 to check MDP optimality on linear-small")
        print("Press anything else to quit")
        answer = input()
        if answer == "1":
            main(["thresholds", "--preset", MENU_PRESET])
        elif answer == "2":
            main(["simulate", "--preset", MENU_PRESET])
        elif answer == "3":
            main(["mdp-check", "--preset", "linear-small"])
        else:
            return 0
        print("\n \n")


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        return interactive_menu()
    args = build_arg_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return dispatch(args)
    except Exception as exc:
        logger.debug("command failed", exc_info=True)
        return report_error(exc)


def _resolve_optimal(cfg: ScenarioConfig) -> ScenarioConfig:
    if isinstance(cfg.policy, MdpTablePolicy) and cfg.policy.table is None:
        return cfg.with_policy(optimal_policy_for(cfg))
    return cfg
