#!/usr/bin/env python3
"""
Command-line front end.

    python -m app.cli monitor --scenario scenarios/example1.json --signal scenarios/example1_x_prime.csv
    python -m app.cli synthesize --scenario scenarios/phi_case_prime.json --out-dir out/prime
    python -m app.cli compare --scenario scenarios/phi_case.json
    python -m app.cli export-lp --scenario scenarios/phi_case.json
    python -m app.cli oracle --scenario scenarios/oracle_micro.json

Exit codes: 0 ok, 2 infeasible, 3 solver error, 4 validation error.
"""
import argparse
import logging
import sys
from typing import List, Optional

import pandas as pd

from app.config import settings
from app.exceptions import StlRelaxError
from app.schemas.report import SubtaskReport
from app.services import storage_service
from app.services.encoder_service import OBJECTIVES
from app.services.scenario_service import Scenario, ScenarioService, load_scenario

logger = logging.getLogger("app.cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stl-relax", description="STL synthesis under minimal temporal relaxation")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level (default from LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", required=True)

    def scenario_command(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--scenario", required=True, help="Scenario JSON file")
        sub.add_argument("--out-dir", help="Directory for artifacts (default OUTPUT_DIR/<scenario name>)")
        sub.add_argument("--backend", choices=["cbc", "highs"], help="Override the scenario's solver backend")
        sub.add_argument("--time-limit", type=float, help="Solver time limit in seconds")
        sub.add_argument("--keep-lp", action="store_true", default=None, help="Keep the LP file next to the outputs")
        return sub

    monitor = scenario_command("monitor", "Evaluate a recorded signal against the scenario's spec")
    monitor.add_argument("--signal", required=True, help="Signal CSV with header t,<variables>")

    synthesize = scenario_command("synthesize", "Synthesize a trajectory and write its artifacts")
    synthesize.add_argument("--objective", choices=OBJECTIVES, help="Override the scenario's objective")

    scenario_command("compare", "Solve under every objective and compare the relaxations")

    export = scenario_command("export-lp", "Write the MILP as an LP file without solving")
    export.add_argument("--objective", choices=OBJECTIVES, help="Override the scenario's objective")

    scenario_command("oracle", "Brute-force the scenario's input grid")
    return parser


def _service(args) -> ScenarioService:
    schema = load_scenario(args.scenario)
    scenario = Scenario.from_schema(schema, out_dir=args.out_dir, keep_lp=args.keep_lp,
                                    time_limit=args.time_limit, backend=args.backend)
    return ScenarioService(scenario)


def _subtask_table(subtasks: List[SubtaskReport]) -> str:
    if not subtasks:
        return "(no subtasks)"
    frame = pd.DataFrame([s.model_dump() for s in subtasks])
    columns = ["site", "kind", "instant", "interval", "relaxed_interval", "tau_under", "tau_over",
               "removed", "normalized", "similarity"]
    return frame[columns].to_string(index=False)


def cmd_monitor(args) -> int:
    service = _service(args)
    signal = service.read_signal(args.signal)
    response = service.monitor_response(service.monitor(signal))
    metrics = pd.DataFrame([{
        "satisfied": response.satisfied,
        "rho": response.space_robustness,
        "theta+": response.time_robustness_right,
        "theta-": response.time_robustness_left,
        "tau": response.report.tau,
        "tau_value": response.report.tau_value,
    }])
    print(metrics.to_string(index=False))
    print()
    print(_subtask_table(response.report.subtasks))
    print()
    print(f"Relaxed spec: {response.report.relaxed_spec or '(all subtasks removed)'}")
    if args.out_dir:
        path = storage_service.write_json(service.scenario.output_dir / "monitor.json", response.model_dump())
        logger.info(f"Wrote monitor report: {path}")
    return 0


def cmd_synthesize(args) -> int:
    service = _service(args)
    result = service.synthesize(args.objective)
    response = service.synthesis_response(result)
    service.write_synthesis(result)
    print(f"Objective: {response.objective} ({response.status}), tau = {response.report.tau}"
          + (f", theta = {response.theta}" if response.theta is not None else ""))
    print(_subtask_table(response.report.subtasks))
    print(f"Relaxed spec: {response.report.relaxed_spec or '(all subtasks removed)'}")
    return 0


def cmd_compare(args) -> int:
    service = _service(args)
    results = service.compare()
    for result in results:
        service.write_synthesis(result, suffix=result.objective)
    response = service.compare_response(results)
    frame = pd.DataFrame([row.model_dump(exclude={"relaxed_spec"}) for row in response.rows])
    print(frame.to_string(index=False))
    print()
    for row in response.rows:
        print(f"{row.objective}: {row.relaxed_spec or '(all subtasks removed)'}")
    storage_service.write_json(service.scenario.output_dir / "compare.json", response.model_dump())
    return 0


def cmd_export_lp(args) -> int:
    service = _service(args)
    export = service.export_lp(getattr(args, "objective", None))
    path = storage_service.write_text(service.scenario.output_dir / service.scenario.schema.outputs.lp, export.lp)
    print(f"Wrote {path}: {export.counts['variables']} variables "
          f"({export.counts['binary']} binary), {export.counts['constraints']} constraints")
    return 0


def cmd_oracle(args) -> int:
    service = _service(args)
    response = service.oracle_response(service.oracle())
    path = storage_service.write_json(service.scenario.output_dir / "oracle.json", response.model_dump())
    print(f"tau* = {response.tau} after {response.enumerated} rollouts (written to {path})")
    print(f"u* = {response.inputs}")
    return 0


COMMANDS = {
    "monitor": cmd_monitor,
    "synthesize": cmd_synthesize,
    "compare": cmd_compare,
    "export-lp": cmd_export_lp,
    "oracle": cmd_oracle,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    try:
        return COMMANDS[args.command](args)
    except StlRelaxError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
