"""Command-line surface: run experiments, validate configs and print oracle values."""

import argparse
import logging
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from ..factories.scenario_factory import ScenarioFactory
from ..models.errors import NoFeasiblePoint, ParseError, ValidationError
from ..models.scenario import ScenarioInstance
from ..models.settings import AlgorithmSettings
from ..services.distributed_service import TRANSPORTS
from ..services.experiment_service import (ExperimentSpec, available_experiments, run_experiment,
                                           with_cli_overrides)
from .oracles import SUITES
from .report import FORMATS, emit_results, print_summary, summarize_records

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saginshare",
        description="Spectrum and service sharing between a ground and a satellite operator")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="execute an experiment and write its records")
    run.add_argument("--config", type=str, default=None,
                     help="scenario JSON (defaults to the experiment's own, then the built-in)")
    run.add_argument("--experiment", type=str, required=True,
                     help=f"built-in name ({', '.join(available_experiments())}) or spec file")
    run.add_argument("--seeds", type=int, default=None, help="run seeds 0..n-1")
    run.add_argument("--out", type=str, required=True, help="result file")
    run.add_argument("--no-mbc", action="store_true", help="drop the mutual benefit constraint")
    run.add_argument("--algorithm", type=str, default=None, help="run a single algorithm")
    run.add_argument("--format", choices=FORMATS, default="csv")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--transport", choices=sorted(TRANSPORTS), default="inprocess")
    run.add_argument("--summary", action="store_true", help="print per-point means")

    validate = commands.add_parser("validate", help="check a scenario configuration")
    validate.add_argument("--config", type=str, required=True)

    oracle = commands.add_parser("oracle", help="print reference values of a check suite")
    oracle.add_argument("suite", choices=sorted(SUITES))
    return parser


def load_inputs(config: Optional[str]) -> Tuple[ScenarioInstance, AlgorithmSettings]:
    """Scenario template and algorithm settings of a config file, or the defaults."""
    factory = ScenarioFactory()
    raw = factory.read(config) if config else {}
    return factory.from_dict(raw), factory.settings(raw)


def cmd_run(args: argparse.Namespace) -> int:
    spec = with_cli_overrides(ExperimentSpec.load(args.experiment), seeds=args.seeds,
                              algorithm=args.algorithm, no_mbc=args.no_mbc)
    template, settings = load_inputs(args.config or spec.config)
    records = run_experiment(spec, template, settings, workers=args.workers,
                             transport=args.transport)
    emit_results(records, args.out, args.format)
    if args.summary:
        print_summary(summarize_records(records))

    infeasible = [r for r in records if r.error.startswith("infeasible")]
    if infeasible:
        logger.warning("%d records found no point meeting the mutual benefit constraint",
                       len(infeasible))
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    template, settings = load_inputs(args.config)
    print(f"{args.config}: {template.n_nodes} nodes ({template.n_terminals} STs), "
          f"{template.n_users} users, {template.n_beams} beams, N_t = {template.n_antennas}")
    print(f"sharing delta = {template.delta}, solver = {settings.solver}")
    return EXIT_OK


def format_oracle(values: Dict[str, float]) -> List[str]:
    width = max(len(key) for key in values)
    return [f"{key:<{width}}  {value:.12g}" for key, value in values.items()]


def cmd_oracle(args: argparse.Namespace) -> int:
    for line in format_oracle(SUITES[args.suite]()):
        print(line)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "validate": cmd_validate,
    "oracle": cmd_oracle,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments and dispatch.

    Returns:
        0 on success, 2 on an invalid config or experiment, 3 when a
        scenario has no point meeting the mutual benefit constraint
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ParseError, ValidationError) as exc:
        logger.error("%s", exc)
        return EXIT_INVALID
    except NoFeasiblePoint as exc:
        logger.error("infeasible: %s", exc)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
