"""Main entry point for the sensikit command line"""

import argparse
import logging
import sys
from pathlib import Path

from pydantic_core import PydanticSerializationError

from src.config import Config
from src.executor.command_executor import EXIT_INPUT, CommandExecutor
from src.report.schemas import Report

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; here 2 means 'not certified'."""

    def error(self, message):
        raise UsageError(message)


def parse_vector(text: str) -> list[float]:
    """Accept 'p=[1, 2]', 'h=-1', '[1,2]' or '1,2'."""
    _, _, body = text.rpartition("=")
    body = body.strip().removeprefix("[").removesuffix("]")
    try:
        return [float(item) for item in body.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"cannot read a vector from '{text}'") from e


def parse_schedule(text: str) -> list[float]:
    values = parse_vector(text)
    if not values:
        raise argparse.ArgumentTypeError("empty r schedule")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sensikit", description=Config.get_tool_info()["description"])
    parser.add_argument("--version", action="version", version=f"sensikit {Config.get_tool_info()['version']}")
    commands = parser.add_subparsers(dest="command", required=True)

    common = _Parser(add_help=False)
    common.add_argument("problem", help="problem file or bundled fixture name")
    common.add_argument("--at", type=parse_vector, help="parameter, e.g. p=[1,0]")
    common.add_argument("--json", action=argparse.BooleanOptionalAction, default=True)
    common.add_argument("-v", "--verbose", action="count", default=0)

    directed = _Parser(add_help=False)
    directed.add_argument(
        "--direction", dest="directions", type=parse_vector, action="append", help="h=[...]; repeatable"
    )
    directed.add_argument("--oracle", action="store_true", help="attach finite-difference comparisons")

    solve = commands.add_parser("solve", parents=[common], help="SUMT solve with Newton polish")
    solve.add_argument("--r-schedule", type=parse_schedule)
    solve.add_argument("--mu", type=float, help="also solve the barrier KKT system at this mu")

    commands.add_parser("analyze", parents=[common], help="constraint qualification report")

    diff = commands.add_parser("diff", parents=[common, directed], help="solution Jacobian")
    diff.add_argument("--degenerate", action="store_true", help="use the multiplier-vertex pipeline")

    commands.add_parser("directional", parents=[common, directed], help="directional or LD-derivative")

    value = commands.add_parser("value", parents=[common, directed], help="value function derivatives")
    value.add_argument("--method", choices=("fiacco", "shadow", "objective"), default="fiacco")

    path = commands.add_parser("path", parents=[common, directed], help="homotopy path following")
    path.add_argument("--to", type=parse_vector, help="end parameter p'=[...]")
    path.add_argument("--steps", type=int, default=10)
    path.add_argument("--adaptive", action="store_true")

    conic = _Parser(add_help=False)
    conic.add_argument("problem", help="conic JSON file or bundled fixture name")
    conic.add_argument("--db", type=parse_vector)
    conic.add_argument("--dc", type=parse_vector)
    conic.add_argument("--oracle", action="store_true")
    conic.add_argument("--json", action=argparse.BooleanOptionalAction, default=True)
    conic.add_argument("-v", "--verbose", action="count", default=0)
    commands.add_parser("conic-diff", parents=[conic], help="differentiate a conic program")

    commands.add_parser("oracle", parents=[common, directed], help="finite-difference estimates only")
    return parser


def _problem_path(name: str) -> str:
    if Path(name).exists():
        return name
    return str(Config.fixture_path(name))


def _summary(report: Report) -> str:
    lines = [f"{report.tool} {report.version} {report.command} {report.problem}: exit {report.exit_code}"]
    data = report.model_dump(exclude_none=True, exclude={"tool", "version", "command", "problem", "exit_code"})
    for key, value in data.items():
        if value in ([], {}):
            continue
        lines.append(f"{key}: {value}")
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    """Main entry point"""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"sensikit: {e}", file=sys.stderr)
        return EXIT_INPUT

    level = {0: Config.LOG_LEVEL, 1: "INFO"}.get(args.verbose, "DEBUG")
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        problem = _problem_path(args.problem)
    except FileNotFoundError as e:
        logger.error(f"Problem file not found: {e}")
        print(f"sensikit: {e}", file=sys.stderr)
        return EXIT_INPUT

    options = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "problem", "json", "verbose")
    }
    report, exit_code = CommandExecutor().run(args.command, problem, **options)
    try:
        output = report.model_dump_json(indent=2) if args.json else _summary(report)
    except (PydanticSerializationError, TypeError, ValueError) as e:
        logger.error(f"Report for {args.command} could not be serialized: {e}")
        print(f"sensikit: report not serializable: {e}", file=sys.stderr)
        return EXIT_INPUT
    print(output)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
