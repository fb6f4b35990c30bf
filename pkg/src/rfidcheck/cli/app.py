"""The ``rfidcheck`` command line application."""

from __future__ import annotations

from argparse import ArgumentParser, ArgumentTypeError, Namespace
from logging import DEBUG, INFO, basicConfig
from pathlib import Path
from typing import Awaitable, Callable, Dict, Optional, Sequence

from rfidcheck.base import AsyncApp
from rfidcheck.errors import ApplicationExit, InvalidArgumentError, RfidCheckError

from . import commands
from .experiment import parse_sweep

__all__ = ("RfidCheckApp",)

Command = Callable[["RfidCheckApp", Namespace], Awaitable[int]]

COMMANDS: Dict[str, Command] = {
    "check": commands.check,
    "demo": commands.demo,
    "export": commands.export,
    "simulate": commands.simulate,
    "sweep": commands.sweep,
}


def _sweep_range(value: str):
    try:
        return parse_sweep(value)
    except InvalidArgumentError as ex:
        raise ArgumentTypeError(str(ex)) from None


class RfidCheckApp(AsyncApp):
    """Application that checks properties of chains, sweeps the RFID model
    over the number of tags, runs simulations and protocol sessions.
    """

    _args: Optional[Namespace] = None
    """The parsed command line arguments of the app; ``None`` if they have
    not been parsed yet.
    """

    _argv: Optional[Sequence[str]]
    _parser: ArgumentParser

    def __init__(self, argv: Optional[Sequence[str]] = None):
        self._argv = argv
        super().__init__(
            "rfidcheck", "rfidcheck", full_name="RFID protocol model checker"
        )

    def _create_components(self) -> None:
        self._parser = self._create_argument_parser()

    def _create_argument_parser(self) -> ArgumentParser:
        """Creates the command-line argument parser of the application."""
        parser = ArgumentParser(prog=self.app_name, description=self.app_full_name)
        parser.add_argument(
            "--version", action="version", version=f"%(prog)s version {self.version}"
        )

        common = ArgumentParser(add_help=False)
        common.add_argument(
            "-c",
            "--config",
            metavar="FILE",
            help="configuration file to load instead of the default one",
        )
        common.add_argument(
            "-d",
            "--debug",
            action="store_true",
            default=False,
            help="log debug messages",
        )

        experiment = ArgumentParser(add_help=False)
        experiment.add_argument(
            "--experiment",
            metavar="FILE",
            type=Path,
            help="experiment description in TOML; flags override its settings",
        )
        experiment.add_argument(
            "--model", metavar="FILE", type=Path, help="RFID model configuration"
        )
        experiment.add_argument(
            "--horizon", metavar="STEPS", type=int, help="last time step of the series"
        )
        experiment.add_argument(
            "--seed", metavar="SEED", type=int, help="seed of the random numbers"
        )
        experiment.add_argument(
            "--out", metavar="DIR", type=Path, help="directory of the CSV files"
        )

        subparsers = parser.add_subparsers(
            dest="command", metavar="COMMAND", required=True
        )

        check = subparsers.add_parser(
            "check", parents=[common], help="evaluate the properties of a file"
        )
        check.add_argument(
            "--model",
            metavar="FILE",
            type=Path,
            required=True,
            help=(
                "model to check: an RFID model configuration (.toml), an "
                "explicit chain (.dtmc) or a guarded-command model"
            ),
        )
        check.add_argument(
            "--props", metavar="FILE", type=Path, required=True, help="property file"
        )
        check.add_argument(
            "--property",
            metavar="LINE",
            type=int,
            help="check only the property on the given line",
        )
        check.add_argument(
            "--reward",
            metavar="NAME",
            help="reward structure of the reward queries that do not name one",
        )
        check.add_argument(
            "--out", metavar="FILE", type=Path, help="CSV file of the results"
        )

        sweep = subparsers.add_parser(
            "sweep",
            parents=[common, experiment],
            help="evaluate the RFID model for a range of tag counts",
        )
        sweep.add_argument(
            "--props", metavar="FILE", type=Path, help="properties to check for each N"
        )
        sweep.add_argument(
            "--sweep",
            metavar="START:STOP:STEP",
            type=_sweep_range,
            help="range of tag counts, both ends inclusive",
        )

        simulate = subparsers.add_parser(
            "simulate",
            parents=[common, experiment],
            help="simulate a deployment and compare it with the model",
        )
        simulate.add_argument(
            "--runs", metavar="COUNT", type=int, help="number of simulated runs"
        )
        simulate.add_argument(
            "--l", metavar="BITS", type=int, default=128, help="identifier length"
        )

        demo = subparsers.add_parser(
            "demo", parents=[common], help="run a single protocol session"
        )
        demo.add_argument(
            "--l", metavar="BITS", type=int, default=128, help="identifier length"
        )
        demo.add_argument(
            "--fault",
            metavar="FAULT",
            default="none",
            help="fault to inject: none, drop_m3, drop:STEP or corrupt:STEP",
        )
        demo.add_argument(
            "--seed", metavar="SEED", type=int, help="seed of the random numbers"
        )

        export = subparsers.add_parser(
            "export",
            parents=[common],
            help="write the guarded-command model and the chain of a model",
        )
        export.add_argument(
            "--model", metavar="FILE", type=Path, required=True, help="model to export"
        )
        export.add_argument(
            "--out", metavar="DIR", type=Path, help="output directory"
        )

        return parser

    def prepare(self, config: Optional[str] = None, debug: bool = False) -> Optional[int]:
        args = self._parser.parse_args(self._argv)
        exit_code = self._process_arguments(args)
        if exit_code:
            return exit_code

        self._args = args

        return super().prepare(args.config or config, debug or args.debug)

    def _process_arguments(self, args: Namespace) -> Optional[int]:
        """Post-processes the command line arguments parsed by the argument
        parser.

        Returns:
            a non-zero exit code if the app should be terminated, zero or
            ``None`` if the startup process may continue
        """
        basicConfig(
            level=DEBUG if args.debug else INFO,
            format="%(levelname)-7s %(name)s: %(message)s",
        )
        if getattr(args, "runs", None) is not None and args.runs < 1:
            self._parser.error("--runs must be at least 1")

    async def ready(self) -> Optional[int]:
        args = self._args
        assert args is not None

        command = COMMANDS[args.command]
        try:
            return await command(self, args)
        except RfidCheckError as ex:
            raise ApplicationExit(str(ex), exit_code=commands.exit_code_for(ex)) from ex
        except OSError as ex:
            raise ApplicationExit(str(ex), exit_code=2) from ex
