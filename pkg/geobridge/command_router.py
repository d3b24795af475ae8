"""
Decorator-based registry that maps command names onto handler functions and builds
the ``argparse`` parser for them.

Usage::

    router = CommandRouter(prog="geobridge")

    @router.command("eval", argument("pred"), argument("--json", action="store_true"))
    def cmd_eval(args: Namespace) -> int:
        ...

    exit_code = router.dispatch(router.parse(["eval", "pred.traj"]))
"""
from argparse import ArgumentParser, Namespace
from dataclasses import dataclass, field
from logging import getLogger
from typing import Any, Callable, Optional, Sequence

from typeguard import check_type, typechecked


__all__ = ["Argument", "argument", "CommandRouter", "CommandHandler"]


logger = getLogger(__name__)

type CommandHandler = Callable[[Namespace], int]


@dataclass(frozen=True)
class Argument:
    """
    Positional arguments of ``ArgumentParser.add_argument``, frozen for later use.

    :ivar flags: Name or option strings.
    :ivar options: Keyword options such as ``type``, ``default`` or ``help``.
    """
    flags: tuple[str, ...]
    options: dict[str, Any] = field(default_factory=dict)

    def add_to(self, parser: ArgumentParser):
        """Adds the argument to ``parser``."""
        parser.add_argument(*self.flags, **self.options)


def argument(*flags: str, **options) -> Argument:
    """Shorthand for :class:`Argument` with ``add_argument``'s call signature."""
    return Argument(flags=flags, options=options)


@dataclass(frozen=True)
class _Command:
    name: str
    handler: CommandHandler
    arguments: tuple[Argument, ...]
    help: Optional[str]


class CommandRouter:
    """
    Holds the registered commands and the options shared by all of them.

    :ivar __prog: Program name shown in usage messages.
    :ivar __description: Program description.
    :ivar __commands: Registered commands by name, in registration order.
    :ivar __global_arguments: Options accepted before the command name.
    """
    def __init__(self, prog: str, description: Optional[str] = None):
        self.__prog = prog
        self.__description = description
        self.__commands: dict[str, _Command] = {}
        self.__global_arguments: list[Argument] = []

    def add_global(self, *arguments: Argument):
        """Registers options that every command accepts."""
        self.__global_arguments.extend(arguments)

    @typechecked
    def command(self, name: str, *arguments: Argument, help: Optional[str] = None):
        """
        Decorator registering the decorated function as the handler of ``name``.

        The handler receives the parsed :class:`argparse.Namespace` and returns the exit
        status.

        :param name: Command name as typed on the command line.
        :param arguments: Arguments of the command.
        :param help: One-line help text.
        :raises ValueError: If ``name`` is already registered.
        """
        # pylint: disable=redefined-builtin
        if name in self.__commands:
            raise ValueError(f"command {name!r} registered twice")

        def decorator(func):
            check_type(func, CommandHandler)
            self.__commands[name] = _Command(name=name, handler=func,
                                             arguments=arguments, help=help)
            return func

        return decorator

    @property
    def commands(self) -> dict[str, CommandHandler]:
        """Registered handlers by command name."""
        return {name: command.handler for name, command in self.__commands.items()}

    def build_parser(self) -> ArgumentParser:
        """A fresh parser with one sub-parser per registered command."""
        parser = ArgumentParser(prog=self.__prog, description=self.__description)
        for arg in self.__global_arguments:
            arg.add_to(parser)
        subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
        for command in self.__commands.values():
            sub = subparsers.add_parser(command.name, help=command.help)
            for arg in command.arguments:
                arg.add_to(sub)
            sub.set_defaults(handler=command.handler)
        return parser

    def parse(self, argv: Optional[Sequence[str]] = None) -> Namespace:
        """
        Parses ``argv``; unknown options are rejected.

        :raises SystemExit: With status 2 on usage errors, as ``argparse`` does.
        """
        return self.build_parser().parse_args(argv)

    def dispatch(self, args: Namespace) -> int:
        """Calls the handler selected by ``args.command``."""
        logger.debug("dispatching command %s", args.command)
        return args.handler(args)
