"""Base command support."""

from __future__ import annotations

import argparse
import importlib
import logging
import sys
import textwrap
from typing import Any, ClassVar, Mapping, NoReturn, Optional, Sequence

from colorama import Fore, Style, init as init_colorama

from crisp.errors import FormatError, InvalidArgumentError
from crisp.utils.config import load_config_file, merge_options
from crisp.utils.console import print_status
from crisp.utils.log import init_logging


logger = logging.getLogger(__name__)


#: Exit status for a successful run.
EXIT_OK = 0

#: Exit status for invalid arguments.
EXIT_ARGUMENT_ERROR = 1

#: Exit status for unreadable, unwritable, or malformed files.
EXIT_IO_ERROR = 2


#: The subcommands of the ``crisp`` dispatcher, and where they live.
COMMANDS: Mapping[str, str] = {
    'generate': 'crisp.commands.generate:GenerateDataset',
    'groundtruth': 'crisp.commands.groundtruth:ComputeGroundTruth',
    'build': 'crisp.commands.build:BuildIndex',
    'search': 'crisp.commands.search:SearchIndex',
    'sweep': 'crisp.commands.sweep:SweepConfigs',
    'theory': 'crisp.commands.theory:TheoryReport',
}


class CommandArgumentParser(argparse.ArgumentParser):
    """An argument parser that exits with the argument error status."""

    def error(
        self,
        message: str,
    ) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGUMENT_ERROR,
                  '%s: error: %s\n' % (self.prog, message))


class BaseCommand:
    """Base class for a crisp command.

    This takes care of the standard setup and argument parsing for a
    command, along with loading an optional configuration file. Options
    given on the command line win over the configuration file, which wins
    over the command's :py:attr:`DEFAULTS`.
    """

    ICON_ERROR = '\u2717'
    ICON_SUCCESS = '\u2713'

    STYLED_ICON_ERROR = Fore.RED + ICON_ERROR + Style.RESET_ALL
    STYLED_ICON_SUCCESS = Fore.GREEN + ICON_SUCCESS + Style.RESET_ALL

    #: Default values for options that may also come from a config file.
    DEFAULTS: ClassVar[Mapping[str, Any]] = {}

    #: The program name shown in usage output.
    prog: Optional[str] = None

    ######################
    # Instance variables #
    ######################

    #: The merged options (command line, config file, and defaults).
    config: dict[str, Any]

    #: The parsed command line options.
    options: argparse.Namespace

    def main(self) -> None:
        raise NotImplementedError

    def run(
        self,
        argv: Optional[Sequence[str]] = None,
    ) -> int:
        """Run the command.

        This will parse any options, initialize logging, merge in the
        configuration file, and call the subclass's main(). Errors are
        reported on stderr and turned into an exit status.

        Args:
            argv (list of str, optional):
                The command line arguments. This defaults to
                :py:data:`sys.argv`.

        Returns:
            int:
            The exit status.
        """
        parser = self.setup_options()

        self.options = parser.parse_args(argv)
        init_logging(debug=self.options.debug)

        init_colorama(strip=not sys.stderr.isatty())

        try:
            if self.options.config:
                file_config = load_config_file(self.options.config)
            else:
                file_config = None

            cli_options = {
                key: value
                for key, value in vars(self.options).items()
                if key not in ('config', 'debug')
            }
            self.config = merge_options(options=cli_options,
                                        file_config=file_config,
                                        defaults=self.DEFAULTS)

            self.main()
        except InvalidArgumentError as e:
            self.print_error(str(e))

            return EXIT_ARGUMENT_ERROR
        except FormatError as e:
            self.print_error(str(e))

            return EXIT_IO_ERROR
        except OSError as e:
            if e.filename:
                self.print_error('Unable to access "%s": %s'
                                 % (e.filename, e.strerror or e))
            else:
                self.print_error(str(e))

            return EXIT_IO_ERROR

        return EXIT_OK

    def setup_options(self) -> argparse.ArgumentParser:
        """Set up options for the command.

        This instantiates an ArgumentParser with the standard --debug and
        --config options. It then calls the subclass's add_options(),
        which can provide additional options for the parser.

        Returns:
            argparse.ArgumentParser:
            The populated argument parser.
        """
        parser = CommandArgumentParser(
            prog=self.prog,
            description=textwrap.dedent('    %s' % self.__doc__),
            formatter_class=argparse.RawDescriptionHelpFormatter)
        parser.add_argument('-d', '--debug',
                            action='store_true',
                            default=False,
                            help='Displays debug output.')
        parser.add_argument('--config',
                            metavar='FILE',
                            help='A JSON or YAML file of option values. '
                                 'Options given on the command line take '
                                 'precedence.')

        self.add_options(parser)

        return parser

    def add_options(
        self,
        parser: argparse.ArgumentParser,
    ) -> None:
        """Add custom options to the parser.

        Subclasses can override this to add additional options to the
        argument parser. Options that may come from a configuration file
        should default to ``None``.

        Args:
            parser (argparse.ArgumentParser):
                The argument parser to add options to.
        """
        pass

    def get_required(
        self,
        name: str,
    ) -> Any:
        """Return a merged option that must be set.

        Args:
            name (str):
                The option name, in attribute style.

        Returns:
            object:
            The option value.

        Raises:
            crisp.errors.InvalidArgumentError:
                The option wasn't given anywhere.
        """
        value = self.config.get(name)

        if value is None:
            raise InvalidArgumentError('Missing required option --%s'
                                       % name.replace('_', '-'))

        return value

    def print_error(
        self,
        s: str,
    ) -> None:
        """Print an error to the console.

        Args:
            s (str):
                The error string to print.
        """
        sys.stderr.write(textwrap.fill(
            s,
            initial_indent='%s ' % self.STYLED_ICON_ERROR,
            subsequent_indent='  '))
        sys.stderr.write('\n')

    def print_success(
        self,
        s: str,
    ) -> None:
        """Print a success message to the console.

        This goes to stderr, leaving stdout for status lines and data.

        Args:
            s (str):
                The string to print.
        """
        sys.stderr.write(textwrap.fill(
            s,
            initial_indent='%s ' % self.STYLED_ICON_SUCCESS,
            subsequent_indent='  '))
        sys.stderr.write('\n')

    def print_status(
        self,
        payload: Mapping[str, Any],
    ) -> None:
        """Print a JSON status line to stdout.

        Args:
            payload (dict):
                The status values.
        """
        print_status(payload)


def run_command(
    cmd_class: type[BaseCommand],
    argv: Optional[Sequence[str]] = None,
    prog: Optional[str] = None,
) -> int:
    """Run a command.

    This instantiates the given BaseCommand subclass and runs it.

    Args:
        cmd_class (type):
            The command class.

        argv (list of str, optional):
            The command line arguments.

        prog (str, optional):
            The program name shown in usage output.

    Returns:
        int:
        The exit status.
    """
    cmd = cmd_class()

    if prog is not None:
        cmd.prog = prog

    return cmd.run(argv)


def load_command(name: str) -> type[BaseCommand]:
    """Return the command class for a subcommand name.

    Args:
        name (str):
            The subcommand name.

    Returns:
        type:
        The command class.

    Raises:
        KeyError:
            The subcommand doesn't exist.
    """
    module_name, class_name = COMMANDS[name].split(':')

    return getattr(importlib.import_module(module_name), class_name)


def main(argv: Optional[Sequence[str]] = None) -> None:
    """Run the ``crisp`` dispatcher.

    Args:
        argv (list of str, optional):
            The command line arguments, starting with the subcommand name.
    """
    if argv is None:
        argv = sys.argv[1:]

    usage = ('usage: crisp {%s} [options]\n'
             % ','.join(COMMANDS))

    if not argv or argv[0] in ('-h', '--help'):
        sys.stdout.write(usage)
        sys.exit(EXIT_OK if argv else EXIT_ARGUMENT_ERROR)

    try:
        cmd_class = load_command(argv[0])
    except KeyError:
        sys.stderr.write('%scrisp: unknown command "%s"\n' % (usage, argv[0]))
        sys.exit(EXIT_ARGUMENT_ERROR)

    sys.exit(run_command(cmd_class, argv[1:], prog='crisp %s' % argv[0]))
