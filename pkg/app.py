import json
import sys

import click

from config import Config, load_config_file
from errors import ConfigError, DtmechError, NumericalError
from extensions import init_logging

from commands import Session, grp_chaos, grp_classical, grp_quantum
from reports import FORMATS, TOOL_VERSION

# Import command modules so handlers register on their groups (required)
from commands import alpha_scan as _alpha_scan_cmds  # noqa: F401
from commands import chaos as _chaos_cmds            # noqa: F401
from commands import classical as _classical_cmds    # noqa: F401
from commands import quantum as _quantum_cmds        # noqa: F401
from commands import transform as _transform_cmds    # noqa: F401

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def emit_error(name: str, message: str) -> None:
    click.echo(f"error={name} message={json.dumps(' '.join(str(message).split()))}", err=True)


class DtmechGroup(click.Group):
    """Root group that turns every failure into one stderr line and an exit code."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args=args, prog_name=prog_name, complete_var=complete_var,
                              standalone_mode=False, **extra)
            code = rv if isinstance(rv, int) else EXIT_OK
        except NumericalError as e:
            emit_error(type(e).__name__, e)
            code = EXIT_NUMERICAL
        except click.ClickException as e:
            emit_error(type(e).__name__, e.format_message())
            code = EXIT_CONFIG
        except (DtmechError, ValueError) as e:
            emit_error(type(e).__name__, e)
            code = EXIT_CONFIG
        except click.Abort:
            emit_error("Abort", "aborted")
            code = 1
        if standalone_mode:
            sys.exit(code)
        return code


def _load_config(ctx, param, value):
    if value:
        try:
            ctx.default_map = load_config_file(value)
        except ConfigError as e:
            raise click.BadParameter(str(e), ctx=ctx, param=param)
    return value


def create_cli() -> click.Group:
    @click.group(cls=DtmechGroup, name="dtmech")
    @click.version_option(TOOL_VERSION, prog_name="dtmech")
    @click.option("--config", "config_path", type=click.Path(dir_okay=False), is_eager=True,
                  expose_value=False, callback=_load_config,
                  help="JSON file with defaults for any option; flags override it.")
    @click.option("--preset", type=click.Choice(["natural", "si-planck"]), default="natural", show_default=True)
    @click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=Config.SEED, show_default=True)
    @click.option("--threads", type=click.IntRange(1), default=Config.THREADS, show_default=True,
                  help="Worker threads (env DTMECH_THREADS).")
    @click.option("--format", "output_format", type=click.Choice(FORMATS), default="csv", show_default=True)
    @click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
                  help="Report path (stdout if omitted).")
    @click.option("--verbose", "-v", count=True, help="-v for INFO, -vv for DEBUG.")
    @click.pass_context
    def cli(ctx, preset, seed, threads, output_format, output, verbose):
        """Discrete-time classical and quantum mechanics on the gamma kernel."""
        init_logging({0: None, 1: "INFO"}.get(verbose, "DEBUG"))
        ctx.obj = Session(preset=preset, seed=seed, threads=threads, output_format=output_format, output=output)

    cli.add_command(_transform_cmds.transform_cmd)
    cli.add_command(_alpha_scan_cmds.alpha_scan_cmd)
    cli.add_command(grp_classical)
    cli.add_command(grp_quantum)
    cli.add_command(grp_chaos)
    return cli


def main(argv=None) -> int:
    return create_cli().main(args=argv, prog_name="dtmech", standalone_mode=False)


if __name__ == "__main__":
    sys.exit(main())
