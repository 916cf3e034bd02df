from dataclasses import dataclass
from typing import Optional

import click

from config import Config
from models import PhysicalConstants, ReportEnvelope, RunConfig
from reports import FORMATS, build_meta, write_report
from units import parse_time

grp_classical = click.Group("classical", help="Moments and observables of classical point particles.")
grp_quantum = click.Group("quantum", help="Density-matrix evolution and decoherence.")
grp_chaos = click.Group("chaos", help="Sensitivity to initial conditions, continuous vs discrete time.")


@dataclass
class Session:
    """Run-wide settings shared by every subcommand (lives on ctx.obj)."""

    preset: str = "natural"
    seed: int = Config.SEED
    threads: int = Config.THREADS
    output_format: str = "csv"
    output: Optional[str] = None

    @property
    def si(self) -> bool:
        return self.preset == "si-planck"

    def constants(self, tau: Optional[str] = None) -> PhysicalConstants:
        return PhysicalConstants.preset(self.preset, None if tau is None else parse_time(tau, si=self.si))

    def emit(self, command: str, params: dict, data) -> None:
        run = RunConfig(
            command=command,
            params=params,
            seed=self.seed,
            preset=self.preset,
            output_format=self.output_format,
            output_path=self.output,
        )
        write_report(ReportEnvelope(meta=build_meta(run), data=data), self.output_format, self.output)


pass_session = click.make_pass_decorator(Session, ensure=True)


def _override(attr):
    def callback(ctx, param, value):
        if value is not None:
            setattr(ctx.ensure_object(Session), attr, value)
        return value
    return callback


def run_options(f):
    """--preset/--seed/--threads/--format/--output, accepted after the subcommand name too."""
    options = [
        click.option("--preset", type=click.Choice(["natural", "si-planck"]), default=None,
                     expose_value=False, callback=_override("preset"), help="Physical constants preset."),
        click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None,
                     expose_value=False, callback=_override("seed"), help="Random seed (recorded in metadata)."),
        click.option("--threads", type=click.IntRange(1), default=None,
                     expose_value=False, callback=_override("threads"), help="Worker threads."),
        click.option("--format", "output_format", type=click.Choice(FORMATS), default=None,
                     expose_value=False, callback=_override("output_format"), help="Report format."),
        click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
                     expose_value=False, callback=_override("output"), help="Report path (stdout if omitted)."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def parse_steps(text: str) -> list[int]:
    """'5', '1:50' (inclusive) or '1,2,10'."""
    try:
        if ":" in text:
            lo, hi = (int(v) for v in text.split(":"))
            steps = list(range(lo, hi + 1))
        else:
            steps = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"Cannot read step list {text!r}; use '5', '1:50' or '1,2,10'.")
    if not steps:
        raise click.BadParameter(f"Step list {text!r} is empty.")
    if min(steps) < 0:
        raise click.BadParameter("Step counts must be non-negative.")
    return steps


def parse_vector(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"Cannot read a comma-separated list of numbers from {text!r}.")
