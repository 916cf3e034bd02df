import os

import click

from commands import parse_steps, pass_session, run_options
from dynamics.kernel import (
    constant_signal,
    cosine_signal,
    exponential_signal,
    oscillation_signal,
    polynomial_signal,
    read_tabulated_signal,
    sine_signal,
    transform_series,
)
from models import TimeSignal

BUILTINS = {
    "const": (constant_signal, float, 1.0),
    "poly": (polynomial_signal, int, None),
    "cos": (cosine_signal, float, 1.0),
    "sin": (sine_signal, float, 1.0),
    "expi": (oscillation_signal, float, None),
    "exp": (exponential_signal, float, None),
}


def parse_signal(text: str, order: int = 1) -> TimeSignal:
    """Built-in 'name [parameter]' or the path of a CSV file with columns t, F."""
    parts = text.split()
    if parts and parts[0] in BUILTINS:
        factory, cast, default = BUILTINS[parts[0]]
        if len(parts) > 2:
            raise click.BadParameter(f"Signal {text!r} takes at most one parameter.")
        if len(parts) == 1:
            if default is None:
                raise click.BadParameter(f"Signal {parts[0]!r} needs a parameter, e.g. '{parts[0]} 2'.")
            return factory(default)
        try:
            return factory(cast(parts[1]))
        except ValueError:
            raise click.BadParameter(f"Bad parameter in signal {text!r}.")
    if os.path.isfile(text):
        return read_tabulated_signal(text, order=order)
    raise click.BadParameter(
        f"Unknown signal {text!r}; use one of {', '.join(BUILTINS)} or a CSV file path."
    )


@click.command("transform")
@click.option("--signal", "signal_text", required=True, help="const|poly k|cos w|sin w|expi w|exp b, or a CSV path.")
@click.option("--n", "steps", default="1:10", show_default=True, help="Steps: '5', '1:50' or '1,2,10'.")
@click.option("--tau", default=None, help="Time quantum (preset value if omitted; SI needs a unit).")
@click.option("--method", type=click.Choice(["quadrature", "monte-carlo"]), default="quadrature", show_default=True)
@click.option("--samples", type=click.IntRange(2), default=None, help="Monte Carlo sample count.")
@click.option("--order", type=click.IntRange(1, 5), default=1, show_default=True, help="Spline order for tables.")
@run_options
@pass_session
def transform_cmd(session, signal_text, steps, tau, method, samples, order):
    """Gamma transform of a continuous-time signal over a range of n."""
    signal = parse_signal(signal_text, order)
    constants = session.constants(tau)
    n_values = parse_steps(steps)
    if min(n_values) < 1:
        raise click.BadParameter("The transform is defined for n >= 1.", param_hint="--n")
    df = transform_series(signal, constants.tau, n_values, method=method, samples=samples,
                          seed=session.seed, threads=session.threads)
    session.emit("transform", {
        "signal": signal_text,
        "n": steps,
        "tau": constants.tau,
        "method": method,
        "samples": samples,
        "order": order,
    }, df)
