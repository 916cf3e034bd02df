import click
import numpy as np
import pandas as pd

from commands import parse_steps, pass_session, run_options
from dynamics.kernel import advection_negativity_probe, scheme_delta_coefficient
from extensions import parallel_map
from models import GammaKernel, StepScheme


@click.command("alpha-scan")
@click.option("--alpha-step", type=click.FloatRange(0.0, 1.0, min_open=True), default=0.1, show_default=True,
              help="Grid spacing for alpha in [0, 1).")
@click.option("--n", "steps", default="1:10", show_default=True, help="Steps: '5', '1:50' or '1,2,10'.")
@click.option("--tau", type=click.FloatRange(0.0, min_open=True), default=1.0, show_default=True)
@click.option("--sigma", type=click.FloatRange(0.0, min_open=True), default=1.0, show_default=True,
              help="Width of the Gaussian used for the negativity probe.")
@click.option("--probe/--no-probe", default=True, show_default=True, help="Also run the advection probe.")
@run_options
@pass_session
def alpha_scan_cmd(session, alpha_step, steps, tau, sigma, probe):
    """Delta-term coefficient and probe minimum over the scheme family."""
    alphas = np.round(np.arange(0.0, 1.0, alpha_step), 12)
    n_values = parse_steps(steps)
    if min(n_values) < 1:
        raise click.BadParameter("Steps must be >= 1.", param_hint="--n")

    def row(item):
        alpha, n = item
        scheme = StepScheme(float(alpha))
        grid_min = (advection_negativity_probe(scheme, GammaKernel(n, tau), sigma).minimum
                    if probe else float("nan"))
        return float(alpha), n, scheme_delta_coefficient(scheme, n), grid_min

    rows = parallel_map(row, [(a, n) for a in alphas for n in n_values], session.threads)
    df = pd.DataFrame(rows, columns=["alpha", "n", "delta_coeff", "grid_min"])
    session.emit("alpha-scan", {
        "alpha_step": alpha_step,
        "n": steps,
        "tau": tau,
        "sigma": sigma,
        "probe": probe,
    }, df)
